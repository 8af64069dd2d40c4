// Acceptance criteria 1-11 driven through the C API. Each criterion prints one PASS/FAIL line.
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "kdvlab/kdvlab.h"

using json = nlohmann::json;

namespace {

int worker_threads()
{
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(std::min(n, 8u));
}

struct Outcome {
    bool passed = true;
    std::string summary;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            passed = false;
            summary += (summary.empty() ? "" : "; ") + ("violated " + what);
        }
    }
    void note(const char* fmt, double v)
    {
        char buf[128];
        std::snprintf(buf, sizeof buf, fmt, v);
        summary += (summary.empty() ? "" : ", ") + std::string(buf);
    }
};

// Runs one configuration and returns the report document; an API error leaves it null.
json run(json cfg, Outcome& out)
{
    cfg["threads"] = worker_threads();
    kdvlab_report* rep = nullptr;
    int status = kdvlab_run(cfg.dump().c_str(), &rep);
    if (status != KDVLAB_OK) {
        out.passed = false;
        out.summary += std::string("api error ") + kdvlab_status_name(status) + ": " + kdvlab_last_error();
        return nullptr;
    }
    const char* text = nullptr;
    kdvlab_report_json(rep, &text);
    json doc = json::parse(text);
    // A numerical failure inside the command shows up as a check without a relation.
    for (const auto& c : doc["checks"])
        if (!c.contains("relation")) {
            out.passed = false;
            out.summary += "command failed: " + c["name"].get<std::string>() + " (" + c.value("detail", "") + ")";
        }
    kdvlab_report_free(rep);
    return doc;
}

double num(const json& doc, const char* pointer)
{
    const auto& v = doc.at(json::json_pointer(pointer));
    return v.is_null() ? std::nan("") : v.get<double>();
}

Outcome criterion1()
{
    Outcome o;
    json d = run({{"command", "certify"}, {"c_range", {0.75, 1.0, 0.01}}}, o);
    if (d.is_null()) return o;
    double rows = num(d, "/results/certificate/speeds");
    double max_k = num(d, "/results/certificate/max_k");
    double min_k = num(d, "/results/certificate/min_k");
    double min_k2 = num(d, "/results/certificate/min_k2");
    double change = num(d, "/results/certificate/max_relative_change");
    o.require(rows == 26, "26 speeds");
    o.require(d["results"]["certificate"]["failures"].empty(), "every speed evaluated");
    o.require(max_k <= 0.5, "k <= 0.5");
    o.require(min_k >= 0.0, "k >= 0");
    o.require(min_k2 > 0.0, "k2 > 0");
    o.require(change < 0.01, "stability < 1% under h -> h/2");
    o.note("max k = %.6f", max_k);
    o.note("min k2 = %.6f", min_k2);
    o.note("h/2 change = %.2e", change);
    return o;
}

Outcome criterion2()
{
    Outcome o;
    json d = run(json::object({{"command", "verify"}}), o);
    if (d.is_null()) return o;
    const char* ops[] = {"L_Qp", "L_LambdaQ_plus_Q", "L_Q52_plus_21_4_Q52", "L_H0_minus_1"};
    double worst = 0.0;
    for (const char* k : ops) {
        double v = d["results"]["foundations"][k].get<double>();
        worst = std::max(worst, v);
        o.require(v < 1e-6, std::string(k) + " < 1e-6");
    }
    o.require(num(d, "/results/foundations/h") <= 0.005 + 1e-15, "h = 0.005");
    double e1 = std::fabs(num(d, "/results/foundations/Qp2_over_Q2") - 3.0 / 7.0);
    double e2 = std::fabs(num(d, "/results/foundations/QLambdaQ_over_Q2") - 1.0 / 12.0);
    double e3 = std::fabs(num(d, "/results/foundations/QH0_over_Q") - 1.0 / 6.0);
    o.require(e1 < 1e-8, "3/7 ratio");
    o.require(e2 < 1e-8, "1/12 ratio");
    o.require(e3 < 1e-8, "1/6 ratio");
    o.note("max operator residual = %.2e", worst);
    o.note("max ratio error = %.2e", std::max({e1, e2, e3}));
    return o;
}

Outcome criterion3()
{
    Outcome o;
    json d = run({{"command", "profile"}, {"profile", {{"c_values", {0.75, 0.80, 0.85, 0.90, 0.95}}}}}, o);
    if (d.is_null()) return o;
    double res = num(d, "/results/resonance/max_bvp_residual");
    double slope = num(d, "/results/resonance/max_slope_error");
    double change = num(d, "/results/resonance/max_aI_relative_change");
    bool sign = d["results"]["resonance"]["aI_sign_constant"].get<bool>();
    o.require(res < 1e-8, "BVP residual < 1e-8");
    o.require(slope < 1e-3, "right log-slope within 1e-3 of -gammaI");
    o.require(sign, "constant aI sign");
    o.require(change < 5e-4, "aI agreement to 3 significant digits");
    o.note("BVP residual = %.2e", res);
    o.note("slope error = %.2e", slope);
    o.note("aI change = %.2e", change);
    return o;
}

Outcome criterion4()
{
    Outcome o;
    json d = run({{"command", "rigidity"}, {"train", {1.0, 0.8}}, {"rigidity", {{"f_step", 1e-3}}}}, o);
    if (d.is_null()) return o;
    double lower = num(d, "/results/rigidity/bounds/lower");
    double upper = num(d, "/results/rigidity/bounds/upper");
    double count = num(d, "/results/rigidity/bounds/count_factor");
    double fl = num(d, "/results/rigidity/f_bounds/min_lower_slack");
    double fu = num(d, "/results/rigidity/f_bounds/min_upper_slack");
    o.require(lower > 16.0 / 25.0, "(1 - sqrt m2)^6 > 16/25");
    o.require(upper < 1.5, "(1 + sqrt m2)^6 < 3/2");
    o.require(count < 0.125, "2a + a^2/sqrt 2 < 1/8");
    o.require(fl >= 0.0, "f >= m1 (1-x)^2");
    o.require(fu >= 0.0, "f <= 24 (1-x)^2");
    o.require(num(d, "/results/rigidity/f_bounds/points") == 1500, "grid step 1e-3 on (0, 3/2]");
    o.note("lower = %.6f", lower);
    o.note("upper = %.6f", upper);
    o.note("count factor = %.6f", count);
    return o;
}

Outcome criterion5()
{
    Outcome o;
    json d = run({{"command", "rigidity"}, {"rigidity", {{"x_values", {0.5, 0.7, 0.9}}, {"N_max", 3}}}}, o);
    if (d.is_null()) return o;
    double best3 = 1e300;
    for (const auto& s : d["results"]["rigidity"]["scan"]) {
        double x = s["x"].get<double>();
        const auto& sol = s["solutions"];
        bool exact = sol.size() == 1 && sol[0]["N"] == 2 && std::fabs(sol[0]["a"].get<double>() - 1.0) <= 1e-6 &&
                     std::fabs(sol[0]["b"].get<double>() - x) <= 1e-6 && sol[0]["residual"].get<double>() <= 1e-6;
        o.require(exact, "N = 2 returns exactly {(1, x)}");
        best3 = std::min(best3, s["min_residual"][1].get<double>());
    }
    o.require(d["results"]["rigidity"]["scan"].size() == 3, "three scans");
    o.require(best3 > 1e-4, "no N = 3 candidate below 1e-4");
    o.note("min N = 3 residual = %.3g", best3);
    return o;
}

Outcome criterion6()
{
    Outcome o;
    json d = run({{"command", "rigidity"}, {"seed", 0}, {"rigidity", {{"samples", 1000}, {"max_n", 6}}}}, o);
    if (d.is_null()) return o;
    double samples = num(d, "/results/rigidity/monte_carlo/samples");
    double violations = num(d, "/results/rigidity/monte_carlo/violations");
    double gl = num(d, "/results/rigidity/elementary/min_gc_lower_slack");
    double gu = num(d, "/results/rigidity/elementary/min_gc_upper_slack");
    double bb = num(d, "/results/rigidity/elementary/min_bb_slack");
    o.require(samples == 1000, "1000 trains");
    o.require(violations == 0, "zero violations");
    o.require(gl >= 0.0 && gu >= 0.0, "1 - sqrt c <= gamma(c) <= 1 - c");
    o.require(bb >= 0.0, "sqrt(1 - 3c/4) >= 1 - sqrt(c)/2");
    o.note("violations = %.0f", violations);
    o.note("min slack = %.3g", std::min({num(d, "/results/rigidity/monte_carlo/min_first_slack"),
                                         num(d, "/results/rigidity/monte_carlo/min_second_slack"),
                                         num(d, "/results/rigidity/monte_carlo/min_third_slack")}));
    return o;
}

Outcome criterion7()
{
    Outcome o;
    json d = run({{"command", "approx"}, {"train", {1.0, 0.8}}, {"K0", 20.0}}, o);
    if (d.is_null()) return o;
    const double tol = 0.02;
    double sigma0 = num(d, "/results/approx/rates/sigma0");
    double target = -2.0 * sigma0;
    double total = num(d, "/results/approx/rates/residual_slope");
    o.require(std::fabs(total - target) < tol, "||E(V)|| slope = -2 sigma0 +- 0.02");
    const auto& dE = d["results"]["approx"]["rates"]["dE_slopes"];
    double worst = -1e300;
    for (std::size_t i = 0; i < dE.size(); ++i) {
        double s = dE[i].get<double>();
        worst = std::max(worst, s);
        o.require(s <= target + tol, "||d_x E_" + std::to_string(i + 1) + "|| slope <= -2 sigma0 + 0.02");
    }
    o.require(std::fabs(dE[0].get<double>() - target) < tol, "||d_x E_1|| slope = -2 sigma0 +- 0.02");
    o.require(std::fabs(dE[2].get<double>() - target) < tol, "||d_x E_3|| slope = -2 sigma0 +- 0.02");
    double corr = num(d, "/results/approx/rates/correction_slope");
    o.require(std::fabs(corr + sigma0) < tol, "||V - R|| slope = -sigma0 +- 0.02");
    double klo = num(d, "/results/approx/lower_bound/kappa_lo");
    double khi = num(d, "/results/approx/lower_bound/kappa_hi");
    double ratio_err = num(d, "/results/approx/lower_bound/max_ratio_error");
    o.require(klo > 0.0 && std::isfinite(khi), "kappa_lo > 0, kappa_hi finite");
    o.require(ratio_err < 0.02, "K0 scaling e^{gamma0 delta} within 2%");
    o.note("||E|| slope = %.4f", total);
    o.note("target = %.4f", target);
    o.note("max dE slope = %.4f", worst);
    o.note("||V-R|| slope = %.4f", corr);
    o.note("kappa_lo = %.4g", klo);
    o.note("kappa_hi = %.4g", khi);
    o.note("scaling error = %.2e", ratio_err);
    return o;
}

Outcome criterion8()
{
    Outcome o;
    json d = run({{"command", "simulate"}, {"simulate", {{"experiment", "single"}, {"c", 1.0}, {"duration", 20.0}}}}, o);
    if (d.is_null()) return o;
    double phase = num(d, "/results/single/phase_error");
    double shape = num(d, "/results/single/shape_error");
    double mass = num(d, "/results/single/mass_drift");
    double integral = num(d, "/results/single/integral_drift");
    double energy = num(d, "/results/single/energy_drift");
    o.require(phase < 1e-3, "phase error < 1e-3");
    o.require(shape < 1e-5, "shape error < 1e-5");
    o.require(mass < 1e-8, "mass drift < 1e-8");
    o.require(integral < 1e-8, "integral drift < 1e-8");
    o.require(energy < 1e-7, "energy drift < 1e-7");
    o.note("phase = %.2e", phase);
    o.note("shape = %.2e", shape);
    o.note("mass = %.2e", mass);
    o.note("integral = %.2e", integral);
    o.note("energy = %.2e", energy);
    return o;
}

Outcome criterion9()
{
    Outcome o;
    json d = run({{"command", "simulate"},
                  {"train", {1.0, 0.8}},
                  {"simulate", {{"experiment", "collision"}, {"control", true}, {"mirror", true}}}},
                 o);
    if (d.is_null()) return o;
    const auto& runs = d["results"]["collision"];
    o.require(runs.size() == 2, "quartic and KdV runs");
    for (const auto& r : runs) {
        int p = r["power"].get<int>();
        double ratio = r["ratio"].get<double>();
        if (p == 4) {
            o.require(ratio > 10.0, "quartic residual > 10x floor");
            o.note("quartic residual/floor = %.3g", ratio);
        } else {
            o.require(ratio <= 3.0, "KdV residual <= 3x floor");
            o.note("KdV residual/floor = %.3g", ratio);
        }
        o.note(p == 4 ? "quartic mirror difference = %.2e" : "KdV mirror difference = %.2e",
               r["mirror_relative_difference"].get<double>());
    }
    return o;
}

Outcome criterion10()
{
    Outcome o;
    json d = run({{"command", "simulate"}, {"train", {1.0, 0.8}}, {"K0", 20.0}, {"simulate", {{"experiment", "tail"}}}}, o);
    if (d.is_null()) return o;
    double slope = num(d, "/results/tail/slope");
    double target = num(d, "/results/tail/slope_target");
    double dslope = num(d, "/results/tail/distance_slope");
    double C = num(d, "/results/tail/distance_C");
    o.require(std::fabs(slope - target) < 0.02, "log|u(t, x0(t))| slope = -2 sigma0 +- 0.02");
    o.require(dslope <= target + 0.02 && std::isfinite(C), "||u - V|| <= C e^{-2 sigma0 t}");
    o.note("slope = %.4f", slope);
    o.note("target = %.4f", target);
    o.note("distance slope = %.4f", dslope);
    o.note("C = %.3g", C);
    o.note("doubled-K0 shift error = %.3g", std::fabs(num(d, "/results/tail/doubled_shift") /
                                                            num(d, "/results/tail/expected_shift") - 1.0));
    o.note("window from t = %.0f", num(d, "/results/tail/valid_lo"));
    o.note("to t = %.0f", num(d, "/results/tail/valid_hi"));
    return o;
}

Outcome criterion11()
{
    Outcome o;
    json d = run({{"command", "verify"}, {"verify", {{"suites", {"coercivity"}}, {"coercivity_trials", 100}}}}, o);
    if (d.is_null()) return o;
    double trials = num(d, "/results/coercivity/trials");
    double slack = num(d, "/results/coercivity/min_slack_with_tolerance");
    double ident = num(d, "/results/identities/max_relative_mismatch");
    o.require(trials == 100, "100 trials");
    o.require(slack >= 0.0, "slack >= -1e-6 ||B0||^2");
    o.require(ident < 1e-8, "identities to 1e-8");
    double eig = 0.0;
    for (const auto& s : d["results"]["spectral"]) {
        double beta = s["beta"].get<double>();
        const auto& ev = s["eigenvalues"];
        eig = std::max({eig, std::fabs(ev[0].get<double>() + beta * beta),
                        std::fabs(ev[1].get<double>() + (beta - 1.5) * (beta - 1.5))});
    }
    o.require(eig < 1e-6, "eigenvalues -beta^2 and -(beta - 3/2)^2 to 1e-6");
    o.note("min relative slack = %.3g", slack);
    o.note("identity mismatch = %.2e", ident);
    o.note("eigenvalue error = %.2e", eig);
    return o;
}

struct Criterion {
    const char* title;
    std::function<Outcome()> body;
};

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all{
        {"certificate k(c) <= 0.5 on {0.75, ..., 1.00}", criterion1},
        {"operator identity suite", criterion2},
        {"resonance genericity", criterion3},
        {"speed rigidity bounds", criterion4},
        {"two-soliton power-sum rigidity", criterion5},
        {"speed inequalities Monte Carlo", criterion6},
        {"approximate-solution rates", criterion7},
        {"PDE solver calibration", criterion8},
        {"inelasticity contrast", criterion9},
        {"tail-rate experiment", criterion10},
        {"coercivity and spectral facts", criterion11},
    };
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) {
        int k = std::atoi(argv[i]);
        if (k < 1 || k > static_cast<int>(all.size())) {
            std::fprintf(stderr, "usage: %s [criterion 1-11 ...]\n", argv[0]);
            return 2;
        }
        which.push_back(k);
    }
    if (which.empty())
        for (int k = 1; k <= static_cast<int>(all.size()); ++k) which.push_back(k);

    bool ok = true;
    for (int k : which) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = all[static_cast<std::size_t>(k - 1)].body();
        } catch (const std::exception& e) {
            o.passed = false;
            o.summary += std::string("report incomplete: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.passed ? "PASS" : "FAIL", k,
                    all[static_cast<std::size_t>(k - 1)].title, o.summary.c_str(), secs);
        std::fflush(stdout);
        ok = ok && o.passed;
    }
    return ok ? 0 : 1;
}
