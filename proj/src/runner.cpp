#include "runner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>

#include "approx.hpp"
#include "certificate.hpp"
#include "error.hpp"
#include "foundations.hpp"
#include "parallel.hpp"
#include "pde.hpp"
#include "resonance.hpp"
#include "rigidity.hpp"

namespace kdv {

using json = nlohmann::json;

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

// ---- configuration access ----

[[noreturn]] void bad_config(const std::string& what) { fail(Errc::config_error, what); }

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys)
{
    if (!j.is_object()) bad_config(where + " must be a JSON object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) bad_config("unknown key '" + k + "' in " + where);
}

const json& section(const json& j, const char* key)
{
    static const json empty = json::object();
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return empty;
    if (!it->is_object()) bad_config(std::string("'") + key + "' must be an object");
    return *it;
}

double number(const json& j, const char* key, double def)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return def;
    if (!it->is_number()) bad_config(std::string("'") + key + "' must be a number");
    double v = it->get<double>();
    if (!std::isfinite(v)) bad_config(std::string("'") + key + "' must be finite");
    return v;
}

double positive(const json& j, const char* key, double def)
{
    double v = number(j, key, def);
    if (!(v > 0.0)) bad_config(std::string("'") + key + "' must be positive");
    return v;
}

long integer(const json& j, const char* key, long def, long lo, long hi)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return def;
    if (!it->is_number_integer() && !it->is_number_unsigned())
        bad_config(std::string("'") + key + "' must be an integer");
    long v = it->get<long>();
    if (v < lo || v > hi)
        bad_config(std::string("'") + key + "' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
}

bool flag(const json& j, const char* key, bool def)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return def;
    if (!it->is_boolean()) bad_config(std::string("'") + key + "' must be true or false");
    return it->get<bool>();
}

std::string text(const json& j, const char* key, const std::string& def)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return def;
    if (!it->is_string()) bad_config(std::string("'") + key + "' must be a string");
    return it->get<std::string>();
}

std::vector<double> numbers(const json& j, const char* key, std::vector<double> def)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return def;
    if (!it->is_array()) bad_config(std::string("'") + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : *it) {
        if (!v.is_number()) bad_config(std::string("'") + key + "' must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

// Rounds lo + i step to 12 decimals so that 0.75 + 0.01 i lands on the nearest double to (75 + i)/100.
std::vector<double> range_values(const std::vector<double>& r, const std::string& what)
{
    if (r.size() != 3) bad_config(what + " must be [lo, hi, step]");
    double lo = r[0], hi = r[1], step = r[2];
    if (!(step > 0.0) || !(hi >= lo)) bad_config(what + " needs lo <= hi and step > 0");
    double count = std::floor((hi - lo) / step + 1e-9) + 1.0;
    if (count > 1e6) bad_config(what + " has too many points");
    std::vector<double> v;
    for (long i = 0; i < static_cast<long>(count); ++i) v.push_back(std::round((lo + i * step) * 1e12) / 1e12);
    return v;
}

SolitonTrain parse_train(const json& cfg, std::vector<double> def_speeds)
{
    auto it = cfg.find("train");
    std::vector<double> speeds = std::move(def_speeds), shifts;
    if (it != cfg.end() && !it->is_null()) {
        if (it->is_array()) {
            speeds = numbers(cfg, "train", {});
        } else {
            only_keys(*it, "train", {"speeds", "shifts"});
            speeds = numbers(*it, "speeds", speeds);
            shifts = numbers(*it, "shifts", {});
        }
    }
    try {
        return SolitonTrain::make(speeds, shifts);
    } catch (const Error& e) {
        bad_config(std::string("invalid train: ") + e.what());
    }
}

std::vector<double> override_shifts(const json& j, std::size_t n, std::vector<double> def)
{
    auto s = numbers(j, "shifts", std::move(def));
    if (s.size() != n) bad_config("'shifts' needs one entry per soliton");
    return s;
}

struct Context {
    json raw;
    std::uint64_t seed = 0;
    int threads = 1;
    const json& grids() const { return section(raw, "grids"); }
};

// ---- report helpers ----

bool holds(double value, const std::string& rel, double bound)
{
    if (rel == "<") return value < bound;
    if (rel == "<=") return value <= bound;
    if (rel == ">") return value > bound;
    if (rel == ">=") return value >= bound;
    return value == bound;
}

void check(RunReport& r, const std::string& name, double value, const std::string& rel, double bound,
           const std::string& detail = {})
{
    r.checks.push_back(Check{name, holds(value, rel, bound), value, rel, bound, detail});
}

void check_true(RunReport& r, const std::string& name, bool ok, const std::string& detail = {})
{
    r.checks.push_back(Check{name, ok, ok ? 1.0 : 0.0, "==", 1.0, detail});
}

// Numerical failures become a failing check named after the group; configuration errors propagate.
void guarded(RunReport& r, const std::string& group, const std::function<void()>& body)
{
    try {
        body();
    } catch (const Error& e) {
        if (e.code() == Errc::config_error) throw;
        r.checks.push_back(Check{group, false, nan_value, "", nan_value,
                                 std::string(errc_name(e.code())) + ": " + e.what()});
    } catch (const std::exception& e) {
        r.checks.push_back(Check{group, false, nan_value, "", nan_value, std::string("internal: ") + e.what()});
    }
}

std::string prefixed(const std::string& prefix, const std::string& name)
{
    return prefix.empty() ? name : prefix + ": " + name;
}

// ---- certify ----

struct CertifyPlan {
    std::vector<double> cs;
    double h = 0.01;
    double x_max = 40.0;
    bool stability = true;
};

CertifyPlan parse_certify(const Context& ctx)
{
    const json& s = section(ctx.raw, "certify");
    only_keys(s, "certify", {"h", "x_max", "stability"});
    CertifyPlan p;
    p.cs = range_values(numbers(ctx.raw, "c_range", {0.75, 1.0, 0.01}), "c_range");
    for (double c : p.cs)
        if (c < 0.75 || c > 1.0) bad_config("certificate speeds must lie in [0.75, 1]");
    p.h = positive(s, "h", number(ctx.grids(), "certificate_h", 0.01));
    p.x_max = positive(s, "x_max", 40.0);
    p.stability = flag(s, "stability", true);
    if (p.h > 0.01) bad_config("certificate grids need h <= 0.01");
    return p;
}

void run_certify(const CertifyPlan& p, const Context& ctx, RunReport& r, const std::string& prefix)
{
    guarded(r, prefixed(prefix, "certificate sweep"), [&] {
        auto sw = certificate_sweep(p.cs, Grid::with_spacing(-p.x_max, p.x_max, p.h), ctx.threads);
        CertificateSweep fine;
        if (p.stability) fine = certificate_sweep(p.cs, Grid::with_spacing(-p.x_max, p.x_max, 0.5 * p.h), ctx.threads);
        Table t{prefix.empty() ? "certificate" : "verify_certificate",
                {"c [speed]", "alpha [1]", "beta [1]", "ip_G0_H0 [1]", "ip_G0_J0 [1]", "N_H0 [1]", "N_QpOverQ [1]",
                 "N_J0 [1]", "N_Qp3 [1]", "N_composite [1]", "k1 [1]", "k2 [1]", "k [1]", "denominator [1]",
                 "margin [1]", "k_half_h [1]", "relative_change [1]"},
                {}};
        double min_k = 1e300, min_margin = 1e300, max_change = 0.0;
        for (std::size_t i = 0; i < sw.rows.size(); ++i) {
            const auto& c = sw.rows[i];
            double kf = p.stability ? fine.rows[i].k : nan_value;
            double change = p.stability ? std::fabs(c.k - kf) / std::max(std::fabs(kf), 1e-300) : nan_value;
            if (p.stability) max_change = std::max(max_change, change);
            min_k = std::min(min_k, c.k);
            min_margin = std::min(min_margin, c.margin);
            t.rows.push_back({c.c, c.alpha, c.beta, c.ip_G0_H0, c.ip_G0_J0, c.N_H0, c.N_QpOverQ, c.N_J0, c.N_Qp3,
                              c.N_composite, c.k1, c.k2, c.k, c.denominator, c.margin, kf, change});
        }
        r.tables.push_back(std::move(t));
        json res = {{"speeds", p.cs.size()}, {"h", p.h},          {"max_k", sw.max_k},
                    {"min_k", min_k},        {"min_k2", sw.min_k2}, {"min_margin", min_margin},
                    {"failures", sw.failures}};
        if (p.stability) {
            res["max_relative_change"] = max_change;
            res["max_k_half_h"] = fine.max_k;
        }
        r.results["certificate"] = res;
        check(r, prefixed(prefix, "every speed evaluated"), static_cast<double>(sw.failures.size()), "==", 0.0,
              sw.failures.empty() ? "" : sw.failures.front());
        check(r, prefixed(prefix, "certificate k(c) <= 1/2"), sw.max_k, "<=", 0.5);
        check(r, prefixed(prefix, "certificate k(c) >= 0"), min_k, ">=", 0.0);
        check(r, prefixed(prefix, "certificate k2(c) > 0"), sw.min_k2, ">", 0.0);
        if (p.stability) {
            check(r, prefixed(prefix, "certificate stable under h -> h/2"), max_change, "<", 0.01);
            check(r, prefixed(prefix, "every refined speed evaluated"), static_cast<double>(fine.failures.size()),
                  "==", 0.0);
        }
    });
}

// ---- profile ----

struct ProfilePlan {
    std::vector<double> cs;
    double h = 0.01;
    bool refine = true;
    double slope_lo = 40.0;
    double slope_hi = 60.0;
};

ProfilePlan parse_profile(const Context& ctx)
{
    const json& s = section(ctx.raw, "profile");
    only_keys(s, "profile", {"c_values", "h", "refine", "slope_window"});
    ProfilePlan p;
    std::vector<double> def{0.75, 0.80, 0.85, 0.90, 0.95};
    if (ctx.raw.contains("c_range") && !s.contains("c_values")) def = range_values(numbers(ctx.raw, "c_range", {}), "c_range");
    p.cs = numbers(s, "c_values", def);
    if (p.cs.empty()) bad_config("profile needs at least one speed");
    for (double c : p.cs)
        if (!(c >= 0.75 && c < 1.0)) bad_config("resonance speeds must lie in [0.75, 1)");
    p.h = positive(s, "h", number(ctx.grids(), "resonance_h", 0.01));
    if (p.h > 0.01) bad_config("resonance grids need h <= 0.01");
    p.refine = flag(s, "refine", true);
    auto w = numbers(s, "slope_window", {40.0, 60.0});
    if (w.size() != 2 || !(w[0] < w[1]) || w[0] < 0.0 || w[1] > 70.0) bad_config("'slope_window' must be [a, b] inside [0, 70]");
    p.slope_lo = w[0];
    p.slope_hi = w[1];
    return p;
}

void run_profile(const ProfilePlan& p, const Context& ctx, RunReport& r, const std::string& prefix)
{
    guarded(r, prefixed(prefix, "resonance sweep"), [&] {
        const std::size_t n = p.cs.size();
        struct Row {
            ResonanceProfile coarse;
            double slope = 0.0;
            double aI_fine = nan_value;
            double aII_fine = nan_value;
        };
        std::vector<Row> rows(n);
        std::vector<std::size_t> jobs;
        for (std::size_t i = 0; i < n; ++i) {
            jobs.push_back(2 * i);
            if (p.refine) jobs.push_back(2 * i + 1);
        }
        parallel_for(jobs.size(), ctx.threads, [&](std::size_t j) {
            std::size_t i = jobs[j] / 2;
            auto params = ResonanceParams::below_one(p.cs[i]);
            if (jobs[j] % 2 == 0) {
                rows[i].coarse = solve_resonance(params, default_resonance_grid(p.h));
                rows[i].slope = log_slope(rows[i].coarse.samples, p.slope_lo, p.slope_hi);
            } else {
                auto fine = solve_resonance(params, default_resonance_grid(0.5 * p.h));
                rows[i].aI_fine = fine.aI();
                rows[i].aII_fine = fine.aII();
            }
        });
        Table t{prefix.empty() ? "resonance" : "verify_resonance",
                {"c [speed]", "theta [1]", "gamma0 [1/length]", "gammaI [1/length]", "gammaII [1/length]", "aI [1]",
                 "aII [1]", "fit_residual [1]", "bvp_residual [1]", "consistency_residual [1]",
                 "right_log_slope [1/length]", "slope_error [1/length]", "aI_half_h [1]", "aI_relative_change [1]"},
                {}};
        double max_res = 0.0, max_cons = 0.0, max_slope_err = 0.0, max_change = 0.0;
        int positive_count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = rows[i].coarse;
            double slope_err = std::fabs(rows[i].slope + a.rates.gammaI);
            double change = p.refine ? std::fabs(a.aI() - rows[i].aI_fine) / std::fabs(rows[i].aI_fine) : nan_value;
            max_res = std::max(max_res, a.discrete_residual);
            max_cons = std::max(max_cons, a.consistency_residual);
            max_slope_err = std::max(max_slope_err, slope_err);
            if (p.refine) max_change = std::max(max_change, change);
            if (a.aI() > 0.0) ++positive_count;
            t.rows.push_back({p.cs[i], a.params.theta, a.rates.gamma0, a.rates.gammaI, a.rates.gammaII, a.aI(), a.aII(),
                              a.fit.fit_residual, a.discrete_residual, a.consistency_residual, rows[i].slope, slope_err,
                              rows[i].aI_fine, change});
        }
        bool sign_constant = positive_count == 0 || positive_count == static_cast<int>(n);
        r.tables.push_back(std::move(t));
        json res = {{"speeds", p.cs},
                    {"h", p.h},
                    {"max_bvp_residual", max_res},
                    {"max_consistency_residual", max_cons},
                    {"max_slope_error", max_slope_err},
                    {"aI_sign_constant", sign_constant}};
        if (p.refine) res["max_aI_relative_change"] = max_change;
        r.results["resonance"] = res;
        check(r, prefixed(prefix, "resonance BVP residual"), max_res, "<", 1e-8);
        check(r, prefixed(prefix, "resonance independent-stencil residual"), max_cons, "<", 1e-6);
        check(r, prefixed(prefix, "right log-slope equals -gammaI"), max_slope_err, "<", 1e-3);
        check_true(r, prefixed(prefix, "aI sign constant across the sweep"), sign_constant);
        if (p.refine) check(r, prefixed(prefix, "aI self-convergent to 3 digits"), max_change, "<", 5e-4);
    });
}

// ---- rigidity ----

struct RigidityPlan {
    SolitonTrain train;
    std::vector<double> xs;
    int N_max = 4;
    double grid_step = 1e-3;
    double tolerance = 1e-6;
    long samples = 1000;
    int max_n = 6;
    double f_step = 1e-3;
    double elementary_step = 1e-4;
};

RigidityPlan parse_rigidity(const Context& ctx)
{
    const json& s = section(ctx.raw, "rigidity");
    only_keys(s, "rigidity", {"x_values", "N_max", "grid_step", "tolerance", "samples", "max_n", "f_step", "elementary_step"});
    RigidityPlan p;
    p.train = parse_train(ctx.raw, {1.0, 0.8});
    p.xs = numbers(s, "x_values", {0.5, 0.7, 0.9});
    for (double x : p.xs)
        if (!(x > 0.0 && x < 1.0)) bad_config("'x_values' must lie in (0, 1)");
    p.N_max = static_cast<int>(integer(s, "N_max", 4, 3, 8));
    p.grid_step = positive(s, "grid_step", 1e-3);
    if (p.grid_step > 1e-3) bad_config("'grid_step' must be at most 1e-3");
    p.tolerance = positive(s, "tolerance", 1e-6);
    p.samples = integer(s, "samples", 1000, 1, 10000000);
    p.max_n = static_cast<int>(integer(s, "max_n", 6, 2, 50));
    p.f_step = positive(s, "f_step", 1e-3);
    if (p.f_step > 1e-3) bad_config("'f_step' must be at most 1e-3");
    p.elementary_step = positive(s, "elementary_step", 1e-4);
    return p;
}

void run_rigidity(const RigidityPlan& p, const Context& ctx, RunReport& r, const std::string& prefix)
{
    json res;
    guarded(r, prefixed(prefix, "incoming speed bounds"), [&] {
        auto b = incoming_speed_bounds(p.train);
        res["bounds"] = {{"m1", b.m1},       {"m2", b.m2},     {"lower", b.lower}, {"upper", b.upper},
                         {"a", b.a},         {"count_factor", b.count_factor}, {"count_forced", b.count_forced}};
        check(r, prefixed(prefix, "(1 - sqrt m2)^6 > 16/25"), b.lower, ">", 16.0 / 25.0);
        check(r, prefixed(prefix, "(1 + sqrt m2)^6 < 3/2"), b.upper, "<", 1.5);
        check(r, prefixed(prefix, "2a + a^2/sqrt 2 < 1/8"), b.count_factor, "<", 0.125);
    });
    guarded(r, prefixed(prefix, "power function bounds"), [&] {
        auto f = f_bounds_check(p.f_step);
        res["f_bounds"] = {{"points", f.points},
                           {"min_lower_slack", f.min_lower_slack},
                           {"min_upper_slack", f.min_upper_slack},
                           {"min_fpp_slack", f.min_fpp_slack},
                           {"m1", 0.5 * f.two_m1}};
        check(r, prefixed(prefix, "f >= m1 (1-x)^2 on (0, 3/2]"), f.min_lower_slack, ">=", 0.0);
        check(r, prefixed(prefix, "f <= 24 (1-x)^2 on [3/4, 1]"), f.min_upper_slack, ">=", 0.0);
    });
    guarded(r, prefixed(prefix, "power-sum rigidity scan"), [&] {
        std::vector<RigidityScan> scans(p.xs.size());
        parallel_for(p.xs.size(), ctx.threads, [&](std::size_t i) {
            scans[i] = two_soliton_rigidity_scan(p.xs[i], p.N_max, p.grid_step, p.tolerance);
        });
        Table t{prefix.empty() ? "power_sum_scan" : "verify_power_sum_scan",
                {"x [1]", "N [count]", "min_residual [1]", "solutions [count]"},
                {}};
        double worst_pair = 0.0, min_three = 1e300, min_higher = 1e300;
        bool exact = true;
        json js = json::array();
        for (const auto& s : scans) {
            for (std::size_t k = 0; k < s.min_residual.size(); ++k) {
                int N = static_cast<int>(k) + 2;
                double count = 0.0;
                for (const auto& c : s.solutions) count += c.N == N ? 1.0 : 0.0;
                t.rows.push_back({s.x, static_cast<double>(N), s.min_residual[k], count});
                if (N == 3) min_three = std::min(min_three, s.min_residual[k]);
                if (N > 3) min_higher = std::min(min_higher, s.min_residual[k]);
            }
            bool one = s.solutions.size() == 1 && s.solutions[0].N == 2;
            if (one) {
                const auto& c = s.solutions[0];
                worst_pair = std::max({worst_pair, std::fabs(c.a - 1.0), std::fabs(c.b - s.x), c.residual});
            }
            exact = exact && one;
            json sol = json::array();
            for (const auto& c : s.solutions)
                sol.push_back({{"N", c.N}, {"k", c.k}, {"a", c.a}, {"b", c.b}, {"residual", c.residual}});
            js.push_back({{"x", s.x}, {"solutions", sol}, {"min_residual", s.min_residual}});
        }
        r.tables.push_back(std::move(t));
        res["scan"] = js;
        check_true(r, prefixed(prefix, "two-soliton scan returns exactly {(1, x)}"), exact);
        check(r, prefixed(prefix, "two-soliton solution accuracy"), worst_pair, "<=", 1e-6);
        check(r, prefixed(prefix, "no N = 3 candidate below 1e-4"), min_three, ">", 1e-4);
        if (p.N_max > 3) check(r, prefixed(prefix, "no N >= 4 candidate below 1e-4"), min_higher, ">", 1e-4);
    });
    guarded(r, prefixed(prefix, "speed inequalities Monte Carlo"), [&] {
        auto mc = claim_bm_monte_carlo(static_cast<std::size_t>(p.samples), ctx.seed, p.max_n, ctx.threads);
        res["monte_carlo"] = {{"samples", mc.samples},
                              {"seed", ctx.seed},
                              {"violations", mc.violations},
                              {"j0_above_one", mc.j0_above_one},
                              {"min_first_slack", mc.min_first_slack},
                              {"min_second_slack", mc.min_second_slack},
                              {"min_third_slack", mc.min_third_slack},
                              {"violating", mc.violating}};
        check(r, prefixed(prefix, "speed inequalities on random admissible trains"), static_cast<double>(mc.violations),
              "==", 0.0, mc.violating.empty() ? "" : mc.violating.front());
        auto bm = claim_bm_check(p.train);
        res["train_inequalities"] = {{"applicable", bm.applicable}, {"first_lhs", bm.first_lhs},
                                     {"first_rhs", bm.first_rhs},   {"second_lhs", bm.second_lhs},
                                     {"third_lhs", bm.third_lhs},   {"third_rhs", bm.third_rhs},
                                     {"all", bm.all()}};
    });
    guarded(r, prefixed(prefix, "elementary speed bounds"), [&] {
        auto e = elementary_bounds_check(p.elementary_step);
        res["elementary"] = {{"points", e.points},
                             {"min_gc_lower_slack", e.min_gc_lower_slack},
                             {"min_gc_upper_slack", e.min_gc_upper_slack},
                             {"min_bb_slack", e.min_bb_slack}};
        check(r, prefixed(prefix, "1 - sqrt c <= gamma(c) <= 1 - c"),
              std::min(e.min_gc_lower_slack, e.min_gc_upper_slack), ">=", 0.0);
        check(r, prefixed(prefix, "sqrt(1 - 3c/4) >= 1 - sqrt(c)/2"), e.min_bb_slack, ">=", 0.0);
    });
    r.results["rigidity"] = res;
}

// ---- approx ----

struct ApproxPlan {
    SolitonTrain rates_train;
    SolitonTrain bound_train;
    double K0 = 20.0;
    std::vector<double> rate_times;
    std::vector<double> bound_times;
    double delta = 5.0;
    double h = 0.01;
    double resonance_h = 0.01;
    double tolerance = 0.02;
};

ApproxPlan parse_approx(const Context& ctx)
{
    const json& s = section(ctx.raw, "approx");
    only_keys(s, "approx", {"rates", "lower_bound", "h"});
    const json& rs = section(s, "rates");
    const json& ls = section(s, "lower_bound");
    only_keys(rs, "approx.rates", {"t_range", "shifts"});
    only_keys(ls, "approx.lower_bound", {"t_range", "delta", "shifts"});
    ApproxPlan p;
    SolitonTrain base = parse_train(ctx.raw, {1.0, 0.8});
    const std::size_t n = base.n();
    if (n < 2) bad_config("approx needs at least two solitons");
    // A relative shift of 10 is a time translation by 10 / (c_1 - c_2); it moves [10, 30] past the
    // transient where the quartic cross terms of the correction still dominate.
    std::vector<double> rate_shift(n, 0.0);
    if (n == 2 && !(ctx.raw.contains("train") && ctx.raw["train"].is_object() && ctx.raw["train"].contains("shifts")))
        rate_shift[0] = 10.0;
    else
        rate_shift = base.shifts;
    try {
        p.rates_train = SolitonTrain::make(base.speeds, override_shifts(rs, n, rate_shift));
        p.bound_train = SolitonTrain::make(base.speeds, override_shifts(ls, n, base.shifts));
    } catch (const Error& e) {
        if (e.code() == Errc::config_error) throw;
        bad_config(std::string("invalid train: ") + e.what());
    }
    p.K0 = positive(ctx.raw, "K0", 20.0);
    p.rate_times = range_values(numbers(rs, "t_range", {10.0, 30.0, 2.0}), "approx.rates.t_range");
    p.bound_times = range_values(numbers(ls, "t_range", {60.0, 120.0, 5.0}), "approx.lower_bound.t_range");
    if (p.rate_times.size() < 3 || p.bound_times.size() < 3) bad_config("approx time ranges need at least 3 points");
    p.delta = positive(ls, "delta", 5.0);
    p.h = positive(s, "h", number(ctx.grids(), "approx_h", 0.01));
    if (p.h > 0.01) bad_config("approx grids need h <= 0.01");
    p.resonance_h = positive(ctx.grids(), "resonance_h", 0.01);
    return p;
}

void run_approx(const ApproxPlan& p, const Context& ctx, RunReport& r, const std::string& prefix)
{
    json res;
    res["K0"] = p.K0;
    guarded(r, prefixed(prefix, "residual and error-term rates"), [&] {
        auto m = build_model(p.rates_train, default_resonance_grid(p.resonance_h), p.K0, ctx.threads);
        auto rep = residual_rates(m, p.rate_times, p.h, ctx.threads);
        const double sigma0 = m.geometry.sigma0, target = -2.0 * sigma0;
        Table t{prefix.empty() ? "approx_rates" : "verify_approx_rates",
                {"t [time]", "residual_l2 [1]", "residual_h3 [1]", "dE1_l2 [1]", "dE2_l2 [1]", "dE3_l2 [1]",
                 "dE4_l2 [1]", "dE5_l2 [1]", "correction_h1 [1]", "identity_mismatch [1]"},
                {}};
        for (const auto& row : rep.rows)
            t.rows.push_back({row.t, row.residual_l2, row.residual_h3, row.dE_l2[0], row.dE_l2[1], row.dE_l2[2],
                              row.dE_l2[3], row.dE_l2[4], row.correction, row.identity_mismatch});
        r.tables.push_back(std::move(t));
        res["rates"] = {{"speeds", p.rates_train.speeds},
                        {"shifts", p.rates_train.shifts},
                        {"sigma0", sigma0},
                        {"gamma0", m.geometry.gamma0},
                        {"target", target},
                        {"residual_slope", rep.residual_slope},
                        {"residual_h3_slope", rep.residual_h3_slope},
                        {"dE_slopes", rep.dE_slopes},
                        {"correction_slope", rep.correction_slope},
                        {"max_identity_mismatch", rep.max_identity_mismatch},
                        {"max_relative_mismatch", rep.max_relative_mismatch}};
        check(r, prefixed(prefix, "||E(V)|| decay rate equals -2 sigma0"), std::fabs(rep.residual_slope - target), "<",
              p.tolerance);
        check(r, prefixed(prefix, "||E(V)||_H3 decay rate equals -2 sigma0"), std::fabs(rep.residual_h3_slope - target),
              "<", p.tolerance);
        for (int i = 0; i < 5; ++i)
            check(r, prefixed(prefix, "||d_x E_" + std::to_string(i + 1) + "|| decays at least at 2 sigma0"),
                  rep.dE_slopes[static_cast<std::size_t>(i)], "<=", target + p.tolerance);
        check(r, prefixed(prefix, "||V - R|| decay rate equals -sigma0"), std::fabs(rep.correction_slope + sigma0), "<",
              p.tolerance);
        check(r, prefixed(prefix, "error terms sum to E(V)"), rep.max_identity_mismatch, "<", 1e-8);
    });
    guarded(r, prefixed(prefix, "lower bound on the observation line"), [&] {
        auto m = build_model(p.bound_train, default_resonance_grid(p.resonance_h), p.K0, ctx.threads);
        auto lb = lower_bound_check(m, p.K0, p.bound_times, p.delta);
        Table t{prefix.empty() ? "lower_bound" : "verify_lower_bound",
                {"t [time]", "x0 [length]", "R [1]", "Z [1]", "W [1]", "V [1]", "m [1]", "m_shifted [1]"},
                {}};
        for (const auto& row : lb.rows)
            t.rows.push_back({row.t, row.x0, row.at_x0.R, row.at_x0.Z, row.at_x0.W, row.at_x0.V(), row.m, row.m_shifted});
        r.tables.push_back(std::move(t));
        res["lower_bound"] = {{"shifts", p.bound_train.shifts},
                              {"start_estimate", lower_bound_start(m, p.K0)},
                              {"kappa_lo", lb.kappa_lo},
                              {"kappa_hi", lb.kappa_hi},
                              {"variation", lb.variation},
                              {"kappa", lb.kappa},
                              {"delta", lb.delta},
                              {"expected_ratio", lb.expected_ratio},
                              {"max_ratio_error", lb.max_ratio_error},
                              {"max_dominance", lb.max_dominance},
                              {"R_slope", lb.R_slope},
                              {"R_slope_bound", lb.R_slope_bound},
                              {"min_additivity", lb.min_additivity}};
        check(r, prefixed(prefix, "|V(x0)| e^{2 sigma0 t} bounded below"), lb.kappa_lo, ">", 0.0);
        check(r, prefixed(prefix, "K0 scaling factor e^{gamma0 delta}"), lb.max_ratio_error, "<", 0.02);
        check(r, prefixed(prefix, "Z dominates R and W at x0"), lb.max_dominance, "<=", 0.1);
        check(r, prefixed(prefix, "R decays faster at x0"), lb.R_slope, "<=", lb.R_slope_bound);
        check(r, prefixed(prefix, "pair terms add up at x0"), lb.min_additivity, ">=", 0.5);
    });
    r.results["approx"] = res;
}

// ---- simulate ----

PeriodicGrid parse_pde_grid(const Context& ctx, const json& s, std::size_t def_n)
{
    const json& g = ctx.grids();
    double L = positive(s, "half_length", number(g, "pde_half_length", 256.0));
    long n = integer(s, "n", integer(g, "pde_n", static_cast<long>(def_n), 4096, 1L << 22), 4096, 1L << 22);
    if ((n & (n - 1)) != 0) bad_config("PDE grids need a power-of-two n");
    return PeriodicGrid::make(L, static_cast<std::size_t>(n));
}

struct SimulatePlan {
    std::string experiment;
    PeriodicGrid grid;
    // single
    double c = 1.0;
    double duration = 20.0;
    double dt = 0.0;
    bool dealias = true;
    int power = 4;
    // collision
    SolitonTrain train;
    CollisionOptions col;
    bool control = true;
    // tail
    TailOptions tail;
    double K0 = 20.0;
    // monotonicity
    double sigma = 0.1, c0 = 0.9, sigma_prime = 0.2, x0 = 10.0, separation = 40.0, record_every = 1.0;
    MonotonicityMode mode = MonotonicityMode::mass_energy;
};

SimulatePlan parse_simulate(const Context& ctx)
{
    const json& s = section(ctx.raw, "simulate");
    SimulatePlan p;
    p.experiment = text(s, "experiment", "");
    const json& g = ctx.grids();
    if (p.experiment == "single") {
        only_keys(s, "simulate", {"experiment", "c", "duration", "dt", "dealias", "power", "n", "half_length"});
        p.grid = parse_pde_grid(ctx, s, std::size_t{1} << 14);
        p.c = positive(s, "c", 1.0);
        p.duration = positive(s, "duration", 20.0);
        p.dt = positive(s, "dt", number(g, "dt", 1e-3));
        p.dealias = flag(s, "dealias", true);
        p.power = static_cast<int>(integer(s, "power", 4, 2, 4));
        if (p.power == 3) bad_config("'power' must be 2 or 4");
    } else if (p.experiment == "collision") {
        only_keys(s, "simulate", {"experiment", "separation", "T_post", "dt", "power", "control", "mirror",
                                  "error_floor", "record_every", "n", "half_length"});
        p.train = parse_train(ctx.raw, {1.0, 0.8});
        if (p.train.n() != 2) bad_config("collision experiments use two solitons");
        p.col.grid = parse_pde_grid(ctx, s, std::size_t{1} << 13);
        if (p.col.grid.half_length < 200.0) bad_config("collision runs need half_length >= 200");
        p.col.separation = positive(s, "separation", 40.0);
        if (p.col.separation < 40.0) bad_config("'separation' must be at least 40");
        p.col.T_post = number(s, "T_post", 0.0);
        if (p.col.T_post < 0.0) bad_config("'T_post' must be nonnegative");
        p.col.dt = number(s, "dt", number(g, "dt", 0.0));
        if (p.col.dt < 0.0) bad_config("'dt' must be nonnegative");
        p.col.power = static_cast<int>(integer(s, "power", 4, 2, 4));
        if (p.col.power == 3) bad_config("'power' must be 2 or 4");
        p.control = flag(s, "control", true);
        p.col.mirror = flag(s, "mirror", true);
        p.col.error_floor = flag(s, "error_floor", true);
        p.col.record_every = positive(s, "record_every", 10.0);
    } else if (p.experiment == "tail") {
        only_keys(s, "simulate", {"experiment", "T_data", "T_lo", "residual_threshold", "dt", "record_every",
                                  "error_estimate", "valid_fraction", "n", "half_length"});
        p.train = parse_train(ctx.raw, {1.0, 0.8});
        p.K0 = positive(ctx.raw, "K0", 20.0);
        p.tail.K0 = p.K0;
        p.tail.grid = parse_pde_grid(ctx, s, std::size_t{1} << 14);
        p.tail.T_data = number(s, "T_data", 0.0);
        p.tail.T_lo = number(s, "T_lo", 0.0);
        if (p.tail.T_data < 0.0 || p.tail.T_lo < 0.0) bad_config("tail times must be nonnegative");
        p.tail.residual_threshold = positive(s, "residual_threshold", 1e-9);
        p.tail.dt = number(s, "dt", number(g, "dt", 0.0));
        if (p.tail.dt < 0.0) bad_config("'dt' must be nonnegative");
        p.tail.record_every = positive(s, "record_every", 1.0);
        p.tail.error_estimate = flag(s, "error_estimate", true);
        p.tail.valid_fraction = positive(s, "valid_fraction", 0.01);
    } else if (p.experiment == "monotonicity") {
        only_keys(s, "simulate", {"experiment", "sigma", "c0", "sigma_prime", "x0", "mode", "duration", "separation",
                                  "record_every", "n", "half_length"});
        p.train = parse_train(ctx.raw, {1.0, 0.8});
        if (p.train.n() != 2) bad_config("the monotonicity check uses two solitons");
        p.grid = parse_pde_grid(ctx, s, std::size_t{1} << 13);
        p.sigma = positive(s, "sigma", 0.1);
        p.c0 = positive(s, "c0", 1.1);
        p.sigma_prime = positive(s, "sigma_prime", 0.2);
        if (!(p.sigma < p.sigma_prime && p.sigma_prime < p.c0)) bad_config("monotonicity needs sigma < sigma' < c0");
        p.x0 = number(s, "x0", 10.0);
        std::string mode = text(s, "mode", "mass_energy");
        if (mode == "mass_energy") p.mode = MonotonicityMode::mass_energy;
        else if (mode == "mass_only") p.mode = MonotonicityMode::mass_only;
        else bad_config("'mode' must be mass_energy or mass_only");
        p.duration = positive(s, "duration", 50.0);
        p.separation = positive(s, "separation", 40.0);
        p.record_every = positive(s, "record_every", 1.0);
    } else {
        bad_config("simulate needs 'simulate.experiment' = single, collision, tail or monotonicity");
    }
    return p;
}

json collision_json(const CollisionReport& c)
{
    json fits = json::array();
    for (const auto& f : c.fits) fits.push_back({{"c", f.c}, {"center", f.center}, {"rms", f.rms}});
    return {{"power", c.power},
            {"T_pre", c.T_pre},
            {"T_post", c.T_post},
            {"dt", c.dt},
            {"fits", fits},
            {"residual", c.residual},
            {"floor", c.floor},
            {"ratio", c.ratio},
            {"mirror_residual", c.mirror_residual},
            {"mirror_relative_difference", c.mirror_relative_difference},
            {"max_buffer", c.max_buffer},
            {"mass_drift", c.mass_drift},
            {"energy_drift", c.energy_drift},
            {"integral_drift", c.integral_drift}};
}

void run_simulate(const SimulatePlan& p, const Context& ctx, RunReport& r, const std::string& prefix)
{
    if (p.experiment == "single") {
        guarded(r, prefixed(prefix, "single-soliton run"), [&] {
            auto s = single_soliton_run(p.c, p.duration, p.grid, p.dt, p.dealias, p.power);
            r.results["single"] = {{"c", p.c},
                                   {"duration", p.duration},
                                   {"n", p.grid.n},
                                   {"half_length", p.grid.half_length},
                                   {"dt", s.dt},
                                   {"dt_suggested", suggest_dt(p.grid, soliton(p.power, p.c, 0.0), p.power).dt},
                                   {"phase_error", s.phase_error},
                                   {"shape_error", s.shape_error},
                                   {"mass_drift", s.mass_drift},
                                   {"energy_drift", s.energy_drift},
                                   {"integral_drift", s.integral_drift},
                                   {"max_buffer", s.max_buffer}};
            check(r, prefixed(prefix, "soliton phase error"), s.phase_error, "<", 1e-3);
            check(r, prefixed(prefix, "co-moving shape error"), s.shape_error, "<", 1e-5);
            check(r, prefixed(prefix, "mass drift"), s.mass_drift, "<", 1e-8);
            check(r, prefixed(prefix, "integral drift"), s.integral_drift, "<", 1e-8);
            check(r, prefixed(prefix, "energy drift"), s.energy_drift, "<", 1e-7);
            check(r, prefixed(prefix, "buffer magnitude"), s.max_buffer, "<", 1e-10);
        });
    } else if (p.experiment == "collision") {
        std::vector<int> powers{p.col.power};
        if (p.control && p.col.power == 4) powers.push_back(2);
        json runs = json::array();
        Table hist{"plotdata/collision_history", {"power [1]", "t [time]", "mass [1]", "energy [1]", "integral [1]"}, {}};
        for (int pw : powers) {
            guarded(r, prefixed(prefix, pw == 4 ? "quartic collision" : "KdV control collision"), [&] {
                CollisionOptions o = p.col;
                o.power = pw;
                auto c = collision_experiment(p.train, o, ctx.threads);
                runs.push_back(collision_json(c));
                for (const auto& h : c.history) hist.rows.push_back({double(pw), h.t, h.mass, h.energy, h.integral});
                if (pw == 4)
                    check(r, prefixed(prefix, "quartic collision is inelastic (residual / floor)"), c.ratio, ">", 10.0);
                else
                    check(r, prefixed(prefix, "KdV collision is elastic (residual / floor)"), c.ratio, "<=", 3.0);
                if (o.mirror)
                    check(r, prefixed(prefix, std::string(pw == 4 ? "quartic" : "KdV") + " mirrored run agrees"),
                          c.mirror_relative_difference, "<", 0.01);
                check(r, prefixed(prefix, std::string(pw == 4 ? "quartic" : "KdV") + " buffer magnitude"), c.max_buffer,
                      "<", 1e-10);
            });
        }
        r.results["collision"] = runs;
        r.tables.push_back(std::move(hist));
    } else if (p.experiment == "tail") {
        guarded(r, prefixed(prefix, "outgoing tail experiment"), [&] {
            auto m = build_model(p.train, default_resonance_grid(), p.K0, ctx.threads);
            auto t = outgoing_tail_experiment(m, p.tail, ctx.threads);
            Table tab{"tail",
                      {"t [time]", "x0 [length]", "s [1]", "s_doubled_K0 [1]", "V_x0 [1]", "solver_error [1]",
                       "distance_h1 [1]", "valid [bool]"},
                      {}};
            for (const auto& row : t.rows)
                tab.rows.push_back({row.t, row.x0, row.s, row.s_doubled, row.V_x0, row.error, row.distance,
                                    row.valid ? 1.0 : 0.0});
            r.tables.push_back(std::move(tab));
            r.results["tail"] = {{"T_data", t.T_data},
                                 {"T_lo", t.T_lo},
                                 {"data_residual", t.data_residual},
                                 {"dt", t.dt},
                                 {"valid_lo", t.valid_lo},
                                 {"valid_hi", t.valid_hi},
                                 {"crossover", t.crossover},
                                 {"slope", t.slope},
                                 {"slope_target", t.slope_target},
                                 {"doubled_shift", t.doubled_shift},
                                 {"expected_shift", t.expected_shift},
                                 {"distance_slope", t.distance_slope},
                                 {"distance_C", t.distance_C},
                                 {"max_buffer", t.max_buffer}};
            check(r, prefixed(prefix, "tail decay rate equals -2 sigma0"), std::fabs(t.slope - t.slope_target), "<",
                  0.02);
            check(r, prefixed(prefix, "||u - V|| decays at least at 2 sigma0"), t.distance_slope, "<=",
                  t.slope_target + 0.02);
            check(r, prefixed(prefix, "doubling K0 shifts log s by gamma0 K0"),
                  std::fabs(t.doubled_shift - t.expected_shift) / t.expected_shift, "<", 0.05);
            check(r, prefixed(prefix, "tail buffer magnitude"), t.max_buffer, "<", 1e-10);
        });
    } else {
        guarded(r, prefixed(prefix, "monotonicity run"), [&] {
            auto mr = monotonicity_check(p.train, p.sigma, p.c0, p.sigma_prime, p.x0, p.mode, p.duration, p.grid,
                                         p.separation, p.record_every);
            Table tab{"plotdata/monotonicity", {"t [time]", "J [1]"}, {}};
            for (std::size_t i = 0; i < mr.t.size(); ++i) tab.rows.push_back({mr.t[i], mr.J[i]});
            r.tables.push_back(std::move(tab));
            r.results["monotonicity"] = {{"sigma", p.sigma},
                                         {"c0", p.c0},
                                         {"sigma_prime", p.sigma_prime},
                                         {"x0", p.x0},
                                         {"max_increase_rate", mr.max_increase_rate},
                                         {"slack", mr.slack}};
            check(r, prefixed(prefix, "localized functional nonincreasing"), mr.max_increase_rate, "<=",
                  1e-6 + mr.slack);
        });
    }
}

// ---- verify ----

void run_foundations(RunReport& r, const std::string& prefix)
{
    namespace pf = profile;
    guarded(r, prefixed(prefix, "operator identities"), [&] {
        Grid g = verification_grid();
        auto max_err = [&](const Field& f, auto&& target) {
            double m = 0.0;
            for (std::size_t i = untrusted_band; i + untrusted_band < g.n; ++i)
                if (std::fabs(g.x(i)) <= 15.0) m = std::max(m, std::fabs(f.values[i] - target(g.x(i))));
            return m;
        };
        double lqp = max_err(apply_L(1.0, sample(g, pf::Qp)), [](double) { return 0.0; });
        double llq = max_err(apply_L(1.0, sample(g, pf::lambda_Q)), [](double x) { return -pf::Q(x); });
        double l52 = max_err(apply_L(1.0, sample(g, [](double x) { return pf::Q_pow(x, 2.5); })),
                             [](double x) { return -5.25 * pf::Q_pow(x, 2.5); });
        double lh0 = max_err(apply_L(1.0, h0_profile(g)), [](double) { return 1.0; });

        double q2 = integrate(sample(g, [](double x) { return pf::Q(x) * pf::Q(x); })).value;
        double qp2 = integrate(sample(g, [](double x) { return pf::Qp(x) * pf::Qp(x); })).value;
        double qlq = integrate(sample(g, [](double x) { return pf::Q(x) * pf::lambda_Q(x); })).value;
        Field h0 = h0_profile(g);
        Field qh0 = sample(g, pf::Q);
        for (std::size_t i = 0; i < g.n; ++i) qh0.values[i] *= h0.values[i];
        double iq = integrate(sample(g, pf::Q)).value;
        double r1 = qp2 / q2, r2 = qlq / q2, r3 = integrate(qh0, 1e300).value / iq;
        double beta_err = 0.0;
        for (double p : {1.0, 2.0, 2.5, 5.0}) {
            double num = integrate(sample(g, [p](double x) { return pf::Q_pow(x, p); })).value;
            double closed = pf::integral_Q_pow(p);
            beta_err = std::max(beta_err, std::fabs(num - closed) / closed);
        }
        r.results["foundations"] = {{"h", g.h},
                                    {"L_Qp", lqp},
                                    {"L_LambdaQ_plus_Q", llq},
                                    {"L_Q52_plus_21_4_Q52", l52},
                                    {"L_H0_minus_1", lh0},
                                    {"Qp2_over_Q2", r1},
                                    {"QLambdaQ_over_Q2", r2},
                                    {"QH0_over_Q", r3},
                                    {"beta_closed_form_error", beta_err}};
        check(r, prefixed(prefix, "||L Q'|| < 1e-6"), lqp, "<", 1e-6);
        check(r, prefixed(prefix, "||L Lambda Q + Q|| < 1e-6"), llq, "<", 1e-6);
        check(r, prefixed(prefix, "||L Q^{5/2} + (21/4) Q^{5/2}|| < 1e-6"), l52, "<", 1e-6);
        check(r, prefixed(prefix, "||L H0 - 1|| < 1e-6"), lh0, "<", 1e-6);
        check(r, prefixed(prefix, "int Q'^2 / int Q^2 = 3/7"), std::fabs(r1 - 3.0 / 7.0), "<", 1e-8);
        check(r, prefixed(prefix, "int Q Lambda Q / int Q^2 = 1/12"), std::fabs(r2 - 1.0 / 12.0), "<", 1e-8);
        check(r, prefixed(prefix, "int Q H0 / int Q = 1/6"), std::fabs(r3 - 1.0 / 6.0), "<", 1e-8);
        check(r, prefixed(prefix, "int Q^p matches the Beta-function closed form"), beta_err, "<", 1e-10);
    });
}

struct CoercivityPlan {
    int trials = 100;
};

void run_coercivity(const CoercivityPlan& p, const Context& ctx, RunReport& r, const std::string& prefix)
{
    guarded(r, prefixed(prefix, "coercivity trials"), [&] {
        Grid g = verification_grid();
        auto rep = verify_coercivity(p.trials, g, ctx.seed, ctx.threads);
        Table t{prefix.empty() ? "coercivity" : "verify_coercivity",
                {"seed [1]", "lhs_direct [1]", "lhs_identity [1]", "lower_bound [1]", "slack [1]", "norm2 [1]",
                 "cnv_slack [1]", "ok [bool]"},
                {}};
        double worst = 1e300, worst_cnv = 1e300;
        std::size_t bad = 0;
        for (const auto& tr : rep.trials) {
            t.rows.push_back({static_cast<double>(tr.seed), tr.lhs_direct, tr.lhs_identity, tr.lower_bound, tr.slack,
                              tr.norm2, tr.cnv_slack, tr.ok ? 1.0 : 0.0});
            worst = std::min(worst, (tr.slack + 1e-6 * tr.norm2) / tr.norm2);
            worst_cnv = std::min(worst_cnv, (tr.cnv_slack + 1e-6 * tr.norm2) / tr.norm2);
            if (!tr.ok) ++bad;
        }
        r.tables.push_back(std::move(t));
        r.results["coercivity"] = {{"trials", rep.trials.size()},
                                   {"min_relative_slack", rep.min_relative_slack},
                                   {"min_slack_with_tolerance", worst},
                                   {"min_weighted_slack_with_tolerance", worst_cnv},
                                   {"max_identity_mismatch", rep.max_identity_mismatch},
                                   {"failed_trials", bad}};
        check(r, prefixed(prefix, "coercivity slack >= -1e-6 ||B0||^2"), worst, ">=", 0.0);
        check(r, prefixed(prefix, "weighted bound slack >= -1e-6 ||B0||^2"), worst_cnv, ">=", 0.0);
        check(r, prefixed(prefix, "coercivity identity consistency"), rep.max_identity_mismatch, "<", 1e-6);
    });
    guarded(r, prefixed(prefix, "integration-by-parts identities"), [&] {
        Grid g = verification_grid();
        double worst = 0.0;
        for (std::uint64_t i = 0; i < 10; ++i) {
            auto D = gaussian_bumps(ctx.seed + i, g);
            worst = std::max({worst, check_DQ3(D).relative, check_DQ6(D).relative});
            for (double beta : {0.5, 1.0, 2.0, 3.0}) worst = std::max(worst, check_genebeta(D, beta).relative);
        }
        r.results["identities"] = {{"functions", 10}, {"max_relative_mismatch", worst}};
        check(r, prefixed(prefix, "integration-by-parts identities"), worst, "<", 1e-8);
    });
    guarded(r, prefixed(prefix, "spectral facts"), [&] {
        json js = json::array();
        double worst = 0.0;
        double complement = 1e300;
        for (double beta : {3.0, 4.0}) {
            auto s = verify_spectral_facts(beta);
            double e1 = std::fabs(s.eigenvalues.at(0) + beta * beta);
            double e2 = std::fabs(s.eigenvalues.at(1) + (beta - 1.5) * (beta - 1.5));
            worst = std::max({worst, e1, e2, s.ground_residual, std::fabs(s.ground_rayleigh + beta * beta)});
            if (s.has_second) worst = std::max({worst, s.second_residual, std::fabs(s.second_rayleigh - s.second_expected)});
            // Only beta = 3 has exactly two negative directions; beta = 4 has a third.
            if (beta == 3.0) complement = std::min(s.complement_bottom, s.complement_trial_min);
            js.push_back({{"beta", beta},
                          {"eigenvalues", s.eigenvalues},
                          {"negative_count", s.negative_count},
                          {"ground_rayleigh", s.ground_rayleigh},
                          {"ground_residual", s.ground_residual},
                          {"second_rayleigh", s.second_rayleigh},
                          {"second_residual", s.second_residual},
                          {"complement_bottom", s.complement_bottom},
                          {"complement_trial_min", s.complement_trial_min}});
        }
        r.results["spectral"] = js;
        check(r, prefixed(prefix, "eigenvalues -beta^2 and -(beta - 3/2)^2"), worst, "<", 1e-6);
        check(r, prefixed(prefix, "beta = 3 operator nonnegative off its negative eigenfunctions"), complement, ">=",
              -1e-6);
    });
}

const std::vector<std::string>& all_suites()
{
    static const std::vector<std::string> s{"foundations", "certificate", "resonance", "rigidity",
                                            "approx",      "coercivity",  "pde"};
    return s;
}

void run_verify(const Context& ctx, RunReport& r)
{
    const json& s = section(ctx.raw, "verify");
    only_keys(s, "verify", {"suites", "coercivity_trials"});
    std::vector<std::string> suites{"foundations"};
    if (s.contains("suites")) {
        const json& v = s["suites"];
        if (v.is_string() && v.get<std::string>() == "all") {
            suites = all_suites();
        } else if (v.is_array()) {
            suites.clear();
            for (const auto& e : v) {
                if (!e.is_string()) bad_config("'verify.suites' must list suite names");
                auto name = e.get<std::string>();
                if (std::find(all_suites().begin(), all_suites().end(), name) == all_suites().end())
                    bad_config("unknown verify suite '" + name + "'");
                suites.push_back(name);
            }
        } else {
            bad_config("'verify.suites' must be \"all\" or a list of suite names");
        }
    }
    CoercivityPlan cp;
    cp.trials = static_cast<int>(integer(s, "coercivity_trials", 100, 1, 100000));
    auto has = [&](const char* n) { return std::find(suites.begin(), suites.end(), n) != suites.end(); };

    // Every plan is parsed before any suite runs.
    std::optional<CertifyPlan> cert;
    std::optional<ProfilePlan> prof;
    std::optional<RigidityPlan> rig;
    std::optional<ApproxPlan> apx;
    std::optional<SimulatePlan> pde;
    if (has("certificate")) cert = parse_certify(ctx);
    if (has("resonance")) prof = parse_profile(ctx);
    if (has("rigidity")) rig = parse_rigidity(ctx);
    if (has("approx")) apx = parse_approx(ctx);
    if (has("pde")) {
        Context c2 = ctx;
        c2.raw["simulate"] = json{{"experiment", "single"}};
        pde = parse_simulate(c2);
    }
    r.results["suites"] = suites;
    for (const auto& name : suites) {
        if (name == "foundations") run_foundations(r, name);
        else if (name == "certificate") run_certify(*cert, ctx, r, name);
        else if (name == "resonance") run_profile(*prof, ctx, r, name);
        else if (name == "rigidity") run_rigidity(*rig, ctx, r, name);
        else if (name == "approx") run_approx(*apx, ctx, r, name);
        else if (name == "coercivity") run_coercivity(cp, ctx, r, name);
        else run_simulate(*pde, ctx, r, name);
    }
}

}  // namespace

bool RunReport::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

json RunReport::to_json() const
{
    json cs = json::array();
    for (const auto& c : checks) {
        json e = {{"name", c.name}, {"passed", c.passed}, {"value", c.value}};
        if (!c.relation.empty()) {
            e["relation"] = c.relation;
            e["bound"] = c.bound;
        }
        if (!c.detail.empty()) e["detail"] = c.detail;
        cs.push_back(e);
    }
    json ts = json::array();
    for (const auto& t : tables) ts.push_back({{"name", t.name}, {"rows", t.rows.size()}, {"columns", t.header}});
    return {{"command", command}, {"passed", passed()}, {"checks", cs}, {"results", results}, {"tables", ts}};
}

std::string to_csv(const Table& t)
{
    std::string out;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (i) out += ',';
        out += t.header[i];
    }
    out += '\n';
    char buf[64];
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

RunReport run_config(const json& config)
{
    if (!config.is_object()) bad_config("configuration must be a JSON object");
    only_keys(config, "configuration",
              {"command", "train", "c_range", "K0", "grids", "output_dir", "seed", "threads", "certify", "profile",
               "rigidity", "approx", "simulate", "verify"});
    Context ctx;
    ctx.raw = config;
    ctx.seed = static_cast<std::uint64_t>(integer(config, "seed", 0, 0, std::numeric_limits<long>::max()));
    ctx.threads = static_cast<int>(integer(config, "threads", 1, 1, 256));
    only_keys(ctx.grids(), "grids", {"certificate_h", "resonance_h", "approx_h", "pde_n", "pde_half_length", "dt"});
    RunReport r;
    r.command = text(config, "command", "");
    if (r.command == "certify") {
        auto p = parse_certify(ctx);
        run_certify(p, ctx, r, "");
    } else if (r.command == "profile") {
        auto p = parse_profile(ctx);
        run_profile(p, ctx, r, "");
    } else if (r.command == "rigidity") {
        auto p = parse_rigidity(ctx);
        run_rigidity(p, ctx, r, "");
    } else if (r.command == "approx") {
        auto p = parse_approx(ctx);
        run_approx(p, ctx, r, "");
    } else if (r.command == "simulate") {
        auto p = parse_simulate(ctx);
        run_simulate(p, ctx, r, "");
    } else if (r.command == "verify") {
        run_verify(ctx, r);
    } else {
        bad_config("'command' must be one of certify, profile, rigidity, approx, simulate, verify");
    }
    return r;
}

}  // namespace kdv
