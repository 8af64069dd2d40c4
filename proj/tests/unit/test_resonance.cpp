#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "error.hpp"
#include "resonance.hpp"

using namespace kdv;

namespace {

// Real roots of g^3 - g - theta from the eigenvalues of the companion matrix.
std::vector<double> companion_roots(double theta)
{
    Eigen::Matrix3d m;
    m << 0.0, 1.0, theta, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
    Eigen::EigenSolver<Eigen::Matrix3d> es(m, false);
    std::vector<double> r;
    for (int i = 0; i < 3; ++i) r.push_back(es.eigenvalues()[i].real());
    std::sort(r.begin(), r.end());
    return r;
}

double cubic(double g, double theta) { return g * g * g - g - theta; }

}  // namespace

TEST_CASE("characteristic rates of the pair families")
{
    auto r = characteristic_rates(ResonanceParams::below_one(0.75));
    CHECK(r.gammaI == doctest::Approx((std::sqrt(7.0) - std::sqrt(3.0)) / 4.0).epsilon(1e-14));
    CHECK(r.gammaI == doctest::Approx(0.2284).epsilon(1e-3));

    auto p = ResonanceParams::below_one(0.9);
    r = characteristic_rates(p);
    auto oracle = companion_roots(p.theta);
    CHECK(std::fabs(oracle[0] + r.gammaII) < 1e-12);
    CHECK(std::fabs(oracle[1] + r.gammaI) < 1e-12);
    CHECK(std::fabs(oracle[2] - r.gamma0) < 1e-12);

    auto near = characteristic_rates(ResonanceParams::below_one(1.0 - 1e-7));
    CHECK(std::fabs(near.gamma0 - 1.0) < 1e-6);
    CHECK(std::fabs(near.gammaI) < 1e-6);
    CHECK(std::fabs(near.gammaII - 1.0) < 1e-6);

    for (double c : {0.75, 0.8, 0.85, 0.9, 0.95}) {
        auto q = ResonanceParams::below_one(c);
        auto k = characteristic_rates(q);
        CHECK(std::fabs(cubic(k.gamma0, q.theta)) < 1e-12);
        CHECK(std::fabs(cubic(-k.gammaI, q.theta)) < 1e-12);
        CHECK(std::fabs(cubic(-k.gammaII, q.theta)) < 1e-12);
        CHECK(std::fabs(k.gamma0 - k.gammaI - k.gammaII) < 1e-12);
        CHECK(k.gammaII == std::sqrt(c));
        CHECK(k.gammaI > 0.0);
        CHECK(k.gammaI < k.gammaII);
        CHECK(k.gammaII < k.gamma0);
        CHECK(1.0 - std::sqrt(c) <= k.gammaI);
        CHECK(k.gammaI <= 1.0 - c);
    }
    for (double c : {1.05, 1.2, 1.3}) {
        auto q = ResonanceParams::above_one(c);
        auto k = characteristic_rates(q);
        auto o = companion_roots(q.theta);
        CHECK(std::fabs(o[2] - k.gamma0) < 1e-12);
        CHECK(std::fabs(o[1] + k.gammaI) < 1e-12);
        CHECK(std::fabs(o[0] + k.gammaII) < 1e-12);
        CHECK(std::fabs(k.gamma0 - k.gammaI - k.gammaII) < 1e-12);
    }
    CHECK_THROWS_AS(ResonanceParams::below_one(1.0), Error);
    CHECK_THROWS_AS(ResonanceParams::above_one(1.4), Error);
    ResonanceParams bad;
    bad.theta = 0.5;
    try {
        characteristic_rates(bad);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::no_three_real_roots);
    }
}

TEST_CASE("triple family rates")
{
    for (auto branch : {Family::triple_I, Family::triple_II})
        for (double c : {0.8, 0.9, 1.1, 1.25})
            for (double cp : {0.75, 0.8, 0.95}) {
                auto p = ResonanceParams::triple(c, cp, branch);
                double s = p.forcing_rate;
                CHECK(p.theta == doctest::Approx(s * (1.0 - s * s)).epsilon(1e-13));
                auto r = characteristic_rates(p);
                auto o = companion_roots(p.theta);
                CHECK(std::fabs(o[2] - r.gamma0) < 1e-12);
                CHECK(std::fabs(cubic(-r.gammaI, p.theta)) < 1e-12);
                CHECK(std::fabs(cubic(-r.gammaII, p.theta)) < 1e-12);
                double gcc = std::sqrt(1.0 - 0.75 * s * s) - 0.5 * s;
                CHECK(r.gamma0 == doctest::Approx(gcc + s).epsilon(1e-12));
                CHECK(gcc >= 1.0 - s);
            }
}

TEST_CASE("asymptotic extraction recovers synthetic models")
{
    CharacteristicRates r{1.1, 0.2, 0.7};
    Grid g = default_resonance_grid();
    auto f = sample(g, [&](double x) { return 2.0 * std::exp(-r.gammaI * x) - 3.0 * std::exp(-r.gammaII * x); });
    auto fit = extract_asymptotics(f, r, 15.0, 40.0);
    CHECK(std::fabs(fit.aI - 2.0) < 1e-10);
    CHECK(std::fabs(fit.aII + 3.0) < 1e-10);
    CHECK(fit.fit_residual < 1e-12);

    auto f2 = sample(g, [&](double x) { return std::exp(-r.gammaI * x) + std::exp(-1.5 * x); });
    auto fit2 = extract_asymptotics(f2, r, 20.0, 70.0);
    CHECK(std::fabs(fit2.aI - 1.0) < 1e-6);

    CHECK_THROWS_AS(extract_asymptotics(f, r, 10.0, 40.0), Error);

    CharacteristicRates degenerate{1.0, 0.5, 0.5};
    auto f3 = sample(g, [](double x) { return 4.0 * std::exp(-0.5 * x); });
    auto fit3 = extract_asymptotics(f3, degenerate, 15.0, 40.0);
    CHECK(fit3.single_mode);
    CHECK(fit3.aI == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("resonance solve at c = 0.9")
{
    auto prof = solve_resonance(ResonanceParams::below_one(0.9), default_resonance_grid());
    CHECK(prof.discrete_residual < 1e-8);
    CHECK(prof.consistency_residual < 1e-6);
    double slope = log_slope(prof.samples, 40.0, 60.0);
    CHECK(std::fabs(slope + prof.rates.gammaI) < 1e-3);
    // Left decay: log|A| - gamma0 x is flat far to the left.
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < prof.samples.grid.n; ++i) {
        double x = prof.samples.grid.x(i);
        if (x < prof.trusted_lo() || x > -12.0) continue;
        double v = std::log(std::fabs(prof.samples.values[i])) - prof.rates.gamma0 * x;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi - lo < 1e-3);
}

TEST_CASE("aI self-convergence and fit quality")
{
    auto coarse = solve_resonance(ResonanceParams::below_one(0.8), default_resonance_grid());
    auto fine = solve_resonance(ResonanceParams::below_one(0.8), Grid::with_spacing(-30.0, 100.0, 0.005));
    CHECK(std::fabs(coarse.aI() - fine.aI()) < 5e-4 * std::fabs(fine.aI()));
    CHECK(std::fabs(coarse.aI() - fine.aI()) <= 10.0 * std::max(coarse.fit.fit_residual, 1e-9) * std::fabs(fine.aI()));
    CHECK(std::fabs(coarse.aII() - fine.aII()) < 1e-3 * std::fabs(fine.aII()));

    auto p85 = solve_resonance(ResonanceParams::below_one(0.85), default_resonance_grid());
    CHECK(p85.fit.fit_residual < 1e-6);
}

TEST_CASE("near-degenerate speed and homogeneous problem")
{
    auto p = ResonanceParams::below_one(0.999);
    CHECK(p.theta == doctest::Approx(9.995e-4).epsilon(1e-3));
    auto prof = solve_resonance(p, default_resonance_grid());
    CHECK(prof.consistency_residual < 1e-6);
    CHECK(std::isfinite(prof.aI()));

    ResonanceSolveOptions opt;
    opt.forcing_scale = 0.0;
    auto zero = solve_resonance(ResonanceParams::below_one(0.9), default_resonance_grid(), opt);
    double m = 0.0;
    for (double v : zero.samples.values) m = std::max(m, std::fabs(v));
    CHECK(m < 1e-8);
    CHECK(zero.rcond > 0.0);

    CHECK_THROWS_AS(solve_resonance(p, Grid::with_spacing(-20.0, 80.0, 0.01)), Error);
    CHECK_THROWS_AS(solve_resonance(p, Grid::with_spacing(-30.0, 80.0, 0.02)), Error);
}

TEST_CASE("profile evaluation across the tail junctions")
{
    auto prof = solve_resonance(ResonanceParams::below_one(0.85), default_resonance_grid());
    for (double xj : {prof.trusted_lo(), prof.trusted_hi()}) {
        double in[4], out[4];
        prof.values(xj - 1e-9, in);
        prof.values(xj + 1e-9, out);
        for (int k = 0; k < 3; ++k)
            CHECK(std::fabs(in[k] - out[k]) <= 1e-3 * (std::fabs(in[k]) + 1e-12));
    }
    // Interpolated samples reproduce grid values.
    const Grid& g = prof.samples.grid;
    for (std::size_t i = 1500; i < 7000; i += 777)
        CHECK(prof.value(g.x(i)) == doctest::Approx(prof.samples.values[i]).epsilon(1e-12));
    CHECK(prof.value(500.0) == doctest::Approx(prof.aI() * std::exp(-prof.rates.gammaI * 500.0)).epsilon(1e-6));
}

TEST_CASE("sweep of aI is continuous with constant sign")
{
    auto rep = sweep_aI({0.75, 0.8, 0.85, 0.9, 0.95}, default_resonance_grid(), 2);
    REQUIRE(rep.rows.size() == 5);
    CHECK(rep.sign_constant);
    CHECK_FALSE(rep.inconclusive);
    CHECK(rep.min_abs_aI > 0.0);
    CHECK(std::isfinite(rep.lipschitz));
    for (const auto& r : rep.rows) CHECK(r.residual < 1e-6);
}

TEST_CASE("rescaled pair profiles")
{
    const std::vector<double> c{1.0, 0.9, 0.85};
    Grid g = default_resonance_grid();
    std::vector<double> signs;
    for (std::size_t j = 0; j < c.size(); ++j)
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (j == k) continue;
            auto a = rescaled_pair_profile(c[j], c[k], g);
            CHECK(scaled_equation_residual(a, -20.0, 40.0, 0.01) < 1e-6);
            if (j < k) signs.push_back(a.aI() > 0 ? 1.0 : -1.0);
            // Closed-form rescaled rates.
            if (j < k) {
                CHECK(a.gammaI() == doctest::Approx(std::sqrt(c[j] - 0.75 * c[k]) - 0.5 * std::sqrt(c[k])).epsilon(1e-12));
                CHECK(a.gammaII() == doctest::Approx(std::sqrt(c[k])).epsilon(1e-12));
            } else {
                CHECK(a.gamma0() == doctest::Approx(std::sqrt(c[k])).epsilon(1e-12));
                CHECK(a.gammaI() == doctest::Approx(0.5 * std::sqrt(c[k]) - std::sqrt(c[j] - 0.75 * c[k])).epsilon(1e-12));
            }
        }
    for (double s : signs) CHECK(s == signs.front());

    auto ajk = rescaled_pair_profile(1.0, 0.8, g);
    auto akj = rescaled_pair_profile(0.8, 1.0, g);
    CHECK(ajk.gammaI() < akj.gammaI());
    CHECK_THROWS_AS(rescaled_pair_profile(1.0, 0.7, g), Error);
    try {
        rescaled_pair_profile(1.0, 0.5, g);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unsupported_ratio);
    }
}

TEST_CASE("triple profiles")
{
    Grid g = default_resonance_grid();
    for (auto branch : {Family::triple_I, Family::triple_II}) {
        auto a = triple_profile(0.8, 1.0, 1.0, branch, g);
        CHECK(scaled_equation_residual(a, -20.0, 40.0, 0.01) < 1e-6);
        double s = a.forcing_rate();
        double gcc = std::sqrt(1.0 - 0.75 * s * s) - 0.5 * s;
        CHECK(gcc >= 1.0 - s);
        // The right tail decays at the slower of the two right rates.
        auto f = sample(Grid::with_spacing(30.0, 60.0, 0.01), [&](double x) { return a.value(x); });
        double slope = log_slope(f, 30.0, 60.0);
        CHECK(slope == doctest::Approx(-std::min(gcc, s)).epsilon(1e-3));
    }
}
