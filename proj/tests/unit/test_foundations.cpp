#include <doctest.h>

#include <cmath>
#include <numbers>

#include "error.hpp"
#include "foundations.hpp"

using namespace kdv;
namespace pf = kdv::profile;

namespace {

// Integral of Q^p from the Beta function: Q^p = (5/2)^{p/3} sech^{2p/3}(3x/2).
double beta_oracle(double p) { return std::pow(2.5, p / 3.0) * (2.0 / 3.0) * std::beta(p / 3.0, 0.5); }

double max_err_within(const Field& f, const Field& g, double radius)
{
    double m = 0.0;
    for (std::size_t i = untrusted_band; i + untrusted_band < f.grid.n; ++i)
        if (std::fabs(f.grid.x(i)) <= radius) m = std::max(m, std::fabs(f.values[i] - g.values[i]));
    return m;
}

}  // namespace

TEST_CASE("soliton profile values and scaling")
{
    CHECK(pf::Qc(1.0, 0.0) == doctest::Approx(std::cbrt(2.5)).epsilon(1e-15));
    CHECK(pf::Qc(1.0, 0.0) == doctest::Approx(1.3572088).epsilon(1e-7));
    CHECK(pf::Qc(4.0, 0.0) == doctest::Approx(std::cbrt(4.0) * std::cbrt(2.5)).epsilon(1e-15));
    for (double x : {0.3, 1.7, 5.0, 31.0}) CHECK(pf::Qc(1.0, x) == pf::Qc(1.0, -x));
    CHECK_THROWS_AS(pf::Qc(0.0, 1.0), Error);
    CHECK_THROWS_AS(pf::Qc(-1.0, 1.0), Error);
    // Far tails stay finite and positive instead of underflowing through cosh overflow.
    CHECK(pf::Q(400.0) > 0.0);
    CHECK(std::isfinite(pf::log_Q(2000.0)));
}

TEST_CASE("closed-form derivative identities")
{
    for (double x = -20.0; x <= 20.0; x += 0.37) {
        double q = pf::Q(x);
        double qp = pf::Qp(x);
        CHECK(std::fabs(qp * qp - (q * q - 0.4 * std::pow(q, 5))) < 1e-12);
        CHECK(std::fabs(pf::Qpp(x) + std::pow(q, 4) - q) < 1e-13);
    }
    // Compare closed-form derivatives with a high-order stencil of Q.
    for (double x : {-2.1, -0.4, 0.9, 3.3})
        for (int k = 1; k <= 3; ++k) {
            double hh = 1e-2;
            std::vector<double> nodes;
            for (int j = -4; j <= 4; ++j) nodes.push_back(x + j * hh);
            auto w = fd_weights(x, nodes, k);
            double fd = 0.0;
            for (std::size_t j = 0; j < nodes.size(); ++j) fd += w[j] * pf::Q(nodes[j]);
            CHECK(fd == doctest::Approx(pf::Q_deriv(x, k)).epsilon(1e-7));
        }
}

TEST_CASE("integral of Q^p matches the Beta-function oracle")
{
    Grid g = verification_grid();
    for (double p : {1.0, 2.0, 2.5, 3.5, 5.0}) {
        double oracle = beta_oracle(p);
        CHECK(pf::integral_Q_pow(p) == doctest::Approx(oracle).epsilon(1e-13));
        auto v = integrate(sample(g, [p](double x) { return pf::Q_pow(x, p); }));
        CHECK(v.tails_decayed);
        CHECK(v.value == doctest::Approx(oracle).epsilon(1e-12));
    }
    // Two resolutions agree well beyond the requested 1e-10.
    Grid g2 = Grid::with_spacing(-40.0, 40.0, 0.0025);
    double a = integrate(sample(g, pf::Q)).value;
    double b = integrate(sample(g2, pf::Q)).value;
    CHECK(std::fabs(a - b) < 1e-10 * a);
}

TEST_CASE("integral ratios used by the certificate")
{
    Grid g = verification_grid();
    double q2 = integrate(sample(g, [](double x) { return pf::Q(x) * pf::Q(x); })).value;
    double qp2 = integrate(sample(g, [](double x) { return pf::Qp(x) * pf::Qp(x); })).value;
    double qlq = integrate(sample(g, [](double x) { return pf::Q(x) * pf::lambda_Q(x); })).value;
    Field h0 = h0_profile(g);
    Field qh0 = sample(g, pf::Q);
    for (std::size_t i = 0; i < g.n; ++i) qh0.values[i] *= h0.values[i];
    double iq = integrate(sample(g, pf::Q)).value;
    CHECK(std::fabs(qp2 / q2 - 3.0 / 7.0) < 1e-8);
    CHECK(std::fabs(qlq / q2 - 1.0 / 12.0) < 1e-8);
    CHECK(std::fabs(integrate(qh0, 1e300).value / iq - 1.0 / 6.0) < 1e-8);
}

TEST_CASE("H0 and J0 profiles")
{
    Grid g = verification_grid();
    Field h0 = h0_profile(g);
    auto at = [&](const Field& f, double x) {
        return f.values[static_cast<std::size_t>(std::llround((x - g.x_min) / g.h))];
    };
    CHECK(at(h0, 0.0) == doctest::Approx(-2.0 / 3.0).epsilon(1e-14));
    CHECK(std::fabs(at(h0, 20.0) - 1.0) < 1e-6);
    CHECK(std::fabs(at(h0, -20.0) - 1.0) < 1e-6);
    for (double x : {0.5, 3.0, 11.0}) CHECK(at(h0, x) == doctest::Approx(at(h0, -x)).epsilon(1e-13));

    Field j0 = j0_profile(g);
    double iq = beta_oracle(1.0);
    CHECK(std::fabs(at(j0, 25.0) - 1.0 / (2.0 * iq)) < 1e-6);
    CHECK(std::fabs(at(j0, -25.0) - 1.0 / (2.0 * iq)) < 1e-6);
    for (double x : {0.5, 3.0, 11.0}) CHECK(at(j0, x) == doctest::Approx(at(j0, -x)).epsilon(1e-12));

    CHECK_THROWS_AS(h0_profile(Grid::with_spacing(-15.0, 15.0, 0.01)), Error);
    try {
        h0_profile(Grid::with_spacing(-15.0, 15.0, 0.01));
    } catch (const Error& e) {
        CHECK(e.code() == Errc::domain_too_small);
    }
}

TEST_CASE("linearized operator identities at h = 0.005")
{
    Grid g = verification_grid();
    auto lqp = apply_L(1.0, sample(g, pf::Qp));
    CHECK(max_abs_within(lqp, 15.0) < 1e-6);

    auto llq = apply_L(1.0, sample(g, pf::lambda_Q));
    CHECK(max_err_within(llq, sample(g, [](double x) { return -pf::Q(x); }), 15.0) < 1e-6);

    auto l52 = apply_L(1.0, sample(g, [](double x) { return pf::Q_pow(x, 2.5); }));
    CHECK(max_err_within(l52, sample(g, [](double x) { return -5.25 * pf::Q_pow(x, 2.5); }), 15.0) < 1e-6);

    auto lh0 = apply_L(1.0, h0_profile(g));
    CHECK(max_err_within(lh0, sample(g, [](double) { return 1.0; }), 15.0) < 1e-6);

    // Scaled kernel: L_c Q_c' = 0.
    auto lc = apply_L(0.8, sample(g, [](double x) { return pf::Qc_deriv(0.8, x, 1); }));
    CHECK(max_abs_within(lc, 15.0) < 1e-6);
}

TEST_CASE("fourth-order convergence of the second-derivative stencil")
{
    auto err = [](double h) {
        Grid g = Grid::with_spacing(-20.0, 20.0, h);
        auto d2 = differentiate(sample(g, pf::Q).values, g.h, 2, 4);
        double m = 0.0;
        for (std::size_t i = untrusted_band; i + untrusted_band < g.n; ++i)
            m = std::max(m, std::fabs(d2[i] - pf::Qpp(g.x(i))));
        return m;
    };
    double ratio = err(0.04) / err(0.02);
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("one-sided edge stencils are exact on polynomials")
{
    Grid g = Grid::uniform(0.0, 1.0, 21);
    auto cubic = sample(g, [](double x) { return x * x * x - 2.0 * x; });
    auto d1 = differentiate(cubic.values, g.h, 1, 4);
    auto d3 = differentiate(cubic.values, g.h, 3, 4);
    for (std::size_t i = 0; i < g.n; ++i) {
        CHECK(d1[i] == doctest::Approx(3.0 * g.x(i) * g.x(i) - 2.0).epsilon(1e-9));
        CHECK(d3[i] == doctest::Approx(6.0).epsilon(1e-7));
    }
    CHECK_THROWS_AS(differentiate(std::vector<double>(3, 1.0), 0.1, 2), Error);
}

TEST_CASE("cutoff and weight facts")
{
    for (double x = -30.0; x <= 30.0; x += 0.001) CHECK_UNARY(pf::phi_ppp(x) <= pf::phi_p(x) + 1e-15);
    for (double x = -40.0; x <= 40.0; x += 0.01) {
        CHECK(pf::F0(x) > 0.0);
        CHECK(pf::F0(x) * pf::Q(x) >= (3.0 - std::sqrt(3.0)) / 8.0 - 1e-15);
    }
    CHECK(pf::phi(0.0) == doctest::Approx(0.5));
    CHECK(pf::phi(40.0) == doctest::Approx(1.0));
}

TEST_CASE("grid invariants")
{
    Grid g = Grid::uniform(-1.0, 1.0, 17);
    CHECK(g.h == doctest::Approx(0.125));
    CHECK(g.x(16) == doctest::Approx(1.0));
    CHECK_THROWS_AS(Grid::uniform(0.0, 1.0, 15), Error);
    CHECK_THROWS_AS(Grid::uniform(1.0, 0.0, 32), Error);
    auto t = integrate(sample(Grid::uniform(-1.0, 1.0, 64), [](double) { return 1.0; }));
    CHECK_FALSE(t.tails_decayed);
}
