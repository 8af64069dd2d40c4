#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "certificate.hpp"
#include "error.hpp"

using namespace kdv;

namespace {

template <class F>
double simpson(F&& f, double a, double b, int n)
{
    double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// alpha(c) after one integration by parts: (sqrt(c)/4) int e^{-sqrt(c)x} Q^4 / ((3/7) int Q^2).
double alpha_oracle(double c)
{
    double s = std::sqrt(c);
    double num = simpson([&](double x) { return std::exp(-s * x + 4.0 * profile::log_Q(x)); }, -45.0, 45.0, 60000);
    double q2 = simpson([](double x) { return std::pow(profile::Q(x), 2); }, -45.0, 45.0, 60000);
    return 0.25 * s * num / (3.0 / 7.0 * q2);
}

}  // namespace

TEST_CASE("decomposition of the forcing")
{
    Grid g = verification_grid();
    auto d = decompose_G(0.75, g);
    CHECK(d.ortho_Q52 < 1e-10);
    CHECK(d.ortho_Qp < 1e-10);
    CHECK(d.alpha == doctest::Approx(alpha_oracle(0.75)).epsilon(1e-9));
    CHECK(d.alpha == doctest::Approx(0.663937970817).epsilon(1e-10));
    auto coarse = decompose_G(0.75, Grid::with_spacing(-40.0, 40.0, 0.01));
    CHECK(std::fabs(coarse.alpha - d.alpha) < 1e-8);
    CHECK(std::fabs(d.alpha_odd - d.alpha) < 1e-10);
    CHECK(std::fabs(d.beta_even - d.beta) < 1e-10);

    auto one = decompose_G(1.0, g);
    CHECK(one.alpha == doctest::Approx(alpha_oracle(1.0)).epsilon(1e-9));
    CHECK(one.alpha != 0.0);
    CHECK_THROWS_AS(decompose_G(0.6, g), Error);
}

TEST_CASE("weighted projection")
{
    Grid g = verification_grid();
    auto space = WeightedSpace::build(g);
    CHECK(std::fabs(space.gram[0][1]) < 1e-14 * space.gram[0][0]);
    CHECK(space.gram[0][0] > 0.0);
    CHECK(space.gram[1][1] > 0.0);

    auto p = weighted_projection(space.basisQ52, space);
    double m = 0.0;
    for (double v : p.value.values) m = std::max(m, std::fabs(v));
    CHECK(m < 1e-10);

    // Odd field made orthogonal to Q' by hand is left alone.
    auto f = sample(g, [](double x) { return std::pow(profile::Qp(x), 3); });
    double lam = space.inner(f.values, space.basisQp.values) / space.gram[1][1];
    for (std::size_t i = 0; i < g.n; ++i) f.values[i] -= lam * space.basisQp.values[i];
    auto pf = weighted_projection(f, space);
    for (std::size_t i = 0; i < g.n; i += 97) CHECK(std::fabs(pf.value.values[i] - f.values[i]) < 1e-10);

    auto ph = weighted_projection(h0_profile(g), space);
    CHECK(std::fabs(ph.lambda2) < 1e-12);

    auto grow = sample(g, [](double x) { return std::exp(0.5 * std::fabs(x)); });
    try {
        weighted_projection(grow, space);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::weight_mismatch);
    }
}

TEST_CASE("weighted norms and the certificate")
{
    Grid fine = verification_grid();
    Grid coarse = Grid::with_spacing(-40.0, 40.0, 0.01);
    auto a = weighted_norms(0.8, fine);
    auto b = weighted_norms(0.8, coarse);
    for (auto [x, y] : {std::pair{a.N_H0, b.N_H0}, {a.N_QpOverQ, b.N_QpOverQ}, {a.N_J0, b.N_J0},
                        {a.N_Qp3, b.N_Qp3}, {a.N_composite, b.N_composite}}) {
        CHECK(std::isfinite(x));
        CHECK(x > 0.0);
        CHECK(std::fabs(x - y) < 1e-8);
    }

    auto k1 = certificate_k(1.0, fine);
    CHECK(k1.k == 0.0);
    CHECK(k1.denominator > 0.3);

    auto k8 = certificate_k(0.8, fine);
    CHECK(k8.k == doctest::Approx(0.1911).epsilon(1e-3));
    CHECK(k8.k == doctest::Approx(certificate_k(0.8, coarse).k).epsilon(1e-8));
    CHECK(k8.margin == doctest::Approx(0.5 - k8.k));
    CHECK(k8.k2 > 0.0);

    CHECK_THROWS_AS(certificate_k(0.7, fine), Error);
}

TEST_CASE("certificate sweep and its grid stability")
{
    auto cs = default_certificate_speeds();
    REQUIRE(cs.size() == 26);
    auto sw = certificate_sweep(cs, Grid::with_spacing(-40.0, 40.0, 0.01), 2);
    auto sw2 = certificate_sweep(cs, verification_grid(), 2);
    CHECK(sw.passed);
    CHECK(sw.failures.empty());
    CHECK(sw.max_k <= 0.5);
    CHECK(sw.min_k2 > 0.0);
    CHECK(std::fabs(sw.max_k - sw2.max_k) < 0.01 * sw2.max_k);
}

TEST_CASE("Appendix identities on random functions")
{
    Grid g = verification_grid();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto D = gaussian_bumps(seed, g);
        CHECK(check_DQ3(D).relative < 1e-8);
        CHECK(check_DQ6(D).relative < 1e-8);
        for (double beta : {0.5, 1.0, 2.0}) CHECK(check_genebeta(D, beta).relative < 1e-8);
        CHECK(check_LBB(trial_B0(seed, g)).relative < 1e-6);
    }
}

TEST_CASE("coercivity on admissible trials")
{
    Grid g = verification_grid();
    auto rep = verify_coercivity(16, g, 99, 2);
    CHECK(rep.passed);
    CHECK(rep.max_identity_mismatch < 1e-6);
    CHECK(rep.min_relative_slack > 0.0);
    for (const auto& t : rep.trials) CHECK(t.cnv_slack >= -1e-6 * t.norm2);

    // Q'' projected off Q^{5/2} and Q'.
    auto B = sample(g, profile::Qpp);
    auto q52 = sample(g, [](double x) { return profile::Q_pow(x, 2.5); });
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
        num += B.values[i] * q52.values[i];
        den += q52.values[i] * q52.values[i];
    }
    for (std::size_t i = 0; i < g.n; ++i) B.values[i] -= num / den * q52.values[i];
    auto lbb = check_LBB(B);
    double lower = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
        double lq = profile::log_Q(g.x(i));
        lower += g.h * B.values[i] * B.values[i] * (0.375 * std::exp(-lq) + 7.0 * std::exp(2.0 * lq));
    }
    CHECK(lbb.lhs > lower);
    CHECK(lbb.relative < 1e-6);
}

TEST_CASE("spectral facts")
{
    auto s3 = verify_spectral_facts(3.0);
    CHECK(s3.ground_rayleigh == doctest::Approx(-9.0).epsilon(1e-9));
    CHECK(s3.ground_residual < 1e-6);
    REQUIRE(s3.has_second);
    CHECK(std::fabs(s3.second_rayleigh + 2.25) < 1e-6);
    CHECK(s3.second_residual < 1e-6);
    CHECK(std::fabs(s3.eigenvalues[0] + 9.0) < 1e-6);
    CHECK(std::fabs(s3.eigenvalues[1] + 2.25) < 1e-6);
    CHECK(s3.negative_count == 2);
    CHECK(s3.complement_bottom >= -1e-6);
    CHECK(s3.complement_trial_min >= -1e-6);
    CHECK(s3.max_three_fifths_Q3 <= 1.5 + 1e-12);

    auto s4 = verify_spectral_facts(4.0);
    CHECK(s4.ground_residual < 1e-6);
    CHECK(std::fabs(s4.ground_rayleigh + 16.0) < 1e-6);
    CHECK(std::fabs(s4.eigenvalues[0] + 16.0) < 1e-6);

    // Dense eigensolve on a coarse grid as an independent check of the ground state.
    const int n = 799;
    const double h = 40.0 / (n + 1);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double x = -20.0 + (i + 1) * h;
        m(i, i) = 2.0 / (h * h) - 5.4 * std::pow(profile::Q(x), 3);
        if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = -1.0 / (h * h);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()[0] == doctest::Approx(-9.0).epsilon(5e-3));
    CHECK(es.eigenvalues()[1] == doctest::Approx(-2.25).epsilon(5e-3));
    CHECK(es.eigenvalues()[2] > 0.0);

    CHECK_THROWS_AS(verify_spectral_facts(5.0), Error);
}
