#include "certificate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "error.hpp"
#include "linalg.hpp"
#include "parallel.hpp"

namespace kdv {

namespace {

template <class F>
double integral_of(const Grid& g, F&& f)
{
    std::vector<double> v(g.n);
    for (std::size_t i = 0; i < g.n; ++i) v[i] = f(i, g.x(i));
    return trapezoid(v, g.h);
}

double dot(const Grid& g, const std::vector<double>& a, const std::vector<double>& b)
{
    return integral_of(g, [&](std::size_t i, double) { return a[i] * b[i]; });
}

double relative_gap(double a, double b, double scale)
{
    double s = std::max({std::fabs(a), std::fabs(b), scale});
    return s > 0.0 ? std::fabs(a - b) / s : 0.0;
}

void require_symmetric_domain(const Grid& g, double radius)
{
    require(g.x_min <= -radius && g.x_max >= radius, Errc::domain_too_small,
            "grid must span at least [-" + std::to_string(radius) + ", " + std::to_string(radius) + "]");
}

}  // namespace

WeightedSpace WeightedSpace::build(const Grid& g)
{
    WeightedSpace s;
    s.grid = g;
    s.F0 = sample(g, profile::F0);
    s.basisQ52 = sample(g, [](double x) { return profile::Q_pow(x, 2.5); });
    s.basisQp = sample(g, profile::Qp);
    const std::vector<double>* b[2] = {&s.basisQ52.values, &s.basisQp.values};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) s.gram[i][j] = s.inner(*b[i], *b[j]);
    return s;
}

double WeightedSpace::inner(const std::vector<double>& f, const std::vector<double>& g) const
{
    return integral_of(grid, [&](std::size_t i, double) { return f[i] * g[i] / F0.values[i]; });
}

Projection weighted_projection(const Field& f, const WeightedSpace& space)
{
    const Grid& g = space.grid;
    require(f.grid.n == g.n, Errc::invalid_parameter, "field and weighted space use different grids");
    double peak = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) peak = std::max(peak, f.values[i] * f.values[i] / space.F0.values[i]);
    double edge = std::max(f.values.front() * f.values.front() / space.F0.values.front(),
                           f.values.back() * f.values.back() / space.F0.values.back());
    require(edge <= 1e-12 * peak, Errc::weight_mismatch,
            "weighted integrand does not decay at the grid edge");

    double r1 = space.inner(f.values, space.basisQ52.values);
    double r2 = space.inner(f.values, space.basisQp.values);
    const auto& m = space.gram;
    double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    require(det > 0.0, Errc::quadrature_failure, "weighted Gram matrix is not positive");
    Projection p;
    p.lambda1 = (r1 * m[1][1] - m[0][1] * r2) / det;
    p.lambda2 = (m[0][0] * r2 - m[1][0] * r1) / det;
    p.value = Field{g, std::vector<double>(g.n)};
    for (std::size_t i = 0; i < g.n; ++i)
        p.value.values[i] = f.values[i] - p.lambda1 * space.basisQ52.values[i] - p.lambda2 * space.basisQp.values[i];

    double nf = std::sqrt(space.inner(f.values, f.values));
    double o1 = std::fabs(space.inner(p.value.values, space.basisQ52.values)) / std::sqrt(m[0][0]);
    double o2 = std::fabs(space.inner(p.value.values, space.basisQp.values)) / std::sqrt(m[1][1]);
    require(std::max(o1, o2) <= 1e-10 * std::max(nf, 1e-300) || nf == 0.0, Errc::quadrature_failure,
            "weighted projection lost orthogonality");
    return p;
}

double weighted_norm(const Field& f, const WeightedSpace& space)
{
    auto p = weighted_projection(f, space);
    return std::sqrt(space.inner(p.value.values, p.value.values));
}

GDecomposition decompose_G(double c, const Grid& g)
{
    require(c >= 0.70 && c <= 1.0, Errc::invalid_parameter, "decompose_G needs 0.70 <= c <= 1");
    require_symmetric_domain(g, 30.0);
    const double s = std::sqrt(c);
    auto G = sample(g, [&](double x) { return profile::forcing(s, x); });
    auto qp = sample(g, profile::Qp);
    auto q52 = sample(g, [](double x) { return profile::Q_pow(x, 2.5); });
    auto q = sample(g, profile::Q);
    const double qp2 = dot(g, qp.values, qp.values);
    const double q72 = dot(g, q52.values, q.values);

    GDecomposition d;
    d.alpha = dot(g, G.values, qp.values) / qp2;
    d.beta = dot(g, G.values, q52.values) / q72;

    auto odd = sample(g, [&](double x) { return 0.5 * (profile::forcing(s, x) - profile::forcing(s, -x)); });
    auto even = sample(g, [&](double x) { return 0.5 * (profile::forcing(s, x) + profile::forcing(s, -x)); });
    d.alpha_odd = dot(g, odd.values, qp.values) / qp2;
    d.beta_even = dot(g, even.values, q52.values) / q72;

    d.G0 = Field{g, std::vector<double>(g.n)};
    for (std::size_t i = 0; i < g.n; ++i)
        d.G0.values[i] = G.values[i] - d.alpha * qp.values[i] - d.beta * q.values[i];
    double n0 = std::sqrt(dot(g, d.G0.values, d.G0.values));
    d.ortho_Q52 = std::fabs(dot(g, d.G0.values, q52.values)) / (n0 * std::sqrt(dot(g, q52.values, q52.values)));
    d.ortho_Qp = std::fabs(dot(g, d.G0.values, qp.values)) / (n0 * std::sqrt(qp2));
    require(d.ortho_Q52 < 1e-10 && d.ortho_Qp < 1e-10, Errc::quadrature_failure,
            "G0 is not orthogonal to Q^{5/2} and Q' on this grid");
    return d;
}

CertificateReport weighted_norms(double c, const Grid& g)
{
    auto d = decompose_G(c, g);
    WeightedSpace space = WeightedSpace::build(g);
    Field h0 = h0_profile(g);
    Field j0 = j0_profile(g);
    const double int_q = profile::integral_Q_pow(1.0);

    CertificateReport r;
    r.c = c;
    r.alpha = d.alpha;
    r.beta = d.beta;
    r.ip_G0_H0 = dot(g, d.G0.values, h0.values);
    r.ip_G0_J0 = dot(g, d.G0.values, j0.values);

    auto qp_over_q = sample(g, [](double x) { return -std::tanh(1.5 * x); });
    auto qp3 = sample(g, [](double x) {
        double v = profile::Qp(x);
        return v * v * v;
    });
    Field composite{g, std::vector<double>(g.n)};
    for (std::size_t i = 0; i < g.n; ++i) {
        double x = g.x(i);
        double qp_over_q2 = -std::tanh(1.5 * x) * std::exp(-profile::log_Q(x));
        composite.values[i] = -6.0 / int_q * r.ip_G0_H0 * qp_over_q.values[i] + 28.0 * r.ip_G0_J0 * qp3.values[i] +
                              qp_over_q2 * d.G0.values[i];
    }
    r.N_H0 = weighted_norm(h0, space);
    r.N_QpOverQ = weighted_norm(qp_over_q, space);
    r.N_J0 = weighted_norm(j0, space);
    r.N_Qp3 = weighted_norm(qp3, space);
    r.N_composite = weighted_norm(composite, space);
    return r;
}

CertificateReport certificate_k(double c, const Grid& g)
{
    require(c >= 0.75 && c <= 1.0, Errc::invalid_parameter, "certificate_k needs 3/4 <= c <= 1");
    CertificateReport r = weighted_norms(c, g);
    const double theta = std::sqrt(c) * (1.0 - c);
    const double int_q = profile::integral_Q_pow(1.0);
    r.k1 = r.N_composite;
    r.k2 = 1.0 - theta * (3.0 / int_q * r.N_H0 * r.N_QpOverQ + 14.0 * r.N_J0 * r.N_Qp3);
    r.denominator = std::fabs(3.0 / 7.0 * r.alpha + theta * r.ip_G0_J0);
    if (r.k2 <= 0.0)
        fail(Errc::certificate_void, "k2 = " + std::to_string(r.k2) + " at c = " + std::to_string(c));
    if (r.denominator < 1e-10)
        fail(Errc::near_singular, "certificate denominator vanishes at c = " + std::to_string(c));
    r.k = c * (1.0 - c) * (1.0 - c) * r.N_J0 / r.denominator * r.k1 / r.k2;
    r.margin = 0.5 - r.k;
    return r;
}

std::vector<double> default_certificate_speeds()
{
    std::vector<double> cs;
    for (int i = 0; i <= 25; ++i) cs.push_back((75.0 + i) / 100.0);
    return cs;
}

CertificateSweep certificate_sweep(const std::vector<double>& cs, const Grid& g, int threads)
{
    CertificateSweep sw;
    sw.rows.resize(cs.size());
    std::vector<std::string> errors(cs.size());
    parallel_for(cs.size(), threads, [&](std::size_t i) {
        try {
            sw.rows[i] = certificate_k(cs[i], g);
        } catch (const Error& e) {
            sw.rows[i].c = cs[i];
            errors[i] = "c = " + std::to_string(cs[i]) + ": " + errc_name(e.code()) + ": " + e.what();
        }
    });
    sw.passed = !cs.empty();
    sw.min_k2 = cs.empty() ? 0.0 : 1e300;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (!errors[i].empty()) {
            sw.failures.push_back(errors[i]);
            sw.passed = false;
            continue;
        }
        const auto& r = sw.rows[i];
        sw.max_k = std::max(sw.max_k, r.k);
        sw.min_k2 = std::min(sw.min_k2, r.k2);
        if (!(r.k >= 0.0 && r.k <= 0.5)) sw.passed = false;
    }
    return sw;
}

Field gaussian_bumps(std::uint64_t seed, const Grid& g)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> count(3, 6);
    std::uniform_real_distribution<double> center(-8.0, 8.0);
    std::uniform_real_distribution<double> width(0.5, 3.0);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    int m = count(rng);
    std::vector<double> x0(m), w(m), a(m);
    for (int j = 0; j < m; ++j) {
        x0[j] = center(rng);
        w[j] = width(rng);
        a[j] = amp(rng);
    }
    return sample(g, [&](double x) {
        double v = 0.0;
        for (int j = 0; j < m; ++j) {
            double z = (x - x0[j]) / w[j];
            v += a[j] * std::exp(-z * z);
        }
        return v;
    });
}

Field trial_B0(std::uint64_t seed, const Grid& g)
{
    Field raw = gaussian_bumps(seed, g);
    auto q52 = sample(g, [](double x) { return profile::Q_pow(x, 2.5); });
    auto qp = sample(g, profile::Qp);
    double l1 = dot(g, raw.values, q52.values) / dot(g, q52.values, q52.values);
    double l2 = dot(g, raw.values, qp.values) / dot(g, qp.values, qp.values);
    for (std::size_t i = 0; i < g.n; ++i) raw.values[i] -= l1 * q52.values[i] + l2 * qp.values[i];
    return raw;
}

namespace {

// Left side of the coercivity inequality computed straight from B.
double virial_form_direct(const Field& B)
{
    const Grid& g = B.grid;
    auto b1 = differentiate(B.values, g.h, 1, 6);
    auto b3 = differentiate(B.values, g.h, 3, 6);
    return integral_of(g, [&](std::size_t i, double x) {
        double q = profile::Q(x);
        double lb = -b3[i] + b1[i] - 4.0 * q * q * q * b1[i];
        return lb * B.values[i] * (-std::tanh(1.5 * x)) * std::exp(-profile::log_Q(x));
    });
}

struct EF {
    std::vector<double> E, F, E1, F1;
};

EF ef_fields(const Field& B)
{
    const Grid& g = B.grid;
    EF r;
    r.E.resize(g.n);
    r.F.resize(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        double lq = profile::log_Q(g.x(i));
        r.E[i] = B.values[i] * std::exp(-0.5 * lq);
        r.F[i] = B.values[i] * std::exp(lq);
    }
    r.E1 = differentiate(r.E, g.h, 1, 6);
    r.F1 = differentiate(r.F, g.h, 1, 6);
    return r;
}

// The same form as a sum of quadratic forms in E = B Q^{-1/2} and F = B Q.
double virial_form_identity(const Field& B)
{
    const Grid& g = B.grid;
    EF f = ef_fields(B);
    double e2 = dot(g, f.E, f.E);
    double e1 = dot(g, f.E1, f.E1);
    double f2 = dot(g, f.F, f.F);
    double f1 = dot(g, f.F1, f.F1);
    double e2q3 = integral_of(g, [&](std::size_t i, double x) {
        double q = profile::Q(x);
        return f.E[i] * f.E[i] * q * q * q;
    });
    double f2q3 = integral_of(g, [&](std::size_t i, double x) {
        double q = profile::Q(x);
        return f.F[i] * f.F[i] * q * q * q;
    });
    return 0.375 * e2 + 1.5 * (e1 - 5.4 * e2q3) + 0.3 * (f1 + 41.0 * f2 - 9.4 * f2q3);
}

IdentityCheck make_check(double lhs, double rhs, double scale)
{
    return IdentityCheck{lhs, rhs, relative_gap(lhs, rhs, scale)};
}

}  // namespace

IdentityCheck check_LBB(const Field& B)
{
    const Grid& g = B.grid;
    std::vector<double> D(g.n);
    for (std::size_t i = 0; i < g.n; ++i) D[i] = B.values[i] * std::exp(-2.0 * profile::log_Q(g.x(i)));
    auto d1 = differentiate(D, g.h, 1, 6);
    double lhs = virial_form_direct(B);
    double rhs = integral_of(g, [&](std::size_t i, double x) {
        double q3 = std::pow(profile::Q(x), 3);
        return d1[i] * d1[i] * (1.5 * q3 + 0.3 * q3 * q3) - D[i] * D[i] * (3.0 * q3 - 4.2 * q3 * q3 + 1.2 * q3 * q3 * q3);
    });
    return make_check(lhs, rhs, 0.0);
}

IdentityCheck check_genebeta(const Field& D, double beta)
{
    const Grid& g = D.grid;
    std::vector<double> w(g.n);
    for (std::size_t i = 0; i < g.n; ++i) w[i] = D.values[i] * profile::Q_pow(g.x(i), 1.0 + beta);
    auto w1 = differentiate(w, g.h, 1, 6);
    auto d1 = differentiate(D.values, g.h, 1, 6);
    double lhs = dot(g, w1, w1);
    double rhs = integral_of(g, [&](std::size_t i, double x) {
        double p = profile::Q_pow(x, 2.0 + 2.0 * beta);
        double q3 = std::pow(profile::Q(x), 3);
        return d1[i] * d1[i] * p + (1.0 + beta) * D.values[i] * D.values[i] * p *
                                       (-(1.0 + beta) + (2.0 * beta + 5.0) / 5.0 * q3);
    });
    return make_check(lhs, rhs, 0.0);
}

IdentityCheck check_DQ3(const Field& D)
{
    const Grid& g = D.grid;
    std::vector<double> E(g.n);
    for (std::size_t i = 0; i < g.n; ++i) E[i] = D.values[i] * profile::Q_pow(g.x(i), 1.5);
    auto e1 = differentiate(E, g.h, 1, 6);
    auto d1 = differentiate(D.values, g.h, 1, 6);
    double lhs = integral_of(g, [&](std::size_t i, double x) { return d1[i] * d1[i] * std::pow(profile::Q(x), 3); });
    double rhs = dot(g, e1, e1) + 2.25 * dot(g, E, E) -
                 1.8 * integral_of(g, [&](std::size_t i, double x) { return E[i] * E[i] * std::pow(profile::Q(x), 3); });
    return make_check(lhs, rhs, 0.0);
}

IdentityCheck check_DQ6(const Field& D)
{
    const Grid& g = D.grid;
    std::vector<double> F(g.n);
    for (std::size_t i = 0; i < g.n; ++i) F[i] = D.values[i] * std::pow(profile::Q(g.x(i)), 3);
    auto f1 = differentiate(F, g.h, 1, 6);
    auto d1 = differentiate(D.values, g.h, 1, 6);
    double lhs = integral_of(g, [&](std::size_t i, double x) { return d1[i] * d1[i] * std::pow(profile::Q(x), 6); });
    double rhs = dot(g, f1, f1) + 9.0 * dot(g, F, F) -
                 5.4 * integral_of(g, [&](std::size_t i, double x) { return F[i] * F[i] * std::pow(profile::Q(x), 3); });
    return make_check(lhs, rhs, 0.0);
}

CoercivityReport verify_coercivity(int trial_count, const Grid& g, std::uint64_t seed, int threads)
{
    require(trial_count >= 1, Errc::invalid_parameter, "coercivity needs at least one trial");
    require_symmetric_domain(g, 30.0);
    const auto speeds = default_certificate_speeds();
    CoercivityReport rep;
    rep.trials.resize(static_cast<std::size_t>(trial_count));
    parallel_for(rep.trials.size(), threads, [&](std::size_t t) {
        CoercivityTrial& tr = rep.trials[t];
        tr.seed = seed + t;
        Field B = trial_B0(tr.seed, g);
        tr.norm2 = dot(g, B.values, B.values);
        tr.lhs_direct = virial_form_direct(B);
        tr.lhs_identity = virial_form_identity(B);
        tr.lower_bound = integral_of(g, [&](std::size_t i, double x) {
            double lq = profile::log_Q(x);
            double b2 = B.values[i] * B.values[i];
            return 0.375 * b2 * std::exp(-lq) + 7.0 * b2 * std::exp(2.0 * lq);
        });
        tr.slack = tr.lhs_direct - tr.lower_bound;
        double drift = integral_of(g, [&](std::size_t i, double x) {
            return B.values[i] * B.values[i] * (-std::tanh(1.5 * x)) * std::exp(-profile::log_Q(x));
        });
        double weight = integral_of(g, [&](std::size_t i, double x) { return B.values[i] * B.values[i] * profile::F0(x); });
        tr.cnv_slack = 1e300;
        for (double c : speeds)
            tr.cnv_slack = std::min(tr.cnv_slack, tr.lhs_direct + std::sqrt(c) * (1.0 - c) * drift - weight);
        double eps = 1e-6 * tr.norm2;
        tr.ok = relative_gap(tr.lhs_direct, tr.lhs_identity, 0.0) <= 1e-6 && tr.slack >= -eps && tr.cnv_slack >= -eps;
    });
    rep.min_relative_slack = 1e300;
    rep.passed = true;
    for (const auto& tr : rep.trials) {
        rep.min_relative_slack = std::min(rep.min_relative_slack, tr.slack / tr.norm2);
        rep.max_identity_mismatch = std::max(rep.max_identity_mismatch, relative_gap(tr.lhs_direct, tr.lhs_identity, 0.0));
        rep.passed = rep.passed && tr.ok;
    }
    if (rep.max_identity_mismatch > 1e-6)
        fail(Errc::accuracy_failure, "virial form: direct and identity evaluations disagree by " +
                                         std::to_string(rep.max_identity_mismatch) + " (differentiation accuracy)");
    return rep;
}

namespace {

std::vector<double> operator_eigenvalues(double coupling, double half_width, double h, int count)
{
    Grid g = Grid::with_spacing(-half_width, half_width, h);
    const std::size_t m = g.n - 2;
    std::vector<double> diag(m), off(m - 1, -1.0 / (g.h * g.h));
    for (std::size_t i = 0; i < m; ++i)
        diag[i] = 2.0 / (g.h * g.h) - coupling * std::pow(profile::Q(g.x(i + 1)), 3);
    return tridiagonal_lowest_eigenvalues(diag, off, count);
}

}  // namespace

SpectralReport verify_spectral_facts(double beta, double half_width, double h)
{
    require(beta >= 1.5 && beta <= 4.0, Errc::invalid_parameter, "spectral checks need 3/2 <= beta <= 4");
    require(half_width >= 20.0, Errc::domain_too_small, "spectral checks need a half width of at least 20");
    SpectralReport r;
    r.beta = beta;
    r.coupling = beta * (2.0 * beta + 3.0) / 5.0;
    Grid g = Grid::with_spacing(-half_width, half_width, h);

    auto rayleigh = [&](const std::vector<double>& w, const std::vector<double>& w1) {
        double num = integral_of(g, [&](std::size_t i, double x) {
            return w1[i] * w1[i] - r.coupling * std::pow(profile::Q(x), 3) * w[i] * w[i];
        });
        return num / dot(g, w, w);
    };
    auto residual = [&](const std::vector<double>& w, double lambda) {
        auto w2 = differentiate(w, g.h, 2, 6);
        double m = 0.0;
        for (std::size_t i = untrusted_band; i + untrusted_band < g.n; ++i) {
            double q3 = std::pow(profile::Q(g.x(i)), 3);
            m = std::max(m, std::fabs(w2[i] + r.coupling * q3 * w[i] + lambda * w[i]));
        }
        return m;
    };

    auto ground = sample(g, [&](double x) { return profile::Q_pow(x, beta); });
    auto ground1 = sample(g, [&](double x) { return -beta * std::tanh(1.5 * x) * profile::Q_pow(x, beta); });
    r.ground_expected = -beta * beta;
    r.ground_rayleigh = rayleigh(ground.values, ground1.values);
    r.ground_residual = residual(ground.values, r.ground_expected);

    std::vector<const std::vector<double>*> known{&ground.values};
    Field second, second1;
    r.has_second = beta > 1.5 && beta <= 3.0;
    if (r.has_second) {
        const double p = beta - 1.5;
        second = sample(g, [&](double x) { return -std::tanh(1.5 * x) * profile::Q_pow(x, p); });
        second1 = sample(g, [&](double x) {
            double t = std::tanh(1.5 * x);
            return profile::Q_pow(x, p) * (p * t * t - 1.5 * (1.0 - t * t));
        });
        r.second_expected = -p * p;
        r.second_rayleigh = rayleigh(second.values, second1.values);
        r.second_residual = residual(second.values, r.second_expected);
        known.push_back(&second.values);
    }

    const int count = 4;
    auto coarse = operator_eigenvalues(r.coupling, half_width, h, count);
    auto fine = operator_eigenvalues(r.coupling, half_width, 0.5 * h, count);
    r.eigenvalues.resize(count);
    for (int i = 0; i < count; ++i) r.eigenvalues[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
    r.negative_count = static_cast<int>(std::count_if(r.eigenvalues.begin(), r.eigenvalues.end(),
                                                      [](double v) { return v < -1e-6; }));
    r.complement_bottom = r.eigenvalues[known.size()];

    r.complement_trial_min = 1e300;
    for (std::uint64_t t = 0; t < 32; ++t) {
        Field w = gaussian_bumps(7000 + t, g);
        for (const auto* k : known) {
            double coef = dot(g, w.values, *k) / dot(g, *k, *k);
            for (std::size_t i = 0; i < g.n; ++i) w.values[i] -= coef * (*k)[i];
        }
        auto w1 = differentiate(w.values, g.h, 1, 6);
        r.complement_trial_min = std::min(r.complement_trial_min, rayleigh(w.values, w1));
    }

    for (std::size_t i = 0; i < g.n; ++i)
        r.max_three_fifths_Q3 = std::max(r.max_three_fifths_Q3, 0.6 * std::pow(profile::Q(g.x(i)), 3));
    return r;
}

}  // namespace kdv
