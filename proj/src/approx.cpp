#include "approx.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"
#include "parallel.hpp"

namespace kdv {

double ExpCoefficient::operator()(double t) const { return amplitude * std::exp(-rate * t); }

const PairTerm& ApproxModel::pair(std::size_t j, std::size_t k) const
{
    for (const auto& p : pairs)
        if (p.j == j && p.k == k) return p;
    fail(Errc::invalid_parameter, "no pair profile for (" + std::to_string(j) + ", " + std::to_string(k) + ")");
}

ApproxModel build_model(const SolitonTrain& train, const Grid& profile_grid, double K0, int threads)
{
    require(train.n() >= 2, Errc::invalid_parameter, "the approximate solution needs at least two solitons");
    const auto& c = train.speeds;
    for (std::size_t j = 0; j < c.size(); ++j)
        for (std::size_t k = 0; k < c.size(); ++k) {
            double r = c[k] / c[j];
            if (j != k && !(r > 0.75 && r < 4.0 / 3.0))
                fail(Errc::unsupported_ratio, "speed ratio c_k/c_j = " + std::to_string(r) +
                                                  " outside (3/4, 4/3)");
        }

    ApproxModel m;
    m.train = train;
    m.geometry = speed_geometry(train, K0);
    for (std::size_t j = 0; j < c.size(); ++j)
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (j == k) continue;
            PairTerm p;
            p.j = j;
            p.k = k;
            p.iota = k > j ? 1 : -1;
            double dshift = train.shifts[j] - train.shifts[k];
            p.z.amplitude = 4.0 * std::cbrt(10.0) * std::cbrt(c[k]) *
                            std::exp(-p.iota * std::sqrt(c[k]) * dshift);
            p.z.rate = std::sqrt(c[k]) * std::fabs(c[j] - c[k]);
            m.pairs.push_back(std::move(p));
        }
    for (std::size_t j = 1; j < c.size(); ++j)
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (k == j) continue;
            for (std::size_t l = 0; l < j; ++l)
                for (Family b : {Family::triple_I, Family::triple_II}) {
                    TripleTerm w;
                    w.j = j;
                    w.k = k;
                    w.l = l;
                    w.branch = b;
                    m.triples.push_back(std::move(w));
                }
        }

    const std::size_t np = m.pairs.size();
    parallel_for(np + m.triples.size(), threads, [&](std::size_t i) {
        if (i < np) {
            auto& p = m.pairs[i];
            p.profile = rescaled_pair_profile(c[p.j], c[p.k], profile_grid);
        } else {
            auto& w = m.triples[i - np];
            w.profile = triple_profile(c[w.j], c[w.k], c[w.l], w.branch, profile_grid);
        }
    });

    for (auto& w : m.triples) {
        const PairTerm& p = m.pair(w.j, w.k);
        bool first = w.branch == Family::triple_I;
        w.gamma = first ? p.profile.gammaI() : p.profile.gammaII();
        double a = first ? p.profile.aI() : p.profile.aII();
        w.z.amplitude = 4.0 * p.z.amplitude * a * std::exp(-w.gamma * (train.shifts[w.l] - train.shifts[w.j]));
        w.z.rate = p.z.rate + w.gamma * (c[w.l] - c[w.j]);
    }
    return m;
}

namespace {

// Everything that depends on t alone.
struct Slice {
    std::vector<double> y;
    std::vector<double> zp;
    std::vector<double> zw;
};

Slice slice(const ApproxModel& m, double t)
{
    Slice s;
    for (std::size_t j = 0; j < m.train.n(); ++j) s.y.push_back(m.center(j, t));
    for (const auto& p : m.pairs) s.zp.push_back(p.z(t));
    for (const auto& w : m.triples) s.zw.push_back(w.z(t));
    return s;
}

struct Point {
    std::vector<double> r;   // R_j
    std::vector<double> pz;  // Z_{jk}
    std::vector<double> tw;  // W_{jkl}
    double R = 0.0, Z = 0.0, W = 0.0;
    double Vt = 0.0;
    double Vxx = 0.0;
};

void evaluate(const ApproxModel& m, const Slice& s, double x, Point& p)
{
    const auto& c = m.train.speeds;
    const std::size_t n = c.size();
    p.r.resize(n);
    p.pz.resize(m.pairs.size());
    p.tw.resize(m.triples.size());
    p.R = p.Z = p.W = p.Vt = p.Vxx = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double xi = x - s.y[j];
        p.r[j] = profile::Qc(c[j], xi);
        p.R += p.r[j];
        p.Vt -= c[j] * profile::Qc_deriv(c[j], xi, 1);
        p.Vxx += profile::Qc_deriv(c[j], xi, 2);
    }
    double a[4];
    for (std::size_t i = 0; i < m.pairs.size(); ++i) {
        const auto& q = m.pairs[i];
        q.profile.values(x - s.y[q.j], a);
        double z = s.zp[i];
        p.pz[i] = z * a[0];
        p.Z += p.pz[i];
        p.Vt += -q.z.rate * z * a[0] - c[q.j] * z * a[1];
        p.Vxx += z * a[2];
    }
    for (std::size_t i = 0; i < m.triples.size(); ++i) {
        const auto& w = m.triples[i];
        w.profile.values(x - s.y[w.l], a);
        double z = s.zw[i];
        p.tw[i] = z * a[0];
        p.W += p.tw[i];
        p.Vt += -w.z.rate * z * a[0] - c[w.l] * z * a[1];
        p.Vxx += z * a[2];
    }
}

double cube(double v) { return v * v * v; }
double pow4(double v) { return v * v * v * v; }

// R_j^3 e^{-rate (x - y_j)}, formed in log space so the growing exponential never overflows.
double weighted_cube(double c, double xi, double rate)
{
    return std::exp(-rate * xi + 3.0 * profile::log_Qc(c, xi));
}

void error_terms_at(const ApproxModel& m, const Slice& s, double x, const Point& p, double out[5])
{
    const auto& c = m.train.speeds;
    const std::size_t n = c.size();
    double e1 = pow4(p.R);
    for (std::size_t j = 0; j < n; ++j) e1 -= pow4(p.r[j]);
    double e2 = 0.0;
    double e3 = 0.0;
    double e4 = 0.0;
    for (std::size_t i = 0; i < m.pairs.size(); ++i) {
        const auto& q = m.pairs[i];
        double rj3 = cube(p.r[q.j]);
        e1 -= 4.0 * p.r[q.k] * rj3;
        e2 += 4.0 * rj3 * p.r[q.k] -
              s.zp[i] * weighted_cube(c[q.j], x - s.y[q.j], q.iota * std::sqrt(c[q.k]));
        e3 -= 4.0 * rj3 * p.pz[i];
        for (std::size_t l = 0; l < q.j; ++l) {
            double rl3 = cube(p.r[l]);
            e3 -= 4.0 * rl3 * p.pz[i];
            e4 += 4.0 * p.pz[i] * rl3;
        }
    }
    e3 += 4.0 * cube(p.R) * p.Z + 6.0 * p.R * p.R * p.Z * p.Z + 4.0 * p.R * cube(p.Z) + pow4(p.Z);
    double e5 = pow4(p.R + p.Z + p.W) - pow4(p.R + p.Z);
    for (std::size_t i = 0; i < m.triples.size(); ++i) {
        const auto& w = m.triples[i];
        e4 -= s.zw[i] * weighted_cube(c[w.l], x - s.y[w.l], w.gamma);
        e5 -= 4.0 * cube(p.r[w.l]) * p.tw[i];
    }
    out[0] = e1;
    out[1] = e2;
    out[2] = e3;
    out[3] = e4;
    out[4] = e5;
}

double l2(const std::vector<double>& f, double h)
{
    double s = 0.0;
    for (double v : f) s += v * v;
    return std::sqrt(h * s);
}

double sup(const std::vector<double>& f)
{
    double s = 0.0;
    for (double v : f) s = std::max(s, std::fabs(v));
    return s;
}

double h3_proxy(const std::vector<double>& f, double h)
{
    double s = l2(f, h);
    s *= s;
    for (int k = 1; k <= 3; ++k) {
        double n = l2(differentiate(f, h, k, 6), h);
        s += n * n;
    }
    return std::sqrt(s);
}

constexpr int flux_accuracy = 8;

void require_coverage(const ApproxModel& m, double t, const Grid& g)
{
    require(g.h <= 0.01 + 1e-12, Errc::grid_too_coarse, "the residual needs h <= 0.01");
    double lo = m.center(m.train.n() - 1, t) - 60.0;
    double hi = m.center(0, t) + 60.0;
    require(g.x_min <= lo + 1e-9 && g.x_max >= hi - 1e-9, Errc::domain_too_small,
            "grid must cover every soliton center by 60 on both sides");
}

struct Sampled {
    std::vector<double> Vt, flux;
    std::array<std::vector<double>, 5> E;
};

Sampled sample_all(const ApproxModel& m, double t, const Grid& g, bool with_terms)
{
    Slice s = slice(m, t);
    Sampled out;
    out.Vt.resize(g.n);
    out.flux.resize(g.n);
    if (with_terms)
        for (auto& e : out.E) e.resize(g.n);
    Point p;
    double e[5];
    for (std::size_t i = 0; i < g.n; ++i) {
        double x = g.x(i);
        evaluate(m, s, x, p);
        out.Vt[i] = p.Vt;
        out.flux[i] = p.Vxx + pow4(p.R + p.Z + p.W);
        if (with_terms) {
            error_terms_at(m, s, x, p, e);
            for (int k = 0; k < 5; ++k) out.E[k][i] = e[k];
        }
    }
    return out;
}

std::vector<double> total_residual(const Sampled& s, double h)
{
    auto d = differentiate(s.flux, h, 1, flux_accuracy);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s.Vt[i];
    return d;
}

}  // namespace

VComponents evaluate_components(const ApproxModel& m, double t, double x)
{
    Slice s = slice(m, t);
    Point p;
    evaluate(m, s, x, p);
    return {p.R, p.Z, p.W};
}

double evaluate_V(const ApproxModel& m, double t, double x) { return evaluate_components(m, t, x).V(); }

Field evaluate_V(const ApproxModel& m, double t, const Grid& g)
{
    Slice s = slice(m, t);
    Field f{g, std::vector<double>(g.n)};
    Point p;
    for (std::size_t i = 0; i < g.n; ++i) {
        evaluate(m, s, g.x(i), p);
        f.values[i] = p.R + p.Z + p.W;
    }
    return f;
}

Field evaluate_R(const ApproxModel& m, double t, const Grid& g)
{
    Field f{g, std::vector<double>(g.n, 0.0)};
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t j = 0; j < m.train.n(); ++j)
            f.values[i] += profile::Qc(m.train.speeds[j], g.x(i) - m.center(j, t));
    return f;
}

Grid approx_window(const ApproxModel& m, double t, double h, double margin)
{
    double lo = m.center(m.train.n() - 1, t) - margin;
    double hi = m.center(0, t) + margin;
    lo = std::floor(lo / h) * h;
    hi = std::ceil(hi / h) * h;
    return Grid::with_spacing(lo, hi, h);
}

ResidualReport residual_E(const ApproxModel& m, double t, const Grid& g)
{
    require_coverage(m, t, g);
    Sampled s = sample_all(m, t, g, false);
    ResidualReport r;
    r.E = Field{g, total_residual(s, g.h)};
    r.l2 = l2(r.E.values, g.h);
    r.h3 = h3_proxy(r.E.values, g.h);
    r.sup = sup(r.E.values);
    return r;
}

ErrorTermsReport error_terms(const ApproxModel& m, double t, const Grid& g)
{
    require_coverage(m, t, g);
    Sampled s = sample_all(m, t, g, true);
    ErrorTermsReport r;
    auto total = total_residual(s, g.h);
    r.residual_l2 = l2(total, g.h);
    std::vector<double> assembled(g.n, 0.0);
    for (int k = 0; k < 5; ++k) {
        auto d = differentiate(s.E[k], g.h, 1, flux_accuracy);
        for (std::size_t i = 0; i < g.n; ++i) assembled[i] += d[i];
        r.dE_l2[k] = l2(d, g.h);
        r.dE_h3[k] = h3_proxy(d, g.h);
        r.E[k] = Field{g, std::move(s.E[k])};
        r.dE[k] = Field{g, std::move(d)};
    }
    for (std::size_t i = 0; i < g.n; ++i)
        r.identity_mismatch = std::max(r.identity_mismatch, std::fabs(assembled[i] - total[i]));
    return r;
}

double correction_norm(const ApproxModel& m, double t, const Grid& g)
{
    Field v = evaluate_V(m, t, g);
    Field r = evaluate_R(m, t, g);
    std::vector<double> d(g.n);
    for (std::size_t i = 0; i < g.n; ++i) d[i] = v.values[i] - r.values[i];
    double a = l2(d, g.h);
    double b = l2(differentiate(d, g.h, 1, 6), g.h);
    return std::sqrt(a * a + b * b);
}

double fit_log_rate(const std::vector<double>& t, const std::vector<double>& y)
{
    require(t.size() == y.size() && t.size() >= 2, Errc::fit_failure, "rate fit needs at least two points");
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        require(y[i] != 0.0 && std::isfinite(y[i]), Errc::fit_failure, "rate fit hit a zero or non-finite value");
        double ly = std::log(std::fabs(y[i]));
        st += t[i];
        sy += ly;
        stt += t[i] * t[i];
        sty += t[i] * ly;
    }
    double n = static_cast<double>(t.size());
    return (n * sty - st * sy) / (n * stt - st * st);
}

RateReport residual_rates(const ApproxModel& m, const std::vector<double>& times, double h, int threads)
{
    RateReport rep;
    rep.sigma0 = m.geometry.sigma0;
    rep.rows.resize(times.size());
    parallel_for(times.size(), threads, [&](std::size_t i) {
        double t = times[i];
        Grid g = approx_window(m, t, h);
        auto et = error_terms(m, t, g);
        RateRow& row = rep.rows[i];
        row.t = t;
        row.residual_l2 = et.residual_l2;
        row.dE_l2 = et.dE_l2;
        row.identity_mismatch = et.identity_mismatch;
        row.residual_h3 = residual_E(m, t, g).h3;
        row.correction = correction_norm(m, t, g);
    });
    std::vector<double> ts, e, eh, cor;
    std::array<std::vector<double>, 5> de;
    for (const auto& r : rep.rows) {
        ts.push_back(r.t);
        e.push_back(r.residual_l2);
        eh.push_back(r.residual_h3);
        cor.push_back(r.correction);
        for (int k = 0; k < 5; ++k) de[k].push_back(r.dE_l2[k]);
        rep.max_identity_mismatch = std::max(rep.max_identity_mismatch, r.identity_mismatch);
        rep.max_relative_mismatch = std::max(rep.max_relative_mismatch, r.identity_mismatch / r.residual_l2);
    }
    rep.residual_slope = fit_log_rate(ts, e);
    rep.residual_h3_slope = fit_log_rate(ts, eh);
    rep.correction_slope = fit_log_rate(ts, cor);
    for (int k = 0; k < 5; ++k) rep.dE_slopes[k] = fit_log_rate(ts, de[k]);
    return rep;
}

double lower_bound_start(const ApproxModel& m, double K0)
{
    const auto& g = m.geometry;
    return 5.0 / g.sigma0 + K0 * g.gamma0 / g.sigma0;
}

LowerBoundReport lower_bound_check(const ApproxModel& m, double K0, const std::vector<double>& times, double delta)
{
    require(times.size() >= 4, Errc::invalid_parameter, "the lower-bound window needs at least four times");
    SpeedGeometry geo = speed_geometry(m.train, K0);
    const double sigma0 = geo.sigma0;
    const double gamma0 = geo.gamma0;
    LowerBoundReport rep;
    rep.K0 = K0;
    rep.delta = delta;
    rep.expected_ratio = std::exp(gamma0 * delta);
    rep.R_slope_bound = -2.0 * sigma0 - 0.1 + 0.01;

    std::vector<double> ts, rs;
    for (double t : times) {
        LowerBoundRow row;
        row.t = t;
        row.x0 = geo.x0(t);
        row.at_x0 = evaluate_components(m, t, row.x0);
        double grow = std::exp(2.0 * sigma0 * t);
        row.m = std::fabs(row.at_x0.V()) * grow;
        row.m_shifted = std::fabs(evaluate_V(m, t, row.x0 - delta)) * grow;
        double dom = (std::fabs(row.at_x0.R) + std::fabs(row.at_x0.W)) / std::fabs(row.at_x0.Z);
        if (!(dom <= 0.1))
            fail(Errc::inconclusive, "Z does not dominate R and W at x0(t) for t = " + std::to_string(t) +
                                         "; start the window later");
        rep.max_dominance = std::max(rep.max_dominance, dom);
        ts.push_back(t);
        rs.push_back(row.at_x0.R);
        rep.rows.push_back(row);
    }
    rep.kappa_lo = rep.rows.front().m;
    rep.kappa_hi = rep.rows.front().m;
    for (const auto& r : rep.rows) {
        rep.kappa_lo = std::min(rep.kappa_lo, r.m);
        rep.kappa_hi = std::max(rep.kappa_hi, r.m);
    }
    rep.variation = (rep.kappa_hi - rep.kappa_lo) / rep.kappa_hi;
    rep.kappa = rep.kappa_lo * std::exp(-gamma0 * K0);
    double t_mid = 0.5 * (times.front() + times.back());
    for (const auto& r : rep.rows)
        if (r.t >= t_mid)
            rep.max_ratio_error = std::max(rep.max_ratio_error, std::fabs(r.m_shifted / r.m / rep.expected_ratio - 1.0));
    rep.dominance_ok = rep.max_dominance <= 0.1;
    rep.ratio_ok = rep.max_ratio_error < 0.02;
    rep.R_slope = fit_log_rate(ts, rs);
    rep.R_ok = rep.R_slope <= rep.R_slope_bound;

    // Tail additivity on lines x = y_1(t) + xi to the right of the fastest soliton.
    const auto& c = m.train.speeds;
    rep.min_additivity = 1e300;
    for (const auto& r : rep.rows) {
        double far = r.x0 - m.center(0, r.t) + 20.0;
        for (double xi = 20.0; xi <= far + 1e-9; xi += 5.0) {
            double x = m.center(0, r.t) + xi;
            double sum = 0.0;
            for (std::size_t j = 0; j < c.size(); ++j)
                for (std::size_t k = j + 1; k < c.size(); ++k)
                    sum += std::exp(-std::sqrt(c[k]) * (c[j] - c[k]) * r.t -
                                    m.pair(j, k).profile.gammaI() * (x - c[j] * r.t));
            double z = evaluate_components(m, r.t, x).Z;
            rep.min_additivity = std::min(rep.min_additivity, std::fabs(z) / (rep.kappa * sum));
        }
    }
    rep.additivity_ok = rep.min_additivity >= 0.5;
    return rep;
}

}  // namespace kdv
