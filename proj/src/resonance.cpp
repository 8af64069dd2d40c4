#include "resonance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "error.hpp"
#include "linalg.hpp"
#include "parallel.hpp"

namespace kdv {

namespace {

constexpr double theta_max = 0.38490017945975052;  // 2/(3 sqrt 3)

double newton_root(double mu, double theta)
{
    for (int it = 0; it < 50; ++it) {
        double f = mu * mu * mu - mu - theta;
        double d = 3.0 * mu * mu - 1.0;
        if (d == 0.0) break;
        double step = f / d;
        mu -= step;
        if (std::fabs(step) < 1e-17 * std::max(1.0, std::fabs(mu))) break;
    }
    return mu;
}

void check_theta(double theta)
{
    if (!(theta > 0.0 && theta < theta_max))
        fail(Errc::no_three_real_roots,
             "theta = " + std::to_string(theta) + " is outside (0, 2/(3 sqrt 3))");
}

}  // namespace

const char* family_name(Family f)
{
    switch (f) {
    case Family::below_one: return "below_one";
    case Family::above_one: return "above_one";
    case Family::triple_I: return "triple_I";
    case Family::triple_II: return "triple_II";
    }
    return "unknown";
}

ResonanceParams ResonanceParams::below_one(double c)
{
    require(c > 1.0 / 3.0 && c < 1.0, Errc::invalid_parameter, "BELOW_ONE needs 1/3 < c < 1");
    ResonanceParams p;
    p.family = Family::below_one;
    p.c = c;
    p.theta = std::sqrt(c) * (1.0 - c);
    p.forcing_rate = std::sqrt(c);
    return p;
}

ResonanceParams ResonanceParams::above_one(double c)
{
    require(c > 1.0 && c < 4.0 / 3.0, Errc::invalid_parameter, "ABOVE_ONE needs 1 < c < 4/3");
    ResonanceParams p;
    p.family = Family::above_one;
    p.c = c;
    p.theta = std::sqrt(c) * (c - 1.0);
    p.forcing_rate = -std::sqrt(c);
    return p;
}

double pair_branch_rate(double c, Family branch)
{
    require(branch == Family::triple_I || branch == Family::triple_II, Errc::invalid_parameter,
            "branch must be I or II");
    auto r = characteristic_rates(c < 1.0 ? ResonanceParams::below_one(c) : ResonanceParams::above_one(c));
    return branch == Family::triple_I ? r.gammaI : r.gammaII;
}

ResonanceParams ResonanceParams::triple(double c, double c_prime, Family branch)
{
    require(c >= 0.75 && c <= 4.0 / 3.0 && c != 1.0, Errc::invalid_parameter,
            "triple profiles need 3/4 <= c <= 4/3, c != 1");
    require(c_prime >= 0.75 && c_prime < 1.0, Errc::invalid_parameter,
            "triple profiles need 3/4 <= c' < 1");
    double g = pair_branch_rate(c, branch);
    ResonanceParams p;
    p.family = branch;
    p.c = c;
    p.c_prime = c_prime;
    p.theta = std::pow(c_prime, 1.5) * std::sqrt(c) * std::fabs(1.0 - c) +
              std::sqrt(c_prime) * g * (1.0 - c_prime);
    p.forcing_rate = std::sqrt(c_prime) * g;
    return p;
}

ResonanceParams ResonanceParams::from_rate(double s, Family family)
{
    require(s > 0.0 && s < 1.0, Errc::invalid_parameter, "forcing rate must lie in (0, 1)");
    ResonanceParams p;
    p.family = family;
    p.c = s * s;
    p.theta = s * (1.0 - s * s);
    p.forcing_rate = s;
    return p;
}

CharacteristicRates characteristic_rates(const ResonanceParams& p)
{
    check_theta(p.theta);
    CharacteristicRates r;
    switch (p.family) {
    case Family::below_one: {
        double a = std::sqrt(1.0 - 0.75 * p.c);
        double b = 0.5 * std::sqrt(p.c);
        r.gamma0 = a + b;
        r.gammaI = a - b;
        r.gammaII = std::sqrt(p.c);
        break;
    }
    case Family::above_one: {
        double a = std::sqrt(1.0 - 0.75 * p.c);
        double b = 0.5 * std::sqrt(p.c);
        r.gamma0 = std::sqrt(p.c);
        r.gammaI = b - a;
        r.gammaII = b + a;
        break;
    }
    case Family::triple_I:
    case Family::triple_II: {
        double s = p.forcing_rate;
        double a = std::sqrt(1.0 - 0.75 * s * s);
        double g0 = newton_root(a + 0.5 * s, p.theta);
        double m1 = newton_root(-(a - 0.5 * s), p.theta);
        double m2 = newton_root(-s, p.theta);
        r.gamma0 = g0;
        r.gammaI = std::min(-m1, -m2);
        r.gammaII = std::max(-m1, -m2);
        break;
    }
    }
    return r;
}

Asymptotics extract_asymptotics(const Field& a, const CharacteristicRates& rates, double w0, double w1)
{
    const Grid& g = a.grid;
    require(w0 >= 15.0, Errc::invalid_parameter, "fit window must start at x >= 15");
    require(w1 > w0 && w0 >= g.x_min && w1 <= g.x_max, Errc::invalid_parameter,
            "fit window must lie inside the grid");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < g.n; ++i)
        if (g.x(i) >= w0 - 1e-12 && g.x(i) <= w1 + 1e-12) idx.push_back(i);
    require(idx.size() >= 4, Errc::invalid_parameter, "fit window holds too few samples");

    Asymptotics out;
    out.single_mode = std::fabs(rates.gammaII - rates.gammaI) < 1e-3 * rates.gammaII;
    const std::size_t m = idx.size();
    const std::size_t k = out.single_mode ? 1 : 2;
    // Columns are normalized at the window start so both modes enter with unit size.
    std::vector<double> mat(m * k);
    std::vector<double> rhs(m);
    double x_ref = g.x(idx.front());
    double norm_a = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        double x = g.x(idx[r]);
        mat[r] = std::exp(-rates.gammaI * (x - x_ref));
        if (k == 2) mat[m + r] = std::exp(-rates.gammaII * (x - x_ref));
        rhs[r] = a.values[idx[r]];
        norm_a += rhs[r] * rhs[r];
    }
    auto fit = least_squares(mat, m, k, rhs);
    out.aI = fit.coef[0] * std::exp(rates.gammaI * x_ref);
    if (k == 2) out.aII = fit.coef[1] * std::exp(rates.gammaII * x_ref);
    double miss = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        double x = g.x(idx[r]);
        double model = out.aI * std::exp(-rates.gammaI * x) + out.aII * std::exp(-rates.gammaII * x);
        miss += (model - rhs[r]) * (model - rhs[r]);
    }
    out.fit_residual = norm_a > 0.0 ? std::sqrt(miss / norm_a) : 0.0;
    return out;
}

Grid default_resonance_grid(double h) { return Grid::with_spacing(-30.0, 80.0, h); }

namespace {

struct StencilCache {
    std::map<std::pair<int, int>, std::vector<double>> cache;
    const std::vector<double>& get(int offset, int m)
    {
        auto key = std::make_pair(offset, m);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        std::vector<double> nodes(7);
        for (int j = 0; j < 7; ++j) nodes[static_cast<std::size_t>(j)] = j;
        return cache[key] = fd_weights(offset, nodes, m);
    }
};

double forcing_p_scaled(const ResonanceParams& p, double x)
{
    return profile::forcing_p(p.forcing_rate, x);
}

}  // namespace

namespace {

// Q' and Lambda Q with derivatives 0..2; their images under the operator are known exactly.
void kernel_basis(double x, double qp[3], double lq[3])
{
    double q = profile::Q(x);
    double q1 = profile::Qp(x);
    double q2 = profile::Qpp(x);
    double q3 = profile::Qppp(x);
    qp[0] = q1;
    qp[1] = q2;
    qp[2] = q3;
    lq[0] = q / 3.0 + 0.5 * x * q1;
    lq[1] = 5.0 / 6.0 * q1 + 0.5 * x * q2;
    lq[2] = 4.0 / 3.0 * q2 + 0.5 * x * q3;
}

}  // namespace

ResonanceProfile solve_resonance(const ResonanceParams& p, const Grid& g, const ResonanceSolveOptions& opt)
{
    if (opt.require_default_domain) {
        require(g.x_min <= -30.0 + 1e-9 && g.x_max >= 80.0 - 1e-9, Errc::domain_too_small,
                "resonance solve needs a grid spanning [-30, 80]");
        require(g.h <= 0.01 + 1e-12, Errc::grid_too_coarse, "resonance solve needs h <= 0.01");
    }
    require(g.n >= 64, Errc::grid_too_coarse, "resonance grid too coarse");
    ResonanceProfile prof;
    prof.params = p;
    prof.rates = characteristic_rates(p);
    const double theta = p.theta;
    const double g0 = prof.rates.gamma0;
    const double gsum = prof.rates.gammaI + prof.rates.gammaII;
    const double gprod = prof.rates.gammaI * prof.rates.gammaII;
    const std::size_t n = g.n;
    const double h = g.h;

    BandedMatrix mat(n, 6, 6);
    StencilCache st;

    // Left: only the e^{gamma0 x} mode survives, i.e. A' = gamma0 A and A'' = gamma0 A'.
    // Right: the e^{gamma0 x} mode is annihilated by (D + gI)(D + gII).
    const auto& e1 = st.get(0, 1);
    const auto& e2 = st.get(0, 2);
    for (std::size_t j = 0; j < 7; ++j) {
        mat.set(0, j, e1[j] / h - (j == 0 ? g0 : 0.0));
        mat.set(1, j, e2[j] / (h * h) - g0 * e1[j] / h);
        mat.set(n - 1, n - 1 - j, e2[j] / (h * h) - gsum * e1[j] / h + (j == 0 ? gprod : 0.0));
    }
    std::vector<double> forcing(n, 0.0);
    for (std::size_t i = 2; i + 1 < n; ++i) {
        std::size_t start = std::min(i >= 3 ? i - 3 : 0, n - 7);
        int off = static_cast<int>(i - start);
        const auto& w1 = st.get(off, 1);
        const auto& w3 = st.get(off, 3);
        double x = g.x(i);
        double q = profile::Q(x);
        double q3 = q * q * q;
        double qp = profile::Qp(x);
        for (std::size_t j = 0; j < 7; ++j) {
            double v = -w3[j] / (h * h * h) + (1.0 - 4.0 * q3) * w1[j] / h;
            if (start + j == i) v += theta - 12.0 * q * q * qp;
            mat.set(i, start + j, v);
        }
        forcing[i] = opt.forcing_scale * forcing_p_scaled(p, x);
    }

    BandedMatrix::Factorization lu;
    try {
        lu = mat.factorize();
    } catch (const Error& e) {
        fail(Errc::solver_failure, std::string(e.what()) + " (theta = " + std::to_string(theta) + ")");
    }
    prof.rcond = lu.rcond();

    // A = k1 Q' + k2 Lambda Q + remainder. Near theta = 0 the first two carry almost all
    // of A (they span a Jordan block of size 1/theta^2), so they are handled exactly and
    // only the remainder is discretized. Each pass moves more of A into the exact part.
    std::vector<double> qp_s(n), lq_s(n), weight(n);
    for (std::size_t i = 0; i < n; ++i) {
        double b1[3], b2[3];
        kernel_basis(g.x(i), b1, b2);
        qp_s[i] = b1[0];
        lq_s[i] = b2[0];
        weight[i] = profile::Q(g.x(i));
    }
    double nq = 0.0, nl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        nq += qp_s[i] * qp_s[i] * weight[i];
        nl += lq_s[i] * lq_s[i] * weight[i];
    }
    double k1 = 0.0, k2 = 0.0;
    std::vector<double> rem, rhs(n);
    auto build_rhs = [&] {
        double xl = g.x(0), xr = g.x(n - 1);
        double a1[3], a2[3], b1[3], b2[3];
        kernel_basis(xl, a1, a2);
        kernel_basis(xr, b1, b2);
        auto left0 = [&](const double* f) { return f[1] - g0 * f[0]; };
        auto left1 = [&](const double* f) { return f[2] - g0 * f[1]; };
        auto right = [&](const double* f) { return f[2] + gsum * f[1] + gprod * f[0]; };
        rhs[0] = -k1 * left0(a1) - k2 * left0(a2);
        rhs[1] = -k1 * left1(a1) - k2 * left1(a2);
        rhs[n - 1] = -k1 * right(b1) - k2 * right(b2);
        for (std::size_t i = 2; i + 1 < n; ++i)
            rhs[i] = forcing[i] - k1 * theta * qp_s[i] - k2 * (theta * lq_s[i] - qp_s[i]);
    };
    auto projections = [&](const std::vector<double>& v, double& p1, double& p2) {
        p1 = p2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            p1 += v[i] * qp_s[i] * weight[i];
            p2 += v[i] * lq_s[i] * weight[i];
        }
        p1 /= nq;
        p2 /= nl;
    };
    // The remainder depends linearly on (k1, k2); choose them so the remainder carries no
    // Q' or Lambda Q component. The map is factorized once, then re-applied to the
    // current remainder so roundoff from the large coefficients is corrected away.
    double m11 = 0.0, m12 = 0.0, m21 = 0.0, m22 = 0.0;
    {
        k1 = 1.0;
        build_rhs();
        auto u1 = lu.solve(rhs);
        k1 = 0.0;
        k2 = 1.0;
        build_rhs();
        auto u2 = lu.solve(rhs);
        k2 = 0.0;
        build_rhs();
        auto u0 = lu.solve(rhs);
        double a0, b0, a1, b1, a2, b2;
        projections(u0, a0, b0);
        projections(u1, a1, b1);
        projections(u2, a2, b2);
        m11 = a1 - a0;
        m12 = a2 - a0;
        m21 = b1 - b0;
        m22 = b2 - b0;
    }
    const double det = m11 * m22 - m12 * m21;
    const bool can_correct = det != 0.0 && std::isfinite(det);
    for (int pass = 0; pass < 8; ++pass) {
        build_rhs();
        rem = lu.solve(rhs);
        if (!can_correct) break;
        double d1, d2;
        projections(rem, d1, d2);
        double step1 = (d1 * m22 - m12 * d2) / det;
        double step2 = (m11 * d2 - m21 * d1) / det;
        if (std::fabs(d1) + std::fabs(d2) <= 1e-12 * (std::fabs(k1) + std::fabs(k2))) break;
        k1 -= step1;
        k2 -= step2;
    }
    prof.kernel_coefficient = k1;
    prof.lambda_coefficient = k2;

    double gmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) gmax = std::max(gmax, std::fabs(forcing[i]));
    if (gmax == 0.0) gmax = 1.0;

    auto applied = mat.multiply(rem);
    double dres = 0.0;
    for (std::size_t i = 2; i + 1 < n; ++i) dres = std::max(dres, std::fabs(applied[i] - rhs[i]));
    prof.discrete_residual = dres / gmax;

    auto d1 = differentiate(rem, h, 1, 6);
    auto d2 = differentiate(rem, h, 2, 6);
    auto d3 = differentiate(rem, h, 3, 6);
    double cres = 0.0;
    double cres_x = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = g.x(i);
        if (x < g.x_min + 1.0 || x > g.x_max - 1.0) continue;
        double q = profile::Q(x);
        double q3 = q * q * q;
        double r = -d3[i] + (1.0 - 4.0 * q3) * d1[i] + (theta - 12.0 * q * q * profile::Qp(x)) * rem[i] +
                   k1 * theta * qp_s[i] + k2 * (theta * lq_s[i] - qp_s[i]) - forcing[i];
        if (i < 2 || i + 1 >= n) continue;
        if (std::fabs(r) > cres) {
            cres = std::fabs(r);
            cres_x = x;
        }
    }
    prof.consistency_residual = cres / gmax;
    if (prof.consistency_residual > 1e-6)
        fail(Errc::accuracy_failure, "resonance residual " + std::to_string(prof.consistency_residual) +
                                         " exceeds 1e-6 at x = " + std::to_string(cres_x) +
                                         " (theta = " + std::to_string(theta) + ")");

    std::vector<double> a(n), a1(n), a2(n);
    for (std::size_t i = 0; i < n; ++i) {
        double b1[3], b2[3];
        kernel_basis(g.x(i), b1, b2);
        a[i] = rem[i] + k1 * b1[0] + k2 * b2[0];
        a1[i] = d1[i] + k1 * b1[1] + k2 * b2[1];
        a2[i] = d2[i] + k1 * b1[2] + k2 * b2[2];
    }
    prof.samples = Field{g, a};
    prof.derivative = Field{g, a1};
    prof.second_derivative = Field{g, a2};
    prof.forcing_scale = opt.forcing_scale;
    prof.remainder = std::move(rem);

    prof.window_lo = std::max(15.0, g.x_max - 40.0);
    prof.window_hi = g.x_max - 10.0;
    prof.fit = extract_asymptotics(prof.samples, prof.rates, prof.window_lo, prof.window_hi);
    // On the far window the fast mode sits below roundoff, so its coefficient is refit
    // closer in with the slow coefficient held fixed.
    if (!prof.fit.single_mode) {
        double lo = 15.0, hi = std::min(30.0, prof.window_hi);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double x = g.x(i);
            if (x < lo || x > hi) continue;
            double e2 = std::exp(-prof.rates.gammaII * (x - lo));
            double r = a[i] - prof.fit.aI * std::exp(-prof.rates.gammaI * x);
            num += r * e2;
            den += e2 * e2;
        }
        if (den > 0.0) prof.fit.aII = num / den * std::exp(prof.rates.gammaII * lo);
    }
    double xl = prof.trusted_lo();
    prof.left_coefficient = prof.value(xl, 0) * std::exp(-g0 * xl);
    return prof;
}

namespace {

double lagrange8(const Field& f, double x)
{
    const Grid& g = f.grid;
    double pos = (x - g.x_min) / g.h;
    auto i = static_cast<long>(std::floor(pos));
    long start = std::clamp<long>(i - 3, 0, static_cast<long>(g.n) - 8);
    double t = pos - static_cast<double>(start);
    double s = 0.0;
    for (int j = 0; j < 8; ++j) {
        double w = 1.0;
        for (int m = 0; m < 8; ++m)
            if (m != j) w *= (t - m) / static_cast<double>(j - m);
        s += w * f.values[static_cast<std::size_t>(start + j)];
    }
    return s;
}

}  // namespace

void ResonanceProfile::values(double x, double out[4]) const
{
    if (x < trusted_lo()) {
        double e = left_coefficient * std::exp(rates.gamma0 * x);
        out[0] = e;
        out[1] = rates.gamma0 * e;
        out[2] = rates.gamma0 * rates.gamma0 * e;
    } else if (x > trusted_hi()) {
        double e1 = fit.aI * std::exp(-rates.gammaI * x);
        double e2 = fit.aII * std::exp(-rates.gammaII * x);
        out[0] = e1 + e2;
        out[1] = -rates.gammaI * e1 - rates.gammaII * e2;
        out[2] = rates.gammaI * rates.gammaI * e1 + rates.gammaII * rates.gammaII * e2;
    } else {
        out[0] = lagrange8(samples, x);
        out[1] = lagrange8(derivative, x);
        out[2] = lagrange8(second_derivative, x);
    }
    double q = profile::Q(x);
    double q3 = q * q * q;
    out[3] = (1.0 - 4.0 * q3) * out[1] + (params.theta - 12.0 * q * q * profile::Qp(x)) * out[0] -
             forcing_scale * profile::forcing_p(params.forcing_rate, x);
}

double ResonanceProfile::value(double x, int k) const
{
    require(k >= 0 && k <= 3, Errc::invalid_parameter, "profile derivatives are available up to order 3");
    double v[4];
    values(x, v);
    return v[k];
}

double log_slope(const Field& f, double x0, double x1)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < f.grid.n; ++i) {
        double x = f.grid.x(i);
        if (x < x0 || x > x1) continue;
        double y = std::log(std::fabs(f.values[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    require(m >= 2, Errc::invalid_parameter, "slope window holds too few samples");
    double dm = static_cast<double>(m);
    return (dm * sxy - sx * sy) / (dm * sxx - sx * sx);
}

SweepReport sweep_aI(const std::vector<double>& c_values, const Grid& g, int threads)
{
    auto cs = c_values;
    std::sort(cs.begin(), cs.end());
    for (double c : cs)
        require(c >= 0.75 - 1e-12 && c <= 0.999 + 1e-12, Errc::invalid_parameter,
                "sweep speeds must lie in [0.75, 0.999]");
    SweepReport rep;
    rep.rows.resize(cs.size());
    parallel_for(cs.size(), threads, [&](std::size_t i) {
        auto prof = solve_resonance(ResonanceParams::below_one(cs[i]), g);
        SweepRow& row = rep.rows[i];
        row.c = cs[i];
        row.rates = prof.rates;
        row.aI = prof.aI();
        row.aII = prof.aII();
        row.fit_residual = prof.fit.fit_residual;
        row.residual = prof.consistency_residual;
    });
    if (rep.rows.empty()) return rep;
    rep.min_abs_aI = std::fabs(rep.rows.front().aI);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        rep.min_abs_aI = std::min(rep.min_abs_aI, std::fabs(r.aI));
        if (r.aI == 0.0 || 10.0 * r.fit_residual >= 1.0) rep.inconclusive = true;
        if ((r.aI > 0) != (rep.rows.front().aI > 0)) rep.sign_constant = false;
        if (i > 0 && r.c > rep.rows[i - 1].c)
            rep.lipschitz = std::max(rep.lipschitz, std::fabs(r.aI - rep.rows[i - 1].aI) / (r.c - rep.rows[i - 1].c));
    }
    return rep;
}

ScaledProfile::ScaledProfile(ResonanceProfile base, double speed)
    : base_(std::move(base)), root_(std::sqrt(speed))
{
    require(speed > 0.0, Errc::invalid_parameter, "speed must be positive");
}

void ScaledProfile::values(double x, double out[4]) const
{
    base_.values(root_ * x, out);
    double f = 1.0;
    for (int k = 0; k < 4; ++k) {
        out[k] *= f;
        f *= root_;
    }
}

double ScaledProfile::value(double x, int k) const
{
    require(k >= 0 && k <= 3, Errc::invalid_parameter, "profile derivatives are available up to order 3");
    double v[4];
    values(x, v);
    return v[k];
}

namespace {
void check_ratio(double r)
{
    if (!(r > 0.75 - 1e-12 && r < 4.0 / 3.0 + 1e-12) || r == 1.0)
        fail(Errc::unsupported_ratio, "speed ratio " + std::to_string(r) + " outside (3/4, 4/3)");
}
}  // namespace

ScaledProfile rescaled_pair_profile(double cj, double ck, const Grid& g)
{
    require(cj > 0.0 && ck > 0.0, Errc::invalid_parameter, "speeds must be positive");
    double r = ck / cj;
    check_ratio(r);
    auto p = r < 1.0 ? ResonanceParams::below_one(r) : ResonanceParams::above_one(r);
    return ScaledProfile(solve_resonance(p, g), cj);
}

ScaledProfile triple_profile(double cj, double ck, double cl, Family branch, const Grid& g)
{
    require(cj > 0.0 && ck > 0.0 && cl > cj, Errc::invalid_parameter, "triple profiles need c_l > c_j");
    double r = ck / cj;
    check_ratio(r);
    check_ratio(cj / cl);
    return ScaledProfile(solve_resonance(ResonanceParams::triple(r, cj / cl, branch), g), cl);
}

double scaled_equation_residual(const ScaledProfile& a, double x0, double x1, double h)
{
    // Sample at points whose rescaled image lies on the solver grid.
    const ResonanceProfile& b = a.base();
    const Grid& base = b.samples.grid;
    const double c = a.speed();
    const double root = std::sqrt(c);
    const double stride = std::max(1.0, std::round(h * root / base.h));
    const double first = std::ceil((root * x0 - base.x_min) / base.h);
    const double step = stride * base.h / root;
    const auto count = static_cast<std::size_t>(std::floor((x1 - x0) / step)) + 1;
    Grid g = Grid::uniform((base.x_min + first * base.h) / root,
                           (base.x_min + (first + stride * double(count - 1)) * base.h) / root, count);

    // The Q' and Lambda Q components are large and have closed-form images under the
    // operator, so only the remainder is differenced.
    const double k1 = b.kernel_coefficient;
    const double k2 = b.lambda_coefficient;
    auto exact = [&](double x) { return k1 * profile::Qp(root * x) + k2 * profile::lambda_Q(root * x); };
    require(first >= 0.0 && first + stride * double(count - 1) < double(base.n), Errc::domain_too_small,
            "residual window leaves the solver grid");
    Field rem{g, std::vector<double>(count)};
    for (std::size_t m = 0; m < count; ++m)
        rem.values[m] = b.remainder[static_cast<std::size_t>(first + stride * double(m))];
    auto d1 = differentiate(rem.values, g.h, 1, 6);
    auto d3 = differentiate(rem.values, g.h, 3, 6);
    const double s = a.forcing_rate();
    const double c32 = c * root;
    double res = 0.0;
    double fmax = 0.0;
    for (std::size_t i = 5; i + 5 < g.n; ++i) {
        double x = g.x(i);
        double q = profile::Qc(c, x);
        double qp = profile::Qc_deriv(c, x, 1);
        double lq3 = 3.0 * profile::log_Qc(c, x);
        double ratio = -root * std::tanh(1.5 * root * x);
        double forcing = b.forcing_scale * std::exp(-s * x + lq3) * (-s + 3.0 * ratio);
        double image = a.theta() * exact(x) - c32 * k2 * profile::Qp(root * x);
        double r = -d3[i] + c * d1[i] - 4.0 * (3.0 * q * q * qp * rem.values[i] + q * q * q * d1[i]) +
                   a.theta() * rem.values[i] + image - forcing;
        res = std::max(res, std::fabs(r));
        fmax = std::max(fmax, std::fabs(forcing));
    }
    return fmax > 0.0 ? res / fmax : res;
}

}  // namespace kdv
