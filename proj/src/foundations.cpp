#include "foundations.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "error.hpp"

namespace kdv {

Grid Grid::uniform(double x_min, double x_max, std::size_t n)
{
    require(n >= 16, Errc::grid_too_coarse, "grid needs at least 16 samples");
    require(x_max > x_min, Errc::invalid_parameter, "grid needs x_max > x_min");
    Grid g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.n = n;
    g.h = (x_max - x_min) / static_cast<double>(n - 1);
    return g;
}

Grid Grid::with_spacing(double x_min, double x_max, double h)
{
    require(h > 0.0, Errc::invalid_parameter, "grid spacing must be positive");
    auto cells = static_cast<std::size_t>(std::llround((x_max - x_min) / h));
    return uniform(x_min, x_max, cells + 1);
}

std::vector<double> Grid::points() const
{
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = x(i);
    return p;
}

namespace profile {

namespace {
double log_cosh(double y)
{
    double a = std::fabs(y);
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}
}  // namespace

double log_Q(double x) { return (std::log(2.5) - 2.0 * log_cosh(1.5 * x)) / 3.0; }

double Q(double x) { return std::exp(log_Q(x)); }

double Q_pow(double x, double p) { return std::exp(p * log_Q(x)); }

double Qp(double x) { return -std::tanh(1.5 * x) * Q(x); }

double Qpp(double x)
{
    double q = Q(x);
    return q - q * q * q * q;
}

double Qppp(double x)
{
    double q = Q(x);
    return Qp(x) * (1.0 - 4.0 * q * q * q);
}

double Q_deriv(double x, int k)
{
    switch (k) {
    case 0: return Q(x);
    case 1: return Qp(x);
    case 2: return Qpp(x);
    case 3: return Qppp(x);
    default: fail(Errc::invalid_parameter, "Q derivatives are available up to order 3");
    }
}

double log_Qc(double c, double x) { return std::log(c) / 3.0 + log_Q(std::sqrt(c) * x); }

double Qc(double c, double x)
{
    require(c > 0.0, Errc::invalid_parameter, "soliton speed must be positive");
    return std::cbrt(c) * Q(std::sqrt(c) * x);
}

double Qc_deriv(double c, double x, int k)
{
    require(c > 0.0, Errc::invalid_parameter, "soliton speed must be positive");
    double s = std::sqrt(c);
    return std::cbrt(c) * std::pow(s, k) * Q_deriv(s * x, k);
}

double lambda_Q(double x) { return Q(x) / 3.0 + 0.5 * x * Qp(x); }

double F0(double x)
{
    double q = Q(x);
    return (3.0 - std::sqrt(3.0)) / 8.0 * std::exp(-log_Q(x)) + 7.0 * q * q;
}

double phi(double x) { return 2.0 / std::numbers::pi * std::atan(std::exp(x)); }

double phi_p(double x) { return 1.0 / (std::numbers::pi * std::cosh(x)); }

double phi_ppp(double x)
{
    double t = std::tanh(x);
    double s = 1.0 / std::cosh(x);
    return (t * t - s * s) * s / std::numbers::pi;
}

double forcing(double s, double x) { return std::exp(-s * x + 3.0 * log_Q(x)); }

double forcing_p(double s, double x) { return forcing(s, x) * (-s - 3.0 * std::tanh(1.5 * x)); }

double integral_Q_pow(double p)
{
    double a = p / 3.0;
    return std::pow(2.5, a) * (2.0 / 3.0) * std::sqrt(std::numbers::pi) * std::tgamma(a) /
           std::tgamma(a + 0.5);
}

}  // namespace profile

std::vector<double> fd_weights(double z, const std::vector<double>& x, int m)
{
    const int n = static_cast<int>(x.size()) - 1;
    std::vector<std::vector<double>> c(static_cast<std::size_t>(m + 1),
                                       std::vector<double>(x.size(), 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0;
        double c5 = c4;
        c4 = x[static_cast<std::size_t>(i)] - z;
        for (int j = 0; j < i; ++j) {
            double c3 = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c[static_cast<std::size_t>(m)];
}

std::vector<double> differentiate(const std::vector<double>& f, double h, int m, int accuracy)
{
    require(m >= 1 && m <= 4, Errc::invalid_parameter, "derivative order must be 1..4");
    const std::size_t width = static_cast<std::size_t>(2 * ((m + 1) / 2) - 1 + accuracy);
    const std::size_t n = f.size();
    require(n >= width, Errc::grid_too_coarse, "fewer samples than the stencil width");
    const std::size_t half = width / 2;
    std::vector<double> nodes(width);
    for (std::size_t j = 0; j < width; ++j) nodes[j] = static_cast<double>(j);
    const double scale = std::pow(h, -m);

    std::vector<double> out(n, 0.0);
    auto central = fd_weights(static_cast<double>(half), nodes, m);
    for (std::size_t i = half; i + half < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < width; ++j) acc += central[j] * f[i - half + j];
        out[i] = acc * scale;
    }
    for (std::size_t i = 0; i < half; ++i) {
        auto w = fd_weights(static_cast<double>(i), nodes, m);
        double left = 0.0;
        double right = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            left += w[j] * f[j];
            right += w[j] * f[n - 1 - j];
        }
        out[i] = left * scale;
        // Mirrored stencil: odd derivatives flip sign under reflection.
        out[n - 1 - i] = (m % 2 == 0 ? right : -right) * scale;
    }
    return out;
}

double trapezoid(const std::vector<double>& f, double h)
{
    if (f.empty()) return 0.0;
    double s = 0.0;
    for (double v : f) s += v;
    return h * (s - 0.5 * (f.front() + f.back()));
}

Integral integrate(const Field& f, double tail_threshold)
{
    Integral r;
    r.value = trapezoid(f.values, f.grid.h);
    double peak = 1.0;
    for (double v : f.values) peak = std::max(peak, std::fabs(v));
    r.tails_decayed = std::fabs(f.values.front()) < tail_threshold * peak &&
                      std::fabs(f.values.back()) < tail_threshold * peak;
    return r;
}

namespace {

double q2(double x)
{
    double q = profile::Q(x);
    return q * q;
}

double q2_p(double x) { return 2.0 * profile::Q(x) * profile::Qp(x); }

double q2_ppp(double x)
{
    double q = profile::Q(x);
    return (8.0 * q - 14.0 * q * q * q * q) * profile::Qp(x);
}

// Euler-Maclaurin corrected trapezoid on one cell [a, b].
double cell_integral(double a, double b)
{
    double d = b - a;
    return 0.5 * d * (q2(a) + q2(b)) - d * d / 12.0 * (q2_p(b) - q2_p(a)) +
           d * d * d * d / 720.0 * (q2_ppp(b) - q2_ppp(a));
}

double gauss_legendre_q2(double a, double b)
{
    static constexpr double nodes[5] = {0.1488743389816312, 0.4333953941292472,
                                        0.6794095682990244, 0.8650633666889845,
                                        0.9739065285171717};
    static constexpr double weights[5] = {0.2955242247147529, 0.2692667193099963,
                                          0.2190863625159820, 0.1494513491505806,
                                          0.0666713443086881};
    double mid = 0.5 * (a + b);
    double rad = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 5; ++i) s += weights[i] * (q2(mid - rad * nodes[i]) + q2(mid + rad * nodes[i]));
    return rad * s;
}

}  // namespace

std::vector<double> cumulative_Q2_from_zero(const Grid& g)
{
    std::vector<double> out(g.n, 0.0);
    double pos = -g.x_min / g.h;
    auto i0 = static_cast<std::size_t>(std::clamp<double>(std::round(pos), 0.0, double(g.n - 1)));
    out[i0] = std::fabs(g.x(i0)) > 0.0 ? gauss_legendre_q2(0.0, g.x(i0)) : 0.0;
    for (std::size_t i = i0 + 1; i < g.n; ++i) out[i] = out[i - 1] + cell_integral(g.x(i - 1), g.x(i));
    for (std::size_t i = i0; i-- > 0;) out[i] = out[i + 1] - cell_integral(g.x(i), g.x(i + 1));
    return out;
}

Field apply_L(double c, const Field& f)
{
    require(c > 0.0, Errc::invalid_parameter, "apply_L needs c > 0");
    auto d2 = differentiate(f.values, f.grid.h, 2, 4);
    Field out{f.grid, std::vector<double>(f.grid.n)};
    for (std::size_t i = 0; i < f.grid.n; ++i) {
        double q = profile::Qc(c, f.grid.x(i));
        out.values[i] = -d2[i] + c * f.values[i] - 4.0 * q * q * q * f.values[i];
    }
    return out;
}

Field h0_profile(const Grid& g)
{
    require(g.x_min <= -20.0 && g.x_max >= 20.0, Errc::domain_too_small,
            "H0 needs a grid spanning at least [-20, 20]");
    auto cum = cumulative_Q2_from_zero(g);
    Field out{g, std::vector<double>(g.n)};
    for (std::size_t i = 0; i < g.n; ++i) {
        double x = g.x(i);
        double q = profile::Q(x);
        out.values[i] = 1.0 + (profile::Qp(x) * cum[i] - 2.0 * q * q * q) / 3.0;
    }
    return out;
}

Field j0_profile(const Grid& g)
{
    Field h0 = h0_profile(g);
    double int_q = integrate(sample(g, profile::Q)).value;
    double int_q2 = integrate(sample(g, [](double x) { return q2(x); })).value;
    Field out{g, std::vector<double>(g.n)};
    for (std::size_t i = 0; i < g.n; ++i)
        out.values[i] = h0.values[i] / (2.0 * int_q) - profile::lambda_Q(g.x(i)) / int_q2;
    return out;
}

double max_abs_within(const Field& f, double radius)
{
    double m = 0.0;
    for (std::size_t i = untrusted_band; i + untrusted_band < f.grid.n; ++i)
        if (std::fabs(f.grid.x(i)) <= radius) m = std::max(m, std::fabs(f.values[i]));
    return m;
}

Grid verification_grid() { return Grid::with_spacing(-40.0, 40.0, 0.005); }

}  // namespace kdv
