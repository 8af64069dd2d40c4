#pragma once

#include <cstddef>
#include <vector>

namespace kdv {

struct Grid {
    double x_min = 0.0;
    double x_max = 0.0;
    std::size_t n = 0;
    double h = 0.0;

    // n samples x_min + i*h, i = 0..n-1, with h = (x_max - x_min)/(n - 1).
    static Grid uniform(double x_min, double x_max, std::size_t n);
    // The sample count is rounded so the spacing is as close to h as possible.
    static Grid with_spacing(double x_min, double x_max, double h);

    double x(std::size_t i) const { return x_min + static_cast<double>(i) * h; }
    std::vector<double> points() const;
};

struct Field {
    Grid grid;
    std::vector<double> values;

    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
};

template <class F>
Field sample(const Grid& g, F&& f)
{
    Field out{g, std::vector<double>(g.n)};
    for (std::size_t i = 0; i < g.n; ++i) out.values[i] = f(g.x(i));
    return out;
}

namespace profile {

double log_Q(double x);
double Q(double x);
double Q_pow(double x, double p);
double Qp(double x);
double Qpp(double x);
double Qppp(double x);
// k-th derivative of Q for k = 0..3.
double Q_deriv(double x, int k);

double log_Qc(double c, double x);
double Qc(double c, double x);
double Qc_deriv(double c, double x, int k);

double lambda_Q(double x);
double F0(double x);
double phi(double x);
double phi_p(double x);
double phi_ppp(double x);

// e^{-s x} Q^3(x) and its derivative; s = sqrt(c) gives G_c.
double forcing(double s, double x);
double forcing_p(double s, double x);

// Closed form of the integral of Q^p over the line (Beta-function identity).
double integral_Q_pow(double p);

}  // namespace profile

// Finite-difference weights for the derivative of order m at z, from nodes x (Fornberg).
std::vector<double> fd_weights(double z, const std::vector<double>& x, int m);

// Derivative of order m (1..4) of sampled data with a stencil of the given accuracy order.
// Central stencils in the interior, shifted one-sided stencils at the edges.
std::vector<double> differentiate(const std::vector<double>& f, double h, int m, int accuracy = 4);

constexpr std::size_t untrusted_band = 2;

double trapezoid(const std::vector<double>& f, double h);

struct Integral {
    double value = 0.0;
    bool tails_decayed = true;
};
Integral integrate(const Field& f, double tail_threshold = 1e-12);

// Cumulative integral of Q^2 from 0 to each grid point.
std::vector<double> cumulative_Q2_from_zero(const Grid& g);

Field apply_L(double c, const Field& f);

Field h0_profile(const Grid& g);
Field j0_profile(const Grid& g);

// Largest |value| over samples with |x| <= radius, skipping the untrusted edge band.
double max_abs_within(const Field& f, double radius);

Grid verification_grid();

}  // namespace kdv
