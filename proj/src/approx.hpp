#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "foundations.hpp"
#include "resonance.hpp"
#include "rigidity.hpp"

namespace kdv {

// amplitude * e^{-rate t}
struct ExpCoefficient {
    double amplitude = 0.0;
    double rate = 0.0;

    double operator()(double t) const;
    double derivative(double t) const { return -rate * (*this)(t); }
};

// Indices are 0-based: soliton j has speed train.speeds[j].
struct PairTerm {
    std::size_t j = 0;
    std::size_t k = 0;
    int iota = 0;  // sign(k - j)
    ExpCoefficient z;
    ScaledProfile profile;
};

struct TripleTerm {
    std::size_t j = 0;
    std::size_t k = 0;
    std::size_t l = 0;
    Family branch = Family::triple_I;
    double gamma = 0.0;  // forcing rate gamma^{I,II}_{j,k}
    ExpCoefficient z;
    ScaledProfile profile;
};

struct ApproxModel {
    SolitonTrain train;
    SpeedGeometry geometry;
    std::vector<PairTerm> pairs;
    std::vector<TripleTerm> triples;

    double center(std::size_t j, double t) const { return train.speeds[j] * t + train.shifts[j]; }
    const PairTerm& pair(std::size_t j, std::size_t k) const;
};

ApproxModel build_model(const SolitonTrain& train, const Grid& profile_grid, double K0 = 20.0,
                        int threads = 1);

struct VComponents {
    double R = 0.0;
    double Z = 0.0;
    double W = 0.0;
    double V() const { return R + Z + W; }
};

VComponents evaluate_components(const ApproxModel& m, double t, double x);
double evaluate_V(const ApproxModel& m, double t, double x);
Field evaluate_V(const ApproxModel& m, double t, const Grid& g);
Field evaluate_R(const ApproxModel& m, double t, const Grid& g);

// Grid of spacing h covering every soliton center by the given margin at time t.
Grid approx_window(const ApproxModel& m, double t, double h = 0.01, double margin = 60.0);

struct ResidualReport {
    Field E;
    double l2 = 0.0;
    double h3 = 0.0;  // (sum over orders 0..3 of squared FD-derivative L2 norms)^{1/2}
    double sup = 0.0;
};

// E(V) = dV/dt + (V_xx + V^4)_x, time derivative analytic, outer x-derivative by finite differences.
ResidualReport residual_E(const ApproxModel& m, double t, const Grid& g);

struct ErrorTermsReport {
    std::array<Field, 5> E;
    std::array<Field, 5> dE;  // x-derivatives
    std::array<double, 5> dE_l2{};
    std::array<double, 5> dE_h3{};
    // sup |sum_i dE_i - E(V)|
    double identity_mismatch = 0.0;
    double residual_l2 = 0.0;
};

ErrorTermsReport error_terms(const ApproxModel& m, double t, const Grid& g);

// Discrete H^1 norm of V - R.
double correction_norm(const ApproxModel& m, double t, const Grid& g);

struct RateRow {
    double t = 0.0;
    double residual_l2 = 0.0;
    double residual_h3 = 0.0;
    std::array<double, 5> dE_l2{};
    double correction = 0.0;  // ||V - R||_{H^1}
    double identity_mismatch = 0.0;
};

struct RateReport {
    std::vector<RateRow> rows;
    double sigma0 = 0.0;
    double residual_slope = 0.0;
    double residual_h3_slope = 0.0;
    std::array<double, 5> dE_slopes{};
    double correction_slope = 0.0;
    double max_identity_mismatch = 0.0;
    double max_relative_mismatch = 0.0;
};

RateReport residual_rates(const ApproxModel& m, const std::vector<double>& times, double h = 0.01,
                          int threads = 1);

// Least-squares slope of log|y| against t.
double fit_log_rate(const std::vector<double>& t, const std::vector<double>& y);

struct LowerBoundRow {
    double t = 0.0;
    double x0 = 0.0;
    VComponents at_x0;
    double m = 0.0;          // |V(t, x0(t))| e^{2 sigma0 t}
    double m_shifted = 0.0;  // same with K0 + delta
};

struct LowerBoundReport {
    double K0 = 0.0;
    double delta = 0.0;
    std::vector<LowerBoundRow> rows;
    double kappa_lo = 0.0;  // min m(t)
    double kappa_hi = 0.0;
    double variation = 0.0;  // (kappa_hi - kappa_lo) / kappa_hi
    double kappa = 0.0;      // kappa_lo e^{-gamma0 K0}
    double expected_ratio = 0.0;  // e^{gamma0 delta}
    double max_ratio_error = 0.0;  // relative, over the second half of the window
    double max_dominance = 0.0;    // max of (|R| + |W|) / |Z|
    double R_slope = 0.0;
    double R_slope_bound = 0.0;    // -2 sigma0 - 1/10 + 0.01
    double min_additivity = 0.0;   // min |Z| / (kappa sum_{j<k} ...)
    bool dominance_ok = false;
    bool ratio_ok = false;
    bool R_ok = false;
    bool additivity_ok = false;
    bool passed() const { return kappa_lo > 0.0 && dominance_ok && ratio_ok && R_ok && additivity_ok; }
};

// Throws inconclusive when Z does not dominate R and W at x0(t) somewhere in the window.
LowerBoundReport lower_bound_check(const ApproxModel& m, double K0, const std::vector<double>& times,
                                   double delta = 5.0);

// Heuristic start of the observation window, 5/sigma0 + K0 gamma0 / sigma0.
double lower_bound_start(const ApproxModel& m, double K0);

}  // namespace kdv
