#pragma once

#include <vector>

#include "foundations.hpp"

namespace kdv {

enum class Family { below_one, above_one, triple_I, triple_II };

const char* family_name(Family f);

struct ResonanceParams {
    Family family = Family::below_one;
    double c = 0.0;
    double c_prime = 0.0;
    double theta = 0.0;
    // The forcing is e^{-forcing_rate x} Q^3, so ABOVE_ONE carries a negative rate.
    double forcing_rate = 0.0;

    static ResonanceParams below_one(double c);
    static ResonanceParams above_one(double c);
    // Pair ratio c (either side of 1) and c' in [3/4, 1); branch I or II.
    static ResonanceParams triple(double c, double c_prime, Family branch);
    // Forcing e^{-s x} Q^3 with zeroth-order coefficient s(1 - s^2), 0 < s < 1.
    static ResonanceParams from_rate(double s, Family family = Family::below_one);
};

struct CharacteristicRates {
    double gamma0 = 0.0;
    double gammaI = 0.0;
    double gammaII = 0.0;
};

// gamma0, -gammaI, -gammaII are the roots of g^3 - g - theta.
CharacteristicRates characteristic_rates(const ResonanceParams& p);

// Decay rate of the pair profile on the right for the given branch of the pair family.
double pair_branch_rate(double c, Family branch);

struct ResonanceSolveOptions {
    // Multiplies the forcing; 0 solves the homogeneous problem.
    double forcing_scale = 1.0;
    bool require_default_domain = true;
};

struct Asymptotics {
    double aI = 0.0;
    double aII = 0.0;
    double fit_residual = 0.0;
    bool single_mode = false;
};

// Least-squares fit of samples against {e^{-gI x}, e^{-gII x}} on [w0, w1].
Asymptotics extract_asymptotics(const Field& a, const CharacteristicRates& rates, double w0,
                                double w1);

class ResonanceProfile {
public:
    ResonanceParams params;
    CharacteristicRates rates;
    Field samples;
    Field derivative;
    Field second_derivative;
    Asymptotics fit;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double left_coefficient = 0.0;
    double discrete_residual = 0.0;
    double consistency_residual = 0.0;
    double rcond = 0.0;
    double forcing_scale = 1.0;
    // A = kernel Q' + lambda (Lambda Q) + a discretized remainder.
    double kernel_coefficient = 0.0;
    double lambda_coefficient = 0.0;
    std::vector<double> remainder;

    double trusted_lo() const { return samples.grid.x_min + 10.0; }
    double trusted_hi() const { return samples.grid.x_max - 10.0; }

    // Derivatives of order 0..3, anywhere on the line. Inside the trusted range the
    // samples are interpolated; outside, the exponential tail models take over. The
    // third derivative always comes from the equation itself.
    double value(double x, int k = 0) const;
    void values(double x, double out[4]) const;

    double aI() const { return fit.aI; }
    double aII() const { return fit.aII; }
};

ResonanceProfile solve_resonance(const ResonanceParams& p, const Grid& g,
                                 const ResonanceSolveOptions& opt = {});

Grid default_resonance_grid(double h = 0.01);

// Least-squares slope of log|f| on [x0, x1].
double log_slope(const Field& f, double x0, double x1);

struct SweepRow {
    double c = 0.0;
    CharacteristicRates rates;
    double aI = 0.0;
    double aII = 0.0;
    double fit_residual = 0.0;
    double residual = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    bool sign_constant = true;
    bool inconclusive = false;
    double min_abs_aI = 0.0;
    double lipschitz = 0.0;
};

SweepReport sweep_aI(const std::vector<double>& c_values, const Grid& g, int threads = 1);

// Profiles in the original (unscaled) variables of a soliton train.
class ScaledProfile {
public:
    ScaledProfile() = default;
    ScaledProfile(ResonanceProfile base, double speed);

    double value(double x, int k = 0) const;
    void values(double x, double out[4]) const;

    double aI() const { return base_.aI(); }
    double aII() const { return base_.aII(); }
    double gamma0() const { return root_ * base_.rates.gamma0; }
    double gammaI() const { return root_ * base_.rates.gammaI; }
    double gammaII() const { return root_ * base_.rates.gammaII; }
    // Equation coefficients: (L_{speed} A)' + theta A = (e^{-rate x} Q_speed^3)'.
    double theta() const { return root_ * root_ * root_ * base_.params.theta; }
    double forcing_rate() const { return root_ * base_.params.forcing_rate; }
    double speed() const { return root_ * root_; }
    const ResonanceProfile& base() const { return base_; }

private:
    ResonanceProfile base_;
    double root_ = 1.0;
};

// A_{j,k}(x) = A_{c_k/c_j}(sqrt(c_j) x).
ScaledProfile rescaled_pair_profile(double cj, double ck, const Grid& g);
// A_{j,k,l}(x) = A_{c_k/c_j, c_j/c_l}(sqrt(c_l) x).
ScaledProfile triple_profile(double cj, double ck, double cl, Family branch, const Grid& g);

// Residual of (L_speed A)' + theta A - (e^{-rate x} Q_speed^3)' for the scaled profile,
// evaluated with an independent finite-difference stencil on the given interval.
double scaled_equation_residual(const ScaledProfile& a, double x0, double x1, double h);

}  // namespace kdv
