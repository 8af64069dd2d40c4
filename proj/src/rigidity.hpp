#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kdv {

struct SolitonTrain {
    std::vector<double> speeds;  // strictly decreasing, all positive
    std::vector<double> shifts;

    static SolitonTrain make(std::vector<double> speeds, std::vector<double> shifts = {});
    std::size_t n() const { return speeds.size(); }
    // sum over j >= 2 of (1 - c_j)^2
    double speed_excess() const;
    bool speed_condition() const { return speed_excess() < 1.0 / 16.0; }
    bool normalized() const { return !speeds.empty() && speeds.front() == 1.0; }
};

struct ConservedTriple {
    double mass = 0.0;
    double energy = 0.0;
    double integral = 0.0;
};

// Invariants of a single c = 1 soliton: int Q^2, E(Q) = int (Q')^2 - (2/5) int Q^5, int Q.
ConservedTriple unit_soliton_invariants();
ConservedTriple train_invariants(const SolitonTrain& train);

struct SpeedBounds {
    double universal_lower = 16.0 / 25.0;
    double universal_upper = 1.5;
    double deltaN_max = 0.0;  // sqrt(N) / 8
    double m1 = 0.0;
    double m2 = 0.0;
    double lower = 0.0;  // (1 - sqrt(m2))^6
    double upper = 0.0;  // (1 + sqrt(m2))^6
    double a1 = 0.0;
    double a2 = 0.0;
    double a = 0.0;
    double count_factor = 0.0;  // 2a + a^2 / sqrt(2)
    bool lower_ok = false;
    bool upper_ok = false;
    bool count_ok = false;
    // N^- = N is forced when sqrt(N)/8 < 1.
    bool count_forced = false;
};

SpeedBounds incoming_speed_bounds(const SolitonTrain& train);

double f_power(double x);
double f_power_p(double x);
double f_power_pp(double x);

struct FBoundsReport {
    double f_at_one = 0.0;
    double fp_at_one = 0.0;
    double fpp_at_min = 0.0;  // f'' at (3/35)^{1/8}
    double two_m1 = 0.0;
    double min_lower_slack = 0.0;  // min of f - m1 (1-x)^2
    double min_upper_slack = 0.0;  // min over [3/4, 1] of 24 (1-x)^2 - f
    double min_fpp_slack = 0.0;    // min of f'' - 2 m1
    std::size_t points = 0;
    bool passed = false;
};

// Samples x = step, 2 step, ... up to 3/2.
FBoundsReport f_bounds_check(double step = 1e-3);

struct PowerSumCandidate {
    int N = 0;
    int k = 0;  // multiplicity of the larger value a
    double a = 0.0;
    double b = 0.0;
    double residual = 0.0;
};

struct RigidityScan {
    double x = 0.0;
    std::vector<PowerSumCandidate> solutions;  // residual below the acceptance tolerance
    std::vector<double> min_residual;          // best residual found, indexed by N - 2
};

// Residual of the three power-sum equations for k copies of a and N - k copies of b.
double power_sum_residual(double x, int N, int k, double a, double b);

RigidityScan two_soliton_rigidity_scan(double x, int N_max = 4, double grid_step = 1e-3,
                                       double tolerance = 1e-6);

struct SpeedGeometry {
    std::size_t j0 = 0;  // 1-based
    double sigma0 = 0.0;
    double gamma0 = 0.0;
    double K0 = 0.0;
    double x0_slope = 0.0;

    double x0(double t) const { return x0_slope * t - K0; }
};

SpeedGeometry speed_geometry(const SolitonTrain& train, double K0 = 2.0);

struct ClaimBMReport {
    bool applicable = false;
    double first_lhs = 0.0;   // sigma0 / gamma0
    double first_rhs = 0.0;   // sqrt(c_{j0+1} c_{j0})
    double second_lhs = 0.0;  // 4 sigma0 / (sigma0/gamma0 - (1 - c_{j0})), must be < 1
    double third_lhs = 0.0;
    double third_rhs = 0.0;   // 5 sigma0
    double gsz_residual = 0.0;  // |sigma0 - (c_{j0} gamma0 - gamma0^3)|
    double gamma0_bound = 0.0;  // sqrt(c_{j0}) (sqrt 7 - sqrt 3) / 4
    double rescaled_gamma0 = 0.0;
    bool first = false;
    bool second = false;
    bool third = false;
    bool gamma0_in_bound = false;
    bool rescaled_ok = true;  // gamma0 / sqrt(c_{j0}) <= 3/20 when j0 >= 2
    bool slope_ok = false;    // x0 slope > 3/2

    bool all() const { return first && second && third && gamma0_in_bound && rescaled_ok && slope_ok; }
};

ClaimBMReport claim_bm_check(const SolitonTrain& train);

struct MonteCarloReport {
    std::size_t samples = 0;
    std::size_t violations = 0;
    std::size_t j0_above_one = 0;
    double min_first_slack = 0.0;
    double min_second_slack = 0.0;
    double min_third_slack = 0.0;
    std::vector<std::string> violating;  // description of each failing train
};

// Random admissible trains with c_1 = 1, 2 <= N <= max_n and sum (1 - c_j)^2 <= 1/16.
SolitonTrain random_admissible_train(std::uint64_t seed, int max_n = 6);
MonteCarloReport claim_bm_monte_carlo(std::size_t samples, std::uint64_t seed = 17, int max_n = 6, int threads = 1);

struct ElementaryBoundsReport {
    std::size_t points = 0;
    double min_gc_lower_slack = 0.0;  // gamma(c) - (1 - sqrt c)
    double min_gc_upper_slack = 0.0;  // (1 - c) - gamma(c)
    double min_bb_slack = 0.0;        // sqrt(1 - 3c/4) - (1 - sqrt(c)/2)
    bool passed = false;
};

ElementaryBoundsReport elementary_bounds_check(double step = 1e-4);

}  // namespace kdv
