#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "approx.hpp"
#include "rigidity.hpp"

namespace kdv {

struct PeriodicGrid {
    double half_length = 256.0;
    std::size_t n = std::size_t{1} << 14;

    static PeriodicGrid make(double half_length, std::size_t n);
    double h() const { return 2.0 * half_length / static_cast<double>(n); }
    double x(std::size_t i) const { return -half_length + static_cast<double>(i) * h(); }
    // Wavenumber of the r2c mode j, 0 <= j <= n/2.
    double k(std::size_t j) const;
};

// u is sampled in a frame whose centre sits at lab position `offset`.
struct PdeState {
    double t = 0.0;
    PeriodicGrid grid;
    double offset = 0.0;
    std::vector<double> u;

    double lab_x(std::size_t i) const { return grid.x(i) + offset; }
};

template <class F>
PdeState sample_state(const PeriodicGrid& g, double t, double offset, F&& f)
{
    PdeState s{t, g, offset, std::vector<double>(g.n)};
    for (std::size_t i = 0; i < g.n; ++i) s.u[i] = f(s.lab_x(i));
    return s;
}

struct PdeOptions {
    int power = 4;  // 4: quartic gKdV, 2: integrable KdV
    double frame_speed = 0.0;
    bool dealias = true;
    int contour_points = 32;
};

struct DtSuggestion {
    double dt = 0.0;
    double advective = 0.0;            // c_stab / (k_eff p A^{p-1})
    double dispersive_explicit = 0.0;  // c_stab / k_max^3, what an explicit scheme would need
    double c_stab = 0.0;
};

// The exponential integrator treats -u_xxx exactly, so the advective bound decides dt.
DtSuggestion suggest_dt(const PeriodicGrid& g, double max_amplitude, int power = 4, double dt_max = 0.01);

// Largest dt <= dt_max that divides `interval` into whole steps.
double dividing_dt(double interval, double dt_max);

// Real FFT on n points with scratch buffers; plans are created under a global lock.
class SpectralWorkspace {
public:
    explicit SpectralWorkspace(std::size_t n);
    ~SpectralWorkspace();
    SpectralWorkspace(const SpectralWorkspace&) = delete;
    SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

    std::size_t n() const { return n_; }
    void forward(const double* in, std::complex<double>* out);
    // Unnormalized inverse: returns n times the real signal.
    void inverse(const std::complex<double>* in, double* out);

private:
    struct Impl;
    std::size_t n_;
    std::unique_ptr<Impl> impl_;
};

class PdeSolver {
public:
    PdeSolver(const PeriodicGrid& g, double dt, const PdeOptions& opt = {});
    ~PdeSolver();
    PdeSolver(const PdeSolver&) = delete;
    PdeSolver& operator=(const PdeSolver&) = delete;

    // One ETDRK4 step of size dt (dt may be negative). Throws blow_up_detected.
    void step(PdeState& s);
    // Whole steps until s.t reaches t_end.
    void advance_to(PdeState& s, double t_end);
    double dt() const { return dt_; }
    const PdeOptions& options() const { return opt_; }

private:
    void nonlinear(const std::vector<std::complex<double>>& v, std::vector<std::complex<double>>& out);

    PeriodicGrid grid_;
    double dt_;
    PdeOptions opt_;
    std::size_t modes_;
    std::size_t cutoff_;
    std::vector<std::complex<double>> E_, E2_, Q_, f1_, f2_, f3_, g_;
    std::vector<std::complex<double>> v_, a_, b_, c_, Nv_, Na_, Nb_, Nc_;
    std::vector<double> phys_;
    SpectralWorkspace fft_;
};

// Spectral derivative of order m.
std::vector<double> spectral_derivative(const PdeState& s, int m);

struct Conserved {
    double t = 0.0;
    double mass = 0.0;
    double energy = 0.0;  // int u_x^2 - 2/(p+1) int u^{p+1}
    double integral = 0.0;
};

Conserved conserved(const PdeState& s, int power = 4);

// Trigonometric interpolation at a lab position.
double interpolate(const PdeState& s, double lab_x);
// Local maximum near the guess, refined by Newton on the interpolated derivative.
double peak_location(const PdeState& s, double guess);
double buffer_max(const PdeState& s, double width = 20.0);
// Discrete H^1 norm of u - v computed spectrally.
double h1_distance(const PdeState& s, const std::vector<double>& v);

enum class MonotonicityMode { mass_only, mass_energy };

// int (u_x^2 + u^2 - 2/5 u^5) psi with psi = phi(sqrt(sigma) (x - c0 t - x_offset)); mass_only drops
// the u_x^2 and u^5 terms.
double monotonicity_functional(const PdeState& s, double sigma, double c0, double x_offset,
                               MonotonicityMode mode, int power = 4);

// Soliton of u_t + (u_xx + u^p)_x = 0 for p in {2, 4}.
double soliton(int power, double c, double x);

struct SolitonFit {
    double c = 0.0;
    double center = 0.0;
    double rms = 0.0;  // root-mean-square misfit on the fit window
    int iterations = 0;
};

// Two-parameter nonlinear least squares for (c, center) on [guess - w, guess + w].
SolitonFit fit_soliton(const PdeState& s, double guess, int power = 4, double half_window = 15.0);
// Lab positions of local maxima above min_height, at least min_gap apart, tallest first.
std::vector<double> find_peaks(const PdeState& s, double min_height, double min_gap = 10.0);

struct CollisionOptions {
    double separation = 40.0;
    double T_post = 0.0;  // 0: same as the approach time
    PeriodicGrid grid = PeriodicGrid::make(256.0, std::size_t{1} << 13);
    double dt = 0.0;  // 0: from suggest_dt
    int power = 4;
    bool error_floor = true;
    bool mirror = false;
    double record_every = 10.0;
};

struct CollisionReport {
    int power = 4;
    double T_pre = 0.0;
    double T_post = 0.0;
    double dt = 0.0;
    std::array<SolitonFit, 2> fits{};
    double residual = 0.0;
    double floor = 0.0;
    double ratio = 0.0;  // residual / floor
    double mirror_residual = 0.0;
    double mirror_relative_difference = 0.0;
    double max_buffer = 0.0;
    double mass_drift = 0.0;
    double energy_drift = 0.0;
    double integral_drift = 0.0;
    std::vector<Conserved> history;
};

// Ingoing configuration: the faster soliton starts `separation` behind the slower one and the
// collision happens at T_pre = separation / (c_1 - c_2).
CollisionReport collision_experiment(const SolitonTrain& train, const CollisionOptions& opt = {},
                                     int threads = 1);

struct SingleSolitonReport {
    double dt = 0.0;
    double phase_error = 0.0;
    double shape_error = 0.0;
    double mass_drift = 0.0;
    double energy_drift = 0.0;
    double integral_drift = 0.0;
    double max_buffer = 0.0;
};

SingleSolitonReport single_soliton_run(double c, double duration, const PeriodicGrid& g, double dt,
                                       bool dealias = true, int power = 4);

struct TailOptions {
    double K0 = 20.0;
    double T_data = 0.0;  // 0: first time the residual drops below residual_threshold
    double T_lo = 0.0;    // 0: lower_bound_start(K0)
    double residual_threshold = 1e-9;
    PeriodicGrid grid = PeriodicGrid::make(256.0, std::size_t{1} << 14);
    double dt = 0.0;
    double record_every = 1.0;
    bool error_estimate = true;
    double valid_fraction = 0.01;  // solver error must stay below this fraction of s(t)
};

struct TailRow {
    double t = 0.0;
    double x0 = 0.0;
    double s = 0.0;          // |u(t, x0(t))|
    double s_doubled = 0.0;  // |u(t, x0(t) - K0)|, the line for 2 K0
    double V_x0 = 0.0;
    double error = 0.0;  // |s_fine - s| from the refined rerun
    double distance = 0.0;  // ||u - V||_{H^1}
    bool valid = true;
};

struct TailReport {
    double T_data = 0.0;
    double T_lo = 0.0;
    double data_residual = 0.0;
    double dt = 0.0;
    std::vector<TailRow> rows;
    double valid_lo = 0.0;
    double valid_hi = 0.0;
    double crossover = 0.0;  // earliest-in-integration time where the error exceeds the tolerance; 0 if none
    double slope = 0.0;
    double slope_target = 0.0;
    double doubled_shift = 0.0;  // mean of log s_doubled - log s where both lines are in the tail regime
    double expected_shift = 0.0;  // gamma0 K0
    double distance_slope = 0.0;
    double distance_C = 0.0;  // max ||u - V|| e^{2 sigma0 t}
    double max_buffer = 0.0;
};

// The outgoing solution is approximated by integrating backward from u(T_data) = V(T_data).
TailReport outgoing_tail_experiment(const ApproxModel& m, const TailOptions& opt = {}, int threads = 1);

struct MonotonicityReport {
    std::vector<double> t;
    std::vector<double> J;
    double max_increase_rate = 0.0;  // max over consecutive records of (J_{i+1} - J_i) / dt
    double slack = 0.0;
    bool ok = false;
};

// Outgoing pair (fast soliton ahead by `separation`), functional evaluated every record_every.
MonotonicityReport monotonicity_check(const SolitonTrain& train, double sigma, double c0, double sigma_prime,
                                      double x0, MonotonicityMode mode, double duration,
                                      const PeriodicGrid& g, double separation = 40.0,
                                      double record_every = 1.0);

}  // namespace kdv
