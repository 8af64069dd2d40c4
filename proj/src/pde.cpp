#include "pde.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "error.hpp"
#include "foundations.hpp"
#include "parallel.hpp"

namespace kdv {

using cplx = std::complex<double>;

PeriodicGrid PeriodicGrid::make(double half_length, std::size_t n)
{
    require(half_length > 0.0, Errc::invalid_parameter, "periodic half length must be positive");
    require(n >= 4096 && (n & (n - 1)) == 0, Errc::grid_too_coarse,
            "periodic grids need a power-of-two n >= 4096");
    return PeriodicGrid{half_length, n};
}

double PeriodicGrid::k(std::size_t j) const { return std::numbers::pi * static_cast<double>(j) / half_length; }

DtSuggestion suggest_dt(const PeriodicGrid& g, double max_amplitude, int power, double dt_max)
{
    DtSuggestion d;
    d.c_stab = 1.0;
    double kmax = g.k(g.n / 2);
    double keff = 2.0 / 3.0 * kmax;
    double speed = power * std::pow(std::fabs(max_amplitude), power - 1);
    d.advective = speed > 0.0 ? d.c_stab / (keff * speed) : dt_max;
    d.dispersive_explicit = d.c_stab / (kmax * kmax * kmax);
    d.dt = std::min(dt_max, d.advective);
    return d;
}

double dividing_dt(double interval, double dt_max)
{
    require(interval > 0.0 && dt_max > 0.0, Errc::invalid_parameter, "dt needs a positive interval and bound");
    return interval / std::ceil(interval / dt_max - 1e-9);
}

namespace {
std::mutex& plan_mutex()
{
    static std::mutex m;
    return m;
}
}  // namespace

struct SpectralWorkspace::Impl {
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

SpectralWorkspace::SpectralWorkspace(std::size_t n) : n_(n), impl_(std::make_unique<Impl>())
{
    std::lock_guard<std::mutex> lock(plan_mutex());
    impl_->real = fftw_alloc_real(n);
    impl_->spec = fftw_alloc_complex(n / 2 + 1);
    int in = static_cast<int>(n);
    impl_->fwd = fftw_plan_dft_r2c_1d(in, impl_->real, impl_->spec, FFTW_ESTIMATE);
    impl_->inv = fftw_plan_dft_c2r_1d(in, impl_->spec, impl_->real, FFTW_ESTIMATE);
    if (!impl_->fwd || !impl_->inv) fail(Errc::solver_failure, "FFTW planning failed");
}

SpectralWorkspace::~SpectralWorkspace()
{
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(impl_->fwd);
    fftw_destroy_plan(impl_->inv);
    fftw_free(impl_->real);
    fftw_free(impl_->spec);
}

void SpectralWorkspace::forward(const double* in, cplx* out)
{
    std::copy(in, in + n_, impl_->real);
    fftw_execute(impl_->fwd);
    const std::size_t m = n_ / 2 + 1;
    for (std::size_t j = 0; j < m; ++j) out[j] = cplx(impl_->spec[j][0], impl_->spec[j][1]);
}

void SpectralWorkspace::inverse(const cplx* in, double* out)
{
    const std::size_t m = n_ / 2 + 1;
    for (std::size_t j = 0; j < m; ++j) {
        impl_->spec[j][0] = in[j].real();
        impl_->spec[j][1] = in[j].imag();
    }
    fftw_execute(impl_->inv);
    std::copy(impl_->real, impl_->real + n_, out);
}

PdeSolver::PdeSolver(const PeriodicGrid& g, double dt, const PdeOptions& opt)
    : grid_(g), dt_(dt), opt_(opt), modes_(g.n / 2 + 1), cutoff_(g.n / 3), fft_(g.n)
{
    require(std::isfinite(dt) && dt != 0.0, Errc::invalid_parameter, "time step must be finite and nonzero");
    require(opt.power == 2 || opt.power == 4, Errc::invalid_parameter, "nonlinearity power must be 2 or 4");
    require(opt.contour_points >= 8, Errc::invalid_parameter, "contour needs at least 8 points");
    for (auto* v : {&E_, &E2_, &Q_, &f1_, &f2_, &f3_, &g_, &v_, &a_, &b_, &c_, &Nv_, &Na_, &Nb_, &Nc_})
        v->assign(modes_, cplx(0.0, 0.0));
    phys_.assign(g.n, 0.0);
    const int M = opt.contour_points;
    for (std::size_t j = 0; j < modes_; ++j) {
        double k = grid_.k(j);
        cplx L(0.0, k * k * k + opt.frame_speed * k);
        cplx z0 = L * dt;
        E_[j] = std::exp(z0);
        E2_[j] = std::exp(0.5 * z0);
        cplx q(0.0), a(0.0), b(0.0), c(0.0);
        for (int m = 0; m < M; ++m) {
            cplx z = z0 + std::polar(1.0, std::numbers::pi * (m + 0.5) / M * 2.0);
            cplx ez = std::exp(z);
            cplx z3 = z * z * z;
            q += (std::exp(0.5 * z) - 1.0) / z;
            a += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
            b += (2.0 + z + ez * (z - 2.0)) / z3;
            c += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
        }
        Q_[j] = dt * q / double(M);
        f1_[j] = dt * a / double(M);
        f2_[j] = dt * b / double(M);
        f3_[j] = dt * c / double(M);
        bool kept = j < g.n / 2 && (!opt.dealias || j <= cutoff_);
        g_[j] = kept ? cplx(0.0, -k) : cplx(0.0, 0.0);
    }
}

PdeSolver::~PdeSolver() = default;

void PdeSolver::nonlinear(const std::vector<cplx>& v, std::vector<cplx>& out)
{
    fft_.inverse(v.data(), phys_.data());
    const double inv_n = 1.0 / static_cast<double>(grid_.n);
    for (double& u : phys_) {
        double w = u * inv_n;
        double w2 = w * w;
        u = opt_.power == 4 ? w2 * w2 : w2;
    }
    fft_.forward(phys_.data(), out.data());
    for (std::size_t j = 0; j < modes_; ++j) out[j] *= g_[j];
}

void PdeSolver::step(PdeState& s)
{
    require(s.grid.n == grid_.n && s.grid.half_length == grid_.half_length, Errc::invalid_parameter,
            "state grid does not match the solver grid");
    fft_.forward(s.u.data(), v_.data());
    nonlinear(v_, Nv_);
    for (std::size_t j = 0; j < modes_; ++j) a_[j] = E2_[j] * v_[j] + Q_[j] * Nv_[j];
    nonlinear(a_, Na_);
    for (std::size_t j = 0; j < modes_; ++j) b_[j] = E2_[j] * v_[j] + Q_[j] * Na_[j];
    nonlinear(b_, Nb_);
    for (std::size_t j = 0; j < modes_; ++j) c_[j] = E2_[j] * a_[j] + Q_[j] * (2.0 * Nb_[j] - Nv_[j]);
    nonlinear(c_, Nc_);
    const std::size_t keep = opt_.dealias ? cutoff_ : grid_.n / 2 - 1;
    for (std::size_t j = 0; j < modes_; ++j) {
        if (j > keep) {
            v_[j] = 0.0;
            continue;
        }
        v_[j] = E_[j] * v_[j] + Nv_[j] * f1_[j] + 2.0 * (Na_[j] + Nb_[j]) * f2_[j] + Nc_[j] * f3_[j];
    }
    fft_.inverse(v_.data(), s.u.data());
    const double inv_n = 1.0 / static_cast<double>(grid_.n);
    bool finite = true;
    for (double& u : s.u) {
        u *= inv_n;
        if (!std::isfinite(u) || std::fabs(u) > 1e6) finite = false;
    }
    if (!finite)
        fail(Errc::blow_up_detected, "solution blew up after t = " + std::to_string(s.t));
    s.t += dt_;
    s.offset += opt_.frame_speed * dt_;
}

void PdeSolver::advance_to(PdeState& s, double t_end)
{
    double steps = (t_end - s.t) / dt_;
    long n = std::lround(steps);
    require(n >= 0 && std::fabs(steps - static_cast<double>(n)) < 1e-6, Errc::invalid_parameter,
            "the interval is not a whole number of steps");
    double t0 = s.t, off0 = s.offset;
    for (long i = 0; i < n; ++i) step(s);
    s.t = t_end;
    s.offset = off0 + opt_.frame_speed * (t_end - t0);
}

namespace {

std::vector<cplx> spectrum(const PdeState& s)
{
    SpectralWorkspace fft(s.grid.n);
    std::vector<cplx> v(s.grid.n / 2 + 1);
    fft.forward(s.u.data(), v.data());
    return v;
}

std::vector<double> derivative_from(const PeriodicGrid& g, std::vector<cplx> v, int m)
{
    SpectralWorkspace fft(g.n);
    for (std::size_t j = 0; j < v.size(); ++j) {
        cplx f = std::pow(cplx(0.0, g.k(j)), m);
        if (j == g.n / 2 && m % 2 == 1) f = 0.0;
        v[j] *= f / static_cast<double>(g.n);
    }
    std::vector<double> out(g.n);
    fft.inverse(v.data(), out.data());
    return out;
}

// Trigonometric interpolant of the m-th derivative at frame position xi.
double evaluate_series(const PeriodicGrid& g, const std::vector<cplx>& v, double xi, int m)
{
    double L = g.half_length;
    double theta = xi + L;
    theta -= 2.0 * L * std::floor(theta / (2.0 * L));
    double sum = 0.0;
    const std::size_t half = g.n / 2;
    for (std::size_t j = 0; j <= half; ++j) {
        double k = g.k(j);
        cplx d = std::pow(cplx(0.0, k), m);
        double w = (j == 0 || j == half) ? 1.0 : 2.0;
        if (j == half && m % 2 == 1) continue;
        sum += w * (d * v[j] * std::polar(1.0, k * theta)).real();
    }
    return sum / static_cast<double>(g.n);
}

}  // namespace

std::vector<double> spectral_derivative(const PdeState& s, int m)
{
    require(m >= 1, Errc::invalid_parameter, "derivative order must be positive");
    return derivative_from(s.grid, spectrum(s), m);
}

Conserved conserved(const PdeState& s, int power)
{
    auto ux = spectral_derivative(s, 1);
    Conserved c;
    c.t = s.t;
    const double h = s.grid.h();
    const double w = 2.0 / (power + 1.0);
    for (std::size_t i = 0; i < s.grid.n; ++i) {
        double u = s.u[i];
        c.mass += u * u;
        c.integral += u;
        c.energy += ux[i] * ux[i] - w * std::pow(u, power + 1);
    }
    c.mass *= h;
    c.integral *= h;
    c.energy *= h;
    return c;
}

double interpolate(const PdeState& s, double lab_x)
{
    return evaluate_series(s.grid, spectrum(s), lab_x - s.offset, 0);
}

double peak_location(const PdeState& s, double guess)
{
    const auto& g = s.grid;
    double xi0 = guess - s.offset;
    auto nearest = static_cast<long>(std::llround((xi0 + g.half_length) / g.h()));
    long best = nearest;
    auto idx = [&](long i) { return static_cast<std::size_t>(((i % long(g.n)) + long(g.n)) % long(g.n)); };
    for (long i = nearest - 64; i <= nearest + 64; ++i)
        if (s.u[idx(i)] > s.u[idx(best)]) best = i;
    auto v = spectrum(s);
    double xi = -g.half_length + static_cast<double>(best) * g.h();
    for (int it = 0; it < 30; ++it) {
        double d1 = evaluate_series(g, v, xi, 1);
        double d2 = evaluate_series(g, v, xi, 2);
        if (d2 >= 0.0) break;
        double stepx = d1 / d2;
        xi -= std::clamp(stepx, -g.h(), g.h());
        if (std::fabs(stepx) < 1e-14) break;
    }
    return xi + s.offset;
}

double buffer_max(const PdeState& s, double width)
{
    double m = 0.0;
    for (std::size_t i = 0; i < s.grid.n; ++i) {
        double xi = s.grid.x(i);
        if (xi < -s.grid.half_length + width || xi >= s.grid.half_length - width) m = std::max(m, std::fabs(s.u[i]));
    }
    return m;
}

double h1_distance(const PdeState& s, const std::vector<double>& v)
{
    require(v.size() == s.u.size(), Errc::invalid_parameter, "comparison field has the wrong size");
    PdeState d = s;
    for (std::size_t i = 0; i < v.size(); ++i) d.u[i] -= v[i];
    auto dx = spectral_derivative(d, 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) sum += d.u[i] * d.u[i] + dx[i] * dx[i];
    return std::sqrt(sum * s.grid.h());
}

double monotonicity_functional(const PdeState& s, double sigma, double c0, double x_offset,
                               MonotonicityMode mode, int power)
{
    require(sigma > 0.0, Errc::invalid_parameter, "sigma must be positive");
    const double root = std::sqrt(sigma);
    std::vector<double> ux;
    if (mode == MonotonicityMode::mass_energy) ux = spectral_derivative(s, 1);
    const double w = 2.0 / (power + 1.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < s.grid.n; ++i) {
        double u = s.u[i];
        double psi = profile::phi(root * (s.lab_x(i) - c0 * s.t - x_offset));
        double density = u * u;
        if (mode == MonotonicityMode::mass_energy) density += ux[i] * ux[i] - w * std::pow(u, power + 1);
        sum += density * psi;
    }
    return sum * s.grid.h();
}

double soliton(int power, double c, double x)
{
    if (power == 4) return profile::Qc(c, x);
    require(power == 2, Errc::invalid_parameter, "soliton power must be 2 or 4");
    double ch = std::cosh(0.5 * std::sqrt(c) * x);
    return 1.5 * c / (ch * ch);
}

namespace {

// Value, d/dc and d/dx of the soliton at offset xi.
void soliton_jet(int power, double c, double xi, double out[3])
{
    double r = std::sqrt(c);
    if (power == 4) {
        double y = r * xi;
        double q = profile::Q(y), qp = profile::Qp(y);
        double c13 = std::cbrt(c);
        out[0] = c13 * q;
        out[1] = q / (3.0 * c13 * c13) + c13 * qp * xi / (2.0 * r);
        out[2] = c13 * r * qp;
    } else {
        double a = 0.5 * r * xi;
        double sech = 1.0 / std::cosh(a);
        double th = std::tanh(a);
        double s2 = sech * sech;
        out[0] = 1.5 * c * s2;
        out[1] = 1.5 * s2 - 3.0 * c * s2 * th * xi / (4.0 * r);
        out[2] = -1.5 * c * r * s2 * th;
    }
}

}  // namespace

SolitonFit fit_soliton(const PdeState& s, double guess, int power, double half_window)
{
    double center = peak_location(s, guess);
    double height = interpolate(s, center);
    if (!(height > 0.0)) fail(Errc::fit_failure, "no positive peak near " + std::to_string(guess));
    double c = power == 4 ? std::pow(height / profile::Q(0.0), 3.0) : height / 1.5;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < s.grid.n; ++i)
        if (std::fabs(s.lab_x(i) - center) <= half_window) idx.push_back(i);
    require(idx.size() > 10, Errc::fit_failure, "soliton fit window holds too few samples");

    SolitonFit fit;
    double jet[3];
    for (int it = 0; it < 100; ++it) {
        double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
        for (std::size_t i : idx) {
            soliton_jet(power, c, s.lab_x(i) - center, jet);
            double r = s.u[i] - jet[0];
            double jc = jet[1], js = -jet[2];
            a11 += jc * jc;
            a12 += jc * js;
            a22 += js * js;
            b1 += jc * r;
            b2 += js * r;
        }
        double det = a11 * a22 - a12 * a12;
        require(det > 0.0 && std::isfinite(det), Errc::fit_failure, "soliton fit normal equations are singular");
        double dc = (a22 * b1 - a12 * b2) / det;
        double ds = (a11 * b2 - a12 * b1) / det;
        c += std::clamp(dc, -0.5 * c, 0.5 * c);
        center += ds;
        fit.iterations = it + 1;
        if (std::fabs(dc) < 1e-15 * c && std::fabs(ds) < 1e-13) break;
    }
    require(c > 0.0 && std::isfinite(c), Errc::fit_failure, "soliton fit diverged");
    double sq = 0.0;
    for (std::size_t i : idx) {
        double r = s.u[i] - soliton(power, c, s.lab_x(i) - center);
        sq += r * r;
    }
    fit.c = c;
    fit.center = center;
    fit.rms = std::sqrt(sq / static_cast<double>(idx.size()));
    return fit;
}

std::vector<double> find_peaks(const PdeState& s, double min_height, double min_gap)
{
    const std::size_t n = s.grid.n;
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < n; ++i) {
        double u = s.u[i];
        if (u > min_height && u >= s.u[(i + n - 1) % n] && u > s.u[(i + 1) % n]) cand.push_back(i);
    }
    std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return s.u[a] > s.u[b]; });
    std::vector<double> kept;
    for (std::size_t i : cand) {
        double x = s.lab_x(i);
        bool far = std::all_of(kept.begin(), kept.end(), [&](double y) { return std::fabs(x - y) >= min_gap; });
        if (far) kept.push_back(x);
    }
    for (double& x : kept) x = peak_location(s, x);
    return kept;
}

namespace {

struct Run {
    PdeState final;
    std::vector<Conserved> history;
    double max_buffer = 0.0;
};

template <class Init>
Run integrate(const PeriodicGrid& g, double dt, const PdeOptions& opt, Init&& init, double duration,
              double record_every)
{
    Run r;
    PdeState s = sample_state(g, 0.0, 0.0, init);
    PdeSolver solver(g, dt, opt);
    auto record = [&] {
        r.history.push_back(conserved(s, opt.power));
        r.max_buffer = std::max(r.max_buffer, buffer_max(s));
    };
    record();
    double sign = dt > 0.0 ? 1.0 : -1.0;
    long records = std::lround(duration / record_every);
    for (long i = 1; i <= records; ++i) {
        solver.advance_to(s, sign * std::min(duration, static_cast<double>(i) * record_every));
        record();
    }
    r.final = std::move(s);
    return r;
}

double relative_drift(double a, double b) { return std::fabs(b - a) / std::max(std::fabs(a), 1e-300); }

struct PairFit {
    std::array<SolitonFit, 2> fits{};
    double residual = 0.0;
};

PairFit fit_pair(const PdeState& s, int power, double cmin)
{
    double floor_height = 0.3 * soliton(power, cmin, 0.0);
    auto peaks = find_peaks(s, floor_height);
    if (peaks.size() < 2) fail(Errc::fit_failure, "fewer than two soliton peaks after the collision");
    PairFit pf;
    for (int i = 0; i < 2; ++i) pf.fits[static_cast<std::size_t>(i)] = fit_soliton(s, peaks[static_cast<std::size_t>(i)], power);
    if (pf.fits[0].c < pf.fits[1].c) std::swap(pf.fits[0], pf.fits[1]);
    std::vector<double> model(s.grid.n, 0.0);
    for (std::size_t i = 0; i < s.grid.n; ++i)
        for (const auto& f : pf.fits) model[i] += soliton(power, f.c, s.lab_x(i) - f.center);
    pf.residual = h1_distance(s, model);
    return pf;
}

}  // namespace

CollisionReport collision_experiment(const SolitonTrain& train, const CollisionOptions& opt, int threads)
{
    require(train.n() == 2, Errc::invalid_parameter, "collision experiments use two solitons");
    require(opt.separation >= 40.0, Errc::invalid_parameter, "solitons must start at least 40 apart");
    const double c1 = train.speeds[0], c2 = train.speeds[1];
    CollisionReport rep;
    rep.power = opt.power;
    rep.T_pre = opt.separation / (c1 - c2);
    rep.T_post = opt.T_post > 0.0 ? opt.T_post : rep.T_pre;
    const double T = rep.T_pre + rep.T_post;
    double dt = opt.dt > 0.0 ? opt.dt : suggest_dt(opt.grid, soliton(opt.power, c1, 0.0), opt.power).dt;
    rep.dt = dividing_dt(opt.record_every, dt);

    PdeOptions po;
    po.power = opt.power;
    po.frame_speed = 0.5 * (c1 + c2);
    const double half = 0.5 * opt.separation;
    const int p = opt.power;
    auto ingoing = [&](double x) { return soliton(p, c1, x + half) + soliton(p, c2, x - half); };
    auto mirrored = [&](double x) { return ingoing(-x); };

    PeriodicGrid fine_grid = PeriodicGrid::make(opt.grid.half_length, 2 * opt.grid.n);
    std::vector<Run> runs(3);
    std::vector<int> jobs{0};
    if (opt.error_floor) jobs.push_back(1);
    if (opt.mirror) jobs.push_back(2);
    parallel_for(jobs.size(), threads, [&](std::size_t i) {
        switch (jobs[i]) {
        case 0: runs[0] = integrate(opt.grid, rep.dt, po, ingoing, T, opt.record_every); break;
        case 1: runs[1] = integrate(fine_grid, 0.5 * rep.dt, po, ingoing, T, opt.record_every); break;
        default: runs[2] = integrate(opt.grid, -rep.dt, po, mirrored, T, opt.record_every); break;
        }
    });

    const Run& coarse = runs[0];
    rep.history = coarse.history;
    rep.max_buffer = coarse.max_buffer;
    const auto& h0 = coarse.history.front();
    const auto& h1 = coarse.history.back();
    rep.mass_drift = relative_drift(h0.mass, h1.mass);
    rep.energy_drift = relative_drift(h0.energy, h1.energy);
    rep.integral_drift = relative_drift(h0.integral, h1.integral);

    auto pf = fit_pair(coarse.final, p, c2);
    rep.fits = pf.fits;
    rep.residual = pf.residual;
    if (opt.error_floor) {
        std::vector<double> sub(opt.grid.n);
        for (std::size_t i = 0; i < opt.grid.n; ++i) sub[i] = runs[1].final.u[2 * i];
        rep.floor = h1_distance(coarse.final, sub);
        rep.ratio = rep.residual / rep.floor;
        rep.max_buffer = std::max(rep.max_buffer, runs[1].max_buffer);
    }
    if (opt.mirror) {
        rep.mirror_residual = fit_pair(runs[2].final, p, c2).residual;
        rep.mirror_relative_difference = std::fabs(rep.mirror_residual - rep.residual) / rep.residual;
        rep.max_buffer = std::max(rep.max_buffer, runs[2].max_buffer);
    }
    return rep;
}

SingleSolitonReport single_soliton_run(double c, double duration, const PeriodicGrid& g, double dt,
                                       bool dealias, int power)
{
    SingleSolitonReport rep;
    rep.dt = dividing_dt(duration, dt);
    const double x_init = -0.5 * c * duration;
    PdeOptions po;
    po.power = power;
    po.dealias = dealias;
    Run r = integrate(g, rep.dt, po, [&](double x) { return soliton(power, c, x - x_init); }, duration, duration);
    const PdeState& s = r.final;
    double expected = x_init + c * duration;
    rep.phase_error = std::fabs(peak_location(s, expected) - expected);
    std::vector<double> exact(g.n);
    for (std::size_t i = 0; i < g.n; ++i) exact[i] = soliton(power, c, s.lab_x(i) - expected);
    rep.shape_error = h1_distance(s, exact);
    rep.mass_drift = relative_drift(r.history.front().mass, r.history.back().mass);
    rep.energy_drift = relative_drift(r.history.front().energy, r.history.back().energy);
    rep.integral_drift = relative_drift(r.history.front().integral, r.history.back().integral);
    rep.max_buffer = r.max_buffer;
    return rep;
}

TailReport outgoing_tail_experiment(const ApproxModel& m, const TailOptions& opt, int threads)
{
    SpeedGeometry geo = speed_geometry(m.train, opt.K0);
    const double sigma0 = geo.sigma0, gamma0 = geo.gamma0;
    TailReport rep;
    rep.slope_target = -2.0 * sigma0;
    rep.expected_shift = gamma0 * opt.K0;
    rep.T_lo = opt.T_lo > 0.0 ? opt.T_lo : std::ceil(lower_bound_start(m, opt.K0));
    auto residual_at = [&](double t) { return residual_E(m, t, approx_window(m, t)).l2; };
    if (opt.T_data > 0.0) {
        rep.T_data = opt.T_data;
    } else {
        double t = rep.T_lo;
        while (residual_at(t) >= opt.residual_threshold) {
            t += 1.0;
            require(t < 1000.0, Errc::precondition_unsatisfied, "the residual never drops below the threshold");
        }
        rep.T_data = t;
    }
    rep.T_data = rep.T_lo + opt.record_every * std::ceil((rep.T_data - rep.T_lo) / opt.record_every - 1e-9);
    rep.data_residual = residual_at(rep.T_data);
    require(rep.data_residual < opt.residual_threshold, Errc::precondition_unsatisfied,
            "residual at the data time exceeds the threshold");

    const double fast = m.train.speeds.front();
    const double start_offset = m.center(0, rep.T_data) + 0.25 * opt.grid.half_length;
    PdeOptions po;
    po.frame_speed = fast;
    double vmax = 0.0;
    for (double x = m.center(m.train.n() - 1, rep.T_data) - 5.0; x <= m.center(0, rep.T_data) + 5.0; x += 0.01)
        vmax = std::max(vmax, std::fabs(evaluate_V(m, rep.T_data, x)));
    double dt = opt.dt > 0.0 ? opt.dt : suggest_dt(opt.grid, vmax).dt;
    rep.dt = dividing_dt(opt.record_every, dt);
    const long records = std::lround((rep.T_data - rep.T_lo) / opt.record_every);
    rep.rows.resize(static_cast<std::size_t>(records + 1));

    auto record_time = [&](long i) { return rep.T_data - static_cast<double>(i) * opt.record_every; };
    auto run = [&](const PeriodicGrid& g, double step, bool full, std::vector<double>& s_out) {
        PdeState s = sample_state(g, rep.T_data, start_offset,
                                  [&](double x) { return evaluate_V(m, rep.T_data, x); });
        PdeSolver solver(g, -step, po);
        s_out.assign(rep.rows.size(), 0.0);
        for (long i = 0; i <= records; ++i) {
            double t = record_time(i);
            if (i > 0) solver.advance_to(s, t);
            auto v = spectrum(s);
            double x0 = geo.x0(t);
            s_out[static_cast<std::size_t>(i)] = std::fabs(evaluate_series(g, v, x0 - s.offset, 0));
            if (!full) continue;
            TailRow& row = rep.rows[static_cast<std::size_t>(i)];
            row.t = t;
            row.x0 = x0;
            row.s = s_out[static_cast<std::size_t>(i)];
            row.s_doubled = std::fabs(evaluate_series(g, v, x0 - opt.K0 - s.offset, 0));
            row.V_x0 = evaluate_V(m, t, x0);
            std::vector<double> vv(g.n);
            for (std::size_t j = 0; j < g.n; ++j) vv[j] = evaluate_V(m, t, s.lab_x(j));
            row.distance = h1_distance(s, vv);
            rep.max_buffer = std::max(rep.max_buffer, buffer_max(s));
        }
    };

    std::vector<double> coarse_s, fine_s;
    PeriodicGrid fine = PeriodicGrid::make(opt.grid.half_length, 2 * opt.grid.n);
    parallel_for(opt.error_estimate ? 2 : 1, threads, [&](std::size_t i) {
        if (i == 0) run(opt.grid, rep.dt, true, coarse_s);
        else run(fine, 0.5 * rep.dt, false, fine_s);
    });

    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        auto& row = rep.rows[i];
        row.error = opt.error_estimate ? std::fabs(fine_s[i] - coarse_s[i]) : 0.0;
        row.valid = row.error <= opt.valid_fraction * row.s;
    }
    // Valid window: from T_lo upward until the first row where the error tolerance fails.
    std::vector<double> ts, ss, dts, ds;
    rep.valid_lo = rep.rows.back().t;
    rep.valid_hi = rep.valid_lo;
    double t_double = lower_bound_start(m, 2.0 * opt.K0);
    double shift_sum = 0.0;
    int shift_count = 0;
    rep.distance_C = 0.0;
    for (std::size_t i = rep.rows.size(); i-- > 0;) {
        const auto& row = rep.rows[i];
        if (!row.valid) {
            rep.crossover = row.t;
            break;
        }
        rep.valid_hi = row.t;
        ts.push_back(row.t);
        ss.push_back(row.s);
        if (row.t >= t_double) {
            shift_sum += std::log(row.s_doubled) - std::log(row.s);
            ++shift_count;
        }
        if (row.distance > 0.0) {
            dts.push_back(row.t);
            ds.push_back(row.distance);
            rep.distance_C = std::max(rep.distance_C, row.distance * std::exp(2.0 * sigma0 * row.t));
        }
    }
    require(ts.size() >= 4, Errc::inconclusive,
            "solver error exceeds the tail signal almost immediately (crossover at t = " +
                std::to_string(rep.crossover) + ")");
    rep.slope = fit_log_rate(ts, ss);
    rep.doubled_shift = shift_count > 0 ? shift_sum / shift_count : 0.0;
    if (ds.size() >= 2) rep.distance_slope = fit_log_rate(dts, ds);
    return rep;
}

MonotonicityReport monotonicity_check(const SolitonTrain& train, double sigma, double c0, double sigma_prime,
                                      double x0, MonotonicityMode mode, double duration,
                                      const PeriodicGrid& g, double separation, double record_every)
{
    require(train.n() == 2, Errc::invalid_parameter, "the monotonicity check uses two solitons");
    require(sigma > 0.0 && sigma < sigma_prime && sigma_prime < c0, Errc::invalid_parameter,
            "monotonicity needs 0 < sigma < sigma' < c0");
    const double c1 = train.speeds[0], c2 = train.speeds[1];
    const double half = 0.5 * separation;
    PdeOptions po;
    po.frame_speed = 0.5 * (c1 + c2);
    double dt = dividing_dt(record_every, suggest_dt(g, soliton(4, c1, 0.0)).dt);
    // Both solitons start left of the origin.
    PdeState s = sample_state(g, 0.0, 0.0,
                              [&](double x) { return soliton(4, c1, x + half) + soliton(4, c2, x + 3.0 * half); });
    PdeSolver solver(g, dt, po);
    MonotonicityReport rep;
    auto offset = [&](double t) { return (c0 - sigma_prime) * (duration - t) + x0; };
    long records = std::lround(duration / record_every);
    for (long i = 0; i <= records; ++i) {
        double t = static_cast<double>(i) * record_every;
        if (i > 0) solver.advance_to(s, t);
        rep.t.push_back(t);
        rep.J.push_back(monotonicity_functional(s, sigma, c0, offset(t), mode));
    }
    rep.max_increase_rate = -1e300;
    for (std::size_t i = 1; i < rep.J.size(); ++i)
        rep.max_increase_rate = std::max(rep.max_increase_rate, (rep.J[i] - rep.J[i - 1]) / record_every);
    rep.slack = std::exp(-std::sqrt(sigma) * x0);
    rep.ok = rep.max_increase_rate <= 1e-6 + rep.slack;
    return rep;
}

}  // namespace kdv
