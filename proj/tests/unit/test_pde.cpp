#include <doctest.h>

#include <cmath>
#include <vector>

#include "error.hpp"
#include "foundations.hpp"
#include "pde.hpp"

using namespace kdv;

namespace {

PeriodicGrid small_grid() { return PeriodicGrid::make(128.0, 4096); }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("grid invariants and the time step heuristic")
{
    CHECK_THROWS_AS(PeriodicGrid::make(256.0, 2048), Error);
    CHECK_THROWS_AS(PeriodicGrid::make(256.0, 5000), Error);
    auto g = PeriodicGrid::make(256.0, 8192);
    CHECK(g.x(0) == -256.0);
    CHECK(g.h() == doctest::Approx(512.0 / 8192));
    CHECK(g.k(1) == doctest::Approx(std::acos(-1.0) / 256.0));

    auto d = suggest_dt(g, soliton(4, 1.0, 0.0));
    CHECK(std::isfinite(d.dt));
    CHECK(d.dt > 0.0);
    CHECK(d.c_stab == 1.0);
    CHECK(suggest_dt(g, 0.0).dt == 0.01);
    CHECK(suggest_dt(g, 0.0, 4, 0.05).dt == 0.05);

    auto g2 = PeriodicGrid::make(256.0, 16384);
    auto d2 = suggest_dt(g2, soliton(4, 1.0, 0.0));
    CHECK(d.dispersive_explicit / d2.dispersive_explicit == doctest::Approx(8.0));
    CHECK(d.advective / d2.advective == doctest::Approx(2.0));

    CHECK(dividing_dt(10.0, 0.003) <= 0.003);
    double steps = 10.0 / dividing_dt(10.0, 0.003);
    CHECK(std::fabs(steps - std::round(steps)) < 1e-9);
}

TEST_CASE("zero data stays zero")
{
    auto g = small_grid();
    PdeState s = sample_state(g, 0.0, 0.0, [](double) { return 0.0; });
    PdeSolver solver(g, 0.01);
    solver.advance_to(s, 1.0);
    for (double u : s.u) REQUIRE(u == 0.0);
    CHECK(s.t == 1.0);
    CHECK(monotonicity_functional(s, 0.1, 0.5, 0.0, MonotonicityMode::mass_energy) == 0.0);
}

TEST_CASE("traveling wave translates at its speed")
{
    auto g = small_grid();
    auto r = single_soliton_run(1.0, 10.0, g, 0.002);
    CHECK(r.phase_error < 1e-3);
    CHECK(r.shape_error < 1e-5);
    CHECK(r.mass_drift < 1e-7);
    CHECK(r.integral_drift < 1e-12);

    auto kdv = single_soliton_run(1.0, 10.0, g, 0.002, true, 2);
    CHECK(kdv.phase_error < 1e-3);
    CHECK(kdv.mass_drift < 1e-8);
}

TEST_CASE("fourth-order convergence in time")
{
    auto g = small_grid();
    double e1 = single_soliton_run(1.0, 5.0, g, 0.01).phase_error;
    double e2 = single_soliton_run(1.0, 5.0, g, 0.005).phase_error;
    double ratio = e1 / e2;
    CHECK(ratio > 10.0);
    CHECK(ratio < 32.0);
}

TEST_CASE("co-moving frame and negative steps")
{
    auto g = small_grid();
    auto init = [](double x) { return soliton(4, 1.0, x + 10.0) + soliton(4, 0.8, x - 10.0); };
    PdeState s = sample_state(g, 0.0, 0.0, init);
    PdeState start = s;
    PdeOptions opt;
    opt.frame_speed = 0.9;
    PdeSolver fwd(g, 0.002, opt), back(g, -0.002, opt);
    fwd.advance_to(s, 2.0);
    CHECK(s.offset == doctest::Approx(1.8));
    back.advance_to(s, 0.0);
    CHECK(s.offset == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(max_abs_diff(s.u, start.u) < 1e-8);

    // u(-x) run backward in time is the mirror image of the forward run.
    PdeState a = sample_state(g, 0.0, 0.0, init);
    PdeState b = sample_state(g, 0.0, 0.0, [&](double x) { return init(-x); });
    PdeSolver fa(g, 0.002), fb(g, -0.002);
    fa.advance_to(a, 1.0);
    fb.advance_to(b, -1.0);
    double worst = 0.0;
    for (std::size_t i = 1; i < g.n; ++i) worst = std::max(worst, std::fabs(a.u[i] - b.u[g.n - i]));
    CHECK(worst < 1e-12);
}

TEST_CASE("dealiasing guards against aliasing instability")
{
    // h = 1/2 and h = 1 leave the soliton spectrum unresolved near the Nyquist mode.
    auto g1 = PeriodicGrid::make(1024.0, 4096);
    auto on = single_soliton_run(1.0, 20.0, g1, 0.005, true);
    auto off = single_soliton_run(1.0, 20.0, g1, 0.005, false);
    CHECK(off.mass_drift > 100.0 * on.mass_drift);

    auto g2 = PeriodicGrid::make(2048.0, 4096);
    CHECK_NOTHROW(single_soliton_run(1.0, 20.0, g2, 0.005, true));
    try {
        single_soliton_run(1.0, 20.0, g2, 0.005, false);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::blow_up_detected);
    }
}

TEST_CASE("conserved quantities of a sampled soliton")
{
    auto g = small_grid();
    PdeState s = sample_state(g, 0.0, 0.0, [](double x) { return soliton(4, 1.0, x); });
    auto c = conserved(s);
    CHECK(c.mass == doctest::Approx(profile::integral_Q_pow(2.0)).epsilon(1e-12));
    CHECK(c.integral == doctest::Approx(profile::integral_Q_pow(1.0)).epsilon(1e-12));
    // int Q'^2 = (3/7) int Q^2
    double energy = 3.0 / 7.0 * profile::integral_Q_pow(2.0) - 0.4 * profile::integral_Q_pow(5.0);
    CHECK(c.energy == doctest::Approx(energy).epsilon(1e-10));
}

TEST_CASE("spectral interpolation, peaks and fits")
{
    auto g = small_grid();
    PdeState s = sample_state(g, 0.0, 3.0, [](double x) { return soliton(4, 0.9, x - 7.3) + soliton(4, 0.6, x + 30.0); });
    for (double x : {7.3, 7.31234, -30.0123, 50.77})
        CHECK(interpolate(s, x) == doctest::Approx(soliton(4, 0.9, x - 7.3) + soliton(4, 0.6, x + 30.0)).epsilon(1e-12));
    CHECK(peak_location(s, 7.0) == doctest::Approx(7.3).epsilon(1e-9));

    auto peaks = find_peaks(s, 0.3);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0] == doctest::Approx(7.3).epsilon(1e-6));
    auto f1 = fit_soliton(s, peaks[0]);
    auto f2 = fit_soliton(s, peaks[1]);
    CHECK(f1.c == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(f1.center == doctest::Approx(7.3).epsilon(1e-6));
    CHECK(f2.c == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(f2.rms < 1e-8);

    PdeState q = sample_state(g, 0.0, 0.0, [](double x) { return soliton(2, 0.7, x - 1.0); });
    auto fq = fit_soliton(q, 1.0, 2);
    CHECK(fq.c == doctest::Approx(0.7).epsilon(1e-8));

    PdeState z = sample_state(g, 0.0, 0.0, [](double) { return 0.0; });
    CHECK_THROWS_AS(fit_soliton(z, 0.0), Error);
}

TEST_CASE("monotonicity functional limits")
{
    auto g = small_grid();
    PdeState s = sample_state(g, 0.0, 0.0, [](double x) { return soliton(4, 1.0, x); });
    double full = 0.0;
    auto ux = spectral_derivative(s, 1);
    for (std::size_t i = 0; i < g.n; ++i)
        full += ux[i] * ux[i] + s.u[i] * s.u[i] - 0.4 * std::pow(s.u[i], 5);
    full *= g.h();
    CHECK(monotonicity_functional(s, 0.1, 0.5, -1e4, MonotonicityMode::mass_energy) == doctest::Approx(full).epsilon(1e-12));
    CHECK(monotonicity_functional(s, 0.1, 0.5, 1e4, MonotonicityMode::mass_energy) == doctest::Approx(0.0));
    CHECK(monotonicity_functional(s, 0.1, 0.5, -1e4, MonotonicityMode::mass_only) ==
          doctest::Approx(conserved(s).mass).epsilon(1e-12));
    // phi(0) = 1/2; the soliton is even around the cut.
    CHECK(monotonicity_functional(s, 0.1, 0.5, 0.0, MonotonicityMode::mass_only) ==
          doctest::Approx(0.5 * conserved(s).mass).epsilon(1e-10));
}

TEST_CASE("blow-up is reported")
{
    auto g = small_grid();
    PdeState s = sample_state(g, 0.0, 0.0, [](double x) { return 50.0 * std::exp(-x * x); });
    PdeSolver solver(g, 0.01, PdeOptions{});
    CHECK_THROWS_AS(solver.advance_to(s, 1.0), Error);
}
