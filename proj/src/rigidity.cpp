#include "rigidity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "error.hpp"
#include "foundations.hpp"
#include "parallel.hpp"

namespace kdv {

SolitonTrain SolitonTrain::make(std::vector<double> speeds, std::vector<double> shifts)
{
    require(!speeds.empty(), Errc::invalid_parameter, "a soliton train needs at least one speed");
    for (std::size_t j = 0; j < speeds.size(); ++j) {
        require(speeds[j] > 0.0 && std::isfinite(speeds[j]), Errc::invalid_parameter, "speeds must be positive");
        if (j > 0) require(speeds[j] < speeds[j - 1], Errc::invalid_parameter, "speeds must be strictly decreasing");
    }
    if (shifts.empty()) shifts.assign(speeds.size(), 0.0);
    require(shifts.size() == speeds.size(), Errc::invalid_parameter, "one shift per soliton");
    SolitonTrain t;
    t.speeds = std::move(speeds);
    t.shifts = std::move(shifts);
    return t;
}

double SolitonTrain::speed_excess() const
{
    double s = 0.0;
    for (std::size_t j = 1; j < speeds.size(); ++j) s += (1.0 - speeds[j]) * (1.0 - speeds[j]);
    return s;
}

ConservedTriple unit_soliton_invariants()
{
    const double q2 = profile::integral_Q_pow(2.0);
    ConservedTriple t;
    t.mass = q2;
    t.energy = 3.0 / 7.0 * q2 - 0.4 * profile::integral_Q_pow(5.0);
    t.integral = profile::integral_Q_pow(1.0);
    return t;
}

ConservedTriple train_invariants(const SolitonTrain& train)
{
    ConservedTriple unit = unit_soliton_invariants();
    double s_mass = 0.0, s_energy = 0.0, s_int = 0.0;
    for (double c : train.speeds) {
        s_mass += std::pow(c, 1.0 / 6.0);
        s_energy += std::pow(c, 7.0 / 6.0);
        s_int += std::pow(c, -1.0 / 6.0);
    }
    return {s_mass * unit.mass, s_energy * unit.energy, s_int * unit.integral};
}

SpeedBounds incoming_speed_bounds(const SolitonTrain& train)
{
    require(train.normalized(), Errc::precondition_unsatisfied, "speed bounds need c_1 = 1");
    require(train.speed_condition(), Errc::precondition_unsatisfied,
            "speed bounds need sum (1 - c_j)^2 < 1/16");
    SpeedBounds b;
    const double r = 1.0 - std::pow(0.75, 1.0 / 6.0);
    b.deltaN_max = std::sqrt(static_cast<double>(train.n())) / 8.0;
    b.m1 = 24.0 / 5.0 * std::pow(35.0 / 3.0, 3.0 / 8.0);
    b.m2 = 5.0 * std::pow(3.0 / 35.0, 3.0 / 8.0) * r * r;
    b.lower = std::pow(1.0 - std::sqrt(b.m2), 6);
    b.upper = std::pow(1.0 + std::sqrt(b.m2), 6);
    b.a1 = r / (1.0 + std::pow(0.75, 1.0 / 12.0));
    b.a2 = std::sqrt(5.0) * std::pow(3.0 / 35.0, 3.0 / 16.0) * r / (1.0 + std::pow(0.8, 1.0 / 6.0));
    b.a = b.a1 + b.a2;
    b.count_factor = 2.0 * b.a + b.a * b.a / std::sqrt(2.0);
    b.lower_ok = b.lower > b.universal_lower;
    b.upper_ok = b.upper < b.universal_upper;
    b.count_ok = b.count_factor < 1.0 / 8.0;
    b.count_forced = b.deltaN_max < 1.0;
    return b;
}

double f_power(double x) { return std::pow(x, 7) + 3.0 / x - 4.0 * x; }
double f_power_p(double x) { return 7.0 * std::pow(x, 6) - 3.0 / (x * x) - 4.0; }
double f_power_pp(double x) { return 42.0 * std::pow(x, 5) + 6.0 / (x * x * x); }

FBoundsReport f_bounds_check(double step)
{
    require(step > 0.0 && step <= 1e-3, Errc::invalid_parameter, "f bounds need a grid step <= 1e-3");
    FBoundsReport r;
    const double m1 = 24.0 / 5.0 * std::pow(35.0 / 3.0, 3.0 / 8.0);
    r.two_m1 = 2.0 * m1;
    r.f_at_one = f_power(1.0);
    r.fp_at_one = f_power_p(1.0);
    r.fpp_at_min = f_power_pp(std::pow(3.0 / 35.0, 1.0 / 8.0));
    r.min_lower_slack = r.min_upper_slack = r.min_fpp_slack = 1e300;
    const auto count = static_cast<std::size_t>(std::floor(1.5 / step + 1e-9));
    for (std::size_t i = 1; i <= count; ++i) {
        double x = static_cast<double>(i) * step;
        double f = f_power(x);
        double d = (1.0 - x) * (1.0 - x);
        r.min_lower_slack = std::min(r.min_lower_slack, f - m1 * d);
        if (x >= 0.75 && x <= 1.0) r.min_upper_slack = std::min(r.min_upper_slack, 24.0 * d - f);
        r.min_fpp_slack = std::min(r.min_fpp_slack, f_power_pp(x) - r.two_m1);
        ++r.points;
    }
    const double tol = 1e-12;
    r.passed = r.f_at_one == 0.0 && r.fp_at_one == 0.0 && std::fabs(r.fpp_at_min - r.two_m1) < 1e-10 &&
               r.min_lower_slack >= -tol && r.min_upper_slack >= -tol && r.min_fpp_slack >= -tol;
    return r;
}

double power_sum_residual(double x, int N, int k, double a, double b)
{
    const double m = N - k;
    double r1 = k * a + m * b - (1.0 + x);
    double r7 = k * std::pow(a, 7) + m * std::pow(b, 7) - (1.0 + std::pow(x, 7));
    double rinv = k / a + m / b - (1.0 + 1.0 / x);
    return std::max({std::fabs(r1), std::fabs(r7), std::fabs(rinv)});
}

namespace {

// Refines a bracketed local minimum of a unimodal function by golden-section search.
template <class F>
double golden_min(F&& f, double lo, double hi)
{
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::fabs(lo)); ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    return f1 < f2 ? x1 : x2;
}

}  // namespace

RigidityScan two_soliton_rigidity_scan(double x, int N_max, double grid_step, double tolerance)
{
    require(x > 0.0 && x < 1.0, Errc::invalid_parameter, "rigidity scan needs 0 < x < 1");
    require(N_max >= 2, Errc::invalid_parameter, "rigidity scan needs N_max >= 2");
    require(grid_step > 0.0 && grid_step <= 1e-3, Errc::invalid_parameter, "rigidity scan needs grid step <= 1e-3");
    RigidityScan scan;
    scan.x = x;
    const double total = 1.0 + x;

    // N = 2: b is fixed by the linear equation; scan the seventh-power equation in a.
    {
        auto h = [&](double a) { return std::pow(a, 7) + std::pow(total - a, 7) - 1.0 - std::pow(x, 7); };
        auto hp = [&](double a) { return 7.0 * (std::pow(a, 6) - std::pow(total - a, 6)); };
        const double lo = 0.5 * total;
        const auto steps = static_cast<std::size_t>(std::ceil((total - lo) / grid_step));
        double best = 1e300;
        std::vector<double> roots;
        double prev_a = lo, prev_h = h(lo);
        for (std::size_t i = 1; i <= steps; ++i) {
            double a = std::min(total, lo + static_cast<double>(i) * grid_step);
            double ha = h(a);
            if (ha == 0.0 || (prev_h < 0.0) != (ha < 0.0)) {
                // Bisection to isolate, then Newton to polish.
                double l = prev_a, r = a;
                double root = ha == 0.0 ? a : 0.5 * (l + r);
                if (ha != 0.0) {
                    for (int it = 0; it < 60; ++it) {
                        double m = 0.5 * (l + r);
                        if ((h(m) < 0.0) == (prev_h < 0.0)) l = m;
                        else r = m;
                    }
                    root = 0.5 * (l + r);
                    for (int it = 0; it < 3; ++it) {
                        double d = hp(root);
                        if (d == 0.0) break;
                        root -= h(root) / d;
                    }
                }
                roots.push_back(root);
            }
            prev_a = a;
            prev_h = ha;
        }
        for (double a : roots) {
            double b = total - a;
            if (!(b > 0.0 && b < a)) continue;
            double res = power_sum_residual(x, 2, 1, a, b);
            best = std::min(best, res);
            if (res < tolerance) scan.solutions.push_back({2, 1, a, b, res});
        }
        scan.min_residual.push_back(best);
    }

    // N >= 3: the Lagrange structure leaves two values, k copies of a and N - k of b.
    for (int N = 3; N <= N_max; ++N) {
        double best = 1e300;
        for (int k = 1; k < N; ++k) {
            auto value_a = [&](double b) { return (total - (N - k) * b) / k; };
            auto res = [&](double b) { return power_sum_residual(x, N, k, value_a(b), b); };
            const double hi = total / N;  // b < a
            const auto steps = static_cast<std::size_t>(std::floor(hi / grid_step));
            std::vector<double> r(steps + 1);
            for (std::size_t i = 1; i < steps; ++i) r[i] = res(static_cast<double>(i) * grid_step);
            for (std::size_t i = 1; i < steps; ++i) {
                bool local = (i == 1 || r[i] <= r[i - 1]) && (i + 1 == steps || r[i] <= r[i + 1]);
                if (!local) continue;
                double b = golden_min(res, std::max(1e-12, (static_cast<double>(i) - 1.0) * grid_step),
                                      std::min(hi, (static_cast<double>(i) + 1.0) * grid_step));
                double v = res(b);
                best = std::min(best, v);
                if (v < tolerance && value_a(b) > b) scan.solutions.push_back({N, k, value_a(b), b, v});
            }
        }
        scan.min_residual.push_back(best);
    }
    return scan;
}

SpeedGeometry speed_geometry(const SolitonTrain& train, double K0)
{
    require(train.n() >= 2, Errc::invalid_parameter, "speed geometry needs at least two solitons");
    const auto& c = train.speeds;
    SpeedGeometry g;
    g.sigma0 = 1e300;
    for (std::size_t j = 0; j + 1 < c.size(); ++j) {
        double s = std::sqrt(c[j + 1]) * (c[j] - c[j + 1]);
        if (s < g.sigma0) {
            g.sigma0 = s;
            g.j0 = j + 1;
        }
    }
    double cj = c[g.j0 - 1], cn = c[g.j0];
    g.gamma0 = std::sqrt(cj - 0.75 * cn) - 0.5 * std::sqrt(cn);
    require(g.gamma0 > 0.0, Errc::invalid_parameter, "gamma0 must be positive");
    g.K0 = K0;
    g.x0_slope = g.sigma0 / g.gamma0 + cj;
    return g;
}

ClaimBMReport claim_bm_check(const SolitonTrain& train)
{
    ClaimBMReport r;
    r.applicable = train.n() >= 2 && train.normalized() && train.speed_excess() <= 1.0 / 16.0;
    if (!r.applicable) return r;
    SpeedGeometry g = speed_geometry(train);
    double cj = train.speeds[g.j0 - 1], cn = train.speeds[g.j0];
    double ratio = g.sigma0 / g.gamma0;
    r.first_lhs = ratio;
    r.first_rhs = std::sqrt(cn * cj);
    r.second_lhs = 4.0 * g.sigma0 / (ratio - (1.0 - cj));
    double m = std::max(0.8, r.second_lhs);
    r.third_lhs = ratio + cj - m * m;
    r.third_rhs = 5.0 * g.sigma0;
    r.gsz_residual = std::fabs(g.sigma0 - (cj * g.gamma0 - g.gamma0 * g.gamma0 * g.gamma0));
    r.gamma0_bound = std::sqrt(cj) / 4.0 * (std::sqrt(7.0) - std::sqrt(3.0));
    r.rescaled_gamma0 = g.gamma0 / std::sqrt(cj);
    r.first = r.first_lhs >= r.first_rhs * (1.0 - 1e-14);
    r.second = r.second_lhs > 0.0 && r.second_lhs < 1.0;
    r.third = r.third_lhs > r.third_rhs;
    r.gamma0_in_bound = g.gamma0 > 0.0 && g.gamma0 < r.gamma0_bound;
    r.rescaled_ok = g.j0 < 2 || r.rescaled_gamma0 <= 0.15;
    r.slope_ok = g.x0_slope > 1.5;
    return r;
}

SolitonTrain random_admissible_train(std::uint64_t seed, int max_n)
{
    require(max_n >= 2, Errc::invalid_parameter, "random trains need max_n >= 2");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> count(2, max_n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    const int n = count(rng);
    for (;;) {
        // Gaps uniform on the simplex, scaled by a uniform total; reject outside the constraint.
        std::vector<double> gaps(static_cast<std::size_t>(n - 1));
        for (double& g : gaps) g = expo(rng);
        double sum = std::accumulate(gaps.begin(), gaps.end(), 0.0);
        double total = 0.5 * unit(rng);
        std::vector<double> c{1.0};
        for (double g : gaps) c.push_back(c.back() - total * g / sum);
        bool ok = c.back() > 0.0 && total > 0.0;
        for (std::size_t j = 1; ok && j < c.size(); ++j) ok = c[j] < c[j - 1];
        double excess = 0.0;
        for (std::size_t j = 1; j < c.size(); ++j) excess += (1.0 - c[j]) * (1.0 - c[j]);
        if (ok && excess <= 1.0 / 16.0) return SolitonTrain::make(c);
    }
}

MonteCarloReport claim_bm_monte_carlo(std::size_t samples, std::uint64_t seed, int max_n, int threads)
{
    std::vector<SolitonTrain> trains(samples);
    std::vector<ClaimBMReport> reports(samples);
    parallel_for(samples, threads, [&](std::size_t i) {
        trains[i] = random_admissible_train(seed + i, max_n);
        reports[i] = claim_bm_check(trains[i]);
    });
    MonteCarloReport mc;
    mc.samples = samples;
    mc.min_first_slack = mc.min_second_slack = mc.min_third_slack = 1e300;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto& r = reports[i];
        mc.min_first_slack = std::min(mc.min_first_slack, r.first_lhs - r.first_rhs);
        mc.min_second_slack = std::min(mc.min_second_slack, 1.0 - r.second_lhs);
        mc.min_third_slack = std::min(mc.min_third_slack, r.third_lhs - r.third_rhs);
        if (speed_geometry(trains[i]).j0 >= 2) ++mc.j0_above_one;
        if (!r.applicable || !r.all()) {
            ++mc.violations;
            std::ostringstream os;
            os << "train";
            for (double c : trains[i].speeds) os << ' ' << c;
            mc.violating.push_back(os.str());
        }
    }
    return mc;
}

ElementaryBoundsReport elementary_bounds_check(double step)
{
    require(step > 0.0 && step <= 1e-2, Errc::invalid_parameter, "bounds check needs step <= 1e-2");
    ElementaryBoundsReport r;
    r.min_gc_lower_slack = r.min_gc_upper_slack = r.min_bb_slack = 1e300;
    const auto count = static_cast<std::size_t>(std::llround(1.0 / step));
    for (std::size_t i = 0; i <= count; ++i) {
        double c = std::min(1.0, static_cast<double>(i) * step);
        double root = std::sqrt(c);
        double s = std::sqrt(1.0 - 0.75 * c);
        double gamma = s - 0.5 * root;
        r.min_gc_lower_slack = std::min(r.min_gc_lower_slack, gamma - (1.0 - root));
        r.min_gc_upper_slack = std::min(r.min_gc_upper_slack, (1.0 - c) - gamma);
        r.min_bb_slack = std::min(r.min_bb_slack, s - (1.0 - 0.5 * root));
        ++r.points;
    }
    const double tol = 1e-15;
    r.passed = r.min_gc_lower_slack >= -tol && r.min_gc_upper_slack >= -tol && r.min_bb_slack >= -tol;
    return r;
}

}  // namespace kdv
