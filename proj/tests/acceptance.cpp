#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rhosphere/eulerian.hpp"
#include "rhosphere/integrator.hpp"
#include "rhosphere/reconstruction.hpp"
#include "rhosphere/scenarios.hpp"
#include "rhosphere/validation.hpp"

namespace {

using namespace rhosphere;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

void report(int id, const Outcome& o, double elapsed) {
    std::printf("criterion %d: %s (%.1f s)%s\n", id, o.pass ? "PASS" : "FAIL", elapsed, o.detail.str().c_str());
    std::fflush(stdout);
}

double max_energy_drift(const SimulationRecord& rec) {
    double drift = 0.0;
    for (const auto& row : rec.series)
        drift = std::max(drift, std::abs(row.energy - rec.conserved.energy) / rec.conserved.energy);
    return drift;
}

/// Least-squares slope of log y against log x.
double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = std::log(h[i]), y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

constexpr scenario::PeakonPair kPeakons{1.0, 0.25, 0.75, 0.02};

Outcome criterion1() {
    Outcome o;
    const auto start = Clock::now();
    const ValidationReport r = run_validation({128, 20240601, 100, false});
    const double elapsed = seconds_since(start);
    for (const auto& c : r.checks) {
        o.require(c.pass, c.name);
        o.detail << "\n    " << c.name << ": " << c.defect << " <= " << c.tolerance;
    }
    o.require(elapsed <= 10.0, "runtime <= 10 s");
    return o;
}

Outcome criterion2() {
    Outcome o;
    const auto start = Clock::now();
    const std::size_t n = 256;
    const InitialData init = make_initial({scenario::Constant{0.5}, n});
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 10.0;
    cfg.snapshot_stride = 100;
    const SimulationRecord rec = evolve(lagrangian_initial(init.u0, init.u0x), init.mu, cfg);
    const double elapsed = seconds_since(start);
    double rho_dev = 0.0, rho_t_dev = 0.0;
    for (const auto& s : rec.snapshots) {
        rho_dev = std::max(rho_dev, s.rho.map([](double r) { return r - 1.0; }).max_abs());
        rho_t_dev = std::max(rho_t_dev, s.rho_t.max_abs());
    }
    const double k0_err = std::abs(rec.snapshots.back().k0 - 5.0);
    o.detail << " max|rho-1| = " << rho_dev << ", max|rho_t| = " << rho_t_dev << ", |k0(10)-5| = " << k0_err;
    o.require(rho_dev <= 1e-11, "rho deviation");
    o.require(rho_t_dev <= 1e-11, "rho_t deviation");
    o.require(k0_err <= 1e-10, "k0(10) = 5");
    o.require(elapsed <= 5.0, "runtime <= 5 s");
    return o;
}

Outcome criterion3() {
    Outcome o;
    const auto start = Clock::now();
    const std::size_t n = 512;
    const InitialData init = make_initial({scenario::Sine{1.0, 1}, n});
    const LagrangianState s0 = lagrangian_initial(init.u0, init.u0x);
    const double e0 = energy(s0, init.mu);
    const double e0_exact = 0.5 + 2.0 * std::numbers::pi * std::numbers::pi;
    const double e0_err = std::abs(e0 - e0_exact) / e0_exact;
    std::vector<double> dts{2e-3, 1e-3, 5e-4}, drifts;
    for (double dt : dts) {
        IntegratorConfig cfg;
        cfg.dt = dt;
        cfg.t_end = 2.0;
        cfg.snapshot_stride = 1000000;
        drifts.push_back(max_energy_drift(evolve(s0, init.mu, cfg)));
    }
    const double elapsed = seconds_since(start);
    const double order = fitted_order(dts, drifts);
    o.detail << " E(0) rel err = " << e0_err << ", drift(2e-3, 1e-3, 5e-4) = " << drifts[0] << ", " << drifts[1]
             << ", " << drifts[2] << ", order = " << order;
    o.require(e0_err <= 1e-6, "E(0) = 1/2 + 2 pi^2");
    o.require(drifts[1] <= 1e-8, "drift at dt = 1e-3");
    o.require(order >= 3.5, "drift order >= 3.5");
    o.require(elapsed <= 60.0, "runtime <= 60 s");
    return o;
}

Outcome criterion4() {
    Outcome o;
    const auto start = Clock::now();
    std::vector<double> l2;
    for (std::size_t n : {256u, 512u}) {
        const double dt = 0.5 / static_cast<double>(n);
        const InitialData init = make_initial({scenario::Sine{0.1, 1}, n});
        const EulerianTrajectory traj = eulerian_evolve(init.u0, dt, 1.0);
        IntegratorConfig cfg;
        cfg.dt = dt;
        cfg.t_end = 1.0;
        cfg.snapshot_stride = 100;
        const SimulationRecord rec = evolve(lagrangian_initial(init.u0, init.u0x), init.mu, cfg);
        o.require(!traj.blowup.has_value(), "oracle stays resolved to t = 1");
        if (traj.blowup) return o;
        l2.push_back(compare(rec, init.mu, traj, 1.0, n).l2);
    }
    const double elapsed = seconds_since(start);
    o.detail << " L2 at t = 1: n = 256 " << l2[0] << ", n = m = 512 " << l2[1];
    o.require(l2[1] <= 1e-4, "L2 <= 1e-4 at n = 512");
    o.require(l2[1] < l2[0], "decreasing under refinement");
    o.require(elapsed <= 120.0, "runtime <= 120 s");
    return o;
}

/// Peakon collision run shared by criteria 5, 7 and 8.
struct CollisionRun {
    double oracle_t = 0.0;
    std::vector<double> oracle_estimates;
    std::vector<std::string> oracle_reasons;
    bool oracle_finite = true;
    SimulationRecord record;
    double mu = 0.0;
    double t_end = 0.0;
    bool completed = false;
    std::string failure;
    double elapsed = 0.0;
};

CollisionRun collision_run() {
    CollisionRun run;
    const auto start = Clock::now();
    const double dt = 1e-4;
    for (std::size_t n : {512u, 1024u}) {
        const InitialData init = make_initial({kPeakons, n});
        const EulerianTrajectory traj = eulerian_evolve(init.u0, dt, 10.0, {kDefaultSlopeCap, kDefaultResolutionTol, 1000});
        run.oracle_finite = run.oracle_finite && traj.blowup_estimate.has_value();
        run.oracle_estimates.push_back(traj.blowup_estimate.value_or(std::nan("")));
        run.oracle_reasons.emplace_back(to_string(traj.reason));
    }
    run.oracle_t = run.oracle_estimates.back();
    const std::size_t n = 1024;
    const InitialData init = make_initial({kPeakons, n});
    run.mu = init.mu;
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 2.0 * (std::isfinite(run.oracle_t) ? run.oracle_t : 3.25);
    cfg.snapshot_stride = 100;
    run.t_end = cfg.t_end;
    try {
        run.record = evolve(lagrangian_initial(init.u0, init.u0x), init.mu, cfg);
        run.completed = true;
    } catch (const EvolveError& e) {
        run.record = e.partial();
        run.failure = e.what();
    }
    run.elapsed = seconds_since(start);
    return run;
}

Outcome criterion5(const CollisionRun& run) {
    Outcome o;
    const auto& rec = run.record;
    o.detail << " oracle blow-up estimates (n = 512, 1024): " << run.oracle_estimates[0] << " ("
             << run.oracle_reasons[0] << "), " << run.oracle_estimates[1] << " (" << run.oracle_reasons[1] << ")";
    o.require(run.oracle_finite, "(a) oracle reports a finite blow-up time");
    o.require(run.completed, "(b) integrates to 2T without failure: " + run.failure);
    if (!run.completed || rec.events.empty()) {
        o.require(!rec.events.empty(), "(b) breaking event recorded");
        return o;
    }
    const double t_event = rec.events.front().time;
    o.detail << "; Lagrangian event at " << t_event << " (" << rec.events.size() << " event(s))";
    std::vector<double> gaps;
    for (double est : run.oracle_estimates) gaps.push_back(std::abs(t_event - est) / est);
    o.detail << ", relative gaps " << gaps[0] << ", " << gaps[1];
    o.require(gaps.back() <= 0.05, "(b) event within 5% of T");
    o.require(gaps.back() <= gaps.front(), "(b) gap does not grow under refinement");
    o.require(std::abs(rec.series.back().t - run.t_end) < 1e-9, "(b) reached 2T");

    const double drift = std::abs(rec.series.back().energy - rec.conserved.energy) / rec.conserved.energy;
    o.detail << "; |E(2T)-E(0)|/E(0) = " << drift;
    o.require(drift <= 1e-6, "(c) energy at 2T");

    const std::size_t node = rec.snapshots.front().size() / 2;
    const auto& locs = rec.events.front().locations;
    const bool at_node = std::find(locs.begin(), locs.end(), node) != locs.end();
    double before = 0.0, after = 0.0;
    for (const auto& s : rec.snapshots) {
        if (s.t <= rec.events.front().t_before) before = s.rho[node];
        if (s.t >= rec.events.front().t_after && after == 0.0) after = s.rho[node];
    }
    o.detail << "; rho at collision node " << node << ": " << before << " -> " << after;
    o.require(at_node, "(d) event located at the collision node");
    o.require(before > 0.0 && after < 0.0, "(d) rho changes sign at the collision node");
    o.require(run.elapsed <= 600.0, "runtime <= 10 min");
    return o;
}

Outcome criterion6(double t_center) {
    Outcome o;
    const auto start = Clock::now();
    const std::vector<std::size_t> grids{128, 256, 512};
    std::vector<std::vector<double>> residuals(3);
    std::vector<double> hs;
    for (std::size_t n : grids) {
        const double dt = 0.25 / static_cast<double>(n);
        const InitialData init = make_initial({kPeakons, n});
        IntegratorConfig cfg;
        cfg.dt = dt;
        cfg.t_end = t_center + 0.6;
        cfg.snapshot_stride = 8;
        const SimulationRecord rec = evolve(lagrangian_initial(init.u0, init.u0x), init.mu, cfg);
        hs.push_back(1.0 / static_cast<double>(n));
        for (int k = 1; k <= 3; ++k) {
            const TestFunction f = bump_test_function(t_center, 0.5, k, 0.3 * k);
            residuals[k - 1].push_back(std::abs(weak_residual(rec, init.mu, f, n, n / 4)));
        }
    }
    for (int k = 0; k < 3; ++k) {
        const auto& r = residuals[k];
        const double order = fitted_order(hs, r);
        o.detail << "\n    phi_" << k + 1 << ": |R| = " << r[0] << ", " << r[1] << ", " << r[2]
                 << " (n = 128, 256, 512), order " << order;
        o.require(r[1] < r[0] && r[2] < r[1], "residual decreases for phi_" + std::to_string(k + 1));
        o.require(order >= 1.0, "order >= 1 for phi_" + std::to_string(k + 1));
    }
    o.require(seconds_since(start) <= 600.0, "runtime <= 10 min");
    return o;
}

double max_valid_slope(const LagrangianState& s, double mu) {
    const EulerianField f = eulerian_velocity(s, mu, s.size());
    double m = 0.0;
    for (std::size_t i = 0; i < f.u.size(); ++i)
        if (f.valid_ux[i]) m = std::max(m, std::abs(f.ux[i]));
    return m;
}

Outcome criterion7(const CollisionRun& run) {
    Outcome o;
    const auto start = Clock::now();
    const auto& rec = run.record;
    if (rec.events.empty() || !run.completed) {
        o.require(false, "peakon collision run unavailable");
        return o;
    }
    const double t_break = rec.events.front().time;
    detail::StateSampler sampler(rec);
    const auto rate_at = [&](double t) { return smoothness_diagnostic(flow_map(sampler.at(t))).rate; };
    const auto early = rate_at(0.5 * t_break);
    const auto late = rate_at(1.5 * t_break);
    o.require(early.has_value() && late.has_value(), "K decay rate above the noise floor");
    if (!early || !late) return o;
    const double change = std::abs(*late - *early) / *early;
    o.detail << " K decay rate at 0.5T = " << *early << ", at 1.5T = " << *late << " (change " << change << ")";
    o.require(change <= 0.2, "decay rates within 20%");

    const double slope0 = max_valid_slope(rec.snapshots.front(), run.mu);
    double peak = 0.0;
    for (const auto& s : rec.snapshots)
        if (std::abs(s.t - t_break) <= 0.05) peak = std::max(peak, max_valid_slope(s, run.mu));
    peak = std::max(peak, max_valid_slope(sampler.at(rec.events.front().t_before), run.mu));
    o.detail << "; max|u_x| at t = 0: " << slope0 << ", near T: " << peak << " (growth " << peak / slope0 << ")";
    o.require(peak >= 100.0 * slope0, "max|u_x| grows by >= 1e2");
    o.require(run.elapsed + seconds_since(start) <= 600.0, "runtime <= 10 min");
    return o;
}

Outcome criterion8(const CollisionRun& run) {
    Outcome o;
    if (run.record.series.empty()) {
        o.require(false, "peakon collision run unavailable");
        return o;
    }
    const GronwallReport g = gronwall_check(run.record);
    o.detail << " C = " << g.constant << ", worst ratio " << g.worst_ratio << " at t = " << g.worst_time << " over "
             << run.record.series.size() << " steps";
    o.require(g.worst_ratio >= 0.5, "ratio >= 1/2 at every step");
    return o;
}

/// Median wall time of compute_F over `reps` calls.
double time_compute_f(std::size_t n, kernel::Mode mode, int reps) {
    std::mt19937_64 rng(7);
    const RandomState rs = random_state(n, rng);
    const KernelOptions opts{mode, Quadrature::corrected};
    const GridFunction g = compute_G(rs.state, rs.mu, opts);
    std::vector<double> times;
    volatile double sink = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto start = Clock::now();
        sink = sink + compute_F(rs.state, g, opts)[0];
        times.push_back(seconds_since(start));
    }
    std::nth_element(times.begin(), times.begin() + reps / 2, times.end());
    return times[reps / 2];
}

Outcome criterion9() {
    Outcome o;
    const double fast = time_compute_f(4096, kernel::Mode::fast, 201) / time_compute_f(512, kernel::Mode::fast, 201);
    const double direct =
        time_compute_f(4096, kernel::Mode::direct, 5) / time_compute_f(512, kernel::Mode::direct, 21);
    o.detail << " time ratio n = 4096 / n = 512: fast " << fast << ", direct " << direct;
    o.require(fast <= 12.0, "fast ratio <= 12");
    o.require(direct >= 50.0, "direct ratio >= 50");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    const auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

    bool all = true;
    const auto run = [&](int id, const std::function<Outcome()>& body, double prior = 0.0) {
        if (!wanted(id)) return;
        const auto start = Clock::now() - std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(prior));
        Outcome o;
        try {
            o = body();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        report(id, o, seconds_since(start));
        all = all && o.pass;
    };

    run(1, criterion1);
    run(2, criterion2);
    run(3, criterion3);
    run(4, criterion4);

    const bool need_collision = wanted(5) || wanted(6) || wanted(7) || wanted(8);
    CollisionRun collision;
    if (need_collision) {
        try {
            collision = collision_run();
        } catch (const std::exception& e) {
            collision.failure = e.what();
        }
    }
    run(5, [&] { return criterion5(collision); }, collision.elapsed);
    const double t_center = !collision.record.events.empty() ? collision.record.events.front().time : 3.25;
    run(6, [&] { return criterion6(t_center); });
    run(7, [&] { return criterion7(collision); });
    run(8, [&] { return criterion8(collision); });
    run(9, criterion9);
    return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
