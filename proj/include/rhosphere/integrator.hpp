#ifndef RHOSPHERE_INTEGRATOR_HPP
#define RHOSPHERE_INTEGRATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rhosphere/lagrangian.hpp"

namespace rhosphere {

struct IntegratorConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    bool projection = true;
    std::size_t snapshot_stride = 100;
    double breaking_eps = 1e-6;
    /// Threshold on rho^2 for the flat-set column of the series.
    double flat_eps = 1e-6;
    KernelOptions kernel{};

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("integrator: dt must be positive");
        if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw DomainError("integrator: t_end must be >= 0");
        if (!(breaking_eps > 0.0)) throw DomainError("integrator: breaking_eps must be positive");
        if (!(flat_eps > 0.0)) throw DomainError("integrator: flat_eps must be positive");
        if (snapshot_stride == 0) throw DomainError("integrator: snapshot_stride must be >= 1");
    }
};

/// Step size heuristic 0.5 / (n max(1, sqrt(E))).
inline double default_dt(std::size_t n, double energy) {
    return 0.5 / (static_cast<double>(n) * std::max(1.0, std::sqrt(energy)));
}

struct BreakingEvent {
    double time = 0.0;
    /// Step bracket containing the first sign change of the episode.
    double t_before = 0.0;
    double t_after = 0.0;
    std::vector<std::size_t> locations;
    double min_rho = 0.0;
};

/// Per-step diagnostics.
struct SeriesRow {
    double t = 0.0;
    double energy = 0.0;
    double sphere_defect = 0.0;
    double tangency_defect = 0.0;
    double min_rho = 0.0;
    double min_abs_rho = 0.0;
    double flat_measure = 0.0;
    /// quad(G rho^2) - mu
    double mu_check = 0.0;
    /// max_x |G^2 - F|
    double max_forcing = 0.0;
    /// min_x (rho^2 + rho_t^2)
    double min_amplitude = 0.0;
};

/// Nodes that changed sign, or sit within breaking_eps of zero, during one step.
struct StepActivity {
    std::size_t row = 0;
    std::vector<std::size_t> sign_changes;
    std::vector<std::size_t> near_zero;
    /// Linearly interpolated earliest crossing time, when sign_changes is non-empty.
    double crossing_time = 0.0;
    /// Number of sign changes of rho around the circle before and after the step.
    std::size_t zeros_before = 0;
    std::size_t zeros_after = 0;
    /// True when the step creates new zeros of rho (or a first contact with
    /// zero), as opposed to an existing zero moving across a node.
    bool onset = false;
};

struct SimulationRecord {
    std::vector<LagrangianState> snapshots;
    std::vector<SeriesRow> series;
    std::vector<StepActivity> activity;
    std::vector<BreakingEvent> events;
    ConservedQuantities conserved;
    double breaking_eps = 1e-6;
    /// Stepping parameters, enough to reproduce any intermediate state.
    double dt = 0.0;
    bool projection = true;
    KernelOptions kernel{};
};

class StepFailure : public Error {
public:
    using Error::Error;
};

/// Raised by evolve; carries everything computed before the failing step.
class EvolveError : public Error {
public:
    EvolveError(const std::string& what, std::size_t step, LagrangianState last_good, SimulationRecord partial)
        : Error(what), step_(step), last_good_(std::move(last_good)), partial_(std::move(partial)) {}

    std::size_t step() const { return step_; }
    const LagrangianState& last_good() const { return last_good_; }
    const SimulationRecord& partial() const { return partial_; }

private:
    std::size_t step_;
    LagrangianState last_good_;
    SimulationRecord partial_;
};

namespace detail {

inline LagrangianState advance(const LagrangianState& s, const StateDerivative& d, double h) {
    return {s.rho + h * d.drho, s.rho_t + h * d.drho_t, s.k0 + h * d.dk0, s.t + h};
}

inline void require_finite_stage(const StateDerivative& d, int stage, double dt) {
    if (!d.drho.all_finite() || !d.drho_t.all_finite() || !std::isfinite(d.dk0))
        throw StepFailure("rk4 stage " + std::to_string(stage) + " produced non-finite values at dt = " +
                          std::to_string(dt) + "; reduce dt");
}

}  // namespace detail

/// One classical fourth-order Runge-Kutta step of (rho, rho_t, k0). Negative dt
/// integrates backwards. `first_stage`, when given, is the vector field at s.
inline LagrangianState rk4_step(const LagrangianState& s, double mu, double dt, const KernelOptions& opts = {},
                                const StateDerivative* first_stage = nullptr) {
    const auto field = [&](const LagrangianState& x, int stage) {
        try {
            auto d = vector_field(x, mu, opts);
            detail::require_finite_stage(d, stage, dt);
            return d;
        } catch (const NonFiniteError& e) {
            throw StepFailure("rk4 stage " + std::to_string(stage) + ": " + e.what() + "; reduce dt");
        }
    };
    if (first_stage != nullptr) detail::require_finite_stage(*first_stage, 1, dt);
    const auto k1 = first_stage != nullptr ? *first_stage : field(s, 1);
    const auto k2 = field(detail::advance(s, k1, 0.5 * dt), 2);
    const auto k3 = field(detail::advance(s, k2, 0.5 * dt), 3);
    const auto k4 = field(detail::advance(s, k3, dt), 4);

    const double w = dt / 6.0;
    LagrangianState out{
        s.rho + w * (k1.drho + 2.0 * k2.drho + 2.0 * k3.drho + k4.drho),
        s.rho_t + w * (k1.drho_t + 2.0 * k2.drho_t + 2.0 * k3.drho_t + k4.drho_t),
        s.k0 + w * (k1.dk0 + 2.0 * k2.dk0 + 2.0 * k3.dk0 + k4.dk0),
        s.t + dt,
    };
    if (!out.rho.all_finite() || !out.rho_t.all_finite() || !std::isfinite(out.k0))
        throw StepFailure("rk4 step produced non-finite state; reduce dt");
    return out;
}

/// Radial projection onto the unit sphere followed by removal of the normal
/// component of rho_t.
inline LagrangianState project(const LagrangianState& s) {
    const double norm = l2_norm(s.rho);
    if (!(norm > 0.0)) throw DomainError("project: rho has zero L2 norm");
    LagrangianState out = s;
    out.rho *= 1.0 / norm;
    out.rho_t -= quad(out.rho * out.rho_t) * out.rho;
    return out;
}

inline SeriesRow measure(const LagrangianState& s, double mu, const IntegratorConfig& cfg,
                         const FieldEvaluation& eval) {
    const GridFunction rho2 = s.rho * s.rho;
    const GridFunction& g = eval.g;
    const GridFunction& f = eval.f;
    SeriesRow row;
    row.t = s.t;
    row.energy = quad(rho2 * g * g + 4.0 * s.rho_t * s.rho_t);
    row.sphere_defect = std::abs(quad(rho2) - 1.0);
    row.tangency_defect = tangency_defect(s);
    row.min_rho = s.rho.min();
    row.min_abs_rho = s.rho.map([](double r) { return std::abs(r); }).min();
    row.flat_measure = flat_set_measure(s, cfg.flat_eps);
    row.mu_check = quad(g * rho2) - mu;
    row.max_forcing = (g * g - f).max_abs();
    row.min_amplitude = (rho2 + s.rho_t * s.rho_t).min();
    return row;
}

inline SeriesRow measure(const LagrangianState& s, double mu, const IntegratorConfig& cfg) {
    return measure(s, mu, cfg, evaluate_field(s, mu, cfg.kernel));
}

namespace detail {

/// Sign changes of rho between cyclically adjacent nodes.
inline std::size_t count_zeros(const GridFunction& rho) {
    const std::size_t n = rho.size();
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double a = rho[j];
        const double b = rho[(j + 1) % n];
        if ((a > 0.0 && b <= 0.0) || (a <= 0.0 && b > 0.0)) ++count;
    }
    return count;
}

inline std::optional<StepActivity> step_activity(const LagrangianState& before, const LagrangianState& after,
                                                 std::size_t row, double eps) {
    StepActivity act;
    act.row = row;
    act.crossing_time = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < after.size(); ++j) {
        const double a = before.rho[j];
        const double b = after.rho[j];
        if ((a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0)) {
            act.sign_changes.push_back(j);
            const double frac = a / (a - b);
            act.crossing_time = std::min(act.crossing_time, before.t + frac * (after.t - before.t));
        }
        if (std::abs(b) < eps) act.near_zero.push_back(j);
    }
    if (act.sign_changes.empty() && act.near_zero.empty()) return std::nullopt;
    act.zeros_before = count_zeros(before.rho);
    act.zeros_after = count_zeros(after.rho);
    act.onset = act.zeros_after > act.zeros_before ||
                (act.sign_changes.empty() && act.zeros_before == 0 && act.zeros_after == 0);
    return act;
}

}  // namespace detail

/// Breaking episodes: runs of consecutive steps in which rho acquires new
/// zeros. A zero that already exists and drifts across nodes is not a new
/// event. Each event is timed by the first crossing of its first step.
inline std::vector<BreakingEvent> detect_breaking(const SimulationRecord& record) {
    if (record.series.empty()) throw DomainError("detect_breaking: empty record");
    std::vector<BreakingEvent> events;
    const auto& act = record.activity;
    std::size_t i = 0;
    while (i < act.size()) {
        if (!act[i].onset) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < act.size() && act[j + 1].onset && act[j + 1].row == act[j].row + 1) ++j;

        const auto& lead = act[i];
        BreakingEvent ev;
        ev.t_after = record.series[lead.row].t;
        ev.t_before = lead.row > 0 ? record.series[lead.row - 1].t : ev.t_after;
        ev.time = lead.sign_changes.empty() ? ev.t_after : lead.crossing_time;
        ev.min_rho = record.series[lead.row].min_rho;
        for (std::size_t k = i; k <= j; ++k) {
            const auto& nodes = act[k].sign_changes.empty() ? act[k].near_zero : act[k].sign_changes;
            ev.locations.insert(ev.locations.end(), nodes.begin(), nodes.end());
        }
        std::sort(ev.locations.begin(), ev.locations.end());
        ev.locations.erase(std::unique(ev.locations.begin(), ev.locations.end()), ev.locations.end());
        events.push_back(std::move(ev));
        i = j + 1;
    }
    return events;
}

/// Integrates from `initial` to cfg.t_end with fixed steps (the last one
/// shortened to land on t_end). Breaking is recorded, never special-cased.
inline SimulationRecord evolve(const LagrangianState& initial, double mu, const IntegratorConfig& cfg) {
    cfg.validate();
    check_state(initial, nullptr);
    if (sphere_defect(initial) > 1e-10 || tangency_defect(initial) > 1e-10)
        throw DomainError("evolve: initial state is not on the sphere / tangent");

    SimulationRecord rec;
    rec.breaking_eps = cfg.breaking_eps;
    rec.dt = cfg.dt;
    rec.projection = cfg.projection;
    rec.kernel = cfg.kernel;
    rec.conserved = {mu, energy(initial, mu, cfg.kernel)};
    rec.snapshots.push_back(initial);
    FieldEvaluation eval = evaluate_field(initial, mu, cfg.kernel);
    rec.series.push_back(measure(initial, mu, cfg, eval));

    const double span = cfg.t_end - initial.t;
    const auto steps = static_cast<std::size_t>(std::max(0.0, std::ceil(span / cfg.dt - 1e-9)));
    LagrangianState state = initial;
    for (std::size_t step = 1; step <= steps; ++step) {
        const double h = step == steps ? cfg.t_end - state.t : cfg.dt;
        LagrangianState next;
        try {
            next = rk4_step(state, mu, h, cfg.kernel, &eval.derivative);
            if (cfg.projection) next = project(next);
            if (step == steps) next.t = cfg.t_end;
            eval = evaluate_field(next, mu, cfg.kernel);
        } catch (const Error& e) {
            rec.events = detect_breaking(rec);
            throw EvolveError("evolve: step " + std::to_string(step) + " failed: " + e.what(), step, state,
                              std::move(rec));
        }
        rec.series.push_back(measure(next, mu, cfg, eval));
        if (auto act = detail::step_activity(state, next, rec.series.size() - 1, cfg.breaking_eps))
            rec.activity.push_back(std::move(*act));
        state = std::move(next);
        if (step % cfg.snapshot_stride == 0 || step == steps) rec.snapshots.push_back(state);
    }
    rec.events = detect_breaking(rec);
    return rec;
}

/// Gronwall lower bound check along a record: returns the smallest ratio
/// min_x(rho^2 + rho_t^2)(t) / (e^{-C t} min_x(rho^2 + rho_t^2)(0)) with
/// C = max over the run of 1 + max|G^2 - F| / 2.
struct GronwallReport {
    double constant = 0.0;
    double worst_ratio = std::numeric_limits<double>::infinity();
    double worst_time = 0.0;
};

inline GronwallReport gronwall_check(const SimulationRecord& record) {
    GronwallReport rep;
    for (const auto& row : record.series) rep.constant = std::max(rep.constant, 1.0 + 0.5 * row.max_forcing);
    const double base = record.series.front().min_amplitude;
    const double t0 = record.series.front().t;
    for (const auto& row : record.series) {
        const double ratio = row.min_amplitude / (std::exp(-rep.constant * (row.t - t0)) * base);
        if (ratio < rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.worst_time = row.t;
        }
    }
    return rep;
}

}  // namespace rhosphere

#endif  // RHOSPHERE_INTEGRATOR_HPP
