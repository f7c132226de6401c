#ifndef RHOSPHERE_EULERIAN_HPP
#define RHOSPHERE_EULERIAN_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rhosphere/grid.hpp"
#include "rhosphere/integrator.hpp"
#include "rhosphere/reconstruction.hpp"

namespace rhosphere {

struct EulerianState {
    GridFunction u;
    double t = 0.0;
};

inline constexpr double kDefaultSlopeCap = 1e3;
/// Largest tolerated share of the H^1 energy in the upper half of the
/// retained band n/6 < k <= n/3.
inline constexpr double kDefaultResolutionTol = 1e-2;

namespace detail {

/// Zeroes every mode above n/3.
inline void truncate_two_thirds(std::vector<std::complex<double>>& c, std::size_t n) {
    for (std::size_t k = n / 3 + 1; k < c.size(); ++k) c[k] = 0.0;
}

inline GridFunction dealiased(const GridFunction& w) {
    const std::size_t n = w.size();
    const auto& plan = fft::plan_for(n);
    auto c = plan.forward(w.values());
    truncate_two_thirds(c, n);
    return GridFunction(plan.backward(c));
}

}  // namespace detail

/// Share of the H^1 energy of u carried by modes n/6 < k <= n/3.
inline double spectral_tail(const GridFunction& u) {
    const std::size_t n = u.size();
    const auto c = fft::plan_for(n).forward(u.values());
    double all = 0.0, tail = 0.0;
    for (std::size_t k = 1; k <= n / 3; ++k) {
        const double kk = detail::two_pi * static_cast<double>(k);
        const double e = (1.0 + kk * kk) * std::norm(c[k]);
        all += e;
        if (k > n / 6) tail += e;
    }
    return all > 0.0 ? tail / all : 0.0;
}

/// u_t = -u u_x - d/dx Lambda^{-1}(u^2 + u_x^2 / 2), spectral in x. The field
/// and both quadratic terms are truncated to |k| <= n/3.
inline GridFunction eulerian_rhs(const GridFunction& u) {
    u.require_finite("eulerian_rhs");
    const std::size_t n = u.size();
    const auto& plan = fft::plan_for(n);
    const GridFunction uf = detail::dealiased(u);
    const GridFunction ux = deriv(uf, Derivative::spectral);

    auto adv = plan.forward((uf * ux).values());
    auto src = plan.forward((uf * uf + 0.5 * ux * ux).values());
    std::vector<std::complex<double>> out(adv.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double kk = detail::two_pi * static_cast<double>(k);
        out[k] = -adv[k] - std::complex<double>(0.0, kk) * src[k] / (1.0 + kk * kk);
    }
    detail::truncate_two_thirds(out, n);
    out[n / 2] = 0.0;
    return GridFunction(plan.backward(out));
}

enum class BlowupReason { none, slope_cap, unresolved, non_finite };

inline const char* to_string(BlowupReason r) {
    switch (r) {
        case BlowupReason::slope_cap: return "slope_cap";
        case BlowupReason::unresolved: return "unresolved";
        case BlowupReason::non_finite: return "non_finite";
        default: return "none";
    }
}

struct EulerianOptions {
    double slope_cap = kDefaultSlopeCap;
    double resolution_tol = kDefaultResolutionTol;
    /// Keep every stride-th state (the first and last are always kept).
    std::size_t stride = 1;
};

struct EulerianTrajectory {
    std::vector<EulerianState> states;
    /// Time and max |u_x| after every accepted step, starting at t = 0.
    std::vector<double> times;
    std::vector<double> max_slope;
    /// Time at which the run stopped on a blow-up criterion.
    std::optional<double> blowup;
    /// blowup + 2 / max|u_x|: the finite time at which u_x' = -u_x^2 / 2,
    /// the leading balance at a steepening point, would reach -infinity.
    std::optional<double> blowup_estimate;
    BlowupReason reason = BlowupReason::none;
    EulerianOptions options{};
};

/// Fixed-step RK4. The run stops as soon as max |u_x| exceeds the slope cap,
/// the H^1 spectral tail exceeds resolution_tol, or a step produces
/// non-finite values.
inline EulerianTrajectory eulerian_evolve(const GridFunction& u0, double dt, double t_end,
                                          const EulerianOptions& opts = {}) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("eulerian_evolve: dt must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw DomainError("eulerian_evolve: t_end must be >= 0");
    if (!(opts.slope_cap > 0.0)) throw DomainError("eulerian_evolve: slope_cap must be positive");
    if (!(opts.resolution_tol > 0.0)) throw DomainError("eulerian_evolve: resolution_tol must be positive");
    if (opts.stride == 0) throw DomainError("eulerian_evolve: stride must be >= 1");
    u0.require_finite("eulerian_evolve");

    EulerianTrajectory traj;
    traj.options = opts;
    EulerianState s{u0, 0.0};
    traj.states.push_back(s);
    traj.times.push_back(0.0);
    traj.max_slope.push_back(deriv(u0).max_abs());

    const auto stop = [&](BlowupReason reason, double slope) {
        traj.reason = reason;
        traj.blowup = s.t;
        if (slope > 0.0 && std::isfinite(slope)) traj.blowup_estimate = s.t + 2.0 / slope;
    };
    if (spectral_tail(u0) > opts.resolution_tol) {
        stop(BlowupReason::unresolved, traj.max_slope.back());
        return traj;
    }

    const auto steps = static_cast<std::size_t>(std::max(0.0, std::ceil(t_end / dt - 1e-9)));
    for (std::size_t step = 1; step <= steps; ++step) {
        const double h = step == steps ? t_end - s.t : dt;
        std::optional<GridFunction> next;
        try {
            const GridFunction k1 = eulerian_rhs(s.u);
            const GridFunction k2 = eulerian_rhs(s.u + 0.5 * h * k1);
            const GridFunction k3 = eulerian_rhs(s.u + 0.5 * h * k2);
            const GridFunction k4 = eulerian_rhs(s.u + h * k3);
            next = s.u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } catch (const Error&) {
        }
        if (!next || !next->all_finite()) {
            stop(BlowupReason::non_finite, traj.max_slope.back());
            break;
        }
        s = {std::move(*next), step == steps ? t_end : s.t + h};
        const double slope = deriv(s.u).max_abs();
        traj.times.push_back(s.t);
        traj.max_slope.push_back(slope);
        if (slope > opts.slope_cap || spectral_tail(s.u) > opts.resolution_tol) {
            stop(slope > opts.slope_cap ? BlowupReason::slope_cap : BlowupReason::unresolved, slope);
            traj.states.push_back(s);
            break;
        }
        if (step % opts.stride == 0 || step == steps) traj.states.push_back(s);
    }
    return traj;
}

/// Trigonometric resampling of w onto m nodes.
inline GridFunction fourier_resample(const GridFunction& w, std::size_t m) {
    const std::size_t n = w.size();
    if (m == n) return w;
    const auto c = fft::plan_for(n).forward(w.values());
    std::vector<std::complex<double>> d(m / 2 + 1);
    const std::size_t keep = std::min(n, m) / 2;
    const double scale = static_cast<double>(m) / static_cast<double>(n);
    for (std::size_t k = 0; k <= keep; ++k) d[k] = c[k] * scale;
    // The coarse grid's Nyquist mode is a cosine: split it over +-k when
    // refining, fold +-k onto it when coarsening.
    if (m > n) d[keep] *= 0.5;
    if (m < n) d[keep] = {2.0 * d[keep].real(), 0.0};
    return GridFunction(fft::plan_for(m).backward(d));
}

/// Oracle field at time t, linear in time between stored states.
inline GridFunction oracle_at(const EulerianTrajectory& traj, double t) {
    const auto& st = traj.states;
    if (st.empty()) throw DomainError("compare: empty oracle trajectory");
    const double tol = 1e-12 * std::max(1.0, std::abs(t));
    if (t < st.front().t - tol || t > st.back().t + tol)
        throw DomainError("compare: t = " + std::to_string(t) + " lies outside the oracle trajectory");
    if (traj.blowup && t >= *traj.blowup - tol)
        throw DomainError("compare: t = " + std::to_string(t) + " is at or past the oracle blow-up");
    std::size_t i = 0;
    while (i + 1 < st.size() && st[i + 1].t <= t + tol) ++i;
    if (std::abs(st[i].t - t) <= tol || i + 1 == st.size()) return st[i].u;
    const double a = (t - st[i].t) / (st[i + 1].t - st[i].t);
    return (1.0 - a) * st[i].u + a * st[i + 1].u;
}

struct CompareResult {
    double l2 = 0.0;
    double linf = 0.0;
};

/// Difference between the reconstructed Lagrangian field and the oracle on
/// m nodes. The Lagrangian state at t is re-integrated from the nearest
/// earlier snapshot; the oracle is resampled in Fourier space.
inline CompareResult compare(const SimulationRecord& record, double mu, const EulerianTrajectory& traj, double t,
                             std::size_t m) {
    if (record.snapshots.empty()) throw DomainError("compare: empty record");
    const double tol = 1e-12 * std::max(1.0, std::abs(t));
    if (t < record.snapshots.front().t - tol || t > record.snapshots.back().t + tol)
        throw DomainError("compare: t = " + std::to_string(t) + " lies outside the Lagrangian record");
    const GridFunction oracle = fourier_resample(oracle_at(traj, t), m);
    detail::StateSampler sampler(record);
    const EulerianField field = eulerian_velocity(sampler.at(t), mu, m, kDefaultFlatEps, record.kernel);
    const GridFunction diff = field.u - oracle;
    return {l2_norm(diff), diff.max_abs()};
}

}  // namespace rhosphere

#endif  // RHOSPHERE_EULERIAN_HPP
