#ifndef RHOSPHERE_RECONSTRUCTION_HPP
#define RHOSPHERE_RECONSTRUCTION_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "rhosphere/grid.hpp"
#include "rhosphere/helmholtz.hpp"
#include "rhosphere/integrator.hpp"
#include "rhosphere/lagrangian.hpp"

namespace rhosphere {

/// Relative threshold on rho^2 below which a node counts as flat.
inline constexpr double kDefaultFlatEps = 1e-8;

/// Maximal run of nodes [first, last] (cyclic, first may exceed last when the
/// run wraps through x = 0) on which rho^2 is below threshold.
struct FlatInterval {
    std::size_t first = 0;
    std::size_t last = 0;
};

/// Degree-one lift K(x_j) = k0 + P(x_j) of the particle map, P = cumint(rho^2).
struct FlowMap {
    std::vector<double> k;
    std::vector<FlatInterval> flat_intervals;
    std::vector<bool> flat;
    /// K_x = rho^2 at the nodes, used for Hermite refinement of the inverse.
    std::vector<double> slope;
    double k0 = 0.0;
    /// K(1) - K(0), equal to quad(rho^2).
    double period = 1.0;

    std::size_t size() const { return k.size(); }
};

inline FlowMap flow_map(const LagrangianState& s, double flat_eps = kDefaultFlatEps,
                        Quadrature rule = Quadrature::trapezoid) {
    check_state(s, nullptr);
    const std::size_t n = s.size();
    const GridFunction rho2 = s.rho * s.rho;
    GridFunction p = cumint(rho2, rule);
    // Monotone envelope of the cumulative integral.
    for (std::size_t j = 1; j < n; ++j) p[j] = std::max(p[j], p[j - 1]);

    FlowMap map;
    map.k0 = s.k0;
    map.period = quad(rho2);
    map.k.resize(n);
    map.slope.assign(rho2.begin(), rho2.end());
    for (std::size_t j = 0; j < n; ++j) map.k[j] = s.k0 + p[j];

    const double threshold = flat_eps * rho2.max();
    map.flat.resize(n);
    for (std::size_t j = 0; j < n; ++j) map.flat[j] = rho2[j] < threshold;

    // Collect runs, then merge a run ending at n-1 with one starting at 0.
    std::vector<FlatInterval> runs;
    for (std::size_t j = 0; j < n;) {
        if (!map.flat[j]) {
            ++j;
            continue;
        }
        std::size_t e = j;
        while (e + 1 < n && map.flat[e + 1]) ++e;
        runs.push_back({j, e});
        j = e + 1;
    }
    if (runs.size() > 1 && runs.front().first == 0 && runs.back().last == n - 1) {
        runs.front().first = runs.back().first;
        runs.pop_back();
    }
    map.flat_intervals = std::move(runs);
    return map;
}

namespace detail {

inline double wrap_unit(double x) {
    double r = std::fmod(x, 1.0);
    if (r < 0.0) r += 1.0;
    return r >= 1.0 ? 0.0 : r;
}

/// Lifted midpoint label of a flat run; wrapping runs give a value past 1.
inline double flat_midpoint(const FlatInterval& f, std::size_t n) {
    const double h = 1.0 / static_cast<double>(n);
    const double a = static_cast<double>(f.first) * h;
    double b = static_cast<double>(f.last) * h;
    if (f.last < f.first) b += 1.0;
    return 0.5 * (a + b);
}

/// K at node j of the lifted sequence, j in [0, n].
inline double lifted(const FlowMap& m, std::size_t j) {
    return j < m.size() ? m.k[j] : m.k[0] + m.period;
}

struct Location {
    /// Number of whole periods between y and [K(0), K(0) + period).
    double shift = 0.0;
    /// Lifted label with K(x) = y - shift * period.
    double x = 0.0;
};

inline Location locate(const FlowMap& m, double y) {
    const std::size_t n = m.size();
    const double h = 1.0 / static_cast<double>(n);
    const double base = m.k[0];
    Location loc;
    loc.shift = std::floor((y - base) / m.period);
    double r = y - base - loc.shift * m.period;
    if (r >= m.period) {
        r -= m.period;
        loc.shift += 1.0;
    }
    const double target = base + std::max(r, 0.0);

    const double tol = 1e-12 * std::max(1.0, std::abs(target));
    for (const auto& f : m.flat_intervals) {
        const double lo = m.k[f.first];
        const double hi = f.last < f.first ? m.k[f.last] + m.period : m.k[f.last];
        const double mid = flat_midpoint(f, n);
        if (target >= lo - tol && target <= hi + tol) {
            loc.x = mid;
            return loc;
        }
        if (target + m.period >= lo - tol && target + m.period <= hi + tol) {
            loc.x = mid - 1.0;
            return loc;
        }
    }

    // Largest j in [0, n-1] with k_j <= target.
    const auto it = std::upper_bound(m.k.begin(), m.k.end(), target);
    const std::size_t j = it == m.k.begin() ? 0 : static_cast<std::size_t>(it - m.k.begin()) - 1;
    const double ka = lifted(m, j);
    const double kb = lifted(m, j + 1);
    const double dk = kb - ka;
    if (!(dk > 0.0)) {
        loc.x = static_cast<double>(j) * h;
        return loc;
    }
    double s = std::clamp((target - ka) / dk, 0.0, 1.0);

    // Refine on the cubic Hermite interpolant with nodal slopes K_x = rho^2.
    const double ma = m.slope[j] * h;
    const double mb = m.slope[(j + 1) % n] * h;
    const auto cubic = [&](double t) {
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * ka + (t3 - 2 * t2 + t) * ma + (-2 * t3 + 3 * t2) * kb + (t3 - t2) * mb;
    };
    const auto dcubic = [&](double t) {
        const double t2 = t * t;
        return (6 * t2 - 6 * t) * ka + (3 * t2 - 4 * t + 1) * ma + (-6 * t2 + 6 * t) * kb + (3 * t2 - 2 * t) * mb;
    };
    double lo = 0.0, hi = 1.0;
    for (int iter = 0; iter < 60; ++iter) {
        const double f = cubic(s) - target;
        if (f == 0.0) break;
        if (f > 0.0)
            hi = s;
        else
            lo = s;
        const double d = dcubic(s);
        double next = d > 0.0 ? s - f / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - s) <= 1e-17) break;
        s = next;
    }
    loc.x = (static_cast<double>(j) + s) * h;
    return loc;
}

}  // namespace detail

/// x in [0, 1) with K(x) = y mod 1. The panel comes from a binary search of
/// the monotone samples and a linear first guess; the root is then polished
/// on the cubic Hermite interpolant of K (nodal slopes rho^2) without leaving
/// the panel. A y on the image of a flat interval returns the interval's
/// midpoint.
inline double invert_flow(const FlowMap& m, double y) { return detail::wrap_unit(detail::locate(m, y).x); }

namespace detail {

/// Periodic four-point Lagrange interpolation of nodal data at x.
inline double interp_cubic(const GridFunction& f, double x) {
    const std::size_t n = f.size();
    const double pos = wrap_unit(x) * static_cast<double>(n);
    const auto j = static_cast<std::ptrdiff_t>(std::floor(pos));
    const double t = pos - static_cast<double>(j);
    const auto at = [&](std::ptrdiff_t i) {
        const auto nn = static_cast<std::ptrdiff_t>(n);
        return f[static_cast<std::size_t>(((i % nn) + nn) % nn)];
    };
    const double fm = at(j - 1), f0 = at(j), f1 = at(j + 1), f2 = at(j + 2);
    return -t * (t - 1) * (t - 2) / 6.0 * fm + (t + 1) * (t - 1) * (t - 2) / 2.0 * f0 -
           (t + 1) * t * (t - 2) / 2.0 * f1 + (t + 1) * t * (t - 1) / 6.0 * f2;
}

/// Cubic Hermite interpolation of nodal values with nodal derivatives.
inline double interp_hermite(const GridFunction& f, const GridFunction& df, double x) {
    const std::size_t n = f.size();
    const double h = 1.0 / static_cast<double>(n);
    const double pos = wrap_unit(x) * static_cast<double>(n);
    const auto j = std::min(static_cast<std::size_t>(std::floor(pos)), n - 1);
    const std::size_t j1 = (j + 1) % n;
    const double t = pos - static_cast<double>(j);
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f[j] + (t3 - 2 * t2 + t) * h * df[j] + (-2 * t3 + 3 * t2) * f[j1] +
           (t3 - t2) * h * df[j1];
}

}  // namespace detail

/// Reconstructed Eulerian velocity on m uniform nodes.
struct EulerianField {
    GridFunction u;
    GridFunction ux;
    std::vector<bool> valid_ux;
    double t = 0.0;
    /// Magnitude written into ux where valid_ux is false.
    double clamp = 0.0;
};

/// u(K(x)) = G(x) and u_x(K(x)) = 2 rho_t / rho. Where rho^2 falls below
/// flat_eps * max rho^2 the slope is flagged invalid and set to
/// +-1/flat_eps with the sign of rho_t / rho.
inline EulerianField eulerian_velocity(const LagrangianState& s, double mu, std::size_t m,
                                       double flat_eps = kDefaultFlatEps, const KernelOptions& opts = {}) {
    const FlowMap map = flow_map(s, flat_eps, opts.quadrature);
    const GridFunction g = compute_G(s, mu, opts);
    const GridFunction gx = 2.0 * s.rho * s.rho_t;
    const double threshold = flat_eps * (s.rho * s.rho).max();

    EulerianField field{GridFunction(m), GridFunction(m), std::vector<bool>(m, true), s.t, 1.0 / flat_eps};
    for (std::size_t i = 0; i < m; ++i) {
        const double y = static_cast<double>(i) / static_cast<double>(m);
        const double x = invert_flow(map, y);
        field.u[i] = detail::interp_hermite(g, gx, x);
        const double r = detail::interp_cubic(s.rho, x);
        const double rt = detail::interp_cubic(s.rho_t, x);
        if (r * r >= threshold) {
            field.ux[i] = 2.0 * rt / r;
        } else {
            field.valid_ux[i] = false;
            field.ux[i] = std::copysign(field.clamp, rt * r == 0.0 ? -1.0 : rt / r);
        }
    }
    return field;
}

/// Lagrangian-form H^1 energy int rho^2 G^2 + 4 rho_t^2, finite through breaking.
inline double eulerian_energy(const LagrangianState& s, double mu, const KernelOptions& opts = {}) {
    return energy(s, mu, opts);
}

/// int u^2 + u_x^2 over the Eulerian grid, valid nodes only.
inline double eulerian_grid_energy(const EulerianField& f) {
    double sum = 0.0;
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        const double ux = f.valid_ux[i] ? f.ux[i] : 0.0;
        sum += f.u[i] * f.u[i] + ux * ux;
    }
    return sum / static_cast<double>(f.u.size());
}

/// Energy density u^2 + u_x^2 / 2 on m Eulerian cells, as the pushforward of
/// rho^2 G^2 + 2 rho_t^2 dx under K. Each value is m times the mass of the
/// cell [y_i - 1/2m, y_i + 1/2m). Energy concentrated at a point at
/// breaking stays in the cell containing it.
inline GridFunction energy_density(const LagrangianState& s, double mu, std::size_t m,
                                   double flat_eps = kDefaultFlatEps, const KernelOptions& opts = {}) {
    const FlowMap map = flow_map(s, flat_eps, opts.quadrature);
    const GridFunction g = compute_G(s, mu, opts);
    const GridFunction w = kernel_weight(s, g);
    const GridFunction cum = cumint(w, opts.quadrature);
    const double total = quad(w);

    // Lifted cumulative mass W(x), W(x + 1) = W(x) + total, Hermite in x.
    const auto mass_at = [&](double x) {
        const double whole = std::floor(x);
        const double frac = x - whole;
        const std::size_t n = w.size();
        const double pos = frac * static_cast<double>(n);
        const auto j = std::min(static_cast<std::size_t>(pos), n - 1);
        const double t = pos - static_cast<double>(j);
        const double h = 1.0 / static_cast<double>(n);
        const double wa = cum[j];
        const double wb = j + 1 < n ? cum[j + 1] : total;
        const double t2 = t * t, t3 = t2 * t;
        const double v = (2 * t3 - 3 * t2 + 1) * wa + (t3 - 2 * t2 + t) * h * w[j] + (-2 * t3 + 3 * t2) * wb +
                         (t3 - t2) * h * w[(j + 1) % n];
        return whole * total + v;
    };
    const auto mass_below = [&](double y) {
        const auto loc = detail::locate(map, y);
        return loc.shift * total + mass_at(loc.x);
    };

    GridFunction q(m);
    const double dm = 1.0 / static_cast<double>(m);
    double prev = mass_below(-0.5 * dm);
    for (std::size_t i = 0; i < m; ++i) {
        const double next = mass_below((static_cast<double>(i) + 0.5) * dm);
        q[i] = std::max(next - prev, 0.0) * static_cast<double>(m);
        prev = next;
    }
    return q;
}

/// Smooth space-time test function, periodic in x, supported in
/// [t_min, t_max] in time.
struct TestFunction {
    std::function<double(double, double)> phi;
    std::function<double(double, double)> phi_t;
    std::function<double(double, double)> phi_x;
    double t_min = 0.0;
    double t_max = 0.0;
};

/// b(s) cos(2 pi k x + phase) with b(s) = exp(-1 / (1 - s^2)) on |s| < 1 and
/// s = (t - center) / half_width.
inline TestFunction bump_test_function(double center, double half_width, int k, double phase = 0.0) {
    if (!(half_width > 0.0)) throw DomainError("bump_test_function: half_width must be positive");
    const double w = detail::two_pi * static_cast<double>(k);
    const auto bump = [=](double t) {
        const double s = (t - center) / half_width;
        return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0;
    };
    const auto dbump = [=](double t) {
        const double s = (t - center) / half_width;
        if (std::abs(s) >= 1.0) return 0.0;
        const double d = 1.0 - s * s;
        return std::exp(-1.0 / d) * (-2.0 * s / (d * d)) / half_width;
    };
    TestFunction f;
    f.phi = [=](double t, double x) { return bump(t) * std::cos(w * x + phase); };
    f.phi_t = [=](double t, double x) { return dbump(t) * std::cos(w * x + phase); };
    f.phi_x = [=](double t, double x) { return -w * bump(t) * std::sin(w * x + phase); };
    f.t_min = center - half_width;
    f.t_max = center + half_width;
    return f;
}

namespace detail {

inline void validate_test_function(const TestFunction& f, double t_begin, double t_end) {
    if (!f.phi || !f.phi_t || !f.phi_x) throw DomainError("weak_residual: test function is incomplete");
    if (!(f.t_min < f.t_max)) throw DomainError("weak_residual: empty time support");
    if (!(f.t_min >= t_begin && f.t_max <= t_end))
        throw DomainError("weak_residual: time support must lie inside the recorded interval");
    constexpr int probes = 16;
    for (int i = 0; i <= probes; ++i) {
        const double t = f.t_min + (f.t_max - f.t_min) * i / probes;
        for (double x : {0.0, 0.125, 0.3, 0.5, 0.77}) {
            const double scale = 1e-10 * (1.0 + std::abs(f.phi(t, x)));
            if (std::abs(f.phi(t, x) - f.phi(t, x + 1.0)) > scale ||
                std::abs(f.phi_x(t, x) - f.phi_x(t, x + 1.0)) > 1e-10 * (1.0 + std::abs(f.phi_x(t, x))))
                throw DomainError("weak_residual: test function is not periodic in x");
        }
    }
    for (double x : {0.0, 0.25, 0.5, 0.75}) {
        for (double t : {f.t_min, f.t_max})
            if (std::abs(f.phi(t, x)) > 1e-14 || std::abs(f.phi_t(t, x)) > 1e-12)
                throw DomainError("weak_residual: test function is not compactly supported in time");
    }
}

/// Re-creates the states of a record at increasing times by stepping from
/// the snapshots with the record's own step size and options.
class StateSampler {
public:
    explicit StateSampler(const SimulationRecord& rec) : rec_(rec) {
        if (rec.snapshots.empty()) throw DomainError("weak_residual: record has no snapshots");
        if (!(rec.dt > 0.0)) throw DomainError("weak_residual: record lacks its step size");
    }

    LagrangianState at(double t) {
        const auto& snaps = rec_.snapshots;
        std::size_t idx = 0;
        for (std::size_t i = 0; i < snaps.size(); ++i)
            if (snaps[i].t <= t + 1e-12) idx = i;
        if (!aligned_ || aligned_->t > t + 1e-12 || aligned_->t < snaps[idx].t) aligned_ = snaps[idx];
        const double mu = rec_.conserved.mu;
        while (aligned_->t + rec_.dt <= t + 1e-12 * std::max(1.0, t)) {
            LagrangianState next = rk4_step(*aligned_, mu, rec_.dt, rec_.kernel);
            if (rec_.projection) next = project(next);
            aligned_ = std::move(next);
        }
        const double rest = t - aligned_->t;
        if (std::abs(rest) <= 1e-14 * std::max(1.0, t)) return *aligned_;
        LagrangianState out = rk4_step(*aligned_, mu, rest, rec_.kernel);
        if (rec_.projection) out = project(out);
        out.t = t;
        return out;
    }

private:
    const SimulationRecord& rec_;
    std::optional<LagrangianState> aligned_;
};

}  // namespace detail

/// One time slice of the weak residual: int u phi_t + (u^2/2 + p) phi_x dy,
/// the pressure term integrated by parts. p = Lambda^{-1} q with q the
/// pushforward energy density.
inline double weak_residual_slice(const LagrangianState& s, double mu, const TestFunction& f, std::size_t m,
                                  const KernelOptions& opts = {}, double flat_eps = kDefaultFlatEps) {
    const EulerianField field = eulerian_velocity(s, mu, m, flat_eps, opts);
    const GridFunction p =
        helmholtz_inverse(energy_density(s, mu, m, flat_eps, opts), HelmholtzMethod::fourier_symbol);
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double y = static_cast<double>(i) / static_cast<double>(m);
        const double u = field.u[i];
        sum += u * f.phi_t(s.t, y) + (0.5 * u * u + p[i]) * f.phi_x(s.t, y);
    }
    return sum / static_cast<double>(m);
}

/// R(phi) = int int u phi_t + (u^2/2) phi_x - p_x phi dy dt, with the
/// pressure term in divergence form. The time integral uses `times`
/// equispaced interior samples of the support (trapezoid rule with the
/// vanishing endpoints); states at the samples are re-integrated from the
/// nearest earlier snapshot.
inline double weak_residual(const SimulationRecord& record, double mu, const TestFunction& f, std::size_t m,
                            std::size_t times, double flat_eps = kDefaultFlatEps) {
    if (record.snapshots.empty()) throw DomainError("weak_residual: empty record");
    if (times < 1) throw DomainError("weak_residual: need at least one time sample");
    detail::validate_test_function(f, record.snapshots.front().t, record.snapshots.back().t);
    detail::StateSampler sampler(record);
    const double dt = (f.t_max - f.t_min) / static_cast<double>(times + 1);
    double total = 0.0;
    for (std::size_t i = 1; i <= times; ++i) {
        const double t = f.t_min + static_cast<double>(i) * dt;
        total += weak_residual_slice(sampler.at(t), mu, f, m, record.kernel, flat_eps);
    }
    return total * dt;
}

/// Least-squares decay rate of discrete Fourier amplitudes.
struct SpectralDecay {
    /// -slope of log|c_k| against log k; empty when fewer than `kMinModes`
    /// modes rise above the noise floor.
    std::optional<double> rate;
    std::size_t modes_used = 0;
    double noise_floor = 0.0;

    static constexpr std::size_t kMinModes = 4;
};

/// Fits over 1 <= k <= n/3, keeping modes whose amplitude exceeds
/// 1e-13 * max(1, max|f|).
inline SpectralDecay spectral_decay(const GridFunction& f) {
    const std::size_t n = f.size();
    const auto coeffs = fft::plan_for(n).forward(f.values());
    SpectralDecay out;
    out.noise_floor = 1e-13 * std::max(1.0, f.max_abs());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 1; k <= n / 3; ++k) {
        const double amp = std::abs(coeffs[k]) / static_cast<double>(n);
        if (!(amp > out.noise_floor)) continue;
        const double lx = std::log(static_cast<double>(k));
        const double ly = std::log(amp);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++out.modes_used;
    }
    if (out.modes_used < SpectralDecay::kMinModes) return out;
    const double cnt = static_cast<double>(out.modes_used);
    const double denom = cnt * sxx - sx * sx;
    if (!(denom > 0.0)) return out;
    out.rate = -(cnt * sxy - sx * sy) / denom;
    return out;
}

/// Spectral decay of the periodic part K(x) - k0 - period * x of the flow map.
inline SpectralDecay smoothness_diagnostic(const FlowMap& map) {
    const std::size_t n = map.size();
    GridFunction periodic(n);
    for (std::size_t j = 0; j < n; ++j)
        periodic[j] = map.k[j] - map.k0 - map.period * GridFunction::node(j, n);
    return spectral_decay(periodic);
}

}  // namespace rhosphere

#endif  // RHOSPHERE_RECONSTRUCTION_HPP
