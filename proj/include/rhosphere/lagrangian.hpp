#ifndef RHOSPHERE_LAGRANGIAN_HPP
#define RHOSPHERE_LAGRANGIAN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>

#include "rhosphere/grid.hpp"
#include "rhosphere/kernel.hpp"

namespace rhosphere {

/// State of the regularized Lagrangian system: rho = sqrt(K_x), its time
/// derivative, the position k0 = K(t, 0) of particle label 0, and time.
struct LagrangianState {
    GridFunction rho;
    GridFunction rho_t;
    double k0 = 0.0;
    double t = 0.0;

    std::size_t size() const { return rho.size(); }
};

struct ConservedQuantities {
    double mu = 0.0;
    double energy = 0.0;
};

struct KernelOptions {
    kernel::Mode mode = kernel::Mode::fast;
    Quadrature quadrature = Quadrature::corrected;
};

inline constexpr double kSphereTol = 1e-12;
inline constexpr double kTangencyTol = 1e-12;

/// Soft failures of the operators: off-sphere or non-tangent input is allowed
/// but reported here when the caller asks.
struct Warnings {
    bool off_sphere = false;
    bool not_tangent = false;
};

/// |quad(rho^2) - 1|
inline double sphere_defect(const LagrangianState& s) { return std::abs(quad(s.rho * s.rho) - 1.0); }

/// |quad(rho rho_t)|
inline double tangency_defect(const LagrangianState& s) { return std::abs(quad(s.rho * s.rho_t)); }

inline void check_state(const LagrangianState& s, Warnings* warnings) {
    require_same_grid(s.rho, s.rho_t);
    s.rho.require_finite("state rho");
    s.rho_t.require_finite("state rho_t");
    if (warnings != nullptr) {
        warnings->off_sphere = warnings->off_sphere || sphere_defect(s) > kSphereTol;
        warnings->not_tangent = warnings->not_tangent || tangency_defect(s) > kTangencyTol;
    }
}

/// c = mu - int_0^1 (int_0^y 2 rho rho_t dz) rho^2(y) dy, the velocity of particle 0.
inline double compute_c(const LagrangianState& s, double mu, const KernelOptions& opts = {}) {
    check_state(s, nullptr);
    const GridFunction rho2 = s.rho * s.rho;
    return mu - quad(cumint(2.0 * s.rho * s.rho_t, opts.quadrature) * rho2);
}

/// Lagrangian velocity G = K_t = int_0^x 2 rho rho_t dy + c.
inline GridFunction compute_G(const LagrangianState& s, double mu, const KernelOptions& opts = {},
                              Warnings* warnings = nullptr) {
    check_state(s, warnings);
    const GridFunction rho2 = s.rho * s.rho;
    GridFunction g = cumint(2.0 * s.rho * s.rho_t, opts.quadrature);
    const double c = mu - quad(g * rho2);
    return g + c;
}

/// Shared integrand rho^2 G^2 + 2 rho_t^2 of F and H.
inline GridFunction kernel_weight(const LagrangianState& s, const GridFunction& g) {
    return s.rho * s.rho * g * g + 2.0 * s.rho_t * s.rho_t;
}

/// K - k0 = cumint(rho^2), the coordinate along which F and H are taken.
inline GridFunction flow_coordinate(const LagrangianState& s, Quadrature rule) {
    return cumint(s.rho * s.rho, rule);
}

inline GridFunction compute_F(const LagrangianState& s, const GridFunction& g, const KernelOptions& opts = {}) {
    check_state(s, nullptr);
    require_same_grid(s.rho, g);
    const GridFunction rho2 = s.rho * s.rho;
    return kernel::cosh_transform(cumint(rho2, opts.quadrature), rho2, kernel_weight(s, g), opts.mode,
                                  opts.quadrature);
}

/// H = -G_t. The second integrand is sinh(P(y) - P(x) - 1/2), subtracted, so
/// that H_x = rho^2 F - (rho^2 G^2 + 2 rho_t^2) and F_x = rho^2 H.
inline GridFunction compute_H(const LagrangianState& s, const GridFunction& g, const KernelOptions& opts = {}) {
    check_state(s, nullptr);
    require_same_grid(s.rho, g);
    const GridFunction rho2 = s.rho * s.rho;
    return kernel::sinh_transform(cumint(rho2, opts.quadrature), rho2, kernel_weight(s, g), opts.mode,
                                  opts.quadrature);
}

struct StateDerivative {
    GridFunction drho;
    GridFunction drho_t;
    double dk0 = 0.0;
};

/// G, F and the vector field at one state, sharing the kernel evaluation.
struct FieldEvaluation {
    GridFunction g;
    GridFunction f;
    StateDerivative derivative;
};

/// rho_tt = rho (G^2 - F) / 2, with dk0/dt = G(0) = c.
inline FieldEvaluation evaluate_field(const LagrangianState& s, double mu, const KernelOptions& opts = {}) {
    check_state(s, nullptr);
    const GridFunction rho2 = s.rho * s.rho;
    const GridFunction cum = cumint(2.0 * s.rho * s.rho_t, opts.quadrature);
    const double c = mu - quad(cum * rho2);
    GridFunction g = cum + c;
    GridFunction f = kernel::cosh_transform(cumint(rho2, opts.quadrature), rho2, kernel_weight(s, g), opts.mode,
                                            opts.quadrature);
    StateDerivative d{s.rho_t, 0.5 * s.rho * (g * g - f), c};
    return {std::move(g), std::move(f), std::move(d)};
}

inline StateDerivative vector_field(const LagrangianState& s, double mu, const KernelOptions& opts = {}) {
    return evaluate_field(s, mu, opts).derivative;
}

/// E = int rho^2 G^2 + 4 rho_t^2, equal to the H^1 energy int u^2 + u_x^2.
inline double energy(const LagrangianState& s, double mu, const KernelOptions& opts = {}) {
    const GridFunction g = compute_G(s, mu, opts);
    return quad(s.rho * s.rho * g * g + 4.0 * s.rho_t * s.rho_t);
}

/// Right-hand side of the a-priori estimate of |G^2 - F| in L^2 norms of rho and rho_t.
inline double apriori_bound(const LagrangianState& s) {
    const double a = l2_norm(s.rho);
    const double b = l2_norm(s.rho_t);
    return 2.0 * a * b + (2.0 * a * a * a * b + b * b) / (4.0 * std::sinh(0.5));
}

/// Fraction of nodes with rho^2 < eps.
inline double flat_set_measure(const LagrangianState& s, double eps) {
    if (!(eps > 0.0)) throw DomainError("flat_set_measure: eps must be positive");
    const auto count = std::count_if(s.rho.begin(), s.rho.end(), [eps](double r) { return r * r < eps; });
    return static_cast<double>(count) / static_cast<double>(s.size());
}

/// max_x |G^2 - F|, the quantity that bounds the growth constant of rho^2 + rho_t^2.
inline double max_forcing(const LagrangianState& s, double mu, const KernelOptions& opts = {}) {
    const GridFunction g = compute_G(s, mu, opts);
    const GridFunction f = compute_F(s, g, opts);
    return (g * g - f).max_abs();
}

}  // namespace rhosphere

#endif  // RHOSPHERE_LAGRANGIAN_HPP
