#ifndef RHOSPHERE_SCENARIOS_HPP
#define RHOSPHERE_SCENARIOS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "rhosphere/grid.hpp"
#include "rhosphere/helmholtz.hpp"
#include "rhosphere/lagrangian.hpp"

namespace rhosphere {

namespace scenario {

struct Constant {
    double c = 0.0;
};

/// amplitude * sin(2 pi wavenumber x)
struct Sine {
    double amplitude = 1.0;
    int wavenumber = 1;
};

/// cosines[0] + sum_k cosines[k] cos(2 pi k x) + sines[k] sin(2 pi k x); sines[0] must be 0.
struct Fourier {
    std::vector<double> cosines;
    std::vector<double> sines;
};

/// p g(x - q1) - p g(x - q2) with g the periodic Green's function of 1 - d^2/dx^2.
/// A positive mollifier_width convolves g with a periodic Gaussian of that
/// standard deviation, giving C-infinity data.
struct PeakonPair {
    double p = 1.0;
    double q1 = 0.25;
    double q2 = 0.75;
    double mollifier_width = 0.0;
};

}  // namespace scenario

struct InitialSpec {
    std::variant<scenario::Constant, scenario::Sine, scenario::Fourier, scenario::PeakonPair> kind;
    std::size_t n = 256;
};

struct InitialData {
    GridFunction u0;
    GridFunction u0x;
    double mu = 0.0;
};

namespace detail {

inline void validate(const InitialSpec& spec) {
    if (spec.n < kMinGridSize || (spec.n & (spec.n - 1)) != 0)
        throw DomainError("initial: n must be a power of two >= 16");
    if (const auto* s = std::get_if<scenario::Sine>(&spec.kind)) {
        if (!std::isfinite(s->amplitude) || s->wavenumber < 1)
            throw DomainError("initial: sine needs a finite amplitude and wavenumber >= 1");
    } else if (const auto* f = std::get_if<scenario::Fourier>(&spec.kind)) {
        if (f->cosines.empty() && f->sines.empty()) throw DomainError("initial: fourier needs coefficients");
        if (!f->sines.empty() && f->sines[0] != 0.0)
            throw DomainError("initial: fourier sines[0] must be zero");
        if (std::max(f->cosines.size(), f->sines.size()) > spec.n / 2)
            throw DomainError("initial: fourier modes exceed the grid's Nyquist limit");
    } else if (const auto* pk = std::get_if<scenario::PeakonPair>(&spec.kind)) {
        if (!std::isfinite(pk->p) || !std::isfinite(pk->q1) || !std::isfinite(pk->q2))
            throw DomainError("initial: peakon parameters must be finite");
        if (std::abs(std::remainder(pk->q1 - pk->q2, 1.0)) < 1e-12)
            throw DomainError("initial: peakon positions must differ");
        if (pk->mollifier_width < 0.0) throw DomainError("initial: mollifier width must be >= 0");
    } else if (const auto* c = std::get_if<scenario::Constant>(&spec.kind)) {
        if (!std::isfinite(c->c)) throw DomainError("initial: constant must be finite");
    }
}

/// Mollified peakon pair from its exact Fourier coefficients
/// p (e^{-2 pi i k q1} - e^{-2 pi i k q2}) e^{-2 pi^2 sigma^2 k^2} / (1 + 4 pi^2 k^2).
inline InitialData mollified_peakons(const scenario::PeakonPair& pk, std::size_t n) {
    const auto& plan = fft::plan_for(n);
    std::vector<std::complex<double>> u(n / 2 + 1), ux(n / 2 + 1);
    const double sigma = pk.mollifier_width;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double kk = two_pi * static_cast<double>(k);
        const std::complex<double> shift =
            std::polar(1.0, -kk * pk.q1) - std::polar(1.0, -kk * pk.q2);
        const double amp = pk.p * std::exp(-0.5 * sigma * sigma * kk * kk) / (1.0 + kk * kk);
        // Coefficients of the unnormalized forward transform.
        u[k] = static_cast<double>(n) * amp * shift;
        ux[k] = std::complex<double>(0.0, kk) * u[k];
    }
    ux[n / 2] = 0.0;
    GridFunction u0(plan.backward(u));
    GridFunction u0x(plan.backward(ux));
    return {u0, u0x, quad(u0)};
}

}  // namespace detail

/// Samples u0 and u0' on spec.n nodes. Peakon data without mollifier has a
/// slope kink; its derivative is the spectral derivative of the samples and
/// carries the usual Gibbs ringing next to each peak.
inline InitialData make_initial(const InitialSpec& spec) {
    detail::validate(spec);
    const std::size_t n = spec.n;
    using detail::two_pi;
    return std::visit(
        [n](const auto& kind) -> InitialData {
            using T = std::decay_t<decltype(kind)>;
            if constexpr (std::is_same_v<T, scenario::Constant>) {
                return {GridFunction(n, kind.c), GridFunction(n, 0.0), kind.c};
            } else if constexpr (std::is_same_v<T, scenario::Sine>) {
                const double k = kind.wavenumber;
                auto u0 = GridFunction::sample(n, [&](double x) { return kind.amplitude * std::sin(two_pi * k * x); });
                auto u0x = GridFunction::sample(
                    n, [&](double x) { return two_pi * k * kind.amplitude * std::cos(two_pi * k * x); });
                return {u0, u0x, quad(u0)};
            } else if constexpr (std::is_same_v<T, scenario::Fourier>) {
                const std::size_t modes = std::max(kind.cosines.size(), kind.sines.size());
                const auto coef = [](const std::vector<double>& v, std::size_t k) {
                    return k < v.size() ? v[k] : 0.0;
                };
                auto u0 = GridFunction::sample(n, [&](double x) {
                    double s = coef(kind.cosines, 0);
                    for (std::size_t m = 1; m < modes; ++m) {
                        const double k = static_cast<double>(m);
                        s += coef(kind.cosines, m) * std::cos(two_pi * k * x);
                        s += coef(kind.sines, m) * std::sin(two_pi * k * x);
                    }
                    return s;
                });
                auto u0x = GridFunction::sample(n, [&](double x) {
                    double s = 0.0;
                    for (std::size_t m = 1; m < modes; ++m) {
                        const double k = static_cast<double>(m);
                        s -= two_pi * k * coef(kind.cosines, m) * std::sin(two_pi * k * x);
                        s += two_pi * k * coef(kind.sines, m) * std::cos(two_pi * k * x);
                    }
                    return s;
                });
                return {u0, u0x, quad(u0)};
            } else {
                if (kind.mollifier_width > 0.0) return detail::mollified_peakons(kind, n);
                auto u0 = GridFunction::sample(n, [&](double x) {
                    return kind.p * greens_function(x - kind.q1) - kind.p * greens_function(x - kind.q2);
                });
                auto u0x = deriv(u0, Derivative::spectral);
                return {u0, u0x, quad(u0)};
            }
        },
        spec.kind);
}

/// rho = 1, rho_t = u0'/2, k0 = 0 at t = 0. Rejects u0' without zero mean.
inline LagrangianState lagrangian_initial(const GridFunction& u0, const GridFunction& u0x) {
    require_same_grid(u0, u0x);
    const double scale = std::max(1.0, u0x.max_abs());
    if (std::abs(quad(u0x)) > 1e-10 * scale)
        throw DomainError("lagrangian_initial: u0' has nonzero mean " + std::to_string(quad(u0x)) +
                          "; u0 is not periodic");
    const std::size_t n = u0.size();
    return {GridFunction(n, 1.0), 0.5 * u0x, 0.0, 0.0};
}

}  // namespace rhosphere

#endif  // RHOSPHERE_SCENARIOS_HPP
