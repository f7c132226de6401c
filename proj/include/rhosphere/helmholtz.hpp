#ifndef RHOSPHERE_HELMHOLTZ_HPP
#define RHOSPHERE_HELMHOLTZ_HPP

#include <cmath>
#include <cstddef>

#include "rhosphere/grid.hpp"
#include "rhosphere/kernel.hpp"

namespace rhosphere {

enum class HelmholtzMethod { greens_convolution, fourier_symbol };

/// Periodic Green's function of 1 - d^2/dx^2, g(x) = cosh(|x| - 1/2) / (2 sinh 1/2),
/// with |x| reduced to the distance representative in [0, 1].
inline double greens_function(double x) {
    double r = std::abs(std::fmod(x, 1.0));
    return std::cosh(r - 0.5) / kernel::kHalfSinh;
}

/// Lambda^{-1} w = (1 - d^2/dx^2)^{-1} w. The convolution route integrates
/// g(x - y) w(y) in physical space; the symbol route divides mode k by
/// 1 + 4 pi^2 k^2.
inline GridFunction helmholtz_inverse(const GridFunction& w,
                                      HelmholtzMethod method = HelmholtzMethod::fourier_symbol) {
    w.require_finite("helmholtz_inverse");
    const std::size_t n = w.size();
    if (method == HelmholtzMethod::fourier_symbol) {
        const auto& plan = fft::plan_for(n);
        auto coeffs = plan.forward(w.values());
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
            const double kk = detail::two_pi * static_cast<double>(k);
            coeffs[k] /= 1.0 + kk * kk;
        }
        return GridFunction(plan.backward(coeffs));
    }
    const auto identity = GridFunction::sample(n, [](double x) { return x; });
    return kernel::cosh_transform(identity, GridFunction(n, 1.0), w, kernel::Mode::fast,
                                  Quadrature::corrected);
}

}  // namespace rhosphere

#endif  // RHOSPHERE_HELMHOLTZ_HPP
