#ifndef RHOSPHERE_KERNEL_HPP
#define RHOSPHERE_KERNEL_HPP

// Integral transforms against the periodic Helmholtz Green's function taken
// along a monotone coordinate P:
//
//   cosh transform  C(x) = int_0^1 cosh(|P(x)-P(y)| - 1/2) / (2 sinh 1/2) w(y) dy
//   sinh transform  S(x) = int_0^x sinh(P(x)-P(y) - 1/2) / (2 sinh 1/2) w(y) dy
//                        - int_x^1 sinh(P(y)-P(x) - 1/2) / (2 sinh 1/2) w(y) dy
//
// P is the lifted antiderivative of a nonnegative density (P' = density,
// P(1) - P(0) = 1). Both integrands are smooth on the circle except at y = x,
// where C has a slope kink and S a unit jump. The periodic trapezoid rule is
// second order on them; `Quadrature::corrected` adds the Euler-Maclaurin
// jump terms sum_k B_2k h^2k / (2k)! J^(2k-1)(x) where J is the difference of
// the right and left branches, expanded in Taylor series at each node.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "rhosphere/grid.hpp"

namespace rhosphere::kernel {

enum class Mode { fast, direct };

inline const double kHalfSinh = 2.0 * std::sinh(0.5);

namespace detail {

inline constexpr int kOrder = 2 * rhosphere::detail::kCorrectionTerms - 1;
using Series = std::array<double, kOrder + 1>;

inline Series series_mul(const Series& a, const Series& b) {
    Series c{};
    for (int i = 0; i <= kOrder; ++i)
        for (int j = 0; i + j <= kOrder; ++j) c[i + j] += a[i] * b[j];
    return c;
}

/// exp(a) for a series with a[0] == 0.
inline Series series_exp(const Series& a) {
    Series b{};
    b[0] = 1.0;
    for (int m = 1; m <= kOrder; ++m) {
        double s = 0.0;
        for (int k = 1; k <= m; ++k) s += k * a[k] * b[m - k];
        b[m] = s / m;
    }
    return b;
}

/// Neumaier-compensated running sum.
struct Accumulator {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

/// Strict prefix (j < i) and suffix (j > i) sums of cosh(P_j) w_j and sinh(P_j) w_j.
struct StrictSums {
    std::vector<double> left_c, left_s, right_c, right_s;
};

inline StrictSums strict_sums(const GridFunction& p, const GridFunction& w) {
    const std::size_t n = w.size();
    StrictSums out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                   std::vector<double>(n)};
    std::vector<double> cw(n), sw(n);
    for (std::size_t j = 0; j < n; ++j) {
        cw[j] = std::cosh(p[j]) * w[j];
        sw[j] = std::sinh(p[j]) * w[j];
    }
    Accumulator ac, as;
    for (std::size_t j = 0; j < n; ++j) {
        out.left_c[j] = ac.value();
        out.left_s[j] = as.value();
        ac.add(cw[j]);
        as.add(sw[j]);
    }
    Accumulator bc, bs;
    for (std::size_t j = n; j-- > 0;) {
        out.right_c[j] = bc.value();
        out.right_s[j] = bs.value();
        bc.add(cw[j]);
        bs.add(sw[j]);
    }
    return out;
}

enum class Branch { cosh_kernel, sinh_kernel };

/// Euler-Maclaurin jump correction at every node.
inline GridFunction jump_correction(const GridFunction& density, const GridFunction& w, Branch branch) {
    const std::size_t n = w.size();
    const double h = w.spacing();
    const auto dd = spectral_derivatives(density, kOrder - 1);
    const auto dw = spectral_derivatives(w, kOrder);

    std::array<double, kOrder + 1> factorial{};
    factorial[0] = 1.0;
    for (int m = 1; m <= kOrder; ++m) factorial[m] = factorial[m - 1] * m;

    std::array<double, rhosphere::detail::kCorrectionTerms> weight{};
    double h2k = 1.0;
    for (int k = 1; k <= rhosphere::detail::kCorrectionTerms; ++k) {
        h2k *= h * h;
        weight[k - 1] = rhosphere::detail::kEulerMaclaurin[k - 1] * h2k;
    }

    GridFunction out(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Local Taylor coefficients in s = y - x_i.
        Series q{}, qneg{}, ws{};
        for (int m = 1; m <= kOrder; ++m) {
            q[m] = dd[static_cast<std::size_t>(m - 1)][i] / factorial[m];
            qneg[m] = -q[m];
        }
        for (int m = 0; m <= kOrder; ++m) ws[m] = dw[static_cast<std::size_t>(m)][i] / factorial[m];

        const Series ep = series_exp(q);
        const Series em = series_exp(qneg);
        Series shape{};
        for (int m = 0; m <= kOrder; ++m)
            shape[m] = branch == Branch::cosh_kernel ? -0.5 * (ep[m] - em[m]) : 0.5 * (ep[m] + em[m]);
        const Series jump = series_mul(shape, ws);

        double corr = 0.0;
        for (int k = 1; k <= rhosphere::detail::kCorrectionTerms; ++k)
            corr += weight[k - 1] * jump[2 * k - 1] * factorial[2 * k - 1];
        out[i] = corr;
    }
    return out;
}

inline void check_inputs(const GridFunction& p, const GridFunction& density, const GridFunction& w) {
    require_same_grid(p, w);
    require_same_grid(density, w);
    p.require_finite("kernel: coordinate");
    w.require_finite("kernel: weight");
}

}  // namespace detail

/// Cosh transform of w along coordinate p (see file comment).
inline GridFunction cosh_transform(const GridFunction& p, const GridFunction& density,
                                   const GridFunction& w, Mode mode, Quadrature rule) {
    detail::check_inputs(p, density, w);
    const std::size_t n = w.size();
    const double scale = w.spacing() / kHalfSinh;
    GridFunction out(n);

    if (mode == Mode::direct) {
        for (std::size_t i = 0; i < n; ++i) {
            detail::Accumulator acc;
            for (std::size_t j = 0; j < n; ++j) acc.add(std::cosh(std::abs(p[i] - p[j]) - 0.5) * w[j]);
            out[i] = scale * acc.value();
        }
    } else {
        // j <= i gives P_i >= P_j; j > i gives P_j >= P_i. Split with the
        // addition formula into sums of cosh(P_j) w_j and sinh(P_j) w_j.
        const auto [left_c, left_s, right_c, right_s] = detail::strict_sums(p, w);
        const double diag = std::cosh(0.5);
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = p[i] - 0.5;
            const double hi = p[i] + 0.5;
            out[i] = scale * (std::cosh(lo) * left_c[i] - std::sinh(lo) * left_s[i] + diag * w[i] +
                              std::cosh(hi) * right_c[i] - std::sinh(hi) * right_s[i]);
        }
    }

    if (rule == Quadrature::corrected)
        out += detail::jump_correction(density, w, detail::Branch::cosh_kernel);
    return out;
}

/// Sinh transform of w along coordinate p (see file comment). The node
/// itself contributes the mean of the two one-sided limits, which is zero.
inline GridFunction sinh_transform(const GridFunction& p, const GridFunction& density,
                                   const GridFunction& w, Mode mode, Quadrature rule) {
    detail::check_inputs(p, density, w);
    const std::size_t n = w.size();
    const double scale = w.spacing() / kHalfSinh;
    GridFunction out(n);

    if (mode == Mode::direct) {
        for (std::size_t i = 0; i < n; ++i) {
            detail::Accumulator acc;
            for (std::size_t j = 0; j < i; ++j) acc.add(std::sinh(p[i] - p[j] - 0.5) * w[j]);
            for (std::size_t j = i + 1; j < n; ++j) acc.add(-std::sinh(p[j] - p[i] - 0.5) * w[j]);
            out[i] = scale * acc.value();
        }
    } else {
        const auto [left_c, left_s, right_c, right_s] = detail::strict_sums(p, w);
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = p[i] - 0.5;
            const double hi = p[i] + 0.5;
            out[i] = scale * (std::sinh(lo) * left_c[i] - std::cosh(lo) * left_s[i] -
                              std::cosh(hi) * right_s[i] + std::sinh(hi) * right_c[i]);
        }
    }

    if (rule == Quadrature::corrected)
        out += detail::jump_correction(density, w, detail::Branch::sinh_kernel);
    return out;
}

}  // namespace rhosphere::kernel

#endif  // RHOSPHERE_KERNEL_HPP
