#ifndef RHOSPHERE_GRID_HPP
#define RHOSPHERE_GRID_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rhosphere/error.hpp"
#include "rhosphere/fft.hpp"

namespace rhosphere {

/// Samples of a periodic function on the uniform nodes x_j = j/n of [0,1).
class GridFunction {
public:
    GridFunction() = default;

    /// Zero function on n nodes.
    explicit GridFunction(std::size_t n) : values_(n, 0.0) { check_size(n); }

    GridFunction(std::size_t n, double value) : values_(n, value) {
        check_size(n);
        require_finite("GridFunction");
    }

    explicit GridFunction(std::vector<double> values) : values_(std::move(values)) {
        check_size(values_.size());
        require_finite("GridFunction");
    }

    template <class F>
    static GridFunction sample(std::size_t n, F&& f) {
        std::vector<double> v(n);
        for (std::size_t j = 0; j < n; ++j) v[j] = f(node(j, n));
        return GridFunction(std::move(v));
    }

    static double node(std::size_t j, std::size_t n) {
        return static_cast<double>(j) / static_cast<double>(n);
    }

    std::size_t size() const { return values_.size(); }
    double spacing() const { return 1.0 / static_cast<double>(values_.size()); }
    double x(std::size_t j) const { return node(j, size()); }

    double operator[](std::size_t j) const { return values_[j]; }
    double& operator[](std::size_t j) { return values_[j]; }

    std::span<const double> values() const { return values_; }
    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(),
                           [](double v) { return std::isfinite(v); });
    }

    void require_finite(std::string_view where) const {
        for (std::size_t j = 0; j < values_.size(); ++j)
            if (!std::isfinite(values_[j]))
                throw NonFiniteError(std::string(where) + ": non-finite value at node " +
                                     std::to_string(j));
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }

    template <class F>
    GridFunction map(F&& f) const {
        GridFunction out(*this);
        for (double& v : out.values_) v = f(v);
        return out;
    }

    GridFunction& operator+=(const GridFunction& o) { return zip(o, [](double a, double b) { return a + b; }); }
    GridFunction& operator-=(const GridFunction& o) { return zip(o, [](double a, double b) { return a - b; }); }
    GridFunction& operator*=(const GridFunction& o) { return zip(o, [](double a, double b) { return a * b; }); }
    GridFunction& operator+=(double s) {
        for (double& v : values_) v += s;
        return *this;
    }
    GridFunction& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }

    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(GridFunction a, const GridFunction& b) { return a *= b; }
    friend GridFunction operator+(GridFunction a, double s) { return a += s; }
    friend GridFunction operator-(GridFunction a, double s) { return a += -s; }
    friend GridFunction operator*(GridFunction a, double s) { return a *= s; }
    friend GridFunction operator*(double s, GridFunction a) { return a *= s; }
    friend GridFunction operator-(GridFunction a) { return a *= -1.0; }

private:
    static void check_size(std::size_t n) {
        if (n < 2 || (n & (n - 1)) != 0)
            throw DomainError("grid size must be a power of two, got " + std::to_string(n));
    }

    template <class Op>
    GridFunction& zip(const GridFunction& o, Op op) {
        require_same_grid(*this, o);
        for (std::size_t j = 0; j < values_.size(); ++j) values_[j] = op(values_[j], o.values_[j]);
        return *this;
    }

public:
    friend void require_same_grid(const GridFunction& a, const GridFunction& b) {
        if (a.size() != b.size())
            throw GridMismatchError("grid functions on " + std::to_string(a.size()) + " and " +
                                    std::to_string(b.size()) + " nodes");
    }

private:
    std::vector<double> values_;
};

/// Smallest grid the solver accepts for physical runs.
inline constexpr std::size_t kMinGridSize = 16;

enum class Derivative { centered, spectral };

/// Cumulative integration rule. `corrected` adds Euler-Maclaurin endpoint terms
/// built from spectral derivatives; it is exact to round-off for resolved
/// trigonometric data but inherits Gibbs noise on rough data.
enum class Quadrature { trapezoid, corrected };

namespace detail {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// B_{2k}/(2k)! for k = 1..5.
inline constexpr double kEulerMaclaurin[] = {
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
};
inline constexpr int kCorrectionTerms = 4;

}  // namespace detail

/// Periodic rectangle rule, (1/n) sum w_j.
inline double quad(const GridFunction& w) {
    w.require_finite("quad");
    double s = 0.0;
    for (double v : w) s += v;
    return s / static_cast<double>(w.size());
}

inline double l2_norm(const GridFunction& w) {
    double s = 0.0;
    for (double v : w) s += v * v;
    return std::sqrt(s / static_cast<double>(w.size()));
}

/// Derivatives 0..order of the trigonometric interpolant of w. Odd orders
/// drop the Nyquist mode.
inline std::vector<GridFunction> spectral_derivatives(const GridFunction& w, int order) {
    const std::size_t n = w.size();
    const auto& plan = fft::plan_for(n);
    const auto coeffs = plan.forward(w.values());
    std::vector<GridFunction> out;
    out.reserve(static_cast<std::size_t>(order) + 1);
    out.push_back(w);
    std::vector<std::complex<double>> current = coeffs;
    std::vector<std::complex<double>> buf(coeffs.size());
    for (int d = 1; d <= order; ++d) {
        for (std::size_t k = 0; k < coeffs.size(); ++k)
            current[k] *= std::complex<double>(0.0, detail::two_pi * static_cast<double>(k));
        buf = current;
        if (d % 2 == 1) buf[n / 2] = 0.0;
        out.emplace_back(plan.backward(buf));
    }
    return out;
}

inline GridFunction deriv(const GridFunction& w, Derivative scheme = Derivative::spectral) {
    const std::size_t n = w.size();
    if (scheme == Derivative::spectral) return std::move(spectral_derivatives(w, 1)[1]);
    GridFunction out(n);
    const double inv2h = 0.5 * static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = (w[(j + 1) % n] - w[(j + n - 1) % n]) * inv2h;
    return out;
}

/// P(x_j) = integral of w from 0 to x_j. The trapezoid rule gives P exactly
/// as the partial panel sums; P(x_{n-1}) plus the closing panel is quad(w).
inline GridFunction cumint(const GridFunction& w, Quadrature rule = Quadrature::trapezoid) {
    w.require_finite("cumint");
    const std::size_t n = w.size();
    const double h = w.spacing();
    GridFunction p(n);
    double acc = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        acc += 0.5 * h * (w[j - 1] + w[j]);
        p[j] = acc;
    }
    if (rule == Quadrature::corrected) {
        // Sum of the odd-derivative endpoint terms, applied as one Fourier multiplier.
        const auto& plan = fft::plan_for(n);
        auto coeffs = plan.forward(w.values());
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
            const double kk = detail::two_pi * static_cast<double>(k);
            std::complex<double> power(0.0, kk);
            std::complex<double> symbol = 0.0;
            double h2k = 1.0;
            for (int m = 1; m <= detail::kCorrectionTerms; ++m) {
                h2k *= h * h;
                symbol += detail::kEulerMaclaurin[m - 1] * h2k * power;
                power *= -kk * kk;
            }
            coeffs[k] *= symbol;
        }
        coeffs[n / 2] = 0.0;
        const GridFunction corr(plan.backward(coeffs));
        for (std::size_t j = 1; j < n; ++j) p[j] -= corr[j] - corr[0];
    }
    return p;
}

}  // namespace rhosphere

#endif  // RHOSPHERE_GRID_HPP
