#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include "rhosphere/grid.hpp"

namespace {

using namespace rhosphere;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

GridFunction wave(std::size_t n, double k, bool cosine) {
    return GridFunction::sample(n, [=](double x) { return cosine ? std::cos(kTwoPi * k * x) : std::sin(kTwoPi * k * x); });
}

TEST(GridFunction, NodesAreUniformOnTheUnitInterval) {
    const GridFunction f = GridFunction::sample(16, [](double x) { return x; });
    EXPECT_DOUBLE_EQ(f[0], 0.0);
    EXPECT_DOUBLE_EQ(f[4], 0.25);
    EXPECT_DOUBLE_EQ(f.spacing(), 1.0 / 16.0);
}

TEST(GridFunction, RejectsSizesThatAreNotPowersOfTwo) {
    EXPECT_THROW(GridFunction(12), DomainError);
    EXPECT_THROW(GridFunction(1), DomainError);
    EXPECT_NO_THROW(GridFunction(32));
}

TEST(GridFunction, RejectsNonFiniteSamples) {
    EXPECT_THROW(GridFunction(std::vector<double>(16, std::nan(""))), NonFiniteError);
    EXPECT_THROW(GridFunction(16, std::numeric_limits<double>::infinity()), NonFiniteError);
}

TEST(GridFunction, ArithmeticRequiresMatchingGrids) {
    EXPECT_THROW(GridFunction(16, 1.0) + GridFunction(32, 1.0), GridMismatchError);
    const GridFunction s = 2.0 * GridFunction(16, 1.5) - 1.0;
    EXPECT_DOUBLE_EQ(s.max(), 2.0);
    EXPECT_DOUBLE_EQ(s.min(), 2.0);
}

TEST(Quadrature, RectangleRuleIsExactForTrigonometricPolynomials) {
    const std::size_t n = 16;
    EXPECT_NEAR(quad(wave(n, 3, false) * wave(n, 3, false)), 0.5, 1e-15);
    EXPECT_NEAR(quad(wave(n, 2, true)), 0.0, 1e-15);
    EXPECT_NEAR(l2_norm(GridFunction(n, 3.0)), 3.0, 1e-15);
}

TEST(Derivative, SpectralIsExactForResolvedModes) {
    const std::size_t n = 64;
    const GridFunction d = deriv(wave(n, 3, false));
    EXPECT_LT((d - kTwoPi * 3.0 * wave(n, 3, true)).max_abs(), 1e-11);
}

TEST(Derivative, HigherSpectralDerivativesAlternate) {
    const std::size_t n = 32;
    const auto d = spectral_derivatives(wave(n, 2, true), 4);
    const double k = kTwoPi * 2.0;
    EXPECT_LT((d[2] + k * k * wave(n, 2, true)).max_abs(), 1e-10);
    EXPECT_LT((d[3] - k * k * k * wave(n, 2, false)).max_abs(), 1e-8);
    EXPECT_LT((d[4] - k * k * k * k * wave(n, 2, true)).max_abs(), 1e-7);
}

TEST(Derivative, CenteredDifferenceIsSecondOrder) {
    double prev = 0.0;
    for (std::size_t n : {32u, 64u, 128u}) {
        const double err = (deriv(wave(n, 1, false), Derivative::centered) - kTwoPi * wave(n, 1, true)).max_abs();
        if (prev > 0.0) {
            EXPECT_NEAR(prev / err, 4.0, 0.05);
        }
        prev = err;
    }
}

TEST(Cumint, TrapezoidIsSecondOrderAndCorrectedIsSpectral) {
    const double k = 5.0;
    for (std::size_t n : {64u, 128u}) {
        const GridFunction exact = (1.0 / (kTwoPi * k)) * wave(n, k, false);
        const double trap = (cumint(wave(n, k, true)) - exact).max_abs();
        const double corr = (cumint(wave(n, k, true), Quadrature::corrected) - exact).max_abs();
        EXPECT_GT(trap, 1e-5);
        EXPECT_LT(corr, 1e-12) << "n = " << n;
    }
}

TEST(Cumint, StartsAtZero) {
    const GridFunction p = cumint(GridFunction(16, 2.0), Quadrature::corrected);
    EXPECT_DOUBLE_EQ(p[0], 0.0);
    EXPECT_NEAR(p[8], 1.0, 1e-15);
}

TEST(Fft, RoundTripAndConcurrentPlanCreation) {
    std::vector<std::thread> pool;
    std::vector<double> errors(8, 1.0);
    for (std::size_t t = 0; t < errors.size(); ++t)
        pool.emplace_back([&, t] {
            const std::size_t n = std::size_t{16} << (t % 4);
            const GridFunction f = wave(n, 1, false) + 0.25 * wave(n, 2, true);
            const auto& plan = fft::plan_for(n);
            const GridFunction back(plan.backward(plan.forward(f.values())));
            errors[t] = (back - f).max_abs();
        });
    for (auto& th : pool) th.join();
    for (double e : errors) EXPECT_LT(e, 1e-14);
}

}  // namespace
