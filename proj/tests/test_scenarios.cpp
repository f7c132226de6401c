#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rhosphere/helmholtz.hpp"
#include "rhosphere/scenarios.hpp"

namespace {

using namespace rhosphere;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

TEST(Scenarios, ConstantData) {
    const InitialData d = make_initial({scenario::Constant{0.5}, 16});
    EXPECT_DOUBLE_EQ(d.u0.min(), 0.5);
    EXPECT_DOUBLE_EQ(d.u0x.max_abs(), 0.0);
    EXPECT_DOUBLE_EQ(d.mu, 0.5);
}

TEST(Scenarios, SineData) {
    const InitialData d = make_initial({scenario::Sine{2.0, 3}, 64});
    EXPECT_NEAR(d.u0[1], 2.0 * std::sin(kTwoPi * 3.0 / 64.0), 1e-15);
    EXPECT_NEAR(d.u0x[0], 2.0 * 3.0 * kTwoPi, 1e-13);
    EXPECT_NEAR(d.mu, 0.0, 1e-15);
}

TEST(Scenarios, FourierData) {
    const InitialData d = make_initial({scenario::Fourier{{0.2, 0.0, 0.5}, {0.0, 1.0}}, 32});
    for (std::size_t j = 0; j < 32; ++j) {
        const double x = j / 32.0;
        EXPECT_NEAR(d.u0[j], 0.2 + 0.5 * std::cos(2.0 * kTwoPi * x) + std::sin(kTwoPi * x), 1e-14);
    }
    EXPECT_LT((d.u0x - deriv(d.u0)).max_abs(), 1e-12);
    EXPECT_NEAR(d.mu, 0.2, 1e-15);
}

TEST(Scenarios, PeakonPairIsAntisymmetric) {
    const InitialData d = make_initial({scenario::PeakonPair{1.0, 0.25, 0.75, 0.0}, 64});
    EXPECT_NEAR(d.u0[16], greens_function(0.0) - greens_function(0.5), 1e-15);
    EXPECT_NEAR(d.u0[16], -d.u0[48], 1e-15);
    EXPECT_NEAR(d.mu, 0.0, 1e-15);
}

TEST(Scenarios, MollifiedPeakonsConvergeToThePeakons) {
    const std::size_t n = 256;
    const InitialData raw = make_initial({scenario::PeakonPair{1.0, 0.25, 0.75, 0.0}, n});
    const InitialData smooth = make_initial({scenario::PeakonPair{1.0, 0.25, 0.75, 0.005}, n});
    EXPECT_LT((raw.u0 - smooth.u0).max_abs(), 5e-3);
    EXPECT_LT((smooth.u0x - deriv(smooth.u0)).max_abs(), 1e-10);
    EXPECT_NEAR(smooth.mu, 0.0, 1e-15);
}

TEST(Scenarios, RejectsInvalidSpecs) {
    EXPECT_THROW(make_initial({scenario::Sine{1.0, 1}, 24}), DomainError);
    EXPECT_THROW(make_initial({scenario::Sine{1.0, 1}, 8}), DomainError);
    EXPECT_THROW(make_initial({scenario::Sine{1.0, 0}, 16}), DomainError);
    EXPECT_THROW(make_initial({scenario::PeakonPair{1.0, 0.5, 0.5, 0.0}, 16}), DomainError);
}

TEST(Scenarios, LagrangianInitialStateIsOnTheSphere) {
    const InitialData d = make_initial({scenario::Sine{1.0, 1}, 32});
    const LagrangianState s = lagrangian_initial(d.u0, d.u0x);
    EXPECT_LT(sphere_defect(s), 1e-15);
    EXPECT_LT(tangency_defect(s), 1e-15);
    EXPECT_LT((s.rho_t - 0.5 * d.u0x).max_abs(), 1e-15);
    EXPECT_THROW(lagrangian_initial(d.u0, d.u0x + 1.0), DomainError);
}

}  // namespace
