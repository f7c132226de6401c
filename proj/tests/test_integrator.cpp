#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rhosphere/integrator.hpp"
#include "rhosphere/scenarios.hpp"

namespace {

using namespace rhosphere;

struct Start {
    LagrangianState state;
    double mu;
};

Start sine(std::size_t n, double a) {
    const InitialData d = make_initial({scenario::Sine{a, 1}, n});
    return {lagrangian_initial(d.u0, d.u0x), d.mu};
}

TEST(Integrator, DefaultStepHeuristic) {
    EXPECT_DOUBLE_EQ(default_dt(256, 0.25), 0.5 / 256.0);
    EXPECT_DOUBLE_EQ(default_dt(100, 16.0), 0.5 / 400.0);
}

TEST(Integrator, RungeKuttaIsFourthOrder) {
    const auto [s, mu] = sine(64, 0.5);
    const auto run = [&](double dt) {
        LagrangianState x = s;
        for (int i = 0; i < static_cast<int>(std::lround(0.2 / dt)); ++i) x = rk4_step(x, mu, dt);
        return x;
    };
    const LagrangianState ref = run(0.0025);
    const double e1 = (run(0.02).rho - ref.rho).max_abs();
    const double e2 = (run(0.01).rho - ref.rho).max_abs();
    EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.3);
}

TEST(Integrator, BackwardStepUndoesForwardStep) {
    const auto [s, mu] = sine(32, 0.5);
    const LagrangianState back = rk4_step(rk4_step(s, mu, 1e-3), mu, -1e-3);
    EXPECT_LT((back.rho - s.rho).max_abs(), 1e-12);
    EXPECT_NEAR(back.t, 0.0, 1e-15);
}

TEST(Integrator, ProjectionRestoresSphereAndTangency) {
    const LagrangianState s{GridFunction(16, 2.0), GridFunction(16, 1.0), 0.0, 0.0};
    const LagrangianState p = project(s);
    EXPECT_LT(sphere_defect(p), 1e-15);
    EXPECT_LT(tangency_defect(p), 1e-15);
    EXPECT_THROW(project({GridFunction(16, 0.0), GridFunction(16, 0.0), 0.0, 0.0}), DomainError);
}

TEST(Integrator, EvolveLandsOnTheEndTimeAndConservesEnergy) {
    const auto [s, mu] = sine(64, 1.0);
    IntegratorConfig cfg;
    cfg.dt = 0.003;
    cfg.t_end = 0.1;
    cfg.snapshot_stride = 10;
    const SimulationRecord rec = evolve(s, mu, cfg);
    EXPECT_DOUBLE_EQ(rec.series.back().t, 0.1);
    EXPECT_EQ(rec.series.size(), 35u);
    EXPECT_EQ(rec.snapshots.size(), 5u);
    EXPECT_DOUBLE_EQ(rec.snapshots.back().t, 0.1);
    for (const auto& row : rec.series) {
        EXPECT_NEAR(row.energy, rec.conserved.energy, 1e-10 * rec.conserved.energy);
        EXPECT_LT(std::abs(row.mu_check), 1e-12);
    }
    EXPECT_EQ(rec.dt, 0.003);
    EXPECT_TRUE(rec.projection);
}

TEST(Integrator, EvolveRejectsBadInput) {
    const auto [s, mu] = sine(32, 1.0);
    IntegratorConfig cfg;
    cfg.dt = 0.0;
    EXPECT_THROW(evolve(s, mu, cfg), DomainError);
    cfg.dt = 1e-3;
    LagrangianState off = s;
    off.rho *= 1.1;
    EXPECT_THROW(evolve(off, mu, cfg), DomainError);
}

TEST(Integrator, ConstantFlowTranslatesParticleZero) {
    const InitialData d = make_initial({scenario::Constant{0.5}, 32});
    IntegratorConfig cfg;
    cfg.dt = 0.01;
    cfg.t_end = 1.0;
    const SimulationRecord rec = evolve(lagrangian_initial(d.u0, d.u0x), d.mu, cfg);
    EXPECT_NEAR(rec.snapshots.back().k0, 0.5, 1e-13);
    EXPECT_TRUE(rec.events.empty());
    const GronwallReport g = gronwall_check(rec);
    EXPECT_GE(g.worst_ratio, 1.0);
}

TEST(Breaking, CountsZerosAroundTheCircle) {
    GridFunction rho(16, 1.0);
    EXPECT_EQ(detail::count_zeros(rho), 0u);
    rho[4] = -0.5;
    rho[5] = -0.5;
    EXPECT_EQ(detail::count_zeros(rho), 2u);
}

TEST(Breaking, OnsetStepsFormOneEventAndDriftDoesNot) {
    const std::size_t n = 16;
    const auto state = [&](double t, std::size_t first_negative, std::size_t count) {
        GridFunction rho(n, 1.0);
        for (std::size_t j = first_negative; j < first_negative + count; ++j) rho[j] = -0.1;
        return LagrangianState{rho, GridFunction(n, 0.0), 0.0, t};
    };
    SimulationRecord rec;
    for (int i = 0; i < 4; ++i) rec.series.push_back(SeriesRow{0.1 * i});
    const auto onset = detail::step_activity(state(0.0, 0, 0), state(0.1, 8, 1), 1, 1e-6);
    ASSERT_TRUE(onset.has_value());
    EXPECT_TRUE(onset->onset);
    rec.activity.push_back(*onset);
    const auto drift = detail::step_activity(state(0.1, 8, 1), state(0.2, 9, 1), 2, 1e-6);
    ASSERT_TRUE(drift.has_value());
    EXPECT_FALSE(drift->onset);
    rec.activity.push_back(*drift);
    const auto events = detect_breaking(rec);
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(events[0].locations, std::vector<std::size_t>{8});
    EXPECT_NEAR(events[0].time, 0.1 * 1.0 / 1.1, 1e-15);
    EXPECT_DOUBLE_EQ(events[0].t_before, 0.0);
    EXPECT_DOUBLE_EQ(events[0].t_after, 0.1);
}

TEST(Breaking, QuietStepsProduceNoActivity) {
    const LagrangianState a{GridFunction(16, 1.0), GridFunction(16, 0.0), 0.0, 0.0};
    EXPECT_FALSE(detail::step_activity(a, a, 1, 1e-6).has_value());
}

TEST(Integrator, ProjectionExamples) {
    const auto [s, mu] = sine(128, 0.5);
    const LagrangianState same = project(s);
    EXPECT_LT((same.rho - s.rho).max_abs(), 1e-15);
    EXPECT_LT((same.rho_t - s.rho_t).max_abs(), 1e-15);

    LagrangianState scaled = s;
    scaled.rho *= 1.01;
    EXPECT_LT((project(scaled).rho - s.rho).max_abs(), 1e-15);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        LagrangianState noisy = s;
        noisy.rho *= 1.0 + 1e-3 * unit(rng);
        noisy.rho_t += (1e-3 * unit(rng)) * noisy.rho;
        const LagrangianState p = project(noisy);
        EXPECT_LE(sphere_defect(p), 1e-15);
        EXPECT_LE(tangency_defect(p), 1e-15);
        EXPECT_LE(std::abs(energy(p, mu) - energy(s, mu)), 1e-5);
    }
}

}  // namespace
