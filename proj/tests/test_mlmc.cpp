#include <gtest/gtest.h>

#include <cmath>

#include "mac/mlmc.hpp"
#include "mac/oracle.hpp"
#include "support.hpp"

using namespace mac;
using namespace mac::mlmc;

namespace {

std::vector<Transition> rewards_trajectory(const std::vector<double>& rewards) {
    std::vector<Transition> tr;
    for (double r : rewards) tr.push_back({0, 0, r, 0});
    return tr;
}

MdpSpec three_cycle() {
    Matrix K = Matrix::Zero(3, 3);
    K(0, 1) = K(1, 2) = K(2, 0) = 1.0;
    Matrix R(3, 1);
    R << 0.1, 0.2, 0.3;
    return MdpSpec({K}, R, Vector::Constant(3, 1.0 / 3.0));
}

Vector scalar(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST(Level, FirstLevelFrequency) {
    Rng rng(1);
    const int n = 100000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += sample_level(rng, 8).j == 1;
    const double f = static_cast<double>(ones) / n;
    EXPECT_GE(f, 0.495);
    EXPECT_LE(f, 0.505);
}

TEST(Level, GeometricLaw) {
    Rng rng(2);
    const int n = 200000;
    std::vector<int> counts(6, 0);
    for (int i = 0; i < n; ++i) {
        const int j = sample_level(rng, 1024).j;
        ASSERT_GE(j, 1);
        if (j <= 5) ++counts[static_cast<std::size_t>(j)];
    }
    for (int k = 1; k <= 5; ++k) {
        const double p = std::ldexp(1.0, -k);
        EXPECT_NEAR(counts[static_cast<std::size_t>(k)] / static_cast<double>(n), p, 4.0 * std::sqrt(p * (1 - p) / n));
    }
}

TEST(Level, ExpectedRolloutLength) {
    Rng rng(3);
    const int n = 1000000;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += static_cast<double>(rollout_length(sample_level(rng, 8)));
    EXPECT_NEAR(total / n, 3.125, 0.05);
}

TEST(Level, CapFlagAndMaxLevel) {
    EXPECT_EQ(max_level(1), 0);
    EXPECT_EQ(max_level(8), 3);
    EXPECT_EQ(max_level(12), 3);
    Rng rng(4);
    for (int i = 0; i < 10000; ++i) {
        const auto lv = sample_level(rng, 8);
        EXPECT_EQ(lv.capped, lv.j > 3);
        EXPECT_EQ(rollout_length(lv), lv.capped ? 1u : (std::size_t{1} << lv.j));
        const auto one = sample_level(rng, 1);
        EXPECT_TRUE(one.capped);
        EXPECT_EQ(rollout_length(one), 1u);
    }
}

TEST(Rollout, LengthOneAndChaining) {
    const auto spec = build_gridworld({3, 0.2, 1.0});
    Rng rng(5);
    const PolicyParams p(9, 5);
    const auto single = rollout(spec, p, 4, 1, rng);
    ASSERT_EQ(single.size(), 1u);
    EXPECT_EQ(single[0].state, 4u);
    const auto tr = rollout(spec, p, 0, 50, rng);
    ASSERT_EQ(tr.size(), 50u);
    for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_EQ(tr[i].state, tr[i - 1].next_state);
}

TEST(Rollout, DeterministicHandUnroll) {
    const auto spec = three_cycle();
    Rng rng(6);
    const auto tr = rollout(spec, PolicyParams(3, 1), 1, 5, rng);
    const std::vector<StateIndex> states{1, 2, 0, 1, 2};
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(tr[i].state, states[i]);
        EXPECT_EQ(tr[i].next_state, (states[i] + 1) % 3);
        EXPECT_EQ(tr[i].reward, spec.reward(states[i], 0));
    }
}

TEST(Rollout, SeedReplay) {
    const auto spec = build_gridworld({4, 0.1, 1.0});
    Rng a(7), b(7);
    EXPECT_EQ(rollout(spec, PolicyParams(16, 5), 0, 200, a), rollout(spec, PolicyParams(16, 5), 0, 200, b));
}

TEST(Levels, PrefixAveragesByHand) {
    const auto lv = estimate_f(rewards_trajectory({1, 3, 5, 7}), 0.0);
    EXPECT_EQ(lv.l0[0], 1.0);
    EXPECT_EQ(lv.l_half[0], 2.0);
    EXPECT_EQ(lv.l_full[0], 4.0);
}

TEST(Levels, LengthOneIsSingleTerm) {
    const auto lv = estimate_f(rewards_trajectory({0.75}), 0.25);
    EXPECT_EQ(lv.l0[0], 0.5);
    EXPECT_EQ(lv.l_half[0], 0.5);
    EXPECT_EQ(lv.l_full[0], 0.5);
}

TEST(Levels, ZeroIntegrand) {
    const auto spec = constant_reward_fixture(0.4);
    const auto features = one_hot_features(2);
    Rng rng(8);
    const PolicyParams p(2, 2);
    const auto tr = rollout(spec, p, 0, 16, rng);
    const Vector omega = Vector::Zero(2);
    for (const auto& lv : {estimate_f(tr, 0.4), estimate_g(tr, 0.4, omega, features),
                           estimate_h(tr, 0.4, omega, features, p)}) {
        EXPECT_TRUE(lv.l0.isZero(0.0));
        EXPECT_TRUE(lv.l_half.isZero(0.0));
        EXPECT_TRUE(lv.l_full.isZero(0.0));
    }
}

TEST(Levels, DimensionMismatch) {
    const auto features = one_hot_features(3);
    EXPECT_THROW(estimate_g(rewards_trajectory({1.0}), 0.0, Vector::Zero(2), features), std::invalid_argument);
}

TEST(Levels, PrefixConsistencyIsBitwise) {
    const auto spec = build_gridworld({4, 0.1, 1.0});
    const auto features = coarse_tiling_features(4);
    Rng rng(9);
    const auto p = ref::random_params(16, 5, rng);
    const Vector omega = Vector::Random(4) * 0.3;
    for (std::size_t len : {2u, 4u, 8u, 16u, 32u}) {
        const auto tr = rollout(spec, p, 0, len, rng);
        const std::vector<Transition> half(tr.begin(), tr.begin() + static_cast<long>(len / 2));
        EXPECT_EQ(estimate_f(tr, 0.1).l_half, estimate_f(half, 0.1).l_full);
        EXPECT_EQ(estimate_g(tr, 0.1, omega, features).l_half, estimate_g(half, 0.1, omega, features).l_full);
        EXPECT_EQ(estimate_h(tr, 0.1, omega, features, p).l_half, estimate_h(half, 0.1, omega, features, p).l_full);
    }
}

TEST(Combine, Examples) {
    LevelAverages avg{scalar(1), scalar(2), scalar(4)};
    const auto e = mlmc_combine(avg, {2, false}, 8);
    EXPECT_EQ(e.value[0], 9.0);
    EXPECT_EQ(e.samples_used, 4u);

    LevelAverages flat{scalar(1), scalar(3), scalar(3)};
    EXPECT_EQ(mlmc_combine(flat, {3, false}, 8).value[0], 1.0);

    const auto capped = mlmc_combine(avg, {4, true}, 8);
    EXPECT_EQ(capped.value[0], 1.0);
    EXPECT_EQ(capped.samples_used, 1u);
}

TEST(DrawEstimates, SharedTrajectoryAndAccounting) {
    const auto spec = build_gridworld({4, 0.0, 1.0});
    const auto features = one_hot_features(16);
    Rng rng(10);
    const PolicyParams p(16, 5);
    for (int i = 0; i < 2000; ++i) {
        const auto b = draw_estimates(spec, p, 0.1, Vector::Zero(16), features, 0, 8, rng);
        EXPECT_EQ(b.trajectory.size(), b.f.samples_used);
        EXPECT_EQ(b.g.samples_used, b.f.samples_used);
        EXPECT_EQ(b.h.samples_used, b.f.samples_used);
        EXPECT_EQ(b.f.level.j, b.h.level.j);
        EXPECT_EQ(b.f.final_state, b.trajectory.back().next_state);
        if (b.f.level.capped) {
            EXPECT_EQ(b.f.value, b.f.l0);
            EXPECT_EQ(b.trajectory.size(), 1u);
        } else {
            EXPECT_EQ(b.trajectory.size(), std::size_t{1} << b.f.level.j);
        }
    }
}

TEST(DrawEstimates, TmaxOneUsesSingleSample) {
    const auto spec = two_state_fixture();
    const auto features = one_hot_features(2);
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const auto b = draw_estimates(spec, PolicyParams(2, 2), 0.3, Vector::Zero(2), features, 0, 1, rng);
        EXPECT_EQ(b.trajectory.size(), 1u);
        EXPECT_EQ(b.f.value, b.f.l0);
        EXPECT_EQ(b.g.value, b.g.l0);
        EXPECT_EQ(b.h.value, b.h.l0);
    }
}

TEST(MeanCheck, ZeroIntegrandMeansAreExactlyZero) {
    const auto spec = constant_reward_fixture(0.5);
    Rng rng(12);
    const auto report =
        mlmc_mean_check(spec, PolicyParams(2, 2), 0.5, Vector::Zero(2), one_hot_features(2), 4, 10000, rng,
                        spec.initial_dist());
    for (auto f : kFamilies) {
        EXPECT_TRUE(report.family(f).mlmc_mean.isZero(0.0));
        EXPECT_TRUE(report.family(f).deep_mean.isZero(0.0));
    }
    EXPECT_TRUE(report.all_overlap());
}

TEST(MeanCheck, TwoStateFEstimatorAgrees) {
    const auto spec = two_state_fixture();
    Rng rng(13);
    const auto report = mlmc_mean_check(spec, PolicyParams(2, 2), 0.3, Vector::Zero(2), one_hot_features(2), 4,
                                        100000, rng, spec.initial_dist());
    EXPECT_TRUE(report.family(Family::F).overlap);
    EXPECT_GT(report.family(Family::F).mlmc_stderr[0], 0.0);
}

TEST(FitLog2, ExactLogarithmicSeries) {
    const std::vector<std::size_t> t{2, 4, 8, 16, 32};
    std::vector<double> y;
    for (auto v : t) y.push_back(1.5 + 0.25 * std::log2(static_cast<double>(v)));
    const auto fit = fit_log2(t, y);
    EXPECT_NEAR(fit.intercept, 1.5, 1e-12);
    EXPECT_NEAR(fit.slope, 0.25, 1e-12);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
    ASSERT_EQ(fit.increment_ratios.size(), 3u);
    for (double r : fit.increment_ratios) EXPECT_NEAR(r, 1.0, 1e-9);
}

TEST(FitLog2, LinearGrowthShowsSuperLogRatios) {
    const std::vector<std::size_t> t{2, 4, 8, 16, 32};
    std::vector<double> y;
    for (auto v : t) y.push_back(static_cast<double>(v));
    const auto fit = fit_log2(t, y);
    for (double r : fit.increment_ratios) EXPECT_NEAR(r, 2.0, 1e-12);
}
