#include <gtest/gtest.h>

#include "mac/env.hpp"
#include "mac/oracle.hpp"
#include "support.hpp"

using namespace mac;

namespace {

constexpr ActionIndex kStay = 0, kUp = 1, kDown = 2, kLeft = 3, kRight = 4;

Matrix uniform_probs(std::size_t S, std::size_t A) {
    return Matrix::Constant(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A), 1.0 / static_cast<double>(A));
}

}  // namespace

TEST(MdpSpec, RejectsNonStochasticRows) {
    Matrix K = Matrix::Identity(2, 2);
    K(0, 0) = 0.9;
    EXPECT_THROW(MdpSpec({K}, Matrix::Zero(2, 1), Vector::Constant(2, 0.5)), std::invalid_argument);
}

TEST(MdpSpec, RejectsBadInitialDistribution) {
    EXPECT_THROW(MdpSpec({Matrix::Identity(2, 2)}, Matrix::Zero(2, 1), Vector::Constant(2, 0.6)),
                 std::invalid_argument);
}

TEST(MdpSpec, RejectsNegativeRewards) {
    Matrix R = Matrix::Zero(2, 1);
    R(1, 0) = -0.5;
    EXPECT_THROW(MdpSpec({Matrix::Identity(2, 2)}, R, Vector::Constant(2, 0.5)), std::invalid_argument);
}

TEST(Gridworld, TwoByTwoLayout) {
    const auto spec = build_gridworld({2, 0.0, 1.0});
    EXPECT_EQ(spec.n_states(), 4u);
    EXPECT_EQ(spec.n_actions(), 5u);
    Rng rng(1);
    const auto right = step(spec, 0, kRight, rng);
    EXPECT_EQ(right.next_state, 1u);
    EXPECT_EQ(right.reward, 0.0);
    const auto down = step(spec, 1, kDown, rng);
    EXPECT_EQ(down.next_state, 3u);
    EXPECT_EQ(down.reward, 1.0);
}

TEST(Gridworld, GoalTeleportsToStart) {
    const auto spec = build_gridworld({2, 0.0, 1.0});
    Rng rng(2);
    for (ActionIndex a = 0; a < 5; ++a) {
        const auto tr = step(spec, grid_goal_state(2), a, rng);
        EXPECT_EQ(tr.next_state, grid_start_state());
        EXPECT_EQ(tr.reward, 0.0);
    }
}

TEST(Gridworld, WallsResolveToStay) {
    const auto spec = build_gridworld({3, 0.0, 1.0});
    Rng rng(3);
    EXPECT_EQ(step(spec, 0, kUp, rng).next_state, 0u);
    EXPECT_EQ(step(spec, 0, kLeft, rng).next_state, 0u);
    EXPECT_EQ(step(spec, 2, kRight, rng).next_state, 2u);
    EXPECT_EQ(step(spec, 4, kStay, rng).next_state, 4u);
}

TEST(Gridworld, ShortestPathCycleAverageReward) {
    const std::size_t n = 6;
    const auto spec = build_gridworld({n, 0.0, 1.0});
    const auto probs = ref::deterministic_policy(ref::shortest_path_actions(n), 5);
    // 10 moves to the goal plus one teleport step per reward.
    EXPECT_NEAR(oracle::average_reward(spec, probs), 1.0 / 11.0, 1e-12);
}

TEST(Gridworld, RejectsTinyGrid) {
    EXPECT_THROW(build_gridworld({1, 0.0, 1.0}), std::invalid_argument);
}

TEST(Gridworld, SlipRewardIsExpectedReward) {
    const double slip = 0.2;
    const auto spec = build_gridworld({2, slip, 1.0});
    // From (0,1): down reaches the goal directly, or via a slip that picks down.
    EXPECT_NEAR(spec.reward(1, kDown), (1.0 - slip) + slip / 5.0, 1e-12);
    EXPECT_NEAR(spec.prob(1, kDown, 3), spec.reward(1, kDown), 1e-12);
}

TEST(Gridworld, PositivePolicyChainsArePrimitive) {
    for (std::size_t n : {2u, 3u, 4u, 6u}) {
        const auto spec = build_gridworld({n, 0.0, 1.0});
        EXPECT_TRUE(oracle::is_primitive(induced_kernel(spec, uniform_probs(n * n, 5)))) << n;
    }
}

TEST(Step, DeterministicRowIgnoresSeed) {
    const auto spec = build_gridworld({3, 0.0, 1.0});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        EXPECT_EQ(step(spec, 4, kRight, rng).next_state, 5u);
    }
}

TEST(Step, UniformRowFrequency) {
    Matrix K(1, 2);
    K << 0.5, 0.5;
    Matrix K2(2, 2);
    K2 << 0.5, 0.5, 0.5, 0.5;
    const MdpSpec spec({K2}, Matrix::Zero(2, 1), Vector::Constant(2, 0.5));
    Rng rng(11);
    const int n = 100000;
    int zeros = 0;
    for (int i = 0; i < n; ++i) zeros += step(spec, 0, 0, rng).next_state == 0;
    const double freq = static_cast<double>(zeros) / n;
    EXPECT_GE(freq, 0.495);
    EXPECT_LE(freq, 0.505);
}

TEST(Step, SeedReplayIsBitwise) {
    const auto spec = build_gridworld({4, 0.3, 1.0});
    Rng a(5), b(5);
    for (int i = 0; i < 1000; ++i) {
        const auto s = static_cast<StateIndex>(i % 16);
        const auto act = static_cast<ActionIndex>(i % 5);
        EXPECT_EQ(step(spec, s, act, a), step(spec, s, act, b));
    }
}

TEST(Step, OutOfRangeFailsFast) {
    const auto spec = two_state_fixture();
    Rng rng(1);
    EXPECT_THROW(step(spec, 2, 0, rng), std::out_of_range);
    EXPECT_THROW(step(spec, 0, 2, rng), std::out_of_range);
}

TEST(InducedKernel, DeterministicPolicySelectsRow) {
    const auto spec = build_gridworld({3, 0.1, 1.0});
    std::vector<ActionIndex> act(9, kLeft);
    const Matrix P = induced_kernel(spec, ref::deterministic_policy(act, 5));
    for (Eigen::Index s = 0; s < 9; ++s) {
        EXPECT_TRUE(P.row(s).isApprox(spec.kernel(kLeft).row(s), 1e-15));
    }
}

TEST(InducedKernel, EqualMixtureOfIdentityAndSwap) {
    Matrix swap(2, 2);
    swap << 0, 1, 1, 0;
    const MdpSpec spec({Matrix::Identity(2, 2), swap}, Matrix::Zero(2, 2), Vector::Constant(2, 0.5));
    const Matrix P = induced_kernel(spec, uniform_probs(2, 2));
    EXPECT_TRUE(P.isApprox(Matrix::Constant(2, 2, 0.5)));
}

TEST(InducedKernel, GridHandEnumeration) {
    const auto spec = build_gridworld({2, 0.0, 1.0});
    const Matrix P = induced_kernel(spec, uniform_probs(4, 5));
    // start (0,0): stay, up, left keep it; down -> 2; right -> 1
    EXPECT_NEAR(P(0, 0), 0.6, 1e-15);
    EXPECT_NEAR(P(0, 1), 0.2, 1e-15);
    EXPECT_NEAR(P(0, 2), 0.2, 1e-15);
    // goal teleports
    EXPECT_NEAR(P(3, 0), 1.0, 1e-15);
    for (Eigen::Index s = 0; s < 4; ++s) EXPECT_NEAR(P.row(s).sum(), 1.0, 1e-12);
}

TEST(InducedKernel, RowStochasticOnRandomPolicies) {
    Rng rng(17);
    const auto spec = build_gridworld({4, 0.25, 1.0});
    for (int k = 0; k < 20; ++k) {
        const Matrix P = induced_kernel(spec, policy_table(ref::random_params(16, 5, rng, 4.0)));
        for (Eigen::Index s = 0; s < P.rows(); ++s) EXPECT_NEAR(P.row(s).sum(), 1.0, 1e-12);
        EXPECT_GE(P.minCoeff(), 0.0);
    }
}

TEST(InducedKernel, ShapeMismatchThrows) {
    const auto spec = two_state_fixture();
    EXPECT_THROW(induced_kernel(spec, Matrix::Constant(3, 2, 0.5)), std::invalid_argument);
}

TEST(TwoStateFixture, UniformPolicyKernel) {
    const auto spec = two_state_fixture();
    Matrix expected(2, 2);
    expected << 0.9, 0.1, 0.2, 0.8;
    EXPECT_TRUE(induced_kernel(spec, uniform_probs(2, 2)).isApprox(expected, 1e-15));
}
