#include <gtest/gtest.h>

#include "mac/critic.hpp"
#include "mac/oracle.hpp"
#include "support.hpp"

using namespace mac;

TEST(Features, OneHotRowsAreBasisVectors) {
    const auto f = one_hot_features(3);
    EXPECT_TRUE(f.table().isApprox(Matrix::Identity(3, 3)));
    Vector omega(3);
    omega << 1, 2, 3;
    EXPECT_EQ(value(omega, f, 1), 2.0);
}

TEST(Features, RejectsLongRows) {
    Matrix t(2, 2);
    t << 0.8, 0.7, 0.1, 0.0;
    EXPECT_THROW(FeatureMap{t}, std::invalid_argument);
}

TEST(Features, RandomNormalizedRowsAccepted) {
    Rng rng(4);
    for (int k = 0; k < 50; ++k) {
        Matrix t(5, 3);
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = 2.0 * uniform01(rng) - 1.0;
        for (Eigen::Index r = 0; r < 5; ++r) t.row(r) /= std::max(1.0, t.row(r).norm());
        EXPECT_NO_THROW(FeatureMap{t});
        Matrix bad = t;
        bad.row(k % 5) *= 1.0 + 1e-6 + 1.0 / bad.row(k % 5).norm();
        EXPECT_THROW(FeatureMap{bad}, std::invalid_argument);
    }
}

TEST(Features, CoarseTilingPoolsBlocks) {
    const auto f = coarse_tiling_features(4);
    EXPECT_EQ(f.dim(), 4u);
    // (0,0), (0,1), (1,0), (1,1) share tile 0; (3,3) is tile 3
    for (StateIndex s : {0u, 1u, 4u, 5u}) EXPECT_EQ(f.row(s)[0], 1.0);
    EXPECT_EQ(f.row(15)[3], 1.0);
    for (StateIndex s = 0; s < 16; ++s) EXPECT_NEAR(f.row(s).norm(), 1.0, 1e-15);
    EXPECT_EQ(coarse_tiling_features(5).dim(), 9u);
}

TEST(Value, ZeroWeightsAndLinearity) {
    Rng rng(8);
    Matrix t(4, 2);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = 0.5 * uniform01(rng);
    const FeatureMap f(t);
    const Vector w1 = Vector::Random(2), w2 = Vector::Random(2);
    for (StateIndex s = 0; s < 4; ++s) {
        EXPECT_EQ(value(Vector::Zero(2), f, s), 0.0);
        EXPECT_NEAR(value(2.0 * w1 - 3.0 * w2, f, s), 2.0 * value(w1, f, s) - 3.0 * value(w2, f, s), 1e-12);
    }
}

TEST(TdError, Arithmetic) {
    const auto f = one_hot_features(2);
    Vector omega(2);
    omega << 0.5, 0.0;
    // <phi(s') - phi(s), omega> = -0.5
    EXPECT_DOUBLE_EQ(td_error({0, 0, 1.0, 1}, 0.25, omega, f), 0.25);
    EXPECT_EQ(td_error({0, 0, 0.7, 1}, 0.7, Vector::Zero(2), f), 0.0);
}

TEST(TdError, ZeroMeanAtExactValues) {
    Rng rng(14);
    for (int k = 0; k < 10; ++k) {
        const auto spec = ref::random_mdp(4, 3, rng);
        const auto params = ref::random_params(4, 3, rng);
        const auto probs = policy_table(params);
        const auto analysis = oracle::analyze(spec, params);
        const auto f = one_hot_features(4);
        double mean = 0.0;
        for (StateIndex s = 0; s < 4; ++s) {
            for (ActionIndex a = 0; a < 3; ++a) {
                for (StateIndex n = 0; n < 4; ++n) {
                    const double w = analysis.dist[static_cast<Eigen::Index>(s)] *
                                     probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) *
                                     spec.prob(s, a, n);
                    mean += w * td_error({s, a, spec.reward(s, a), n}, analysis.avg_reward, analysis.diff_value, f);
                }
            }
        }
        EXPECT_NEAR(mean, 0.0, 1e-8);
    }
}

TEST(Projection, InteriorUnchanged) {
    Vector v(2);
    v << 0.3, 0.4;
    EXPECT_EQ(project_ball(v, 1.0), v);
}

TEST(Projection, Rescales) {
    Vector v(2);
    v << 3.0, 4.0;
    const Vector p = project_ball(v, 1.0);
    EXPECT_NEAR(p[0], 0.6, 1e-15);
    EXPECT_NEAR(p[1], 0.8, 1e-15);
}

TEST(Projection, IdempotentBitwiseAndInsideBall) {
    Rng rng(10);
    for (int k = 0; k < 1000; ++k) {
        Vector v(5);
        for (Eigen::Index i = 0; i < 5; ++i) v[i] = 10.0 * (2.0 * uniform01(rng) - 1.0);
        const double radius = 0.1 + 5.0 * uniform01(rng);
        const Vector p = project_ball(v, radius);
        EXPECT_LE(p.norm(), radius);
        EXPECT_EQ(project_ball(p, radius), p);
    }
}

TEST(Projection, NonExpansiveTowardBallPoints) {
    Rng rng(12);
    for (int k = 0; k < 1000; ++k) {
        Vector v(3), y(3);
        for (Eigen::Index i = 0; i < 3; ++i) {
            v[i] = 6.0 * (2.0 * uniform01(rng) - 1.0);
            y[i] = 2.0 * uniform01(rng) - 1.0;
        }
        y = project_ball(y, 1.0);
        EXPECT_LE((project_ball(v, 1.0) - y).norm(), (v - y).norm() + 1e-12);
    }
}

TEST(Projection, RejectsNonPositiveRadius) {
    EXPECT_THROW(project_ball(Vector::Ones(2), 0.0), std::invalid_argument);
}
