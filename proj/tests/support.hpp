#pragma once

// Independent reference computations used as test oracles. None of these
// call into the oracle module.

#include <cmath>
#include <vector>

#include "mac/env.hpp"
#include "mac/policy.hpp"

namespace mac::ref {

/// Random MDP with strictly positive kernels and rewards in [0, 1).
inline MdpSpec random_mdp(std::size_t S, std::size_t A, Rng& rng) {
    std::vector<Matrix> kernels;
    for (std::size_t a = 0; a < A; ++a) {
        Matrix K(S, S);
        for (Eigen::Index i = 0; i < K.rows(); ++i) {
            for (Eigen::Index j = 0; j < K.cols(); ++j) K(i, j) = 0.05 + uniform01(rng);
            K.row(i) /= K.row(i).sum();
        }
        kernels.push_back(K);
    }
    Matrix R(S, A);
    for (Eigen::Index i = 0; i < R.size(); ++i) R.data()[i] = uniform01(rng);
    return MdpSpec(kernels, R, Vector::Constant(static_cast<Eigen::Index>(S), 1.0 / static_cast<double>(S)));
}

inline PolicyParams random_params(std::size_t S, std::size_t A, Rng& rng, double scale = 2.0) {
    PolicyParams p(S, A);
    for (Eigen::Index i = 0; i < p.prefs.size(); ++i) p.prefs.data()[i] = scale * (2.0 * uniform01(rng) - 1.0);
    return p;
}

inline Matrix flip_chain(double p) {
    Matrix P(2, 2);
    P << 1.0 - p, p, p, 1.0 - p;
    return P;
}

/// Stationary distribution of a primitive kernel as a row of P^(2^k).
inline Vector stationary_by_squaring(const Matrix& P, int squarings = 60) {
    Matrix M = P;
    for (int i = 0; i < squarings; ++i) {
        M = M * M;
        M = M.array().colwise() / M.rowwise().sum().array();
    }
    return M.row(0).transpose();
}

/// J(theta) from the squaring oracle.
inline double reference_average_reward(const MdpSpec& spec, const Matrix& probs) {
    const auto S = static_cast<Eigen::Index>(spec.n_states());
    Matrix P = Matrix::Zero(S, S);
    Vector r = Vector::Zero(S);
    for (Eigen::Index s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < spec.n_actions(); ++a) {
            const double w = probs(s, static_cast<Eigen::Index>(a));
            P.row(s) += w * spec.kernel(a).row(s);
            r[s] += w * spec.reward(static_cast<StateIndex>(s), a);
        }
    }
    return stationary_by_squaring(P).dot(r);
}

/// Deterministic policy table selecting action[s] in state s.
inline Matrix deterministic_policy(const std::vector<ActionIndex>& action, std::size_t n_actions) {
    Matrix probs = Matrix::Zero(static_cast<Eigen::Index>(action.size()), static_cast<Eigen::Index>(n_actions));
    for (std::size_t s = 0; s < action.size(); ++s) {
        probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(action[s])) = 1.0;
    }
    return probs;
}

/// Gridworld policy: right until the last column, then down to the goal.
inline std::vector<ActionIndex> shortest_path_actions(std::size_t n) {
    std::vector<ActionIndex> act(n * n, static_cast<ActionIndex>(GridAction::Right));
    for (std::size_t r = 0; r < n; ++r) act[r * n + n - 1] = static_cast<ActionIndex>(GridAction::Down);
    return act;
}

}  // namespace mac::ref
