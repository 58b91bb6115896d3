#pragma once

#include <span>
#include <vector>

#include "mac/types.hpp"

namespace mac {

/// One environment step (s, a, r, s').
struct Transition {
    StateIndex state = 0;
    ActionIndex action = 0;
    double reward = 0.0;
    StateIndex next_state = 0;

    bool operator==(const Transition&) const = default;
};

/// Finite tabular MDP. Immutable after construction; the constructor
/// validates stochasticity of every row, the initial distribution, and the
/// reward range [0, r_max].
class MdpSpec {
public:
    /// `transitions[a]` is the (S x S) kernel of action a. `r_max` defaults to
    /// the largest reward entry when negative.
    MdpSpec(std::vector<Matrix> transitions, Matrix reward, Vector initial_dist,
            double r_max = -1.0);

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }
    double r_max() const { return r_max_; }

    double prob(StateIndex s, ActionIndex a, StateIndex next) const {
        return transitions_[a](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(next));
    }
    double reward(StateIndex s, ActionIndex a) const {
        return reward_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
    }
    const Matrix& kernel(ActionIndex a) const { return transitions_[a]; }
    const Matrix& reward_table() const { return reward_; }
    const Vector& initial_dist() const { return initial_dist_; }

    /// Support of p(.|s,a) with cumulative probabilities, used by `step`.
    struct Outcome {
        StateIndex next;
        double cumulative;
    };
    std::span<const Outcome> outcomes(StateIndex s, ActionIndex a) const {
        const auto& o = outcomes_[s * n_actions_ + a];
        return {o.data(), o.size()};
    }

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<Matrix> transitions_;
    Matrix reward_;
    Vector initial_dist_;
    double r_max_;
    std::vector<std::vector<Outcome>> outcomes_;
};

/// Actions of the gridworld, in index order.
enum class GridAction : ActionIndex { Stay = 0, Up = 1, Down = 2, Left = 3, Right = 4 };

struct GridWorldConfig {
    std::size_t n = 6;
    double slip_prob = 0.0;   // chosen move replaced by a uniform move w.p. slip_prob
    double goal_reward = 1.0;
};

/// Teleport-reset gridworld on an n x n grid. State index is row * n + col;
/// the start is (0, 0) and the goal (n-1, n-1). Moving into the goal earns
/// goal_reward, moves off the grid leave the agent in place, and every action
/// taken at the goal returns the agent to the start with reward 0.
///
/// With slip_prob > 0 the reward table holds the expected reward
/// goal_reward * p(goal | s, a), since rewards are indexed by (s, a) only.
MdpSpec build_gridworld(const GridWorldConfig& cfg);

inline StateIndex grid_start_state() { return 0; }
inline StateIndex grid_goal_state(std::size_t n) { return n * n - 1; }

/// Two-state, two-action fixture. Action 0 keeps the current state; action 1
/// moves 0 -> {0: 0.8, 1: 0.2} and 1 -> {0: 0.4, 1: 0.6}. Reward is 1 in
/// state 0 and 0 in state 1. Under the uniform policy the induced kernel is
/// [[0.9, 0.1], [0.2, 0.8]] with average reward 2/3.
MdpSpec two_state_fixture();

/// Same dynamics as `two_state_fixture` with reward identically `c`.
MdpSpec constant_reward_fixture(double c);

/// Sample one transition. Throws std::out_of_range for bad indices.
Transition step(const MdpSpec& spec, StateIndex state, ActionIndex action, Rng& rng);

/// P_theta(s'|s) = sum_a pi(a|s) p(s'|s,a) for a (S x A) probability table.
Matrix induced_kernel(const MdpSpec& spec, const Matrix& policy_probs);

/// Expected one-step reward r_pi(s) = sum_a pi(a|s) r(s,a).
Vector expected_reward(const MdpSpec& spec, const Matrix& policy_probs);

/// Sample a state from a probability vector.
StateIndex sample_state(const Vector& dist, Rng& rng);

}  // namespace mac
