#include "mac/env.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mac {

namespace {

constexpr double kRowTol = 1e-12;

void check_distribution(const auto& row, const std::string& what) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < row.size(); ++i) {
        const double p = row[i];
        if (!std::isfinite(p) || p < 0.0) throw std::invalid_argument(what + ": negative or non-finite entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kRowTol) {
        throw std::invalid_argument(what + ": sums to " + std::to_string(sum) + ", expected 1");
    }
}

}  // namespace

MdpSpec::MdpSpec(std::vector<Matrix> transitions, Matrix reward, Vector initial_dist, double r_max)
    : n_states_(static_cast<std::size_t>(initial_dist.size())),
      n_actions_(transitions.size()),
      transitions_(std::move(transitions)),
      reward_(std::move(reward)),
      initial_dist_(std::move(initial_dist)),
      r_max_(r_max) {
    if (n_states_ == 0 || n_actions_ == 0) throw std::invalid_argument("MdpSpec: empty state or action set");
    const auto S = static_cast<Eigen::Index>(n_states_);
    const auto A = static_cast<Eigen::Index>(n_actions_);
    for (std::size_t a = 0; a < n_actions_; ++a) {
        if (transitions_[a].rows() != S || transitions_[a].cols() != S) {
            throw std::invalid_argument("MdpSpec: kernel of action " + std::to_string(a) + " has wrong shape");
        }
        for (Eigen::Index s = 0; s < S; ++s) {
            check_distribution(transitions_[a].row(s),
                               "MdpSpec: transition row (s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")");
        }
    }
    check_distribution(initial_dist_, "MdpSpec: initial distribution");
    if (reward_.rows() != S || reward_.cols() != A) throw std::invalid_argument("MdpSpec: reward table has wrong shape");
    if (!reward_.allFinite() || reward_.minCoeff() < 0.0) {
        throw std::invalid_argument("MdpSpec: rewards must be finite and non-negative");
    }
    if (r_max_ < 0.0) r_max_ = reward_.maxCoeff();
    if (!std::isfinite(r_max_) || reward_.maxCoeff() > r_max_) {
        throw std::invalid_argument("MdpSpec: reward exceeds r_max");
    }

    outcomes_.resize(n_states_ * n_actions_);
    for (std::size_t s = 0; s < n_states_; ++s) {
        for (std::size_t a = 0; a < n_actions_; ++a) {
            auto& list = outcomes_[s * n_actions_ + a];
            double acc = 0.0;
            for (std::size_t next = 0; next < n_states_; ++next) {
                const double p = prob(s, a, next);
                if (p > 0.0) {
                    acc += p;
                    list.push_back({next, acc});
                }
            }
        }
    }
}

MdpSpec build_gridworld(const GridWorldConfig& cfg) {
    if (cfg.n < 2) throw std::invalid_argument("build_gridworld: n must be at least 2");
    if (!(cfg.slip_prob >= 0.0 && cfg.slip_prob < 1.0)) {
        throw std::invalid_argument("build_gridworld: slip_prob must lie in [0, 1)");
    }
    if (!(cfg.goal_reward >= 0.0) || !std::isfinite(cfg.goal_reward)) {
        throw std::invalid_argument("build_gridworld: goal_reward must be finite and non-negative");
    }
    const std::size_t n = cfg.n;
    const std::size_t S = n * n;
    constexpr std::size_t A = 5;
    const StateIndex start = grid_start_state();
    const StateIndex goal = grid_goal_state(n);

    auto move = [n](StateIndex s, std::size_t a) -> StateIndex {
        std::size_t r = s / n;
        std::size_t c = s % n;
        switch (static_cast<GridAction>(a)) {
            case GridAction::Stay: break;
            case GridAction::Up: if (r > 0) --r; break;
            case GridAction::Down: if (r + 1 < n) ++r; break;
            case GridAction::Left: if (c > 0) --c; break;
            case GridAction::Right: if (c + 1 < n) ++c; break;
        }
        return r * n + c;
    };

    const auto Si = static_cast<Eigen::Index>(S);
    std::vector<Matrix> kernels(A, Matrix::Zero(Si, Si));
    Matrix reward = Matrix::Zero(Si, static_cast<Eigen::Index>(A));
    const double slip_each = cfg.slip_prob / static_cast<double>(A);

    for (StateIndex s = 0; s < S; ++s) {
        const auto si = static_cast<Eigen::Index>(s);
        for (std::size_t a = 0; a < A; ++a) {
            auto& P = kernels[a];
            if (s == goal) {
                P(si, static_cast<Eigen::Index>(start)) = 1.0;
                continue;
            }
            P(si, static_cast<Eigen::Index>(move(s, a))) += 1.0 - cfg.slip_prob;
            if (cfg.slip_prob > 0.0) {
                for (std::size_t b = 0; b < A; ++b) P(si, static_cast<Eigen::Index>(move(s, b))) += slip_each;
            }
            reward(si, static_cast<Eigen::Index>(a)) = cfg.goal_reward * P(si, static_cast<Eigen::Index>(goal));
        }
    }

    Vector init = Vector::Zero(Si);
    init[static_cast<Eigen::Index>(start)] = 1.0;
    return MdpSpec(std::move(kernels), std::move(reward), std::move(init), cfg.goal_reward);
}

namespace {

std::vector<Matrix> two_state_kernels() {
    Matrix stay(2, 2);
    stay << 1.0, 0.0,
            0.0, 1.0;
    Matrix move(2, 2);
    move << 0.8, 0.2,
            0.4, 0.6;
    return {stay, move};
}

}  // namespace

MdpSpec two_state_fixture() {
    Matrix reward(2, 2);
    reward << 1.0, 1.0,
              0.0, 0.0;
    return MdpSpec(two_state_kernels(), reward, Vector::Constant(2, 0.5));
}

MdpSpec constant_reward_fixture(double c) {
    return MdpSpec(two_state_kernels(), Matrix::Constant(2, 2, c), Vector::Constant(2, 0.5));
}

Transition step(const MdpSpec& spec, StateIndex state, ActionIndex action, Rng& rng) {
    if (state >= spec.n_states() || action >= spec.n_actions()) {
        throw std::out_of_range("step: state or action index out of range");
    }
    const auto outcomes = spec.outcomes(state, action);
    const double u = uniform01(rng);
    StateIndex next = outcomes.back().next;
    for (const auto& o : outcomes) {
        if (u < o.cumulative) {
            next = o.next;
            break;
        }
    }
    return {state, action, spec.reward(state, action), next};
}

Matrix induced_kernel(const MdpSpec& spec, const Matrix& policy_probs) {
    const auto S = static_cast<Eigen::Index>(spec.n_states());
    const auto A = static_cast<Eigen::Index>(spec.n_actions());
    if (policy_probs.rows() != S || policy_probs.cols() != A) {
        throw std::invalid_argument("induced_kernel: policy table shape does not match the MDP");
    }
    Matrix P = Matrix::Zero(S, S);
    for (Eigen::Index a = 0; a < A; ++a) {
        P += policy_probs.col(a).asDiagonal() * spec.kernel(static_cast<ActionIndex>(a));
    }
    return P;
}

Vector expected_reward(const MdpSpec& spec, const Matrix& policy_probs) {
    if (policy_probs.rows() != spec.reward_table().rows() || policy_probs.cols() != spec.reward_table().cols()) {
        throw std::invalid_argument("expected_reward: policy table shape does not match the MDP");
    }
    return policy_probs.cwiseProduct(spec.reward_table()).rowwise().sum();
}

StateIndex sample_state(const Vector& dist, Rng& rng) {
    return sample_categorical(dist, rng);
}

}  // namespace mac
