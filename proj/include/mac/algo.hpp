#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "mac/critic.hpp"
#include "mac/env.hpp"
#include "mac/mlmc.hpp"
#include "mac/oracle.hpp"
#include "mac/policy.hpp"

namespace mac {

enum class StepsizeKind { Constant, Polynomial, AdagradActor };

/// Learning rates for reward tracking (gamma), critic (beta) and actor
/// (alpha). The base values multiply the polynomial decay:
///   constant:      gamma_t = reward,  beta_t = critic,  alpha_t = actor
///   polynomial:    gamma_t = reward (1+t)^-nu, beta_t = critic (1+t)^-nu,
///                  alpha_t = actor (1+t)^-sigma
///   adagrad_actor: as polynomial, but alpha_t = alpha'_t / sqrt(sum_k ||h_k||^2)
///                  with alpha'_t = actor (1+t)^-sigma
struct StepsizeSchedule {
    StepsizeKind kind = StepsizeKind::Constant;
    double actor = 0.01;
    double critic = 0.01;
    double reward = 0.01;
    double nu = 0.5;
    double sigma = 0.75;

    /// Throws std::invalid_argument on negative rates, or when a decaying
    /// schedule violates 0 < nu < sigma < 1, or alpha'_0 > 1 for AdaGrad.
    void validate() const;

    double reward_rate(std::uint64_t t) const;
    double critic_rate(std::uint64_t t) const;
    /// alpha_t for constant/polynomial, alpha'_t for adagrad_actor.
    double actor_base_rate(std::uint64_t t) const;
};

inline constexpr double kAdagradFloor = 1e-12;

/// accumulator' = accumulator + h_norm_sq,
/// alpha_t = alpha_prime / sqrt(max(accumulator', floor)).
std::pair<double, double> adagrad_step(double accumulator, double h_norm_sq, double alpha_prime);

struct LearnerState {
    PolicyParams theta;
    CriticState critic;
    double eta = 0.0;
    StateIndex current_state = 0;
    std::uint64_t iteration = 0;
    std::uint64_t samples_total = 0;
    double adagrad_accumulator = 0.0;
    std::uint64_t eta_clamps = 0;
};

/// Log row describing the learner after `iteration` completed updates.
/// Oracle columns are NaN when diagnostics were not evaluated.
struct RunRow {
    static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

    std::uint64_t iteration = 0;
    int level = 0;                 // J of the last MLMC draw; 0 for vanilla
    std::uint64_t samples_used = 0;
    std::uint64_t samples_total = 0;
    double eta = 0.0;
    double trajectory_mean_reward = 0.0;
    double mlmc_grad_norm_sq = 0.0;   // ||h||^2 of the last actor estimate
    double mean_reward_window = kMissing;
    double oracle_J = kMissing;
    double eta_err_sq = kMissing;
    double critic_err_sq = kMissing;
    double grad_norm_sq = kMissing;
};

/// Evaluates exact diagnostics for a learner state.
class OracleProbe {
public:
    OracleProbe(const MdpSpec& spec, const FeatureMap& features) : spec_(&spec), features_(&features) {}

    /// Fills oracle_J, eta_err_sq, critic_err_sq and grad_norm_sq.
    void fill(const LearnerState& state, RunRow& row) const;

private:
    const MdpSpec* spec_;
    const FeatureMap* features_;
};

/// Fixed inputs shared by every iteration of a run.
struct IterationContext {
    const MdpSpec* spec = nullptr;
    const FeatureMap* features = nullptr;
    StepsizeSchedule schedule;
    bool reset_each_iteration = false;   // restart rollouts from mu_0
    bool vanilla_sequential = false;     // vanilla: per-sample updates instead of averaging
};

struct IterationResult {
    LearnerState state;
    RunRow row;
    std::vector<Transition> trajectory;
};

/// One MAC iteration: level draw, shared rollout, f/g/h MLMC estimates, then
///   eta   <- clamp(eta + gamma_t f, 0, r_max)
///   omega <- Proj(omega + beta_t g)
///   theta <- theta + alpha_t h
/// Throws DivergenceError if an update is non-finite.
IterationResult mac_iteration(const LearnerState& state, const IterationContext& ctx, std::size_t t_max, Rng& rng,
                              const OracleProbe* probe = nullptr);

/// Constant-rollout baseline using plain averages of the per-sample terms.
IterationResult vanilla_ac_iteration(const LearnerState& state, const IterationContext& ctx, std::size_t rollout_len,
                                     Rng& rng, const OracleProbe* probe = nullptr);

enum class Algorithm { Mac, Vanilla };

struct TrainingConfig {
    Algorithm algorithm = Algorithm::Mac;
    std::size_t t_max = 8;
    std::size_t rollout_len = 3;
    StepsizeSchedule schedule;
    std::uint64_t sample_budget = 0;     // 0: no budget
    std::uint64_t max_iterations = 0;    // 0: no cap
    std::uint64_t log_interval = 1000;   // samples between rows; 0 logs every iteration
    std::size_t smoothing_window = 10000;
    std::uint64_t diagnostics_every = 100;   // min iterations between oracle rows; 0 disables
    double eta0 = 0.0;
    std::optional<double> critic_radius;   // default 2 r_max / lambda at theta_0
    double temperature = 1.0;
    bool reset_each_iteration = false;
    bool vanilla_sequential = false;

    void validate() const;
};

struct RunRecord {
    std::vector<RunRow> rows;
    LearnerState final_state;
    double critic_radius = 0.0;
    double final_mean_reward = 0.0;   // trailing-window mean at the end of the run
};

/// Runs MAC or vanilla AC from theta = 0, omega = 0, eta = eta0 and
/// s_1 ~ mu_0 until the sample budget or the iteration cap is exhausted.
/// Rows are logged each time samples_total crosses a multiple of
/// log_interval (one row per crossed checkpoint).
RunRecord run_training(const MdpSpec& spec, const FeatureMap& features, const TrainingConfig& cfg,
                       std::uint64_t seed);

}  // namespace mac
