#include "mac/algo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace mac {

namespace {

double decay(std::uint64_t t, double exponent) {
    return std::pow(1.0 + static_cast<double>(t), -exponent);
}

void require_rate(double value, const char* name) {
    if (!std::isfinite(value) || value < 0.0) {
        throw std::invalid_argument(std::string("stepsize: ") + name + " must be finite and non-negative");
    }
}

void check_context(const IterationContext& ctx) {
    if (ctx.spec == nullptr || ctx.features == nullptr) {
        throw std::invalid_argument("iteration context: spec and features are required");
    }
    if (ctx.features->n_states() != ctx.spec->n_states()) {
        throw std::invalid_argument("iteration context: feature table does not cover every state");
    }
}

void check_finite(const LearnerState& s) {
    if (!std::isfinite(s.eta) || !s.critic.omega.allFinite() || !s.theta.prefs.allFinite()) {
        std::ostringstream msg;
        msg << "non-finite parameter after iteration " << s.iteration << " (eta=" << s.eta
            << ", |omega|=" << s.critic.omega.norm() << ", |theta|=" << s.theta.flat().norm() << ")";
        throw DivergenceError(msg.str());
    }
}

/// Applies the three updates at schedule time t with ascent-direction terms.
void apply_updates(LearnerState& s, const IterationContext& ctx, std::uint64_t t, double f, const Vector& g,
                   const Vector& h) {
    const auto& sched = ctx.schedule;
    const double r_max = ctx.spec->r_max();

    double eta = s.eta + sched.reward_rate(t) * f;
    if (eta < 0.0 || eta > r_max) {
        eta = std::clamp(eta, 0.0, r_max);
        ++s.eta_clamps;
    }
    s.eta = eta;

    s.critic.omega = project_ball(s.critic.omega + sched.critic_rate(t) * g, s.critic.radius);

    double alpha = sched.actor_base_rate(t);
    if (sched.kind == StepsizeKind::AdagradActor) {
        std::tie(s.adagrad_accumulator, alpha) = adagrad_step(s.adagrad_accumulator, h.squaredNorm(), alpha);
    }
    s.theta.flat() += alpha * h;
}

double mean_reward(const std::vector<Transition>& trajectory) {
    double sum = 0.0;
    for (const auto& tr : trajectory) sum += tr.reward;
    return trajectory.empty() ? 0.0 : sum / static_cast<double>(trajectory.size());
}

StateIndex rollout_start(const LearnerState& state, const IterationContext& ctx, Rng& rng) {
    return ctx.reset_each_iteration ? sample_state(ctx.spec->initial_dist(), rng) : state.current_state;
}

void finish_iteration(IterationResult& out, const LearnerState& before, int level, const Vector& h,
                      const OracleProbe* probe) {
    auto& s = out.state;
    s.iteration = before.iteration + 1;
    s.samples_total = before.samples_total + out.trajectory.size();
    s.current_state = out.trajectory.back().next_state;
    check_finite(s);

    auto& row = out.row;
    row.iteration = s.iteration;
    row.level = level;
    row.samples_used = out.trajectory.size();
    row.samples_total = s.samples_total;
    row.eta = s.eta;
    row.trajectory_mean_reward = mean_reward(out.trajectory);
    row.mlmc_grad_norm_sq = h.squaredNorm();
    if (probe != nullptr) probe->fill(s, row);
}

/// Trailing mean of the last W rewards.
class RewardWindow {
public:
    explicit RewardWindow(std::size_t width) : buf_(std::max<std::size_t>(1, width), 0.0) {}

    void push(double r) {
        if (count_ < buf_.size()) {
            ++count_;
        } else {
            sum_ -= buf_[head_];
        }
        buf_[head_] = r;
        sum_ += r;
        head_ = (head_ + 1) % buf_.size();
        // refresh the running sum once per wrap to keep rounding drift bounded
        if (head_ == 0) {
            sum_ = 0.0;
            for (std::size_t i = 0; i < count_; ++i) sum_ += buf_[i];
        }
    }

    double mean() const { return count_ == 0 ? 0.0 : sum_ / static_cast<double>(count_); }

private:
    std::vector<double> buf_;
    std::size_t head_ = 0;
    std::size_t count_ = 0;
    double sum_ = 0.0;
};

}  // namespace

void StepsizeSchedule::validate() const {
    require_rate(actor, "actor rate");
    require_rate(critic, "critic rate");
    require_rate(reward, "reward rate");
    if (kind == StepsizeKind::Constant) return;
    if (!(0.0 < nu && nu < sigma && sigma < 1.0)) {
        throw std::invalid_argument("stepsize: decaying schedules require 0 < nu < sigma < 1");
    }
    if (kind == StepsizeKind::AdagradActor && actor > 1.0) {
        throw std::invalid_argument("stepsize: adagrad actor base rate must satisfy alpha'_0 <= 1");
    }
}

double StepsizeSchedule::reward_rate(std::uint64_t t) const {
    return kind == StepsizeKind::Constant ? reward : reward * decay(t, nu);
}

double StepsizeSchedule::critic_rate(std::uint64_t t) const {
    return kind == StepsizeKind::Constant ? critic : critic * decay(t, nu);
}

double StepsizeSchedule::actor_base_rate(std::uint64_t t) const {
    return kind == StepsizeKind::Constant ? actor : actor * decay(t, sigma);
}

std::pair<double, double> adagrad_step(double accumulator, double h_norm_sq, double alpha_prime) {
    if (!(accumulator >= 0.0) || !(h_norm_sq >= 0.0) || !(alpha_prime >= 0.0)) {
        throw std::invalid_argument("adagrad_step: inputs must be non-negative");
    }
    const double acc = accumulator + h_norm_sq;
    return {acc, alpha_prime / std::sqrt(std::max(acc, kAdagradFloor))};
}

void OracleProbe::fill(const LearnerState& state, RunRow& row) const {
    const auto analysis = oracle::analyze(*spec_, state.theta);
    const auto fp = oracle::critic_fixed_point(*spec_, state.theta, *features_);
    row.oracle_J = analysis.avg_reward;
    row.eta_err_sq = (state.eta - analysis.avg_reward) * (state.eta - analysis.avg_reward);
    row.critic_err_sq = oracle::critic_error_sq(state.critic.omega, fp);
    row.grad_norm_sq = analysis.exact_gradient.squaredNorm();
}

IterationResult mac_iteration(const LearnerState& state, const IterationContext& ctx, std::size_t t_max, Rng& rng,
                              const OracleProbe* probe) {
    check_context(ctx);
    const StateIndex start = rollout_start(state, ctx, rng);
    auto bundle = mlmc::draw_estimates(*ctx.spec, state.theta, state.eta, state.critic.omega, *ctx.features, start,
                                       t_max, rng);

    IterationResult out{state, {}, std::move(bundle.trajectory)};
    apply_updates(out.state, ctx, state.iteration, bundle.f.value[0], bundle.g.value, bundle.h.value);
    finish_iteration(out, state, bundle.f.level.j, bundle.h.value, probe);
    return out;
}

IterationResult vanilla_ac_iteration(const LearnerState& state, const IterationContext& ctx, std::size_t rollout_len,
                                     Rng& rng, const OracleProbe* probe) {
    check_context(ctx);
    if (rollout_len == 0) throw std::invalid_argument("vanilla_ac_iteration: rollout length must be positive");
    const StateIndex start = rollout_start(state, ctx, rng);
    IterationResult out{state, {}, mlmc::rollout(*ctx.spec, state.theta, start, rollout_len, rng)};

    const auto& features = *ctx.features;
    Vector last_h;
    if (ctx.vanilla_sequential) {
        // each transition updates the parameters before the next term is formed
        for (const auto& tr : out.trajectory) {
            const std::vector<Transition> one{tr};
            auto& s = out.state;
            const double f = mlmc::estimate_f(one, s.eta).l_full[0];
            const Vector g = mlmc::estimate_g(one, s.eta, s.critic.omega, features).l_full;
            last_h = mlmc::estimate_h(one, s.eta, s.critic.omega, features, s.theta).l_full;
            apply_updates(s, ctx, state.iteration, f, g, last_h);
        }
    } else {
        const double f = mlmc::estimate_f(out.trajectory, state.eta).l_full[0];
        const Vector g = mlmc::estimate_g(out.trajectory, state.eta, state.critic.omega, features).l_full;
        last_h = mlmc::estimate_h(out.trajectory, state.eta, state.critic.omega, features, state.theta).l_full;
        apply_updates(out.state, ctx, state.iteration, f, g, last_h);
    }
    finish_iteration(out, state, 0, last_h, probe);
    return out;
}

void TrainingConfig::validate() const {
    schedule.validate();
    if (algorithm == Algorithm::Mac && t_max == 0) throw std::invalid_argument("training: t_max must be positive");
    if (algorithm == Algorithm::Vanilla && rollout_len == 0) {
        throw std::invalid_argument("training: rollout_len must be positive");
    }
    if (sample_budget == 0 && max_iterations == 0) {
        throw std::invalid_argument("training: set a sample budget or an iteration cap");
    }
    if (smoothing_window == 0) throw std::invalid_argument("training: smoothing_window must be positive");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument("training: temperature must be positive");
    }
    if (critic_radius && !(*critic_radius > 0.0)) throw std::invalid_argument("training: critic_radius must be positive");
    if (!std::isfinite(eta0) || eta0 < 0.0) throw std::invalid_argument("training: eta0 must be non-negative");
}

RunRecord run_training(const MdpSpec& spec, const FeatureMap& features, const TrainingConfig& cfg,
                       std::uint64_t seed) {
    cfg.validate();
    if (cfg.eta0 > spec.r_max()) throw std::invalid_argument("training: eta0 exceeds r_max");

    Rng rng(seed);
    IterationContext ctx{&spec, &features, cfg.schedule, cfg.reset_each_iteration, cfg.vanilla_sequential};
    const OracleProbe probe(spec, features);

    LearnerState state;
    state.theta = PolicyParams(spec.n_states(), spec.n_actions(), cfg.temperature);
    state.eta = cfg.eta0;
    state.critic.omega = Vector::Zero(static_cast<Eigen::Index>(features.dim()));
    state.critic.radius = cfg.critic_radius
                              ? *cfg.critic_radius
                              : oracle::critic_radius(spec.r_max(), oracle::critic_fixed_point(spec, state.theta, features));
    state.current_state = sample_state(spec.initial_dist(), rng);

    RunRecord record;
    record.critic_radius = state.critic.radius;
    RewardWindow window(cfg.smoothing_window);
    std::uint64_t next_checkpoint = cfg.log_interval;
    bool have_diag = false;
    std::uint64_t last_diag = 0;

    auto budget_left = [&] {
        return (cfg.sample_budget == 0 || state.samples_total < cfg.sample_budget) &&
               (cfg.max_iterations == 0 || state.iteration < cfg.max_iterations);
    };

    while (budget_left()) {
        auto step = cfg.algorithm == Algorithm::Mac ? mac_iteration(state, ctx, cfg.t_max, rng)
                                                    : vanilla_ac_iteration(state, ctx, cfg.rollout_len, rng);
        state = std::move(step.state);
        for (const auto& tr : step.trajectory) window.push(tr.reward);

        std::size_t n_rows = 0;
        if (cfg.log_interval == 0) {
            n_rows = 1;
        } else {
            while (state.samples_total >= next_checkpoint) {
                ++n_rows;
                next_checkpoint += cfg.log_interval;
            }
        }
        if (n_rows == 0) continue;

        RunRow row = step.row;
        row.mean_reward_window = window.mean();
        if (cfg.diagnostics_every > 0 && (!have_diag || state.iteration - last_diag >= cfg.diagnostics_every)) {
            probe.fill(state, row);
            have_diag = true;
            last_diag = state.iteration;
        }
        record.rows.insert(record.rows.end(), n_rows, row);
    }

    record.final_mean_reward = window.mean();
    record.final_state = std::move(state);
    return record;
}

}  // namespace mac
