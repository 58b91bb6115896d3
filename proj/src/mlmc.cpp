#include "mac/mlmc.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace mac::mlmc {

namespace {

/// Accumulates per-sample terms in trajectory order and snapshots the
/// first-half mean on the way, so l_half is computed with exactly the same
/// operations as a standalone average of the first half.
class LevelAccumulator {
public:
    LevelAccumulator(Eigen::Index dim, std::size_t length)
        : sum_(Vector::Zero(dim)), half_(std::max<std::size_t>(1, length / 2)), length_(length) {}

    Vector& sum() { return sum_; }

    /// Call after the i-th term (0-based) has been added to sum().
    void finish_term(std::size_t i) {
        if (i == 0) l0_ = sum_;
        if (i + 1 == half_) l_half_ = sum_ / static_cast<double>(half_);
    }

    LevelAverages result() const {
        return {l0_, l_half_, sum_ / static_cast<double>(length_)};
    }

private:
    Vector sum_;
    Vector l0_;
    Vector l_half_;
    std::size_t half_;
    std::size_t length_;
};

void require_nonempty(const std::vector<Transition>& trajectory) {
    if (trajectory.empty()) throw std::invalid_argument("mlmc: empty trajectory");
}

void require_dims(const Vector& omega, const FeatureMap& features) {
    if (static_cast<std::size_t>(omega.size()) != features.dim()) {
        throw std::invalid_argument("mlmc: critic weights do not match feature dimension");
    }
}

void add_score_term(Vector& sum, const PolicyParams& params, const Transition& tr, double weight) {
    const auto A = static_cast<Eigen::Index>(params.n_actions());
    sum.segment(static_cast<Eigen::Index>(tr.state) * A, A) += weight * score_row(params, tr.state, tr.action);
}

}  // namespace

int max_level(std::size_t t_max) {
    if (t_max == 0) throw std::invalid_argument("max_level: T_max must be positive");
    return static_cast<int>(std::bit_width(t_max)) - 1;
}

LevelSample sample_level(Rng& rng, std::size_t t_max) {
    if (t_max == 0) throw std::invalid_argument("sample_level: T_max must be positive");
    // J - 1 counts the failures before the first success of a fair coin,
    // read off the trailing zero bits of uniform 64-bit words.
    int j = 1;
    for (;;) {
        const std::uint64_t word = rng();
        if (word != 0) {
            j += std::countr_zero(word);
            break;
        }
        j += 64;
    }
    LevelSample level;
    level.j = j;
    level.capped = j > max_level(t_max);
    return level;
}

std::size_t rollout_length(const LevelSample& level) {
    return level.capped ? 1 : (std::size_t{1} << level.j);
}

std::vector<Transition> rollout(const MdpSpec& spec, const PolicyParams& params, StateIndex start_state,
                                std::size_t length, Rng& rng) {
    if (length == 0) throw std::invalid_argument("rollout: length must be at least 1");
    std::vector<Transition> out;
    out.reserve(length);
    StateIndex s = start_state;
    for (std::size_t i = 0; i < length; ++i) {
        const ActionIndex a = sample_action(params, s, rng);
        out.push_back(step(spec, s, a, rng));
        s = out.back().next_state;
    }
    return out;
}

LevelAverages estimate_f(const std::vector<Transition>& trajectory, double eta) {
    require_nonempty(trajectory);
    LevelAccumulator acc(1, trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        acc.sum()[0] += trajectory[i].reward - eta;
        acc.finish_term(i);
    }
    return acc.result();
}

LevelAverages estimate_g(const std::vector<Transition>& trajectory, double eta, const Vector& omega,
                         const FeatureMap& features) {
    require_nonempty(trajectory);
    require_dims(omega, features);
    LevelAccumulator acc(omega.size(), trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        const double delta = td_error(trajectory[i], eta, omega, features);
        acc.sum() += delta * features.row(trajectory[i].state).transpose();
        acc.finish_term(i);
    }
    return acc.result();
}

LevelAverages estimate_h(const std::vector<Transition>& trajectory, double eta, const Vector& omega,
                         const FeatureMap& features, const PolicyParams& params) {
    require_nonempty(trajectory);
    require_dims(omega, features);
    LevelAccumulator acc(params.prefs.size(), trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        const double delta = td_error(trajectory[i], eta, omega, features);
        add_score_term(acc.sum(), params, trajectory[i], delta);
        acc.finish_term(i);
    }
    return acc.result();
}

MlmcEstimate mlmc_combine(const LevelAverages& averages, const LevelSample& level, std::size_t t_max) {
    MlmcEstimate est;
    est.level = level;
    est.level.capped = level.j > max_level(t_max);
    est.l0 = averages.l0;
    est.l_half = averages.l_half;
    est.l_full = averages.l_full;
    if (est.level.capped) {
        est.value = averages.l0;
        est.samples_used = 1;
    } else {
        const double scale = std::ldexp(1.0, level.j);
        est.value = averages.l0 + scale * (averages.l_full - averages.l_half);
        est.samples_used = std::size_t{1} << level.j;
    }
    return est;
}

EstimateBundle draw_estimates(const MdpSpec& spec, const PolicyParams& params, double eta, const Vector& omega,
                              const FeatureMap& features, StateIndex start_state, std::size_t t_max, Rng& rng) {
    require_dims(omega, features);
    const LevelSample level = sample_level(rng, t_max);
    EstimateBundle bundle;
    bundle.trajectory = rollout(spec, params, start_state, rollout_length(level), rng);
    const auto& traj = bundle.trajectory;

    LevelAccumulator f(1, traj.size());
    LevelAccumulator g(omega.size(), traj.size());
    LevelAccumulator h(params.prefs.size(), traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const Transition& tr = traj[i];
        const double delta = td_error(tr, eta, omega, features);
        f.sum()[0] += tr.reward - eta;
        g.sum() += delta * features.row(tr.state).transpose();
        add_score_term(h.sum(), params, tr, delta);
        f.finish_term(i);
        g.finish_term(i);
        h.finish_term(i);
    }
    bundle.f = mlmc_combine(f.result(), level, t_max);
    bundle.g = mlmc_combine(g.result(), level, t_max);
    bundle.h = mlmc_combine(h.result(), level, t_max);
    const StateIndex final_state = traj.back().next_state;
    bundle.f.final_state = bundle.g.final_state = bundle.h.final_state = final_state;
    return bundle;
}

const char* family_name(Family family) {
    switch (family) {
        case Family::F: return "f";
        case Family::G: return "g";
        case Family::H: return "h";
    }
    return "?";
}

bool MeanCheckReport::all_overlap() const {
    for (const auto& fam : families) {
        if (!fam.overlap) return false;
    }
    return true;
}

namespace {

struct RunningMoments {
    Vector sum;
    Vector sum_sq;
    double norm_sq = 0.0;

    void add(const Vector& x) {
        if (sum.size() == 0) {
            sum = Vector::Zero(x.size());
            sum_sq = Vector::Zero(x.size());
        }
        sum += x;
        sum_sq += x.cwiseProduct(x);
        norm_sq += x.squaredNorm();
    }

    Vector mean(std::size_t n) const { return sum / static_cast<double>(n); }

    Vector stderr_of_mean(std::size_t n) const {
        const double nd = static_cast<double>(n);
        const Vector m = mean(n);
        Vector var = (sum_sq - nd * m.cwiseProduct(m)) / (nd - 1.0);
        return (var.cwiseMax(0.0) / nd).cwiseSqrt();
    }
};

const MlmcEstimate& pick(const EstimateBundle& b, Family f) {
    switch (f) {
        case Family::F: return b.f;
        case Family::G: return b.g;
        case Family::H: return b.h;
    }
    return b.f;
}

}  // namespace

MeanCheckReport mlmc_mean_check(const MdpSpec& spec, const PolicyParams& params, double eta, const Vector& omega,
                                const FeatureMap& features, std::size_t t_max, std::size_t n_draws, Rng& rng,
                                const Vector& start_dist) {
    if (n_draws < 2) throw std::invalid_argument("mlmc_mean_check: need at least two draws");
    MeanCheckReport report;
    report.t_max = t_max;
    report.n_draws = n_draws;

    std::array<RunningMoments, 3> mlmc;
    for (std::size_t i = 0; i < n_draws; ++i) {
        const StateIndex start = sample_state(start_dist, rng);
        const EstimateBundle b = draw_estimates(spec, params, eta, omega, features, start, t_max, rng);
        for (Family f : kFamilies) mlmc[static_cast<std::size_t>(f)].add(pick(b, f).value);
    }

    const std::size_t deep_length = std::size_t{1} << max_level(t_max);
    std::array<RunningMoments, 3> deep;
    for (std::size_t i = 0; i < n_draws; ++i) {
        const StateIndex start = sample_state(start_dist, rng);
        const auto traj = rollout(spec, params, start, deep_length, rng);
        deep[0].add(estimate_f(traj, eta).l_full);
        deep[1].add(estimate_g(traj, eta, omega, features).l_full);
        deep[2].add(estimate_h(traj, eta, omega, features, params).l_full);
    }

    for (std::size_t k = 0; k < 3; ++k) {
        FamilyMeanCheck& out = report.families[k];
        out.mlmc_mean = mlmc[k].mean(n_draws);
        out.mlmc_stderr = mlmc[k].stderr_of_mean(n_draws);
        out.deep_mean = deep[k].mean(n_draws);
        out.deep_stderr = deep[k].stderr_of_mean(n_draws);
        out.mlmc_second_moment = mlmc[k].norm_sq / static_cast<double>(n_draws);
        for (Eigen::Index c = 0; c < out.mlmc_mean.size(); ++c) {
            const double gap = std::abs(out.mlmc_mean[c] - out.deep_mean[c]);
            const double reach = 3.0 * (out.mlmc_stderr[c] + out.deep_stderr[c]);
            // rounding guard for zero-variance coordinates
            const double slack = 1e-12 * std::max(1.0, std::abs(out.deep_mean[c]));
            if (gap > reach + slack) ++out.failing_coordinates;
        }
        out.overlap = out.failing_coordinates == 0;
    }
    return report;
}

std::array<double, 3> mlmc_second_moments(const MdpSpec& spec, const PolicyParams& params, double eta,
                                          const Vector& omega, const FeatureMap& features, std::size_t t_max,
                                          std::size_t n_draws, Rng& rng, const Vector& start_dist) {
    if (n_draws == 0) throw std::invalid_argument("mlmc_second_moments: need at least one draw");
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n_draws; ++i) {
        const StateIndex start = sample_state(start_dist, rng);
        const EstimateBundle b = draw_estimates(spec, params, eta, omega, features, start, t_max, rng);
        acc[0] += b.f.value.squaredNorm();
        acc[1] += b.g.value.squaredNorm();
        acc[2] += b.h.value.squaredNorm();
    }
    for (double& v : acc) v /= static_cast<double>(n_draws);
    return acc;
}

LogFit fit_log2(const std::vector<std::size_t>& t_max_values, const std::vector<double>& y) {
    if (t_max_values.size() != y.size() || y.size() < 2) {
        throw std::invalid_argument("fit_log2: need at least two matching points");
    }
    const auto n = static_cast<double>(y.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = std::log2(static_cast<double>(t_max_values[i]));
        sx += x;
        sy += y[i];
        sxx += x * x;
        sxy += x * y[i];
    }
    LogFit fit;
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_log2: T_max values must not all be equal");
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    const double mean_y = sy / n;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = std::log2(static_cast<double>(t_max_values[i]));
        const double pred = fit.intercept + fit.slope * x;
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    for (std::size_t i = 2; i < y.size(); ++i) {
        fit.increment_ratios.push_back((y[i] - y[i - 1]) / (y[i - 1] - y[i - 2]));
    }
    return fit;
}

}  // namespace mac::mlmc
