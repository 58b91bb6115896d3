#pragma once

#include <array>
#include <vector>

#include "mac/critic.hpp"
#include "mac/env.hpp"
#include "mac/policy.hpp"

namespace mac::mlmc {

/// Level J ~ Geom(1/2) on {1, 2, ...}; the draw is capped when 2^J > T_max,
/// in which case only the single-sample term l^0 is used.
struct LevelSample {
    int j = 1;
    bool capped = false;
};

LevelSample sample_level(Rng& rng, std::size_t t_max);

/// floor(log2 T_max); 0 for T_max = 1.
int max_level(std::size_t t_max);

/// Number of transitions a level draw consumes: 2^J, or 1 when capped.
std::size_t rollout_length(const LevelSample& level);

/// `length` chained transitions under pi_theta starting at `start_state`.
std::vector<Transition> rollout(const MdpSpec& spec, const PolicyParams& params, StateIndex start_state,
                                std::size_t length, Rng& rng);

/// Level averages of one per-sample term over a trajectory of length L:
/// l0 is the first term, l_half the mean of the first max(1, L/2) terms and
/// l_full the mean of all L terms.
struct LevelAverages {
    Vector l0;
    Vector l_half;
    Vector l_full;
};

/// f = r - eta (1-dimensional).
LevelAverages estimate_f(const std::vector<Transition>& trajectory, double eta);

/// g = delta * phi(s).
LevelAverages estimate_g(const std::vector<Transition>& trajectory, double eta, const Vector& omega,
                         const FeatureMap& features);

/// h = delta * grad log pi(a|s), flat (S * A).
LevelAverages estimate_h(const std::vector<Transition>& trajectory, double eta, const Vector& omega,
                         const FeatureMap& features, const PolicyParams& params);

struct MlmcEstimate {
    Vector value;
    LevelSample level;
    Vector l0;
    Vector l_half;
    Vector l_full;
    std::size_t samples_used = 0;
    StateIndex final_state = 0;   // set by the rollout driver
};

/// l0 + 2^J (l_full - l_half) when 2^J <= T_max, otherwise l0.
MlmcEstimate mlmc_combine(const LevelAverages& averages, const LevelSample& level, std::size_t t_max);

/// The three estimators computed from one shared trajectory.
struct EstimateBundle {
    MlmcEstimate f;
    MlmcEstimate g;
    MlmcEstimate h;
    std::vector<Transition> trajectory;
};

/// Sample a level, roll out from `start_state`, and build f, g and h.
EstimateBundle draw_estimates(const MdpSpec& spec, const PolicyParams& params, double eta, const Vector& omega,
                              const FeatureMap& features, StateIndex start_state, std::size_t t_max, Rng& rng);

enum class Family : std::size_t { F = 0, G = 1, H = 2 };
inline constexpr std::array<Family, 3> kFamilies{Family::F, Family::G, Family::H};
const char* family_name(Family family);

/// Monte Carlo comparison of E[l^MLMC] with E[l^{j_max}] for one family.
struct FamilyMeanCheck {
    Vector mlmc_mean;
    Vector mlmc_stderr;
    Vector deep_mean;      // mean of independent l^{j_max} estimates
    Vector deep_stderr;
    double mlmc_second_moment = 0.0;   // empirical E||l^MLMC||^2
    std::size_t failing_coordinates = 0;
    bool overlap = true;   // every coordinate's 3-sigma intervals intersect
};

struct MeanCheckReport {
    std::size_t t_max = 1;
    std::size_t n_draws = 0;
    std::array<FamilyMeanCheck, 3> families;
    bool all_overlap() const;
    const FamilyMeanCheck& family(Family f) const { return families[static_cast<std::size_t>(f)]; }
};

/// Runs n_draws MLMC estimates and n_draws independent l^{j_max} estimates
/// at fixed (theta, eta, omega). Every draw starts from a fresh state sampled
/// from `start_dist`.
MeanCheckReport mlmc_mean_check(const MdpSpec& spec, const PolicyParams& params, double eta, const Vector& omega,
                                const FeatureMap& features, std::size_t t_max, std::size_t n_draws, Rng& rng,
                                const Vector& start_dist);

/// Empirical E||l^MLMC||^2 for the three families at one T_max.
std::array<double, 3> mlmc_second_moments(const MdpSpec& spec, const PolicyParams& params, double eta,
                                          const Vector& omega, const FeatureMap& features, std::size_t t_max,
                                          std::size_t n_draws, Rng& rng, const Vector& start_dist);

/// Least-squares fit y = a + b log2(T_max), with coefficient of determination
/// and the ratios of consecutive increments of y.
struct LogFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;
    std::vector<double> increment_ratios;
};

LogFit fit_log2(const std::vector<std::size_t>& t_max_values, const std::vector<double>& y);

}  // namespace mac::mlmc
