#pragma once

#include <utility>
#include <vector>

#include "mac/types.hpp"

namespace mac {

/// Tabular softmax policy: pi(a|s) = softmax_a(prefs(s, a) / temperature).
/// Parameter and gradient vectors are the flat row-major view of `prefs`,
/// coordinate s * A + a.
struct PolicyParams {
    Table prefs;
    double temperature = 1.0;

    PolicyParams() = default;
    PolicyParams(std::size_t n_states, std::size_t n_actions, double temperature = 1.0);
    PolicyParams(Table prefs, double temperature);

    std::size_t n_states() const { return static_cast<std::size_t>(prefs.rows()); }
    std::size_t n_actions() const { return static_cast<std::size_t>(prefs.cols()); }

    Eigen::Map<const Vector> flat() const { return {prefs.data(), prefs.size()}; }
    Eigen::Map<Vector> flat() { return {prefs.data(), prefs.size()}; }
};

/// Softmax row pi(.|s). Throws std::invalid_argument on non-finite preferences.
Vector action_probabilities(const PolicyParams& params, StateIndex s);

/// (S x A) table of pi(a|s).
Matrix policy_table(const PolicyParams& params);

ActionIndex sample_action(const PolicyParams& params, StateIndex s, Rng& rng);

/// Row s of grad_theta log pi(a|s): (1{a'=a} - pi(a'|s)) / temperature.
/// Every other row of the full score is zero.
Vector score_row(const PolicyParams& params, StateIndex s, ActionIndex a);

/// Full score as a flat (S * A) vector.
Vector score(const PolicyParams& params, StateIndex s, ActionIndex a);

/// Empirical constants for the policy regularity conditions, taken over a
/// finite probe set. `bound` is the exact maximum of ||score|| over the probe
/// parameters; the Lipschitz estimates are maximal difference quotients over
/// the probe pairs and are diagnostics only.
struct PolicyAssumptionReport {
    double bound = 0.0;
    double score_lipschitz = 0.0;
    double prob_lipschitz = 0.0;
};

PolicyAssumptionReport check_policy_assumptions(
    const std::vector<std::pair<PolicyParams, PolicyParams>>& probe_pairs);

}  // namespace mac
