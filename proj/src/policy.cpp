#include "mac/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mac {

PolicyParams::PolicyParams(std::size_t n_states, std::size_t n_actions, double temperature_)
    : prefs(Table::Zero(static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(n_actions))),
      temperature(temperature_) {
    if (!(temperature > 0.0)) throw std::invalid_argument("PolicyParams: temperature must be positive");
}

PolicyParams::PolicyParams(Table prefs_, double temperature_)
    : prefs(std::move(prefs_)), temperature(temperature_) {
    if (!(temperature > 0.0)) throw std::invalid_argument("PolicyParams: temperature must be positive");
}

Vector action_probabilities(const PolicyParams& params, StateIndex s) {
    if (s >= params.n_states()) throw std::out_of_range("action_probabilities: state out of range");
    const auto row = params.prefs.row(static_cast<Eigen::Index>(s));
    if (!row.allFinite()) throw std::invalid_argument("action_probabilities: non-finite preferences");
    const double top = row.maxCoeff();
    Vector p = ((row.transpose().array() - top) / params.temperature).exp().matrix();
    p /= p.sum();
    return p;
}

Matrix policy_table(const PolicyParams& params) {
    Matrix out(params.prefs.rows(), params.prefs.cols());
    for (std::size_t s = 0; s < params.n_states(); ++s) {
        out.row(static_cast<Eigen::Index>(s)) = action_probabilities(params, s).transpose();
    }
    return out;
}

ActionIndex sample_action(const PolicyParams& params, StateIndex s, Rng& rng) {
    return sample_categorical(action_probabilities(params, s), rng);
}

Vector score_row(const PolicyParams& params, StateIndex s, ActionIndex a) {
    if (a >= params.n_actions()) throw std::out_of_range("score_row: action out of range");
    Vector g = -action_probabilities(params, s);
    g[static_cast<Eigen::Index>(a)] += 1.0;
    return g / params.temperature;
}

Vector score(const PolicyParams& params, StateIndex s, ActionIndex a) {
    const auto A = static_cast<Eigen::Index>(params.n_actions());
    Vector g = Vector::Zero(params.prefs.size());
    g.segment(static_cast<Eigen::Index>(s) * A, A) = score_row(params, s, a);
    return g;
}

PolicyAssumptionReport check_policy_assumptions(
    const std::vector<std::pair<PolicyParams, PolicyParams>>& probe_pairs) {
    PolicyAssumptionReport report;
    auto update_bound = [&](const PolicyParams& p) {
        for (std::size_t s = 0; s < p.n_states(); ++s) {
            for (std::size_t a = 0; a < p.n_actions(); ++a) {
                report.bound = std::max(report.bound, score_row(p, s, a).norm());
            }
        }
    };
    for (const auto& [lhs, rhs] : probe_pairs) {
        if (lhs.prefs.rows() != rhs.prefs.rows() || lhs.prefs.cols() != rhs.prefs.cols()) {
            throw std::invalid_argument("check_policy_assumptions: probe pair shapes differ");
        }
        update_bound(lhs);
        update_bound(rhs);
        const double dist = (lhs.flat() - rhs.flat()).norm();
        if (dist == 0.0) continue;
        for (std::size_t s = 0; s < lhs.n_states(); ++s) {
            const Vector pl = action_probabilities(lhs, s);
            const Vector pr = action_probabilities(rhs, s);
            for (std::size_t a = 0; a < lhs.n_actions(); ++a) {
                const double dscore = (score_row(lhs, s, a) - score_row(rhs, s, a)).norm();
                report.score_lipschitz = std::max(report.score_lipschitz, dscore / dist);
                const auto ai = static_cast<Eigen::Index>(a);
                report.prob_lipschitz = std::max(report.prob_lipschitz, std::abs(pl[ai] - pr[ai]) / dist);
            }
        }
    }
    return report;
}

}  // namespace mac
