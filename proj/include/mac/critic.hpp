#pragma once

#include "mac/env.hpp"

namespace mac {

/// Linear feature map phi: S -> R^m stored as an (S x m) table.
/// Construction rejects any row with ||phi(s)||_2 > 1.
class FeatureMap {
public:
    explicit FeatureMap(Matrix table);

    std::size_t dim() const { return static_cast<std::size_t>(table_.cols()); }
    std::size_t n_states() const { return static_cast<std::size_t>(table_.rows()); }
    const Matrix& table() const { return table_; }
    auto row(StateIndex s) const { return table_.row(static_cast<Eigen::Index>(s)); }

private:
    Matrix table_;
};

/// phi(s) = e_s. Realizable for every tabular value function.
FeatureMap one_hot_features(std::size_t n_states);

/// Gridworld coarse tiling: cells are pooled into 2x2 blocks
/// (tile (r / 2, c / 2), ceil(n/2)^2 tiles) and each state activates the
/// indicator of its tile, giving unit-norm rows. Not realizable in general,
/// so E_app > 0.
FeatureMap coarse_tiling_features(std::size_t grid_n);

struct CriticState {
    Vector omega;
    double radius = 1.0;
};

/// V_omega(s) = <phi(s), omega>.
double value(const Vector& omega, const FeatureMap& features, StateIndex s);

/// delta = r - eta + <phi(s') - phi(s), omega>.
double td_error(const Transition& tr, double eta, const Vector& omega, const FeatureMap& features);

/// Euclidean projection onto the centred ball of the given radius.
Vector project_ball(const Vector& v, double radius);

}  // namespace mac
