#include "mac/critic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mac {

namespace {
constexpr double kNormSlack = 1e-12;
}

FeatureMap::FeatureMap(Matrix table) : table_(std::move(table)) {
    if (table_.rows() == 0 || table_.cols() == 0) throw std::invalid_argument("FeatureMap: empty table");
    if (!table_.allFinite()) throw std::invalid_argument("FeatureMap: non-finite entry");
    for (Eigen::Index s = 0; s < table_.rows(); ++s) {
        if (table_.row(s).norm() > 1.0 + kNormSlack) {
            throw std::invalid_argument("FeatureMap: ||phi(" + std::to_string(s) + ")|| exceeds 1");
        }
    }
}

FeatureMap one_hot_features(std::size_t n_states) {
    const auto n = static_cast<Eigen::Index>(n_states);
    return FeatureMap(Matrix::Identity(n, n));
}

FeatureMap coarse_tiling_features(std::size_t grid_n) {
    if (grid_n < 2) throw std::invalid_argument("coarse_tiling_features: grid side must be at least 2");
    const std::size_t tiles_per_side = (grid_n + 1) / 2;
    const auto S = static_cast<Eigen::Index>(grid_n * grid_n);
    Matrix table = Matrix::Zero(S, static_cast<Eigen::Index>(tiles_per_side * tiles_per_side));
    for (std::size_t r = 0; r < grid_n; ++r) {
        for (std::size_t c = 0; c < grid_n; ++c) {
            const std::size_t tile = (r / 2) * tiles_per_side + c / 2;
            table(static_cast<Eigen::Index>(r * grid_n + c), static_cast<Eigen::Index>(tile)) = 1.0;
        }
    }
    return FeatureMap(std::move(table));
}

double value(const Vector& omega, const FeatureMap& features, StateIndex s) {
    if (static_cast<std::size_t>(omega.size()) != features.dim()) {
        throw std::invalid_argument("value: critic weights do not match feature dimension");
    }
    return features.row(s).dot(omega);
}

double td_error(const Transition& tr, double eta, const Vector& omega, const FeatureMap& features) {
    return tr.reward - eta + (features.row(tr.next_state) - features.row(tr.state)).dot(omega);
}

Vector project_ball(const Vector& v, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("project_ball: radius must be positive");
    const double norm = v.norm();
    if (norm <= radius) return v;
    // shrink the scale until the rounded norm is inside, so that projecting
    // the result again returns it unchanged
    double scale = radius / norm;
    Vector out = v * scale;
    while (out.norm() > radius) {
        scale = std::nextafter(scale, 0.0);
        out = v * scale;
    }
    return out;
}

}  // namespace mac
