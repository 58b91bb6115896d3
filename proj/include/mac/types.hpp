#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mac {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Row-major (S x A) table. Its flat storage order (s * A + a) is the
/// coordinate order used for policy parameters and policy gradients.
using Table = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using StateIndex = std::size_t;
using ActionIndex = std::size_t;

/// All randomness flows through explicitly seeded engines of this type.
using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) built from the top 53 bits of one engine output.
/// Unlike std::uniform_real_distribution the result is fixed by the engine
/// alone, so seeded runs replay bitwise across standard libraries.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF draw from a probability vector.
template <typename Probs>
std::size_t sample_categorical(const Probs& probs, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    const auto n = static_cast<std::size_t>(probs.size());
    for (std::size_t i = 0; i < n; ++i) {
        acc += probs[static_cast<Eigen::Index>(i)];
        if (u < acc) return i;
    }
    // u landed in the rounding gap above the last partial sum
    for (std::size_t i = n; i-- > 0;) {
        if (probs[static_cast<Eigen::Index>(i)] > 0.0) return i;
    }
    return n - 1;
}

/// Base for errors raised by the numerical oracle.
class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a kernel has no unique stationary distribution or is not
/// primitive where primitivity is required.
class NonErgodicError : public OracleError {
public:
    using OracleError::OracleError;
};

/// Raised when the mixing-time search exceeds its power cap.
class SlowMixingError : public OracleError {
public:
    SlowMixingError(const std::string& what, std::size_t steps, double last_tv)
        : OracleError(what), steps_(steps), last_tv_(last_tv) {}
    std::size_t steps() const { return steps_; }
    double last_tv() const { return last_tv_; }

private:
    std::size_t steps_;
    double last_tv_;
};

/// Raised when A_theta violates the positive-definiteness check.
class AssumptionViolation : public OracleError {
public:
    using OracleError::OracleError;
};

/// Raised when a learning run produces a non-finite parameter.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mac
