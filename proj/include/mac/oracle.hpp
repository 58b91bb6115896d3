#pragma once

#include <functional>
#include <vector>

#include "mac/critic.hpp"
#include "mac/env.hpp"
#include "mac/policy.hpp"

namespace mac::oracle {

/// True iff some power P^k (k <= 2 |S|^2) is entrywise positive. Checked on
/// the zero pattern by repeated squaring.
bool is_primitive(const Matrix& P);

/// Unique stationary distribution d = dP of a unichain kernel, by a direct
/// solve of (P^T - I) d = 0 with sum(d) = 1, falling back to power iteration
/// on the lazy chain (P + I) / 2 if the solve misses the residual target.
/// Throws NonErgodicError when the stationary distribution is not unique.
Vector stationary_distribution(const Matrix& P);

/// J = sum_s d(s) sum_a pi(a|s) r(s,a).
double average_reward(const MdpSpec& spec, const Matrix& policy_probs);

/// Solution of (I - P) V = r_pi - J 1 normalised so that sum_s d(s) V(s) = 0.
Vector differential_value(const MdpSpec& spec, const Matrix& policy_probs);

struct StationaryAnalysis {
    Vector dist;
    double avg_reward = 0.0;
    Vector diff_value;
    Vector exact_gradient;   // flat (S * A)
};

StationaryAnalysis analyze(const MdpSpec& spec, const PolicyParams& params);

/// Weight function w(s, a, s') integrated against the score function.
using TransitionWeight = std::function<double(StateIndex, ActionIndex, StateIndex)>;

/// E_{s~d, a~pi, s'~p}[ w(s,a,s') * grad log pi(a|s) ] as a flat vector.
Vector expected_weighted_score(const MdpSpec& spec, const PolicyParams& params, const Vector& dist,
                               const TransitionWeight& weight);

/// Policy gradient as E[delta * score] with the exact J and V.
Vector exact_policy_gradient(const MdpSpec& spec, const PolicyParams& params);

/// Policy gradient as sum_s d(s) sum_a grad pi(a|s) Q(s,a).
Vector exact_policy_gradient_q_form(const MdpSpec& spec, const PolicyParams& params);

struct MixingReport {
    double epsilon = 0.25;
    std::size_t tau = 0;
    std::vector<double> tv_curve;   // tv_curve[t] = max_s ||P^t(s,.) - d||_TV, t = 0..tau
};

constexpr std::size_t kDefaultMixingCap = 1'000'000;

/// tau(eps) = inf{t : max_s ||P^t(s,.) - d||_TV <= eps}. Throws
/// NonErgodicError for non-primitive kernels and SlowMixingError when the
/// cap is exceeded.
MixingReport mixing_time(const Matrix& P, double epsilon = 0.25, std::size_t cap = kDefaultMixingCap);

/// kappa(P^k) = max over row pairs of the TV distance between rows of P^k.
double ergodicity_coefficient(const Matrix& P, std::size_t k = 1);

/// Total-variation distance between two probability vectors.
double tv_distance(const Vector& p, const Vector& q);

/// Solution of A_theta omega = b_theta with
///   A_theta = E[phi(s)(phi(s) - phi(s'))^T],  b_theta = E[(r(s,a) - J) phi(s)].
/// When the features can represent constant functions, A_theta is singular
/// along those directions (values are defined up to a constant). The
/// returned omega is then the solution whose value function has zero mean
/// under d, and `null_basis` spans the remaining solution set.
struct CriticFixedPoint {
    Vector omega;
    Matrix A;
    Vector b;
    double lambda = 0.0;   // smallest |eigenvalue| of A outside the null space
    Matrix null_basis;     // (m x k) orthonormal, k = 0 when A is nonsingular
    double residual = 0.0; // max |A omega - b|
};

constexpr double kDefaultLambdaTol = 1e-8;

CriticFixedPoint critic_fixed_point(const MdpSpec& spec, const PolicyParams& params, const FeatureMap& features,
                                    double lambda_tol = kDefaultLambdaTol);

/// ||omega - omega*||^2 measured modulo the fixed point's null space.
double critic_error_sq(const Vector& omega, const CriticFixedPoint& fp);

/// sqrt(sum_s d(s) (phi(s)^T omega* - V(s))^2) at a single parameter.
double approximation_error(const MdpSpec& spec, const PolicyParams& params, const FeatureMap& features);

/// R_omega = 2 r_max / lambda. Falls back to 2 r_max / lambda_tol when the
/// whole feature space is null (no contraction direction exists).
double critic_radius(double r_max, const CriticFixedPoint& fp, double lambda_tol = kDefaultLambdaTol);

}  // namespace mac::oracle
