#include "mac/oracle.hpp"

#include <algorithm>
#include <complex>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mac::oracle {

namespace {

constexpr double kStationaryResidual = 1e-10;
constexpr double kPoissonResidual = 1e-8;
constexpr double kFixedPointResidual = 1e-10;

void require_square(const Matrix& P, const char* who) {
    if (P.rows() == 0 || P.rows() != P.cols()) throw std::invalid_argument(std::string(who) + ": kernel must be square");
}

double stationary_residual(const Vector& d, const Matrix& P) {
    return (d.transpose() * P - d.transpose()).lpNorm<1>();
}

Matrix kernel_power(const Matrix& P, std::size_t k) {
    Matrix result = Matrix::Identity(P.rows(), P.cols());
    Matrix base = P;
    while (k > 0) {
        if (k & 1U) result = result * base;
        k >>= 1U;
        if (k > 0) base = base * base;
    }
    return result;
}

struct PolicyContext {
    Matrix probs;
    Matrix P;
    Vector r_pi;
    Vector d;
    double J = 0.0;
};

PolicyContext make_context(const MdpSpec& spec, const Matrix& probs) {
    PolicyContext ctx;
    ctx.probs = probs;
    ctx.P = induced_kernel(spec, probs);
    ctx.r_pi = expected_reward(spec, probs);
    ctx.d = stationary_distribution(ctx.P);
    ctx.J = ctx.d.dot(ctx.r_pi);
    return ctx;
}

Vector solve_poisson(const PolicyContext& ctx) {
    const auto n = ctx.P.rows();
    const Matrix M = Matrix::Identity(n, n) - ctx.P + Vector::Ones(n) * ctx.d.transpose();
    Eigen::FullPivLU<Matrix> lu(M);
    if (!lu.isInvertible()) throw OracleError("differential_value: Poisson system is singular");
    Vector V = lu.solve(ctx.r_pi - ctx.J * Vector::Ones(n));
    const double residual = (V - (ctx.r_pi - ctx.J * Vector::Ones(n) + ctx.P * V)).lpNorm<Eigen::Infinity>();
    if (!(residual <= kPoissonResidual)) {
        throw OracleError("differential_value: Poisson residual " + std::to_string(residual) + " above tolerance");
    }
    return V;
}

}  // namespace

bool is_primitive(const Matrix& P) {
    require_square(P, "is_primitive");
    const auto n = P.rows();
    // Wielandt: a primitive matrix has P^k > 0 for k >= (n-1)^2 + 1, and
    // positivity persists for larger k, so one power of two past that bound
    // decides the question.
    const auto bound = static_cast<std::size_t>((n - 1) * (n - 1) + 1);
    Matrix pattern = (P.array() > 0.0).cast<double>().matrix();
    std::size_t power = 1;
    while (power < bound) {
        pattern = ((pattern * pattern).array() > 0.0).cast<double>().matrix();
        power *= 2;
    }
    return (pattern.array() > 0.0).all();
}

Vector stationary_distribution(const Matrix& P) {
    require_square(P, "stationary_distribution");
    const auto n = P.rows();
    Matrix M = P.transpose() - Matrix::Identity(n, n);
    M.row(n - 1).setOnes();
    Vector rhs = Vector::Zero(n);
    rhs[n - 1] = 1.0;

    Eigen::FullPivLU<Matrix> lu(M);
    if (!lu.isInvertible()) {
        throw NonErgodicError("stationary_distribution: kernel has no unique stationary distribution");
    }
    Vector d = lu.solve(rhs);
    if (d.minCoeff() < -1e-9) {
        throw NonErgodicError("stationary_distribution: solve produced a negative mass");
    }
    d = d.cwiseMax(0.0);
    d /= d.sum();
    if (stationary_residual(d, P) <= kStationaryResidual) return d;

    // Lazy chain has the same stationary law and is aperiodic.
    const Matrix lazy = 0.5 * (P + Matrix::Identity(n, n));
    Vector x = d;
    for (std::size_t it = 0; it < kDefaultMixingCap; ++it) {
        x = (x.transpose() * lazy).transpose();
        x /= x.sum();
        if (stationary_residual(x, P) <= kStationaryResidual) return x;
    }
    throw NonErgodicError("stationary_distribution: residual target not reached by direct solve or power iteration");
}

double average_reward(const MdpSpec& spec, const Matrix& policy_probs) {
    return make_context(spec, policy_probs).J;
}

Vector differential_value(const MdpSpec& spec, const Matrix& policy_probs) {
    return solve_poisson(make_context(spec, policy_probs));
}

Vector expected_weighted_score(const MdpSpec& spec, const PolicyParams& params, const Vector& dist,
                               const TransitionWeight& weight) {
    const std::size_t S = spec.n_states();
    const std::size_t A = spec.n_actions();
    Vector grad = Vector::Zero(static_cast<Eigen::Index>(S * A));
    for (StateIndex s = 0; s < S; ++s) {
        const double ds = dist[static_cast<Eigen::Index>(s)];
        if (ds == 0.0) continue;
        const Vector pi = action_probabilities(params, s);
        for (ActionIndex a = 0; a < A; ++a) {
            double w = 0.0;
            for (const auto& o : spec.outcomes(s, a)) {
                w += spec.prob(s, a, o.next) * weight(s, a, o.next);
            }
            grad.segment(static_cast<Eigen::Index>(s * A), static_cast<Eigen::Index>(A)) +=
                ds * pi[static_cast<Eigen::Index>(a)] * w * score_row(params, s, a);
        }
    }
    return grad;
}

StationaryAnalysis analyze(const MdpSpec& spec, const PolicyParams& params) {
    const PolicyContext ctx = make_context(spec, policy_table(params));
    StationaryAnalysis out;
    out.dist = ctx.d;
    out.avg_reward = ctx.J;
    out.diff_value = solve_poisson(ctx);
    const Vector& V = out.diff_value;
    const double J = ctx.J;
    out.exact_gradient = expected_weighted_score(spec, params, ctx.d, [&](StateIndex s, ActionIndex a, StateIndex next) {
        return spec.reward(s, a) - J + V[static_cast<Eigen::Index>(next)] - V[static_cast<Eigen::Index>(s)];
    });
    return out;
}

Vector exact_policy_gradient(const MdpSpec& spec, const PolicyParams& params) {
    return analyze(spec, params).exact_gradient;
}

Vector exact_policy_gradient_q_form(const MdpSpec& spec, const PolicyParams& params) {
    const PolicyContext ctx = make_context(spec, policy_table(params));
    const Vector V = solve_poisson(ctx);
    const std::size_t S = spec.n_states();
    const std::size_t A = spec.n_actions();
    Vector grad = Vector::Zero(static_cast<Eigen::Index>(S * A));
    for (StateIndex s = 0; s < S; ++s) {
        const auto si = static_cast<Eigen::Index>(s);
        const Vector pi = ctx.probs.row(si).transpose();
        Vector q(static_cast<Eigen::Index>(A));
        for (ActionIndex a = 0; a < A; ++a) {
            double next_value = 0.0;
            for (const auto& o : spec.outcomes(s, a)) next_value += spec.prob(s, a, o.next) * V[static_cast<Eigen::Index>(o.next)];
            q[static_cast<Eigen::Index>(a)] = spec.reward(s, a) - ctx.J + next_value;
        }
        // d pi(a|s) / d theta(s, a') = pi(a|s) (1{a = a'} - pi(a'|s)) / temperature
        const double baseline = pi.dot(q);
        for (ActionIndex ap = 0; ap < A; ++ap) {
            const auto api = static_cast<Eigen::Index>(ap);
            grad[static_cast<Eigen::Index>(s * A) + api] = ctx.d[si] * pi[api] * (q[api] - baseline) / params.temperature;
        }
    }
    return grad;
}

double tv_distance(const Vector& p, const Vector& q) {
    return 0.5 * (p - q).lpNorm<1>();
}

MixingReport mixing_time(const Matrix& P, double epsilon, std::size_t cap) {
    require_square(P, "mixing_time");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("mixing_time: epsilon must lie in (0, 1)");
    if (!is_primitive(P)) throw NonErgodicError("mixing_time: kernel is not irreducible and aperiodic");
    const Vector d = stationary_distribution(P);
    const auto n = P.rows();

    auto max_tv = [&](const Matrix& Pt) {
        double worst = 0.0;
        for (Eigen::Index s = 0; s < n; ++s) {
            worst = std::max(worst, 0.5 * (Pt.row(s).transpose() - d).lpNorm<1>());
        }
        return std::min(worst, 1.0);
    };

    MixingReport report;
    report.epsilon = epsilon;
    Matrix Pt = Matrix::Identity(n, n);
    double tv = max_tv(Pt);
    report.tv_curve.push_back(tv);
    std::size_t t = 0;
    while (tv > epsilon) {
        if (t >= cap) {
            throw SlowMixingError("mixing_time: slow mixing beyond cap of " + std::to_string(cap) +
                                      " steps (last TV " + std::to_string(tv) + ")",
                                  t, tv);
        }
        Pt = Pt * P;
        ++t;
        tv = max_tv(Pt);
        report.tv_curve.push_back(tv);
    }
    report.tau = t;
    return report;
}

double ergodicity_coefficient(const Matrix& P, std::size_t k) {
    require_square(P, "ergodicity_coefficient");
    if (k == 0) throw std::invalid_argument("ergodicity_coefficient: k must be positive");
    const Matrix Pk = kernel_power(P, k);
    double kappa = 0.0;
    for (Eigen::Index i = 0; i < Pk.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < Pk.rows(); ++j) {
            kappa = std::max(kappa, 0.5 * (Pk.row(i) - Pk.row(j)).lpNorm<1>());
        }
    }
    return std::min(kappa, 1.0);
}

CriticFixedPoint critic_fixed_point(const MdpSpec& spec, const PolicyParams& params, const FeatureMap& features,
                                    double lambda_tol) {
    if (features.n_states() != spec.n_states()) {
        throw std::invalid_argument("critic_fixed_point: feature map does not cover the state space");
    }
    const PolicyContext ctx = make_context(spec, policy_table(params));
    const Matrix& Phi = features.table();
    const auto m = Phi.cols();
    const auto S = Phi.rows();

    CriticFixedPoint fp;
    fp.A = Phi.transpose() * ctx.d.asDiagonal() * (Phi - ctx.P * Phi);
    fp.b = Phi.transpose() * ctx.d.asDiagonal() * (ctx.r_pi - ctx.J * Vector::Ones(S));

    Eigen::JacobiSVD<Matrix> svd(fp.A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sigma = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < m && sigma[rank] > lambda_tol) ++rank;
    const Eigen::Index nullity = m - rank;

    // Null directions are admissible only if they move the value function
    // by a constant, which the TD fixed point cannot see.
    fp.null_basis = svd.matrixV().rightCols(nullity);
    Vector shifts(nullity);
    for (Eigen::Index k = 0; k < nullity; ++k) {
        const Vector v = Phi * fp.null_basis.col(k);
        const double spread = v.maxCoeff() - v.minCoeff();
        if (spread > 1e-6 * std::max(1.0, v.lpNorm<Eigen::Infinity>())) {
            throw AssumptionViolation("critic_fixed_point: A_theta is singular along a non-constant value direction");
        }
        shifts[k] = v.mean();
    }

    Vector omega = Vector::Zero(m);
    const Vector ub = svd.matrixU().transpose() * fp.b;
    for (Eigen::Index i = 0; i < rank; ++i) omega += svd.matrixV().col(i) * (ub[i] / sigma[i]);
    if (nullity > 0 && shifts.squaredNorm() > 0.0) {
        const double mean_value = ctx.d.dot(Phi * omega);
        omega -= fp.null_basis * (shifts * (mean_value / shifts.squaredNorm()));
    }
    fp.omega = omega;
    fp.residual = (fp.A * omega - fp.b).lpNorm<Eigen::Infinity>();
    if (!(fp.residual <= kFixedPointResidual)) {
        throw AssumptionViolation("critic_fixed_point: residual " + std::to_string(fp.residual) +
                                  " above tolerance (inconsistent or ill-conditioned system)");
    }

    Eigen::EigenSolver<Matrix> eig(fp.A, false);
    std::vector<std::complex<double>> values(eig.eigenvalues().data(), eig.eigenvalues().data() + m);
    std::sort(values.begin(), values.end(),
              [](const auto& x, const auto& y) { return std::abs(x) < std::abs(y); });
    fp.lambda = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = static_cast<std::size_t>(nullity); i < values.size(); ++i) {
        if (values[i].real() < lambda_tol) {
            throw AssumptionViolation("critic_fixed_point: eigenvalue with real part " +
                                      std::to_string(values[i].real()) + " below tolerance");
        }
        if (i == static_cast<std::size_t>(nullity)) fp.lambda = std::abs(values[i]);
    }
    return fp;
}

double critic_error_sq(const Vector& omega, const CriticFixedPoint& fp) {
    Vector diff = omega - fp.omega;
    if (fp.null_basis.cols() > 0) diff -= fp.null_basis * (fp.null_basis.transpose() * diff);
    return diff.squaredNorm();
}

double approximation_error(const MdpSpec& spec, const PolicyParams& params, const FeatureMap& features) {
    const StationaryAnalysis st = analyze(spec, params);
    const CriticFixedPoint fp = critic_fixed_point(spec, params, features);
    const Vector gap = features.table() * fp.omega - st.diff_value;
    return std::sqrt(st.dist.dot(gap.cwiseProduct(gap)));
}

double critic_radius(double r_max, const CriticFixedPoint& fp, double lambda_tol) {
    // a zero reward range still needs a positive ball
    const double r = r_max > 0.0 ? r_max : 1.0;
    const double lambda = std::isfinite(fp.lambda) && fp.lambda > 0.0 ? fp.lambda : lambda_tol;
    return 2.0 * r / lambda;
}

}  // namespace mac::oracle
