#include <cmath>
#include <functional>
#include <ostream>
#include <utility>

#include "mac/experiment.hpp"
#include "mac/oracle.hpp"

namespace mac {

namespace {

Matrix flip_chain(double p) {
    Matrix P(2, 2);
    P << 1.0 - p, p, p, 1.0 - p;
    return P;
}

}  // namespace

bool run_selftest(std::ostream& os) {
    std::vector<std::pair<std::string, std::function<bool()>>> checks;

    checks.emplace_back("two-state average reward is 2/3 under the uniform policy", [] {
        const auto spec = two_state_fixture();
        const auto J = oracle::average_reward(spec, policy_table(PolicyParams(2, 2)));
        return std::abs(J - 2.0 / 3.0) <= 1e-12;
    });
    checks.emplace_back("flip chain mixing times are 4 (p=0.1) and 1 (p=0.5)", [] {
        return oracle::mixing_time(flip_chain(0.1)).tau == 4 && oracle::mixing_time(flip_chain(0.5)).tau == 1;
    });
    checks.emplace_back("exact gradient matches central differences on the two-state fixture", [] {
        const auto spec = two_state_fixture();
        PolicyParams theta(2, 2);
        theta.prefs << 0.3, -0.2, 0.1, 0.4;
        const Vector g = oracle::exact_policy_gradient(spec, theta);
        const double h = 1e-5;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            PolicyParams up = theta, dn = theta;
            up.flat()[i] += h;
            dn.flat()[i] -= h;
            const double fd = (oracle::average_reward(spec, policy_table(up)) -
                               oracle::average_reward(spec, policy_table(dn))) / (2 * h);
            if (std::abs(fd - g[i]) > 1e-8) return false;
        }
        return true;
    });
    checks.emplace_back("critic fixed point solves A omega = b on the 4x4 grid", [] {
        const auto spec = build_gridworld({4, 0.0, 1.0});
        const auto fp = oracle::critic_fixed_point(spec, PolicyParams(16, 5), one_hot_features(16));
        return fp.residual <= 1e-10;
    });
    checks.emplace_back("zero-integrand fixture leaves every parameter unchanged", [] {
        const auto spec = constant_reward_fixture(0.5);
        const auto features = one_hot_features(2);
        LearnerState s;
        s.theta = PolicyParams(2, 2);
        s.critic = {Vector::Zero(2), 10.0};
        s.eta = 0.5;
        IterationContext ctx{&spec, &features, {}, false, false};
        Rng rng(7);
        for (int t = 0; t < 200; ++t) s = mac_iteration(s, ctx, 8, rng).state;
        return s.eta == 0.5 && s.critic.omega.isZero(0.0) && s.theta.prefs.isZero(0.0);
    });
    checks.emplace_back("T_max = 1 always uses a single capped sample", [] {
        Rng rng(3);
        for (int i = 0; i < 1000; ++i) {
            const auto lv = mlmc::sample_level(rng, 1);
            if (!lv.capped || mlmc::rollout_length(lv) != 1) return false;
        }
        return true;
    });
    checks.emplace_back("adagrad first step with ||h||^2 = 4 gives alpha = 0.5", [] {
        return adagrad_step(0.0, 4.0, 1.0).second == 0.5;
    });
    checks.emplace_back("seeded training runs replay bitwise", [] {
        const auto spec = build_gridworld({4, 0.0, 1.0});
        const auto features = one_hot_features(16);
        TrainingConfig cfg;
        cfg.sample_budget = 5000;
        cfg.log_interval = 500;
        const auto a = run_training(spec, features, cfg, 11);
        const auto b = run_training(spec, features, cfg, 11);
        if (a.rows.size() != b.rows.size()) return false;
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            if (a.rows[i].eta != b.rows[i].eta || a.rows[i].samples_total != b.rows[i].samples_total) return false;
        }
        return a.final_state.theta.prefs == b.final_state.theta.prefs;
    });

    bool ok = true;
    for (const auto& [name, fn] : checks) {
        bool pass = false;
        std::string detail;
        try {
            pass = fn();
        } catch (const std::exception& e) {
            detail = std::string(" (") + e.what() + ")";
        }
        os << (pass ? "PASS " : "FAIL ") << name << detail << "\n";
        ok = ok && pass;
    }
    return ok;
}

}  // namespace mac
