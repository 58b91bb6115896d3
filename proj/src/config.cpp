#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "mac/experiment.hpp"

namespace mac {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::uint64_t to_uint(const std::string& v, const std::string& key) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec == std::errc() && ptr == end) return out;
    // allow integral scientific notation such as 3e6
    double d = 0.0;
    auto [dptr, dec] = std::from_chars(v.data(), end, d);
    if (dec == std::errc() && dptr == end && d >= 0.0 && d < 1.8e19 && d == static_cast<double>(static_cast<std::uint64_t>(d))) {
        return static_cast<std::uint64_t>(d);
    }
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
}

double to_double(const std::string& v, const std::string& key) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
        throw ConfigError(key, "expected a finite number, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::size_t to_positive(const std::string& v, const std::string& key) {
    const auto n = to_uint(v, key);
    if (n == 0) throw ConfigError(key, "must be positive");
    return static_cast<std::size_t>(n);
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table{
        {"algorithm",
         [](RunConfig& c, const std::string& v, const std::string& k) {
             if (v == "mac") c.algorithm = Algorithm::Mac;
             else if (v == "vanilla") c.algorithm = Algorithm::Vanilla;
             else throw ConfigError(k, "expected mac or vanilla, got '" + v + "'");
         }},
        {"env",
         [](RunConfig& c, const std::string& v, const std::string& k) {
             if (v != "gridworld" && v != "two_state") {
                 throw ConfigError(k, "expected gridworld or two_state, got '" + v + "'");
             }
             c.env = v;
         }},
        {"grid_size", [](RunConfig& c, const std::string& v, const std::string& k) { c.grid.n = to_positive(v, k); }},
        {"slip_prob", [](RunConfig& c, const std::string& v, const std::string& k) { c.grid.slip_prob = to_double(v, k); }},
        {"goal_reward",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.grid.goal_reward = to_double(v, k); }},
        {"t_max", [](RunConfig& c, const std::string& v, const std::string& k) { c.t_max = to_positive(v, k); }},
        {"rollout_len",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.rollout_len = to_positive(v, k); }},
        {"baseline_rollout_len",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.baseline_rollout_len = to_positive(v, k); }},
        {"stepsize",
         [](RunConfig& c, const std::string& v, const std::string& k) {
             if (v == "constant") c.schedule.kind = StepsizeKind::Constant;
             else if (v == "polynomial") c.schedule.kind = StepsizeKind::Polynomial;
             else if (v == "adagrad_actor") c.schedule.kind = StepsizeKind::AdagradActor;
             else throw ConfigError(k, "expected constant, polynomial or adagrad_actor, got '" + v + "'");
         }},
        {"actor_rate", [](RunConfig& c, const std::string& v, const std::string& k) { c.schedule.actor = to_double(v, k); }},
        {"critic_rate",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.schedule.critic = to_double(v, k); }},
        {"reward_rate",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.schedule.reward = to_double(v, k); }},
        {"nu", [](RunConfig& c, const std::string& v, const std::string& k) { c.schedule.nu = to_double(v, k); }},
        {"sigma", [](RunConfig& c, const std::string& v, const std::string& k) { c.schedule.sigma = to_double(v, k); }},
        {"seeds", [](RunConfig& c, const std::string& v, const std::string& k) { c.seeds = parse_seed_list(v, k); }},
        {"sample_budget",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.sample_budget = to_uint(v, k); }},
        {"max_iterations",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.max_iterations = to_uint(v, k); }},
        {"diagnostics", [](RunConfig& c, const std::string& v, const std::string& k) { c.diagnostics = to_bool(v, k); }},
        {"diagnostics_every",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.diagnostics_every = to_positive(v, k); }},
        {"log_interval",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.log_interval = to_uint(v, k); }},
        {"smoothing_window",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.smoothing_window = to_positive(v, k); }},
        {"features",
         [](RunConfig& c, const std::string& v, const std::string& k) {
             if (v != "one_hot" && v != "coarse_tiling") {
                 throw ConfigError(k, "expected one_hot or coarse_tiling, got '" + v + "'");
             }
             c.features = v;
         }},
        {"critic_radius",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.critic_radius = to_double(v, k); }},
        {"temperature",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.temperature = to_double(v, k); }},
        {"reset_each_iteration",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.reset_each_iteration = to_bool(v, k); }},
        {"vanilla_sequential",
         [](RunConfig& c, const std::string& v, const std::string& k) { c.vanilla_sequential = to_bool(v, k); }},
        {"output_dir", [](RunConfig& c, const std::string& v, const std::string&) { c.output_dir = v; }},
        {"label", [](RunConfig& c, const std::string& v, const std::string&) { c.label = v; }},
    };
    return table;
}

const char* algorithm_name(Algorithm a) { return a == Algorithm::Mac ? "mac" : "vanilla"; }

const char* stepsize_name(StepsizeKind k) {
    switch (k) {
        case StepsizeKind::Constant: return "constant";
        case StepsizeKind::Polynomial: return "polynomial";
        case StepsizeKind::AdagradActor: return "adagrad_actor";
    }
    return "constant";
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text, const std::string& field) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(field, "empty entry in seed list");
        seeds.push_back(to_uint(item, field));
    }
    if (seeds.empty()) throw ConfigError(field, "seed list is empty");
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) throw ConfigError(field, "duplicate seed");
    return seeds;
}

void RunConfig::validate() const {
    if (algorithm == Algorithm::Mac) {
        if (rollout_len) throw ConfigError("rollout_len", "not allowed with algorithm=mac (set t_max)");
        if (!t_max) throw ConfigError("t_max", "required for algorithm=mac");
    } else {
        if (t_max) throw ConfigError("t_max", "not allowed with algorithm=vanilla (set rollout_len)");
        if (!rollout_len) throw ConfigError("rollout_len", "required for algorithm=vanilla");
        if (baseline_rollout_len) throw ConfigError("baseline_rollout_len", "only valid with algorithm=mac");
    }
    if (seeds.empty()) throw ConfigError("seeds", "required and non-empty");
    if (sample_budget == 0 && max_iterations == 0) {
        throw ConfigError("sample_budget", "set sample_budget or max_iterations");
    }
    if (env == "gridworld") {
        if (grid.n < 2) throw ConfigError("grid_size", "must be at least 2");
        if (grid.slip_prob < 0.0 || grid.slip_prob > 1.0) throw ConfigError("slip_prob", "must lie in [0, 1]");
        if (grid.goal_reward <= 0.0) throw ConfigError("goal_reward", "must be positive");
    } else if (features == "coarse_tiling") {
        throw ConfigError("features", "coarse_tiling requires env=gridworld");
    }
    if (!(temperature > 0.0)) throw ConfigError("temperature", "must be positive");
    if (critic_radius && !(*critic_radius > 0.0)) throw ConfigError("critic_radius", "must be positive");
    if (label.find_first_of("/\\,") != std::string::npos) throw ConfigError("label", "may not contain / \\ or ,");
    try {
        schedule.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("stepsize", e.what());
    }
}

RunConfig parse_config_text(const std::string& text, const std::string& source) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where, "expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(key, "unknown key (" + where + ")");
        if (!seen.insert(key).second) throw ConfigError(key, "duplicate key (" + where + ")");
        if (value.empty()) throw ConfigError(key, "empty value (" + where + ")");
        it->second(cfg, value, key);
    }
    if (!seen.count("algorithm")) throw ConfigError("algorithm", "missing required key");
    if (!seen.count("seeds")) throw ConfigError("seeds", "missing required key");
    cfg.validate();
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

std::string to_config_text(const RunConfig& c) {
    std::ostringstream os;
    os << "algorithm = " << algorithm_name(c.algorithm) << "\n";
    os << "env = " << c.env << "\n";
    if (c.env == "gridworld") {
        os << "grid_size = " << c.grid.n << "\n";
        os << "slip_prob = " << format_double(c.grid.slip_prob) << "\n";
        os << "goal_reward = " << format_double(c.grid.goal_reward) << "\n";
    }
    if (c.t_max) os << "t_max = " << *c.t_max << "\n";
    if (c.rollout_len) os << "rollout_len = " << *c.rollout_len << "\n";
    if (c.baseline_rollout_len) os << "baseline_rollout_len = " << *c.baseline_rollout_len << "\n";
    os << "stepsize = " << stepsize_name(c.schedule.kind) << "\n";
    os << "actor_rate = " << format_double(c.schedule.actor) << "\n";
    os << "critic_rate = " << format_double(c.schedule.critic) << "\n";
    os << "reward_rate = " << format_double(c.schedule.reward) << "\n";
    os << "nu = " << format_double(c.schedule.nu) << "\n";
    os << "sigma = " << format_double(c.schedule.sigma) << "\n";
    os << "seeds = ";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) os << (i ? "," : "") << c.seeds[i];
    os << "\n";
    os << "sample_budget = " << c.sample_budget << "\n";
    os << "max_iterations = " << c.max_iterations << "\n";
    os << "diagnostics = " << (c.diagnostics ? "true" : "false") << "\n";
    os << "diagnostics_every = " << c.diagnostics_every << "\n";
    os << "log_interval = " << c.log_interval << "\n";
    os << "smoothing_window = " << c.smoothing_window << "\n";
    os << "features = " << c.features << "\n";
    if (c.critic_radius) os << "critic_radius = " << format_double(*c.critic_radius) << "\n";
    os << "temperature = " << format_double(c.temperature) << "\n";
    os << "reset_each_iteration = " << (c.reset_each_iteration ? "true" : "false") << "\n";
    os << "vanilla_sequential = " << (c.vanilla_sequential ? "true" : "false") << "\n";
    os << "output_dir = " << c.output_dir << "\n";
    if (!c.label.empty()) os << "label = " << c.label << "\n";
    return os.str();
}

MdpSpec make_environment(const RunConfig& cfg) {
    if (cfg.env == "two_state") return two_state_fixture();
    return build_gridworld(cfg.grid);
}

FeatureMap make_features(const RunConfig& cfg, const MdpSpec& spec) {
    if (cfg.features == "coarse_tiling") return coarse_tiling_features(cfg.grid.n);
    return one_hot_features(spec.n_states());
}

std::vector<SeriesPlan> plan_series(const RunConfig& cfg) {
    TrainingConfig base;
    base.schedule = cfg.schedule;
    base.sample_budget = cfg.sample_budget;
    base.max_iterations = cfg.max_iterations;
    base.log_interval = cfg.log_interval;
    base.smoothing_window = cfg.smoothing_window;
    base.diagnostics_every = cfg.diagnostics ? cfg.diagnostics_every : 0;
    base.critic_radius = cfg.critic_radius;
    base.temperature = cfg.temperature;
    base.reset_each_iteration = cfg.reset_each_iteration;
    base.vanilla_sequential = cfg.vanilla_sequential;

    const std::string prefix = cfg.label.empty() ? "" : cfg.label + "-";
    std::vector<SeriesPlan> plans;
    if (cfg.algorithm == Algorithm::Mac) {
        TrainingConfig t = base;
        t.algorithm = Algorithm::Mac;
        t.t_max = *cfg.t_max;
        plans.push_back({prefix + "mac", t});
        if (cfg.baseline_rollout_len) {
            TrainingConfig v = base;
            v.algorithm = Algorithm::Vanilla;
            v.rollout_len = *cfg.baseline_rollout_len;
            plans.push_back({prefix + "vanilla", v});
        }
    } else {
        TrainingConfig v = base;
        v.algorithm = Algorithm::Vanilla;
        v.rollout_len = *cfg.rollout_len;
        plans.push_back({prefix + "vanilla", v});
    }
    return plans;
}

}  // namespace mac
