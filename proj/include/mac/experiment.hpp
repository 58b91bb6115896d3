#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mac/algo.hpp"
#include "mac/critic.hpp"
#include "mac/env.hpp"

namespace mac {

/// Configuration problem tied to one key (or to a pair of conflicting keys).
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Flat key=value run description. See README for the key reference.
struct RunConfig {
    Algorithm algorithm = Algorithm::Mac;
    std::string env = "gridworld";   // gridworld | two_state
    GridWorldConfig grid;
    std::optional<std::size_t> t_max;
    std::optional<std::size_t> rollout_len;
    std::optional<std::size_t> baseline_rollout_len;   // adds a paired vanilla series
    StepsizeSchedule schedule;
    std::vector<std::uint64_t> seeds;
    std::uint64_t sample_budget = 0;
    std::uint64_t max_iterations = 0;
    bool diagnostics = true;
    std::uint64_t diagnostics_every = 100;
    std::uint64_t log_interval = 1000;
    std::size_t smoothing_window = 10000;
    std::string features = "one_hot";   // one_hot | coarse_tiling
    std::optional<double> critic_radius;
    double temperature = 1.0;
    bool reset_each_iteration = false;
    bool vanilla_sequential = false;
    std::string output_dir = "runs/out";
    std::string label;

    /// Cross-field checks; throws ConfigError naming the field.
    void validate() const;
};

/// Parses and validates config text. `source` prefixes line numbers in errors.
RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

/// Re-parseable text holding every resolved key.
std::string to_config_text(const RunConfig& cfg);

/// Comma-separated unsigned integers ("1,2,3").
std::vector<std::uint64_t> parse_seed_list(const std::string& text, const std::string& field = "seeds");

MdpSpec make_environment(const RunConfig& cfg);
FeatureMap make_features(const RunConfig& cfg, const MdpSpec& spec);

/// One algorithm configuration run over every seed.
struct SeriesPlan {
    std::string name;
    TrainingConfig training;
};

std::vector<SeriesPlan> plan_series(const RunConfig& cfg);

/// Across-seed statistics at one logging step.
struct SummaryRow {
    std::string series;
    std::size_t step = 0;
    double samples = 0.0;          // mean samples_total at this step
    std::size_t n_seeds = 0;
    double mean_reward = 0.0;      // mean of mean_reward_window
    double ci_half_width = 0.0;    // 1.96 * stderr; 0 for a single seed
    double eta_err_sq = RunRow::kMissing;
    double critic_err_sq = RunRow::kMissing;
    double grad_norm_sq = RunRow::kMissing;
};

struct SeriesResult {
    std::string name;
    std::vector<std::uint64_t> seeds;
    std::vector<RunRecord> records;   // aligned with seeds
    std::vector<SummaryRow> summary;
};

struct ExperimentResult {
    std::filesystem::path dir;
    std::vector<SeriesResult> series;
};

/// Across-seed mean and 95% normal-approximation CI per logging step,
/// truncated to the shortest seed.
std::vector<SummaryRow> summarize(const std::string& series, const std::vector<RunRecord>& records);

/// Runs every (series, seed) pair on a pool of `jobs` workers and writes
///   <dir>/<series>_seed<seed>.csv, <dir>/summary.csv, <dir>/plot.svg,
///   <dir>/config.resolved.txt
/// A failing seed aborts the experiment with the seed named.
ExperimentResult run_experiment(const RunConfig& cfg, std::size_t jobs = 1);

inline const std::vector<std::string>& seed_csv_columns() {
    static const std::vector<std::string> cols{"iteration", "samples_total", "level", "eta", "mean_reward_window",
                                               "eta_err_sq", "critic_err_sq", "grad_norm_sq"};
    return cols;
}

inline const std::vector<std::string>& summary_csv_columns() {
    static const std::vector<std::string> cols{"series", "step", "samples", "n_seeds", "mean_reward",
                                               "ci_half_width", "ci_low", "ci_high", "eta_err_sq",
                                               "critic_err_sq", "grad_norm_sq"};
    return cols;
}

/// Shortest decimal form that round-trips (17 significant digits); "nan" for NaN.
std::string format_double(double v);

void write_seed_csv(const std::filesystem::path& path, const RunRecord& record);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

/// 800x500 SVG: one polyline per series, a shaded band for multi-seed series.
std::string render_svg(const std::vector<std::vector<SummaryRow>>& series);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;   // throws if absent
    double number(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

/// First sample count at which `values` reaches `threshold`; nullopt if never.
std::optional<double> samples_to_threshold(const std::vector<double>& samples, const std::vector<double>& values,
                                           double threshold);

enum class Verdict { A, B, Tie, Neither };
const char* verdict_name(Verdict v);

struct SeriesComparison {
    std::string name;   // "<A|B>:<series>"
    double final_mean = 0.0;
    double final_samples = 0.0;
    std::vector<std::optional<double>> samples_to_threshold;   // per threshold fraction
};

struct ComparisonReport {
    std::vector<double> fractions{0.5, 0.9};
    double best_final_mean = 0.0;
    std::vector<SeriesComparison> series;
    std::vector<Verdict> verdicts;   // first series of A vs first series of B, per fraction

    void print(std::ostream& os) const;
};

/// Compares two summaries. Thresholds are fractions of the best final mean
/// over all series; the earlier crossing wins. Throws std::runtime_error when
/// the sample axes do not overlap.
ComparisonReport compare_summaries(const std::vector<SummaryRow>& a, const std::vector<SummaryRow>& b);
ComparisonReport compare_runs(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b);

/// Mixing time, J(theta_0), critic fixed point and related quantities for the
/// configured environment at the uniform policy.
void print_oracle_report(const RunConfig& cfg, std::ostream& os);

/// Quick invariant checks on the built-in fixtures. Prints one line per check.
bool run_selftest(std::ostream& os);

}  // namespace mac
