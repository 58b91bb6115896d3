#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "mac/experiment.hpp"
#include "mac/oracle.hpp"

namespace mac {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

double finite_mean(const std::vector<double>& xs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double x : xs) {
        if (std::isfinite(x)) {
            sum += x;
            ++n;
        }
    }
    return n == 0 ? RunRow::kMissing : sum / static_cast<double>(n);
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Series rows grouped by name, in order of first appearance.
std::vector<std::vector<SummaryRow>> group_series(const std::vector<SummaryRow>& rows) {
    std::vector<std::vector<SummaryRow>> groups;
    std::map<std::string, std::size_t> index;
    for (const auto& r : rows) {
        auto [it, inserted] = index.emplace(r.series, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(r);
    }
    return groups;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_seed_csv(const std::filesystem::path& path, const RunRecord& record) {
    std::ostringstream os;
    const auto& cols = seed_csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    for (const auto& r : record.rows) {
        os << r.iteration << ',' << r.samples_total << ',' << r.level << ',' << format_double(r.eta) << ','
           << format_double(r.mean_reward_window) << ',' << format_double(r.eta_err_sq) << ','
           << format_double(r.critic_err_sq) << ',' << format_double(r.grad_norm_sq) << "\n";
    }
    write_text(path, os.str());
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
    std::ostringstream os;
    const auto& cols = summary_csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    for (const auto& r : rows) {
        os << r.series << ',' << r.step << ',' << format_double(r.samples) << ',' << r.n_seeds << ','
           << format_double(r.mean_reward) << ',' << format_double(r.ci_half_width) << ','
           << format_double(r.mean_reward - r.ci_half_width) << ','
           << format_double(r.mean_reward + r.ci_half_width) << ',' << format_double(r.eta_err_sq) << ','
           << format_double(r.critic_err_sq) << ',' << format_double(r.grad_norm_sq) << "\n";
    }
    write_text(path, os.str());
}

std::vector<SummaryRow> summarize(const std::string& series, const std::vector<RunRecord>& records) {
    std::vector<SummaryRow> out;
    if (records.empty()) return out;
    std::size_t steps = records.front().rows.size();
    for (const auto& rec : records) steps = std::min(steps, rec.rows.size());
    const std::size_t n = records.size();

    for (std::size_t k = 0; k < steps; ++k) {
        SummaryRow row;
        row.series = series;
        row.step = k;
        row.n_seeds = n;
        std::vector<double> rewards, eta_err, critic_err, grad;
        double samples = 0.0;
        for (const auto& rec : records) {
            const auto& r = rec.rows[k];
            samples += static_cast<double>(r.samples_total);
            rewards.push_back(r.mean_reward_window);
            eta_err.push_back(r.eta_err_sq);
            critic_err.push_back(r.critic_err_sq);
            grad.push_back(r.grad_norm_sq);
        }
        row.samples = samples / static_cast<double>(n);
        double mean = 0.0;
        for (double x : rewards) mean += x;
        mean /= static_cast<double>(n);
        row.mean_reward = mean;
        if (n > 1) {
            double ss = 0.0;
            for (double x : rewards) ss += (x - mean) * (x - mean);
            const double sd = std::sqrt(ss / static_cast<double>(n - 1));
            row.ci_half_width = 1.96 * sd / std::sqrt(static_cast<double>(n));
        }
        row.eta_err_sq = finite_mean(eta_err);
        row.critic_err_sq = finite_mean(critic_err);
        row.grad_norm_sq = finite_mean(grad);
        out.push_back(std::move(row));
    }
    return out;
}

std::string render_svg(const std::vector<std::vector<SummaryRow>>& series) {
    constexpr double W = 800, H = 500, left = 70, right = 20, top = 30, bottom = 60;
    constexpr double pw = W - left - right, ph = H - top - bottom;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    double x_max = 0.0, y_min = 0.0, y_max = 0.0;
    bool any = false;
    for (const auto& s : series) {
        for (const auto& r : s) {
            x_max = std::max(x_max, r.samples);
            const double lo = r.mean_reward - r.ci_half_width, hi = r.mean_reward + r.ci_half_width;
            if (!any) {
                y_min = lo;
                y_max = hi;
                any = true;
            }
            y_min = std::min(y_min, lo);
            y_max = std::max(y_max, hi);
        }
    }
    if (x_max <= 0.0) x_max = 1.0;
    if (!(y_max > y_min)) {
        y_max = y_min + 1.0;
    }
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    auto px = [&](double x) { return left + pw * x / x_max; };
    auto py = [&](double y) { return top + ph * (1.0 - (y - y_min) / (y_max - y_min)); };
    auto pt = [](double x, double y) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(2) << x << ',' << y;
        return os.str();
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
       << "\" stroke=\"black\"/>\n";
    auto num = [](double v, int digits) {
        std::ostringstream o;
        o << std::setprecision(digits) << v;
        return o.str();
    };
    for (int i = 0; i <= 4; ++i) {
        const double xv = x_max * i / 4.0, yv = y_min + (y_max - y_min) * i / 4.0;
        os << "<text x=\"" << num(px(xv), 6) << "\" y=\"" << top + ph + 18
           << "\" font-size=\"11\" text-anchor=\"middle\">" << num(xv, 4) << "</text>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << num(py(yv) + 4, 6)
           << "\" font-size=\"11\" text-anchor=\"end\">" << num(yv, 3) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15
       << "\" font-size=\"13\" text-anchor=\"middle\">samples</text>\n";
    os << "<text x=\"18\" y=\"" << top + ph / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << top + ph / 2 << ")\">mean reward</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        if (s.empty()) continue;
        const char* color = colors[i % 6];
        const std::string name = xml_escape(s.front().series);
        const bool band = s.front().n_seeds > 1;
        if (band) {
            os << "<polygon class=\"ci-band\" data-series=\"" << name << "\" fill=\"" << color
               << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
            for (const auto& r : s) os << pt(px(r.samples), py(r.mean_reward + r.ci_half_width)) << ' ';
            for (auto it = s.rbegin(); it != s.rend(); ++it) {
                os << pt(px(it->samples), py(it->mean_reward - it->ci_half_width)) << ' ';
            }
            os << "\"/>\n";
        }
        os << "<polyline class=\"series\" data-series=\"" << name << "\" fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& r : s) os << pt(px(r.samples), py(r.mean_reward)) << ' ';
        os << "\"/>\n";
        os << "<text x=\"" << left + 10 << "\" y=\"" << top + 15 + 16 * static_cast<double>(i)
           << "\" font-size=\"12\" fill=\"" << color << "\">" << name << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

ExperimentResult run_experiment(const RunConfig& cfg, std::size_t jobs) {
    cfg.validate();
    const auto spec = make_environment(cfg);
    const auto features = make_features(cfg, spec);
    const auto plans = plan_series(cfg);

    ExperimentResult result;
    result.dir = cfg.output_dir;
    std::filesystem::create_directories(result.dir);
    write_text(result.dir / "config.resolved.txt", to_config_text(cfg));

    struct Task {
        std::size_t plan;
        std::size_t seed_index;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < plans.size(); ++p) {
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) tasks.push_back({p, s});
    }
    std::vector<RunRecord> records(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            const auto& task = tasks[i];
            const auto& plan = plans[task.plan];
            const auto seed = cfg.seeds[task.seed_index];
            try {
                records[i] = run_training(spec, features, plan.training, seed);
                write_seed_csv(result.dir / (plan.name + "_seed" + std::to_string(seed) + ".csv"), records[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!errors[i]) continue;
        const auto seed = cfg.seeds[tasks[i].seed_index];
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error("series " + plans[tasks[i].plan].name + " seed " + std::to_string(seed) +
                                     " failed: " + e.what());
        }
    }

    std::vector<SummaryRow> all_rows;
    std::vector<std::vector<SummaryRow>> plotted;
    for (std::size_t p = 0; p < plans.size(); ++p) {
        SeriesResult series;
        series.name = plans[p].name;
        series.seeds = cfg.seeds;
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
            series.records.push_back(std::move(records[p * cfg.seeds.size() + s]));
        }
        series.summary = summarize(series.name, series.records);
        all_rows.insert(all_rows.end(), series.summary.begin(), series.summary.end());
        plotted.push_back(series.summary);
        result.series.push_back(std::move(series));
    }
    write_summary_csv(result.dir / "summary.csv", all_rows);
    write_text(result.dir / "plot.svg", render_svg(plotted));
    return result;
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("csv: missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, const std::string& name) const {
    const auto& cell = rows.at(row).at(column(name));
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size()) throw std::runtime_error("csv: malformed number '" + cell + "'");
    return v;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path.string());
    table.header = split_commas(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_commas(line);
        if (cells.size() != table.header.size()) {
            throw std::runtime_error("csv: ragged row in " + path.string());
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
    const auto t = read_csv(path);
    std::vector<SummaryRow> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        SummaryRow r;
        r.series = t.rows[i][t.column("series")];
        r.step = static_cast<std::size_t>(t.number(i, "step"));
        r.samples = t.number(i, "samples");
        r.n_seeds = static_cast<std::size_t>(t.number(i, "n_seeds"));
        r.mean_reward = t.number(i, "mean_reward");
        r.ci_half_width = t.number(i, "ci_half_width");
        r.eta_err_sq = t.number(i, "eta_err_sq");
        r.critic_err_sq = t.number(i, "critic_err_sq");
        r.grad_norm_sq = t.number(i, "grad_norm_sq");
        rows.push_back(std::move(r));
    }
    return rows;
}

std::optional<double> samples_to_threshold(const std::vector<double>& samples, const std::vector<double>& values,
                                           double threshold) {
    if (samples.size() != values.size()) throw std::invalid_argument("samples_to_threshold: length mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] >= threshold) return samples[i];
    }
    return std::nullopt;
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::A: return "A";
        case Verdict::B: return "B";
        case Verdict::Tie: return "tie";
        case Verdict::Neither: return "neither";
    }
    return "neither";
}

ComparisonReport compare_summaries(const std::vector<SummaryRow>& a, const std::vector<SummaryRow>& b) {
    const auto groups_a = group_series(a);
    const auto groups_b = group_series(b);
    if (groups_a.empty() || groups_b.empty()) throw std::runtime_error("compare: empty summary");

    const auto& pa = groups_a.front();
    const auto& pb = groups_b.front();
    if (pa.front().samples > pb.back().samples || pb.front().samples > pa.back().samples) {
        throw std::runtime_error("compare: sample axes do not overlap");
    }

    ComparisonReport report;
    std::vector<std::pair<std::string, const std::vector<SummaryRow>*>> all;
    for (const auto& g : groups_a) all.emplace_back("A:" + g.front().series, &g);
    for (const auto& g : groups_b) all.emplace_back("B:" + g.front().series, &g);

    bool first = true;
    for (const auto& [name, rows] : all) {
        const double f = rows->back().mean_reward;
        report.best_final_mean = first ? f : std::max(report.best_final_mean, f);
        first = false;
    }
    for (const auto& [name, rows] : all) {
        SeriesComparison sc;
        sc.name = name;
        sc.final_mean = rows->back().mean_reward;
        sc.final_samples = rows->back().samples;
        std::vector<double> xs, ys;
        for (const auto& r : *rows) {
            xs.push_back(r.samples);
            ys.push_back(r.mean_reward);
        }
        for (double frac : report.fractions) {
            sc.samples_to_threshold.push_back(samples_to_threshold(xs, ys, frac * report.best_final_mean));
        }
        report.series.push_back(std::move(sc));
    }

    const auto& sa = report.series.front();
    const auto& sb = report.series[groups_a.size()];
    for (std::size_t k = 0; k < report.fractions.size(); ++k) {
        const auto& x = sa.samples_to_threshold[k];
        const auto& y = sb.samples_to_threshold[k];
        Verdict v = Verdict::Neither;
        if (x && y) v = *x < *y ? Verdict::A : (*y < *x ? Verdict::B : Verdict::Tie);
        else if (x) v = Verdict::A;
        else if (y) v = Verdict::B;
        report.verdicts.push_back(v);
    }
    return report;
}

ComparisonReport compare_runs(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b) {
    return compare_summaries(read_summary_csv(dir_a / "summary.csv"), read_summary_csv(dir_b / "summary.csv"));
}

void ComparisonReport::print(std::ostream& os) const {
    os << "best_final_mean," << format_double(best_final_mean) << "\n";
    os << "series,final_mean,final_samples";
    for (double f : fractions) os << ",samples_to_" << f;
    os << "\n";
    for (const auto& s : series) {
        os << s.name << ',' << format_double(s.final_mean) << ',' << format_double(s.final_samples);
        for (const auto& t : s.samples_to_threshold) os << ',' << (t ? format_double(*t) : std::string("never"));
        os << "\n";
    }
    for (std::size_t k = 0; k < fractions.size(); ++k) {
        os << "verdict_" << fractions[k] << ',' << verdict_name(verdicts[k]) << "\n";
    }
}

void print_oracle_report(const RunConfig& cfg, std::ostream& os) {
    const auto spec = make_environment(cfg);
    const auto features = make_features(cfg, spec);
    const PolicyParams theta0(spec.n_states(), spec.n_actions(), cfg.temperature);
    const auto probs = policy_table(theta0);
    const Matrix P = induced_kernel(spec, probs);
    const auto analysis = oracle::analyze(spec, theta0);

    os << std::setprecision(10);
    os << "env: " << cfg.env << " (" << spec.n_states() << " states, " << spec.n_actions() << " actions)\n";
    os << "r_max: " << spec.r_max() << "\n";
    os << "J(theta_0): " << analysis.avg_reward << "\n";
    os << "stationary distribution: " << analysis.dist.transpose() << "\n";
    os << "ergodicity coefficient kappa(P): " << oracle::ergodicity_coefficient(P) << "\n";
    try {
        const auto mix = oracle::mixing_time(P);
        os << "mixing time tau(1/4): " << mix.tau << "\n";
    } catch (const OracleError& e) {
        os << "mixing time tau(1/4): unavailable (" << e.what() << ")\n";
    }
    os << "||grad J(theta_0)||: " << analysis.exact_gradient.norm() << "\n";
    os << "differential value: " << analysis.diff_value.transpose() << "\n";
    const auto fp = oracle::critic_fixed_point(spec, theta0, features);
    os << "critic fixed point omega*: " << fp.omega.transpose() << "\n";
    os << "fixed point residual: " << fp.residual << "\n";
    os << "lambda: " << fp.lambda << " (null space dimension " << fp.null_basis.cols() << ")\n";
    os << "critic radius R_omega: "
       << (cfg.critic_radius ? *cfg.critic_radius : oracle::critic_radius(spec.r_max(), fp)) << "\n";
    os << "approximation error E_app: " << oracle::approximation_error(spec, theta0, features) << "\n";
}

}  // namespace mac
