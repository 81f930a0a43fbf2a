#ifndef HTICA_HARNESS_HPP_
#define HTICA_HARNESS_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "htica/errors.hpp"
#include "htica/eval.hpp"
#include "htica/ica.hpp"
#include "htica/io.hpp"
#include "htica/rng.hpp"
#include "htica/sampling.hpp"
#include "htica/types.hpp"

namespace htica {

enum class MixingKind { random_unit_columns, orthogonal, from_file };

struct ExperimentConfig {
    Eigen::Index n = 2;
    Vector eta;
    MixingKind mixing = MixingKind::random_unit_columns;
    std::string mixing_file;
    std::vector<Eigen::Index> n_grid;
    int trials = 1;
    std::uint64_t seed = 0;
    bool normalize_first_moment = false;
    std::vector<PipelineConfig> pipelines;
    std::string output_path = "results.csv";
    std::string plot_prefix;
    bool timings = false;  // measured runtimes break byte-identical output; off by default
    int threads = 0;

    void validate() const {
        if (n < 1) throw Error(ErrorCode::invalid_parameter, "config: n must be >= 1");
        if (eta.size() != n) throw Error(ErrorCode::invalid_parameter, "config: eta must have n entries");
        if (n_grid.empty()) throw Error(ErrorCode::invalid_parameter, "config: N_grid must not be empty");
        for (std::size_t k = 1; k < n_grid.size(); ++k)
            if (n_grid[k] <= n_grid[k - 1])
                throw Error(ErrorCode::invalid_parameter, "config: N_grid must be strictly increasing");
        if (trials < 1) throw Error(ErrorCode::invalid_parameter, "config: trials must be >= 1");
        if (pipelines.empty()) throw Error(ErrorCode::invalid_parameter, "config: no pipelines given");
    }
};

struct ResultRow {
    Eigen::Index sample_count = 0;
    int trial = 0;
    std::string method;
    std::string contrast;
    bool damping = false;
    double frob = std::numeric_limits<double>::quiet_NaN();
    double amari = std::numeric_limits<double>::quiet_NaN();
    double sigma_min = std::numeric_limits<double>::quiet_NaN();
    double cond = std::numeric_limits<double>::quiet_NaN();
    double r = std::numeric_limits<double>::quiet_NaN();
    double accept_rate = std::numeric_limits<double>::quiet_NaN();
    double runtime_ms = 0.0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

inline std::string pipeline_token(const PipelineConfig& p) {
    std::string s = ortho_method_name(p.orthogonalizer);
    if (p.damping) s += "+damp";
    s += ":";
    s += contrast_name(p.contrast);
    return s;
}

/** Parse a pipeline token `method[+damp]:contrast`, e.g. `centroid+damp:pow3`. */
inline PipelineConfig parse_pipeline_token(const std::string& token) {
    PipelineConfig p;
    std::string spec = token;
    const std::size_t colon = spec.find(':');
    std::string head = colon == std::string::npos ? spec : spec.substr(0, colon);
    if (colon != std::string::npos) p.contrast = contrast_from_name(spec.substr(colon + 1));
    const std::size_t plus = head.find('+');
    std::string method = plus == std::string::npos ? head : head.substr(0, plus);
    p.damping = false;
    if (plus != std::string::npos) {
        if (head.substr(plus + 1) != "damp")
            throw Error(ErrorCode::invalid_parameter, "pipeline token: expected +damp in " + token);
        p.damping = true;
    }
    p.orthogonalizer = ortho_method_from_name(method);
    return p;
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

namespace detail {

constexpr std::uint64_t kMixTag = 0x4d49582dULL;
constexpr std::uint64_t kDataTag = 0x44415441ULL;
constexpr std::uint64_t kPipeTag = 0x50495045ULL;

inline Matrix trial_mixing(const ExperimentConfig& config, int trial, const Matrix* from_file) {
    switch (config.mixing) {
        case MixingKind::from_file:
            return *from_file;
        case MixingKind::orthogonal: {
            RandomStream rng = derive_stream(config.seed, {kMixTag, static_cast<std::uint64_t>(trial)});
            return generate_orthogonal_matrix(config.n, rng);
        }
        case MixingKind::random_unit_columns:
        default: {
            RandomStream rng = derive_stream(config.seed, {kMixTag, static_cast<std::uint64_t>(trial)});
            return generate_mixing_matrix(config.n, rng);
        }
    }
}

}  // namespace detail

/**
 * Run every pipeline on identical data for each (N, trial) cell.  One row per
 * (N, trial, pipeline); failures become NA rows rather than aborting the
 * sweep.  Deterministic for a fixed config and master seed.
 */
inline ResultTable run_experiment(const ExperimentConfig& config) {
    config.validate();
    ResultTable table;

    std::optional<Matrix> file_mixing;
    if (config.mixing == MixingKind::from_file) {
        Matrix m = read_matrix(config.mixing_file);
        if (m.rows() != config.n || m.cols() != config.n)
            throw Error(ErrorCode::invalid_parameter, "mixing file has wrong dimensions");
        file_mixing = std::move(m);
    }

    for (std::size_t n_idx = 0; n_idx < config.n_grid.size(); ++n_idx) {
        const Eigen::Index sample_count = config.n_grid[n_idx];
        for (int trial = 0; trial < config.trials; ++trial) {
            Matrix mixing = detail::trial_mixing(config, trial, file_mixing ? &*file_mixing : nullptr);

            IcaInstance instance;
            instance.mixing = mixing;
            instance.eta = TailExponentVector(config.eta);
            instance.normalize_first_moment = config.normalize_first_moment;
            instance.seed = derive_seed(config.seed,
                                        {detail::kDataTag, static_cast<std::uint64_t>(n_idx),
                                         static_cast<std::uint64_t>(trial)});
            SampleMatrix data = generate_ica_data(instance, sample_count);

            for (std::size_t pipe_idx = 0; pipe_idx < config.pipelines.size(); ++pipe_idx) {
                PipelineConfig pipeline = config.pipelines[pipe_idx];
                if (config.threads > 0) pipeline.centroid_options.threads = config.threads;
                ResultRow row;
                row.sample_count = sample_count;
                row.trial = trial;
                row.method = ortho_method_name(pipeline.orthogonalizer);
                row.contrast = contrast_name(pipeline.contrast);
                row.damping = pipeline.damping;
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    const std::uint64_t run_seed =
                        derive_seed(config.seed, {detail::kPipeTag, static_cast<std::uint64_t>(n_idx),
                                                  static_cast<std::uint64_t>(trial),
                                                  static_cast<std::uint64_t>(pipe_idx)});
                    PipelineResult result = run_htica(data, pipeline, run_seed, &mixing);
                    RecoveryReport report = evaluate_recovery(mixing, result.estimate.a_hat);
                    OrthogonalityDiagnostics diag = diagnostics(result.orthogonalizer, mixing);
                    row.frob = report.frobenius_error;
                    row.amari = report.amari_index;
                    row.sigma_min = diag.sigma_min_normalized;
                    row.cond = diag.condition_number;
                    if (result.damped) {
                        row.r = result.damping_radius;
                        row.accept_rate = result.acceptance_rate;
                    }
                } catch (const Error&) {
                    // NA row; the sweep continues
                }
                if (config.timings) {
                    row.runtime_ms = std::chrono::duration<double, std::milli>(
                                         std::chrono::steady_clock::now() - t0)
                                         .count();
                }
                table.rows.push_back(std::move(row));
            }
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

inline std::string format_metric(double v) {
    if (std::isnan(v)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

constexpr const char* kCsvHeader = "N,trial,method,contrast,damping,frob,amari,sigma_min,cond,R,accept_rate,runtime_ms";

inline void emit_csv(const ResultTable& table, const std::string& path) {
    if (table.rows.empty()) throw Error(ErrorCode::io_error, "refusing to write an empty table");
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot open for writing: " + path);
    out << kCsvHeader << "\n";
    for (const ResultRow& row : table.rows) {
        out << row.sample_count << ',' << row.trial << ',' << row.method << ',' << row.contrast << ','
            << (row.damping ? "on" : "off") << ',' << format_metric(row.frob) << ',' << format_metric(row.amari)
            << ',' << format_metric(row.sigma_min) << ',' << format_metric(row.cond) << ',' << format_metric(row.r)
            << ',' << format_metric(row.accept_rate) << ',' << format_metric(row.runtime_ms) << '\n';
    }
    if (!out) throw Error(ErrorCode::io_error, "write failed: " + path);
}

inline ResultTable parse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw Error(ErrorCode::io_error, "unexpected CSV header in " + path);
    ResultTable table;
    auto parse_metric = [](const std::string& s) {
        return s == "NA" ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 12) throw Error(ErrorCode::io_error, "bad CSV row in " + path);
        ResultRow row;
        row.sample_count = std::stoll(fields[0]);
        row.trial = std::stoi(fields[1]);
        row.method = fields[2];
        row.contrast = fields[3];
        row.damping = fields[4] == "on";
        row.frob = parse_metric(fields[5]);
        row.amari = parse_metric(fields[6]);
        row.sigma_min = parse_metric(fields[7]);
        row.cond = parse_metric(fields[8]);
        row.r = parse_metric(fields[9]);
        row.accept_rate = parse_metric(fields[10]);
        row.runtime_ms = parse_metric(fields[11]);
        table.rows.push_back(std::move(row));
    }
    return table;
}

/** Quantile with linear interpolation between order statistics. */
inline double interpolated_quantile(std::vector<double> values, double q) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(values.size() - 1, lo + 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

/**
 * One whitespace-delimited file per (method, contrast): columns N, median,
 * 25th and 75th percentile of the Frobenius error (NA rows excluded).
 */
inline void emit_plot_data(const ResultTable& table, const std::string& prefix) {
    if (table.rows.empty()) throw Error(ErrorCode::io_error, "refusing to write an empty table");
    std::map<std::pair<std::string, std::string>, std::map<Eigen::Index, std::vector<double>>> cells;
    for (const ResultRow& row : table.rows) {
        if (std::isnan(row.frob)) continue;
        cells[{row.method, row.contrast}][row.sample_count].push_back(row.frob);
    }
    for (const auto& [key, by_n] : cells) {
        const std::string path = prefix + "_" + key.first + "_" + key.second + ".dat";
        std::ofstream out(path);
        if (!out) throw Error(ErrorCode::io_error, "cannot open for writing: " + path);
        out << "# N median q25 q75\n";
        for (const auto& [count, values] : by_n) {
            out << count << ' ' << format_metric(interpolated_quantile(values, 0.5)) << ' '
                << format_metric(interpolated_quantile(values, 0.25)) << ' '
                << format_metric(interpolated_quantile(values, 0.75)) << '\n';
        }
        if (!out) throw Error(ErrorCode::io_error, "write failed: " + path);
    }
}

// ---------------------------------------------------------------------------
// Flat key = value configuration files (lists comma-separated)
// ---------------------------------------------------------------------------

inline std::map<std::string, std::string> parse_config_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open config: " + path);
    std::map<std::string, std::string> pairs;
    std::string line;
    auto trim = [](std::string s) {
        const auto begin = s.find_first_not_of(" \t\r");
        if (begin == std::string::npos) return std::string();
        const auto end = s.find_last_not_of(" \t\r");
        return s.substr(begin, end - begin + 1);
    };
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::invalid_parameter, "config line without '=': " + line);
        pairs[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return pairs;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto begin = item.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        const auto end = item.find_last_not_of(" \t");
        out.push_back(item.substr(begin, end - begin + 1));
    }
    return out;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    auto pairs = parse_config_pairs(path);
    ExperimentConfig config;
    auto get = [&](const char* key) -> std::optional<std::string> {
        auto it = pairs.find(key);
        if (it == pairs.end()) return std::nullopt;
        return it->second;
    };

    if (auto v = get("n")) config.n = std::stoll(*v);
    if (auto v = get("eta")) {
        auto items = split_list(*v);
        if (items.size() == 1) {
            config.eta = Vector::Constant(config.n, std::stod(items[0]));
        } else {
            config.eta.resize(static_cast<Eigen::Index>(items.size()));
            for (std::size_t i = 0; i < items.size(); ++i) config.eta[static_cast<Eigen::Index>(i)] = std::stod(items[i]);
        }
    }
    if (auto v = get("mixing")) {
        if (*v == "random")
            config.mixing = MixingKind::random_unit_columns;
        else if (*v == "orthogonal")
            config.mixing = MixingKind::orthogonal;
        else if (v->rfind("file:", 0) == 0) {
            config.mixing = MixingKind::from_file;
            config.mixing_file = v->substr(5);
        } else {
            throw Error(ErrorCode::invalid_parameter, "config: unknown mixing kind " + *v);
        }
    }
    if (auto v = get("N_grid"))
        for (const std::string& item : split_list(*v)) config.n_grid.push_back(std::stoll(item));
    if (auto v = get("trials")) config.trials = std::stoi(*v);
    if (auto v = get("normalize_first_moment")) config.normalize_first_moment = std::stoi(*v) != 0;
    if (auto v = get("output")) config.output_path = *v;
    if (auto v = get("plot_prefix")) config.plot_prefix = *v;
    if (auto v = get("timings")) config.timings = std::stoi(*v) != 0;
    if (auto v = get("threads")) config.threads = std::stoi(*v);

    PipelineConfig defaults;
    if (auto v = get("target_rejection")) defaults.damping_params.target_rejection = std::stod(*v);
    if (auto v = get("damp_tolerance")) defaults.damping_params.tolerance = std::stod(*v);
    if (auto v = get("convergence_tol")) defaults.convergence_tol = std::stod(*v);
    if (auto v = get("max_iter")) defaults.max_iter = std::stoi(*v);
    if (auto v = get("max_restarts")) defaults.max_restarts = std::stoi(*v);
    if (auto v = get("centroid_body_cap")) defaults.centroid_body_cap = std::stoll(*v);
    if (auto v = get("gauge_slack")) defaults.centroid_options.gauge_slack = std::stod(*v);

    if (auto v = get("pipelines")) {
        for (const std::string& token : split_list(*v)) {
            PipelineConfig p = defaults;
            PipelineConfig parsed = parse_pipeline_token(token);
            p.orthogonalizer = parsed.orthogonalizer;
            p.damping = parsed.damping;
            p.contrast = parsed.contrast;
            config.pipelines.push_back(p);
        }
    }
    return config;
}

}  // namespace htica

#endif  // HTICA_HARNESS_HPP_
