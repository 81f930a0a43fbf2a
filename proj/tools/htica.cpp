// Command-line harness: generate synthetic heavy-tailed ICA data, compute
// orthogonalizers, damp samples, run single pipelines, sweep experiments,
// and compare recovered mixing matrices.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "htica/eval.hpp"
#include "htica/harness.hpp"
#include "htica/io.hpp"

using namespace htica;

namespace {

Vector parse_eta(const std::string& text, Eigen::Index n) {
    std::vector<std::string> items = split_list(text);
    Vector eta;
    if (items.size() == 1) {
        eta = Vector::Constant(n, std::stod(items[0]));
    } else {
        if (static_cast<Eigen::Index>(items.size()) != n)
            throw Error(ErrorCode::invalid_parameter, "eta must have 1 or n entries");
        eta.resize(n);
        for (std::size_t i = 0; i < items.size(); ++i) eta[static_cast<Eigen::Index>(i)] = std::stod(items[i]);
    }
    return eta;
}

int run_gen(Eigen::Index n, const std::string& eta_text, Eigen::Index count, std::uint64_t seed,
            const std::string& mixing_kind, bool normalize, const std::string& out,
            const std::string& mix_out) {
    IcaInstance instance;
    instance.eta = TailExponentVector(parse_eta(eta_text, n));
    instance.seed = seed;
    instance.normalize_first_moment = normalize;
    RandomStream mix_rng = derive_stream(seed, {stream_tag::mixing});
    if (mixing_kind == "random")
        instance.mixing = generate_mixing_matrix(n, mix_rng);
    else if (mixing_kind == "orthogonal")
        instance.mixing = generate_orthogonal_matrix(n, mix_rng);
    else if (mixing_kind == "identity")
        instance.mixing = Matrix::Identity(n, n);
    else if (mixing_kind.rfind("file:", 0) == 0)
        instance.mixing = read_matrix(mixing_kind.substr(5));
    else
        throw Error(ErrorCode::invalid_parameter, "unknown mixing kind: " + mixing_kind);
    if (instance.mixing.rows() != n || instance.mixing.cols() != n)
        throw Error(ErrorCode::invalid_parameter, "mixing matrix must be n x n");

    SampleMatrix data = generate_ica_data(instance, count);
    SampleFileHeader header{n, count, seed};
    write_samples(out, data, header);
    if (!mix_out.empty()) write_matrix(mix_out, instance.mixing, "kind=mixing n=" + std::to_string(n));
    std::printf("wrote %lld samples of dimension %lld to %s\n", static_cast<long long>(count),
                static_cast<long long>(n), out.c_str());
    return 0;
}

int run_orth(const std::string& in, const std::string& method, const std::string& out,
             const std::string& mix_file, int threads, double gauge_slack) {
    SampleMatrix samples = read_samples(in);
    Orthogonalizer ortho;
    if (method == "centroid") {
        CentroidScaleOptions opts;
        opts.threads = threads;
        opts.gauge_slack = gauge_slack;
        ortho = orthogonalize_centroid(samples, opts);
    } else if (method == "covariance") {
        ortho = orthogonalize_covariance(samples);
    } else if (method == "identity") {
        ortho = orthogonalize_identity(samples.dim());
    } else if (method == "oracle") {
        if (mix_file.empty()) throw Error(ErrorCode::invalid_parameter, "oracle method requires --mix");
        ortho = orthogonalize_oracle(read_matrix(mix_file));
    } else {
        throw Error(ErrorCode::invalid_parameter, "unknown method: " + method);
    }
    write_matrix(out, ortho.b,
                 "method=" + std::string(ortho_method_name(ortho.method)) +
                     " n=" + std::to_string(samples.dim()));
    if (!mix_file.empty() && method != "oracle") {
        OrthogonalityDiagnostics diag = diagnostics(ortho, read_matrix(mix_file));
        std::printf("sigma_min=%.6f condition=%.4f\n", diag.sigma_min_normalized, diag.condition_number);
    }
    std::printf("wrote %s orthogonalizer to %s\n", ortho_method_name(ortho.method), out.c_str());
    return 0;
}

int run_damp(const std::string& in, std::uint64_t seed, double radius, double target_rejection,
             double tolerance, const std::string& out) {
    SampleMatrix samples = read_samples(in);
    DampingParams params;
    params.target_rejection = target_rejection;
    params.tolerance = tolerance;
    const double r = radius > 0.0 ? radius : choose_damping_radius(samples, params);
    RandomStream rng = derive_stream(seed, {stream_tag::damping});
    DampingReport report = damp(samples, r, rng);
    if (!out.empty()) {
        SampleFileHeader header{samples.dim(), report.accepted.count(), seed};
        write_samples(out, report.accepted, header);
    }
    std::printf("R,acceptance_rate,K_estimate\n%.10g,%.10g,%.10g\n", report.r_selected,
                report.acceptance_rate, report.k_estimate);
    return 0;
}

int run_single(const std::string& in, const std::string& truth_file, const std::string& method,
               const std::string& contrast, bool damping, std::uint64_t seed, double target_rejection,
               int max_iter, int max_restarts, Eigen::Index body_cap, double gauge_slack, int threads,
               const std::string& est_out) {
    SampleMatrix samples = read_samples(in);
    std::optional<Matrix> truth;
    if (!truth_file.empty()) truth = read_matrix(truth_file);

    PipelineConfig config;
    config.orthogonalizer = ortho_method_from_name(method);
    config.contrast = contrast_from_name(contrast);
    config.damping = damping;
    config.damping_params.target_rejection = target_rejection;
    config.max_iter = max_iter;
    config.max_restarts = max_restarts;
    config.centroid_body_cap = body_cap;
    config.centroid_options.gauge_slack = gauge_slack;
    config.centroid_options.threads = threads;

    PipelineResult result = run_htica(samples, config, seed, truth ? &*truth : nullptr);

    ResultRow row;
    row.sample_count = samples.count();
    row.trial = 0;
    row.method = method;
    row.contrast = contrast;
    row.damping = damping;
    if (result.damped) {
        row.r = result.damping_radius;
        row.accept_rate = result.acceptance_rate;
    }
    if (truth) {
        RecoveryReport report = evaluate_recovery(*truth, result.estimate.a_hat);
        OrthogonalityDiagnostics diag = diagnostics(result.orthogonalizer, *truth);
        row.frob = report.frobenius_error;
        row.amari = report.amari_index;
        row.sigma_min = diag.sigma_min_normalized;
        row.cond = diag.condition_number;
    }
    std::printf("%s\n", kCsvHeader);
    std::printf("%lld,%d,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s\n", static_cast<long long>(row.sample_count),
                row.trial, row.method.c_str(), row.contrast.c_str(), row.damping ? "on" : "off",
                format_metric(row.frob).c_str(), format_metric(row.amari).c_str(),
                format_metric(row.sigma_min).c_str(), format_metric(row.cond).c_str(),
                format_metric(row.r).c_str(), format_metric(row.accept_rate).c_str(),
                format_metric(row.runtime_ms).c_str());
    if (!result.estimate.converged)
        std::fprintf(stderr, "warning: FastICA did not converge after %d restarts\n", result.restarts_used);
    if (!est_out.empty()) {
        std::string header = "contrast=" + std::string(contrast_name(config.contrast)) +
                             " iterations=" + std::to_string(result.estimate.iterations.empty()
                                                                 ? 0
                                                                 : result.estimate.iterations.front()) +
                             " converged=" + (result.estimate.converged ? "1" : "0");
        write_matrix(est_out, result.estimate.a_hat, header);
    }
    return 0;
}

int run_sweep(const std::string& config_path, std::uint64_t seed, const std::string& out_override,
              const std::string& plot_override, int threads_override) {
    ExperimentConfig config = load_experiment_config(config_path);
    config.seed = seed;
    if (!out_override.empty()) config.output_path = out_override;
    if (!plot_override.empty()) config.plot_prefix = plot_override;
    if (threads_override > 0) config.threads = threads_override;
    config.validate();
    ResultTable table = run_experiment(config);
    emit_csv(table, config.output_path);
    if (!config.plot_prefix.empty()) emit_plot_data(table, config.plot_prefix);
    std::printf("wrote %zu rows to %s\n", table.rows.size(), config.output_path.c_str());
    return 0;
}

int run_eval(const std::string& truth_file, const std::string& est_file) {
    Matrix truth = read_matrix(truth_file);
    Matrix est = read_matrix(est_file);
    for (Eigen::Index j = 0; j < est.cols(); ++j) {
        const double norm = est.col(j).norm();
        if (norm > 0.0) est.col(j) /= norm;
    }
    for (Eigen::Index j = 0; j < truth.cols(); ++j) {
        const double norm = truth.col(j).norm();
        if (norm > 0.0) truth.col(j) /= norm;
    }
    RecoveryReport report = evaluate_recovery(truth, est);
    std::printf("frobenius_error=%.10g\namari_index=%.10g\npermutation=", report.frobenius_error,
                report.amari_index);
    for (std::size_t i = 0; i < report.matching.permutation.size(); ++i)
        std::printf("%s%d", i ? "," : "", report.matching.permutation[i]);
    std::printf("\nsigns=");
    for (std::size_t i = 0; i < report.matching.signs.size(); ++i)
        std::printf("%s%+d", i ? "," : "", report.matching.signs[i] > 0 ? 1 : -1);
    std::printf("\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heavy-tailed ICA toolkit"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "generate synthetic mixed samples");
    Eigen::Index gen_n = 2, gen_count = 1000;
    std::string gen_eta = "6", gen_mixing = "random", gen_out, gen_mix_out;
    std::uint64_t gen_seed = 0;
    bool gen_normalize = false;
    gen->add_option("--n", gen_n, "dimension")->required();
    gen->add_option("--eta", gen_eta, "tail exponents, single value or comma list")->required();
    gen->add_option("--N", gen_count, "sample count")->required();
    gen->add_option("--seed", gen_seed, "master seed")->required();
    gen->add_option("--mixing", gen_mixing, "random | orthogonal | identity | file:PATH");
    gen->add_flag("--normalize", gen_normalize, "rescale sources to E|S_i| = 1");
    gen->add_option("--out", gen_out, "sample file to write")->required();
    gen->add_option("--mix-out", gen_mix_out, "write the true mixing matrix here");

    auto* orth = app.add_subcommand("orth", "compute an orthogonalization matrix");
    std::string orth_in, orth_method = "centroid", orth_out, orth_mix;
    int orth_threads = 0;
    double orth_slack = 0.0;
    orth->add_option("--in", orth_in, "sample file")->required();
    orth->add_option("--method", orth_method, "centroid | covariance | oracle | identity");
    orth->add_option("--out", orth_out, "matrix file to write")->required();
    orth->add_option("--mix", orth_mix, "true mixing matrix (for oracle or diagnostics)");
    orth->add_option("--threads", orth_threads, "LP worker threads (0 = auto)");
    orth->add_option("--gauge-slack", orth_slack, "relative LP optimality slack (0 = exact)");

    auto* dampcmd = app.add_subcommand("damp", "Gaussian damping by rejection sampling");
    std::string damp_in, damp_out;
    std::uint64_t damp_seed = 0;
    double damp_radius = 0.0, damp_target = 0.25, damp_tol = 0.01;
    dampcmd->add_option("--in", damp_in, "sample file")->required();
    dampcmd->add_option("--seed", damp_seed, "master seed")->required();
    dampcmd->add_option("--R", damp_radius, "damping radius (0 = choose by binary search)");
    dampcmd->add_option("--target-rejection", damp_target, "rejected fraction target");
    dampcmd->add_option("--tolerance", damp_tol, "acceptance tolerance for the search");
    dampcmd->add_option("--out", damp_out, "write accepted samples here");

    auto* runcmd = app.add_subcommand("run", "run one pipeline on a sample file");
    std::string run_in, run_truth, run_method = "centroid", run_contrast = "pow3", run_est_out;
    std::uint64_t run_seed = 0;
    bool run_damp_flag = false;
    double run_target = 0.25, run_slack = 0.0;
    int run_max_iter = 1000, run_restarts = 10, run_threads = 0;
    Eigen::Index run_body_cap = 0;
    runcmd->add_option("--in", run_in, "sample file")->required();
    runcmd->add_option("--truth", run_truth, "true mixing matrix file");
    runcmd->add_option("--method", run_method, "centroid | covariance | oracle | identity");
    runcmd->add_option("--contrast", run_contrast, "pow3 | tanh");
    runcmd->add_flag("--damp", run_damp_flag, "apply Gaussian damping");
    runcmd->add_option("--seed", run_seed, "master seed")->required();
    runcmd->add_option("--target-rejection", run_target, "rejected fraction target");
    runcmd->add_option("--max-iter", run_max_iter, "FastICA sweep limit");
    runcmd->add_option("--max-restarts", run_restarts, "FastICA restart limit");
    runcmd->add_option("--body-cap", run_body_cap, "centroid body sample cap (0 = all)");
    runcmd->add_option("--gauge-slack", run_slack, "relative LP optimality slack");
    runcmd->add_option("--threads", run_threads, "LP worker threads");
    runcmd->add_option("--est-out", run_est_out, "write the estimated mixing matrix here");

    auto* sweep = app.add_subcommand("sweep", "full experiment from a config file");
    std::string sweep_config, sweep_out, sweep_plot;
    std::uint64_t sweep_seed = 0;
    int sweep_threads = 0;
    sweep->add_option("--config", sweep_config, "key = value experiment file")->required();
    sweep->add_option("--seed", sweep_seed, "master seed")->required();
    sweep->add_option("--out", sweep_out, "override the CSV output path");
    sweep->add_option("--plot-prefix", sweep_plot, "override the plot-data prefix");
    sweep->add_option("--threads", sweep_threads, "LP worker threads");

    auto* evalcmd = app.add_subcommand("eval", "compare two mixing-matrix files");
    std::string eval_truth, eval_est;
    evalcmd->add_option("--truth", eval_truth, "reference matrix file")->required();
    evalcmd->add_option("--est", eval_est, "estimated matrix file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return run_gen(gen_n, gen_eta, gen_count, gen_seed, gen_mixing, gen_normalize, gen_out, gen_mix_out);
        if (orth->parsed()) return run_orth(orth_in, orth_method, orth_out, orth_mix, orth_threads, orth_slack);
        if (dampcmd->parsed()) return run_damp(damp_in, damp_seed, damp_radius, damp_target, damp_tol, damp_out);
        if (runcmd->parsed())
            return run_single(run_in, run_truth, run_method, run_contrast, run_damp_flag, run_seed, run_target,
                              run_max_iter, run_restarts, run_body_cap, run_slack, run_threads, run_est_out);
        if (sweep->parsed()) return run_sweep(sweep_config, sweep_seed, sweep_out, sweep_plot, sweep_threads);
        if (evalcmd->parsed()) return run_eval(eval_truth, eval_est);
    } catch (const Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", error_code_name(e.code()), e.what());
        switch (e.code()) {
            case ErrorCode::invalid_parameter:
            case ErrorCode::invalid_input:
            case ErrorCode::io_error:
                return 1;
            default:
                return 2;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
