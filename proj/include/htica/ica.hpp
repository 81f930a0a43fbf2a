#ifndef HTICA_ICA_HPP_
#define HTICA_ICA_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "htica/damping.hpp"
#include "htica/errors.hpp"
#include "htica/orthogonalize.hpp"
#include "htica/rng.hpp"
#include "htica/sampling.hpp"
#include "htica/types.hpp"

namespace htica {

enum class Contrast { pow3, tanh_ };

inline const char* contrast_name(Contrast c) { return c == Contrast::pow3 ? "pow3" : "tanh"; }

inline Contrast contrast_from_name(const std::string& s) {
    if (s == "pow3") return Contrast::pow3;
    if (s == "tanh") return Contrast::tanh_;
    throw Error(ErrorCode::invalid_parameter, "unknown contrast: " + s);
}

struct IcaEstimate {
    Matrix a_hat;                 // estimated mixing, unit-norm columns
    Matrix rotation;              // orthonormal unmixing rotation on whitened data
    std::vector<int> iterations;  // sweeps used, per component
    bool converged = false;
};

struct PipelineConfig {
    OrthoMethod orthogonalizer = OrthoMethod::centroid;
    bool damping = true;
    DampingParams damping_params;
    Contrast contrast = Contrast::pow3;
    int max_restarts = 10;
    double convergence_tol = 1e-6;
    int max_iter = 1000;
    CentroidScaleOptions centroid_options;
    Eigen::Index centroid_body_cap = 0;  // 0 = scale every sample (no cap)
};

namespace detail {

inline void apply_contrast(Contrast c, const Matrix& u, Matrix& g, Vector& g_prime_mean) {
    if (c == Contrast::pow3) {
        g = u.array().cube();
        g_prime_mean = 3.0 * u.array().square().colwise().mean();
    } else {
        g = u.array().tanh();
        g_prime_mean = (1.0 - g.array().square()).colwise().mean();
    }
}

// W <- (W W^T)^(-1/2) W; rows end up orthonormal
inline void symmetric_orthonormalize(Matrix& w) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(w * w.transpose());
    if (!(eig.eigenvalues().minCoeff() > 1e-14))
        throw Error(ErrorCode::singular_input, "degenerate rotation during symmetric decorrelation");
    Vector inv_sqrt = eig.eigenvalues().array().rsqrt();
    w = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose() * w;
}

}  // namespace detail

/**
 * Symmetric fixed-point FastICA.  Whitens internally, runs the parallel
 * update w <- E[x g(w'x)] - E[g'(w'x)] w over all components with symmetric
 * re-orthonormalization each sweep, and maps the rotation back through the
 * whitening transform.  Columns of a_hat are normalized; recovery is up to
 * sign and permutation as always.
 */
inline IcaEstimate fastica(const SampleMatrix& samples, Contrast contrast, RandomStream& rng,
                           double tol = 1e-6, int max_iter = 1000) {
    samples.validate();
    const Eigen::Index n = samples.dim();
    const Eigen::Index count = samples.count();
    if (count <= n) throw Error(ErrorCode::insufficient_samples, "fastica needs more samples than dimensions");

    Matrix second_moment = samples.data.transpose() * samples.data / static_cast<double>(count);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(second_moment);
    if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff())))
        throw Error(ErrorCode::singular_input, "sample covariance is singular");

    // whitening: z = diag(lambda^(-1/2)) V' x
    Matrix whiten = eig.eigenvalues().array().rsqrt().matrix().asDiagonal() * eig.eigenvectors().transpose();
    Matrix dewhiten = eig.eigenvectors() * eig.eigenvalues().array().sqrt().matrix().asDiagonal();
    RowMatrix z = samples.data * whiten.transpose();

    IcaEstimate est;
    est.iterations.assign(static_cast<std::size_t>(n), 0);

    if (n == 1) {
        est.rotation = Matrix::Identity(1, 1);
        est.a_hat = dewhiten;
        est.a_hat.col(0) /= est.a_hat.col(0).norm();
        est.iterations[0] = 1;
        est.converged = true;
        return est;
    }

    // random orthonormal start (QR of a Gaussian matrix, R diagonal positive)
    Matrix w(n, n);
    {
        Matrix gauss(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) gauss(i, j) = rng.normal();
        Eigen::HouseholderQR<Matrix> qr(gauss);
        w = qr.householderQ();
        Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (Eigen::Index j = 0; j < n; ++j)
            if (r(j, j) < 0.0) w.col(j) = -w.col(j);
        w.transposeInPlace();  // rows = unmixing directions
    }

    Matrix u(count, n), g(count, n);
    Vector g_prime_mean(n);
    int sweep = 0;
    bool converged = false;
    for (; sweep < max_iter; ++sweep) {
        u.noalias() = z * w.transpose();
        detail::apply_contrast(contrast, u, g, g_prime_mean);
        Matrix w_new = (g.transpose() * z) / static_cast<double>(count) - g_prime_mean.asDiagonal() * w;
        detail::symmetric_orthonormalize(w_new);
        double min_dot = 1.0;
        for (Eigen::Index k = 0; k < n; ++k) min_dot = std::min(min_dot, std::abs(w_new.row(k).dot(w.row(k))));
        w = w_new;
        if (min_dot >= 1.0 - tol) {
            converged = true;
            ++sweep;
            break;
        }
    }
    est.rotation = w;
    est.converged = converged;
    est.iterations.assign(static_cast<std::size_t>(n), sweep);

    // z ~ (W^T) s, so the whitened-domain mixing estimate is W^T
    est.a_hat = dewhiten * w.transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double norm = est.a_hat.col(j).norm();
        if (norm > 0.0) est.a_hat.col(j) /= norm;
    }
    return est;
}

struct PipelineResult {
    IcaEstimate estimate;
    Orthogonalizer orthogonalizer;
    bool damped = false;
    double damping_radius = 0.0;
    double acceptance_rate = 0.0;
    double k_estimate = 0.0;
    int restarts_used = 0;
};

/**
 * The full pipeline: orthogonalize, optionally damp, run FastICA on the
 * transformed data, and map the estimate back (A_hat = B^-1 W_hat).  FastICA
 * is restarted with fresh random rotations until it converges or
 * max_restarts attempts are spent; the last estimate is returned either way
 * with its converged flag.
 */
inline PipelineResult run_htica(const SampleMatrix& samples, const PipelineConfig& config,
                                std::uint64_t seed, const Matrix* mixing_truth = nullptr) {
    samples.validate();
    PipelineResult result;

    switch (config.orthogonalizer) {
        case OrthoMethod::centroid: {
            if (config.centroid_body_cap > 0 && samples.count() > config.centroid_body_cap) {
                // desk-scale shortcut: estimate the scatter of the scaled data
                // from a deterministic subset, still well past the sample
                // sizes the estimator needs
                RowMatrix head = samples.data.topRows(config.centroid_body_cap);
                SampleMatrix head_samples{std::move(head)};
                result.orthogonalizer = orthogonalize_centroid(head_samples, config.centroid_options);
            } else {
                result.orthogonalizer = orthogonalize_centroid(samples, config.centroid_options);
            }
            break;
        }
        case OrthoMethod::covariance:
            result.orthogonalizer = orthogonalize_covariance(samples);
            break;
        case OrthoMethod::oracle:
            if (!mixing_truth)
                throw Error(ErrorCode::invalid_parameter, "oracle orthogonalizer requires the true mixing matrix");
            result.orthogonalizer = orthogonalize_oracle(*mixing_truth);
            break;
        case OrthoMethod::identity:
            result.orthogonalizer = orthogonalize_identity(samples.dim());
            break;
    }

    SampleMatrix transformed{RowMatrix(samples.data * result.orthogonalizer.b.transpose())};
    const SampleMatrix* ica_input = &transformed;
    SampleMatrix damped;
    if (config.damping) {
        const double radius = choose_damping_radius(transformed, config.damping_params);
        RandomStream damp_rng = derive_stream(seed, {stream_tag::damping});
        DampingReport report = damp(transformed, radius, damp_rng);
        result.damped = true;
        result.damping_radius = report.r_selected;
        result.acceptance_rate = report.acceptance_rate;
        result.k_estimate = report.k_estimate;
        damped = std::move(report.accepted);
        ica_input = &damped;
    }

    IcaEstimate best;
    for (int attempt = 0; attempt < std::max(1, config.max_restarts); ++attempt) {
        RandomStream ica_rng = derive_stream(seed, {stream_tag::ica_init, static_cast<std::uint64_t>(attempt)});
        best = fastica(*ica_input, config.contrast, ica_rng, config.convergence_tol, config.max_iter);
        result.restarts_used = attempt + 1;
        if (best.converged) break;
    }

    // map back: the inner estimate approximates B A, so A_hat = B^-1 (BA)_hat
    Matrix a_hat = result.orthogonalizer.b.partialPivLu().solve(best.a_hat);
    for (Eigen::Index j = 0; j < a_hat.cols(); ++j) {
        const double norm = a_hat.col(j).norm();
        if (norm > 0.0) a_hat.col(j) /= norm;
    }
    best.a_hat = a_hat;
    result.estimate = std::move(best);
    return result;
}

}  // namespace htica

#endif  // HTICA_ICA_HPP_
