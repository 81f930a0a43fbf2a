#ifndef HTICA_ORTHOGONALIZE_HPP_
#define HTICA_ORTHOGONALIZE_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "htica/centroid.hpp"
#include "htica/errors.hpp"
#include "htica/types.hpp"

namespace htica {

enum class OrthoMethod { centroid, covariance, oracle, identity };

inline const char* ortho_method_name(OrthoMethod m) {
    switch (m) {
        case OrthoMethod::centroid: return "centroid";
        case OrthoMethod::covariance: return "covariance";
        case OrthoMethod::oracle: return "oracle";
        case OrthoMethod::identity: return "identity";
    }
    return "unknown";
}

inline OrthoMethod ortho_method_from_name(const std::string& s) {
    if (s == "centroid") return OrthoMethod::centroid;
    if (s == "covariance") return OrthoMethod::covariance;
    if (s == "oracle") return OrthoMethod::oracle;
    if (s == "identity") return OrthoMethod::identity;
    throw Error(ErrorCode::invalid_parameter, "unknown orthogonalizer: " + s);
}

/**
 * Symmetric positive-definite orthogonalization matrix B = C^(-1/2) together
 * with the method that produced it and the smallest eigenvalue of the
 * scatter matrix it inverted.
 */
struct Orthogonalizer {
    Matrix b;
    OrthoMethod method = OrthoMethod::identity;
    double eigen_floor = 0.0;
};

struct OrthogonalityDiagnostics {
    double sigma_min_normalized = 0.0;  // smallest singular value of column-normalized BA
    double condition_number = 0.0;      // sigma_max(BA)/sigma_min(BA)
};

struct CentroidScaleOptions {
    int threads = 0;
    double gauge_slack = 0.0;  // forwarded to the batch LP solver
};

// tanh(d)/d, continuous through d = 0
inline double tanh_over_d(double d) {
    if (d < 1e-4) return 1.0 - d * d / 3.0 + 2.0 * d * d * d * d / 15.0;
    return std::tanh(d) / d;
}

namespace detail {

inline Matrix inverse_sqrt_spd(const Matrix& c, double* eigen_floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
    const Vector& vals = eig.eigenvalues();
    if (eigen_floor) *eigen_floor = vals.minCoeff();
    if (!(vals.minCoeff() > 1e-12))
        throw Error(ErrorCode::singular_scatter, "scatter matrix has eigenvalue <= 1e-12");
    Vector inv_sqrt = vals.array().rsqrt();
    return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace detail

/**
 * Centroid-body scaling: each sample is pulled inside the empirical centroid
 * body by the factor tanh(d)/d at its own gauge d, so every output row lies
 * strictly inside the body and all moments of the scaled data are finite.
 * The body defaults to the very samples being scaled; pass a separate
 * `body_samples` for held-out mode.
 */
inline SampleMatrix scale_samples_centroid(const SampleMatrix& samples,
                                           const CentroidScaleOptions& opts = {},
                                           const SampleMatrix* body_samples = nullptr) {
    samples.validate();
    EmpiricalCentroidBody body{body_samples ? *body_samples : samples};
    GaugeBatchOptions batch;
    batch.threads = opts.threads;
    batch.multiplier_slack = opts.gauge_slack;
    Vector gauges = gauge_batch(body, samples.data, batch);
    RowMatrix out(samples.count(), samples.dim());
    for (Eigen::Index i = 0; i < samples.count(); ++i) {
        const double d = gauges[i];
        if (std::isinf(d))
            throw Error(ErrorCode::degenerate_sample_span, "sample outside the span of the body");
        out.row(i) = tanh_over_d(d) * samples.data.row(i);
    }
    return SampleMatrix(std::move(out));
}

/** Subroutine 1: B = C^(-1/2) with C the scatter of the centroid-scaled samples. */
inline Orthogonalizer orthogonalize_centroid(const SampleMatrix& samples,
                                             const CentroidScaleOptions& opts = {},
                                             const SampleMatrix* body_samples = nullptr) {
    SampleMatrix scaled = scale_samples_centroid(samples, opts, body_samples);
    Matrix c = scaled.data.transpose() * scaled.data / static_cast<double>(scaled.count());
    Orthogonalizer out;
    out.method = OrthoMethod::centroid;
    out.b = detail::inverse_sqrt_spd(c, &out.eigen_floor);
    return out;
}

/** B = (second-moment matrix)^(-1/2); works beyond finite variance. */
inline Orthogonalizer orthogonalize_covariance(const SampleMatrix& samples) {
    samples.validate();
    Matrix c = samples.data.transpose() * samples.data / static_cast<double>(samples.count());
    Orthogonalizer out;
    out.method = OrthoMethod::covariance;
    out.b = detail::inverse_sqrt_spd(c, &out.eigen_floor);
    return out;
}

inline Orthogonalizer orthogonalize_oracle(const Matrix& mixing) {
    if (mixing.rows() != mixing.cols()) throw Error(ErrorCode::invalid_input, "mixing matrix must be square");
    Eigen::FullPivLU<Matrix> lu(mixing);
    if (!lu.isInvertible()) throw Error(ErrorCode::invalid_input, "oracle orthogonalizer needs invertible A");
    Orthogonalizer out;
    out.method = OrthoMethod::oracle;
    out.b = lu.inverse();
    out.eigen_floor = 0.0;
    return out;
}

inline Orthogonalizer orthogonalize_identity(Eigen::Index n) {
    Orthogonalizer out;
    out.method = OrthoMethod::identity;
    out.b = Matrix::Identity(n, n);
    out.eigen_floor = 1.0;
    return out;
}

/** sigma_min of column-normalized BA, and the condition number of BA itself. */
inline OrthogonalityDiagnostics diagnostics(const Orthogonalizer& ortho, const Matrix& mixing) {
    Matrix m = ortho.b * mixing;
    Matrix m_hat = m;
    for (Eigen::Index j = 0; j < m_hat.cols(); ++j) {
        const double norm = m_hat.col(j).norm();
        if (norm > 0.0) m_hat.col(j) /= norm;
    }
    Eigen::JacobiSVD<Matrix> svd_hat(m_hat);
    Eigen::JacobiSVD<Matrix> svd(m);
    OrthogonalityDiagnostics out;
    out.sigma_min_normalized = svd_hat.singularValues().minCoeff();
    const double smin = svd.singularValues().minCoeff();
    out.condition_number = smin > 0.0 ? svd.singularValues().maxCoeff() / smin
                                      : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace htica

#endif  // HTICA_ORTHOGONALIZE_HPP_
