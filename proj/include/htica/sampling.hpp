#ifndef HTICA_SAMPLING_HPP_
#define HTICA_SAMPLING_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

#include "htica/errors.hpp"
#include "htica/rng.hpp"
#include "htica/types.hpp"

namespace htica {

// Density family f_eta(x) ~ (|x|+1.5)^(-eta).  Normalizable for eta > 1,
// with moments of order k finite exactly when k < eta - 1.
constexpr double kDensityShift = 1.5;

// Analytic E|X| under f_eta; finite for eta > 2.
inline double abs_first_moment(double eta) {
    if (!(eta > 2.0)) throw Error(ErrorCode::invalid_parameter, "E|X| finite only for eta > 2");
    return kDensityShift / (eta - 2.0);
}

// Analytic CDF of |X|: P(|X| <= x) = 1 - ((x+1.5)/1.5)^(1-eta), x >= 0.
inline double abs_cdf(double eta, double x) {
    if (x <= 0.0) return 0.0;
    return 1.0 - std::pow((x + kDensityShift) / kDensityShift, 1.0 - eta);
}

/**
 * One draw from f_eta by exact inverse transform:
 * v ~ U(0,1], magnitude = 1.5 (v^(-1/(eta-1)) - 1), independent fair sign.
 */
inline double sample_component(double eta, RandomStream& rng) {
    if (!(eta > 1.0)) throw Error(ErrorCode::invalid_parameter, "sample_component requires eta > 1");
    const double v = rng.uniform_pos();
    const double magnitude = kDensityShift * (std::pow(v, -1.0 / (eta - 1.0)) - 1.0);
    return rng.sign() * magnitude;
}

/**
 * Random mixing matrix: i.i.d. standard normal entries, columns scaled to
 * unit length; regenerated while |det| < 1e-8 (at most 100 attempts).
 */
inline Matrix generate_mixing_matrix(Eigen::Index n, RandomStream& rng) {
    if (n < 1) throw Error(ErrorCode::invalid_parameter, "dimension must be >= 1");
    for (int attempt = 0; attempt < 100; ++attempt) {
        Matrix a(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
        bool ok = true;
        for (Eigen::Index j = 0; j < n; ++j) {
            double norm = a.col(j).norm();
            if (norm == 0.0) {
                ok = false;
                break;
            }
            a.col(j) /= norm;
        }
        if (!ok) continue;
        if (std::abs(a.determinant()) >= 1e-8) return a;
    }
    throw Error(ErrorCode::degenerate_matrix, "mixing matrix degenerate after 100 attempts");
}

/** Haar-ish random orthogonal matrix: QR of a Gaussian matrix, R diagonal made positive. */
inline Matrix generate_orthogonal_matrix(Eigen::Index n, RandomStream& rng) {
    if (n < 1) throw Error(ErrorCode::invalid_parameter, "dimension must be >= 1");
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

/** Raw source draws S (N x n); component j uses an independent substream of instance.seed. */
inline SampleMatrix generate_sources(const IcaInstance& instance, Eigen::Index count) {
    if (count < 1) throw Error(ErrorCode::invalid_parameter, "sample count must be >= 1");
    const Eigen::Index n = instance.dim();
    if (instance.eta.dim() != n) throw Error(ErrorCode::invalid_parameter, "eta dimension mismatch");
    RowMatrix s(count, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        RandomStream stream = derive_stream(instance.seed, {stream_tag::sources, static_cast<std::uint64_t>(j)});
        const double eta_j = instance.eta.eta[j];
        double scale = 1.0;
        if (instance.normalize_first_moment) {
            if (!(eta_j > 2.0))
                throw Error(ErrorCode::invalid_parameter, "normalize_first_moment requires all eta > 2");
            scale = 1.0 / abs_first_moment(eta_j);
        }
        for (Eigen::Index i = 0; i < count; ++i) s(i, j) = scale * sample_component(eta_j, stream);
    }
    return SampleMatrix(std::move(s));
}

/** Observed data X = AS, one mixed sample per row. */
inline SampleMatrix generate_ica_data(const IcaInstance& instance, Eigen::Index count) {
    SampleMatrix sources = generate_sources(instance, count);
    RowMatrix x = sources.data * instance.mixing.transpose();
    return SampleMatrix(std::move(x));
}

/**
 * Pairwise differences: row k of the output is samples[2k] - samples[2k+1].
 * If the input rows are i.i.d., the output distribution is symmetric.
 */
inline SampleMatrix symmetrize(const SampleMatrix& samples) {
    const Eigen::Index n_in = samples.count();
    if (n_in < 2) throw Error(ErrorCode::insufficient_samples, "symmetrize needs at least 2 samples");
    const Eigen::Index pairs = n_in / 2;
    RowMatrix out(pairs, samples.dim());
    for (Eigen::Index k = 0; k < pairs; ++k)
        out.row(k) = samples.data.row(2 * k) - samples.data.row(2 * k + 1);
    return SampleMatrix(std::move(out));
}

}  // namespace htica

#endif  // HTICA_SAMPLING_HPP_
