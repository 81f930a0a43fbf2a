#ifndef HTICA_DAMPING_HPP_
#define HTICA_DAMPING_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "htica/errors.hpp"
#include "htica/rng.hpp"
#include "htica/types.hpp"

namespace htica {

struct DampingParams {
    double target_rejection = 0.25;  // fraction of samples to reject
    double tolerance = 0.01;         // on the acceptance fraction
};

struct DampingReport {
    double r_selected = 0.0;
    double acceptance_rate = 0.0;
    double k_estimate = 0.0;  // mean of exp(-|x|^2/R^2) over the full input
    SampleMatrix accepted;
};

/** Expected acceptance at radius R: the mean Gaussian weight of the sample. */
inline double acceptance_fraction(const SampleMatrix& samples, double r) {
    if (!(r > 0.0)) throw Error(ErrorCode::invalid_parameter, "damping radius must be > 0");
    const double inv_r2 = 1.0 / (r * r);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < samples.count(); ++i)
        acc += std::exp(-samples.data.row(i).squaredNorm() * inv_r2);
    return acc / static_cast<double>(samples.count());
}

/**
 * Binary search on log R until the expected acceptance hits
 * 1 - target_rejection within tolerance (at most 200 bisections).
 */
inline double choose_damping_radius(const SampleMatrix& samples, const DampingParams& params = {}) {
    if (!(params.target_rejection > 0.0 && params.target_rejection < 1.0))
        throw Error(ErrorCode::invalid_parameter, "target rejection must be in (0,1)");
    std::vector<double> norms(static_cast<std::size_t>(samples.count()));
    for (Eigen::Index i = 0; i < samples.count(); ++i)
        norms[static_cast<std::size_t>(i)] = samples.data.row(i).norm();
    std::vector<double> sorted = norms;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    double median = sorted[sorted.size() / 2];
    const double max_norm = *std::max_element(norms.begin(), norms.end());
    if (max_norm == 0.0) throw Error(ErrorCode::undampable_sample, "all samples are zero");
    if (median == 0.0) {
        double min_pos = max_norm;
        for (double v : norms)
            if (v > 0.0) min_pos = std::min(min_pos, v);
        median = min_pos;
    }

    Vector sq(samples.count());
    for (Eigen::Index i = 0; i < samples.count(); ++i)
        sq[i] = norms[static_cast<std::size_t>(i)] * norms[static_cast<std::size_t>(i)];
    auto accept_at = [&](double log_r) {
        const double inv_r2 = std::exp(-2.0 * log_r);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < sq.size(); ++i) acc += std::exp(-sq[i] * inv_r2);
        return acc / static_cast<double>(sq.size());
    };

    const double target = 1.0 - params.target_rejection;
    double lo = std::log(0.01 * median);
    double hi = std::log(100.0 * max_norm);
    if (target < accept_at(lo) - params.tolerance || target > accept_at(hi) + params.tolerance)
        throw Error(ErrorCode::undampable_sample, "target acceptance outside the bracket");

    // bisect past the acceptance tolerance until R itself is pinned
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        const double f = accept_at(mid);
        if (std::abs(f - target) <= params.tolerance && hi - lo <= 1e-6) break;
        if (f < target)
            lo = mid;  // acceptance is nondecreasing in R
        else
            hi = mid;
    }
    return std::exp(mid);
}

/** Keep each row independently with probability exp(-|x|^2/R^2). */
inline DampingReport damp(const SampleMatrix& samples, double r, RandomStream& rng) {
    if (!(r > 0.0)) throw Error(ErrorCode::invalid_parameter, "damping radius must be > 0");
    const double inv_r2 = 1.0 / (r * r);
    std::vector<Eigen::Index> kept;
    kept.reserve(static_cast<std::size_t>(samples.count()));
    double k_acc = 0.0;
    for (Eigen::Index i = 0; i < samples.count(); ++i) {
        const double w = std::exp(-samples.data.row(i).squaredNorm() * inv_r2);
        k_acc += w;
        if (rng.uniform01() < w) kept.push_back(i);
    }
    if (kept.empty()) throw Error(ErrorCode::empty_output, "damping rejected every sample; increase R");
    DampingReport report;
    report.r_selected = r;
    report.k_estimate = k_acc / static_cast<double>(samples.count());
    report.acceptance_rate = static_cast<double>(kept.size()) / static_cast<double>(samples.count());
    RowMatrix out(static_cast<Eigen::Index>(kept.size()), samples.dim());
    for (std::size_t k = 0; k < kept.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = samples.data.row(kept[k]);
    report.accepted = SampleMatrix(std::move(out));
    return report;
}

}  // namespace htica

#endif  // HTICA_DAMPING_HPP_
