#ifndef HTICA_EVAL_HPP_
#define HTICA_EVAL_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "htica/errors.hpp"
#include "htica/orthogonalize.hpp"
#include "htica/types.hpp"

namespace htica {

/** Resolution of ICA's column permutation and sign ambiguity. */
struct ColumnMatching {
    std::vector<int> permutation;  // column i of the reference pairs with permutation[i] of the estimate
    std::vector<double> signs;     // sign applied to the matched estimate column
    double total_cost = 0.0;
};

struct RecoveryMetadata {
    std::string method;
    std::string contrast;
    Eigen::Index sample_count = 0;
    std::uint64_t seed = 0;
    Vector eta;
};

struct RecoveryReport {
    double frobenius_error = 0.0;
    double amari_index = 0.0;
    ColumnMatching matching;
    std::optional<OrthogonalityDiagnostics> diagnostics;
    RecoveryMetadata metadata;
};

namespace detail {

// O(n^3) Hungarian algorithm with potentials; returns, per row, the column
// of the minimum-cost perfect assignment.
inline std::vector<int> solve_assignment(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
    return row_to_col;
}

inline void require_unit_columns(const Matrix& m, const char* who) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (std::abs(m.col(j).norm() - 1.0) > 1e-6)
            throw Error(ErrorCode::invalid_input, std::string(who) + ": columns must have unit norm");
}

}  // namespace detail

/**
 * Pair the columns of the estimate with the closest columns of the reference
 * (cost: Euclidean distance minimized over sign) via the Hungarian algorithm.
 */
inline ColumnMatching match_columns(const Matrix& reference, const Matrix& estimate) {
    if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols() ||
        reference.rows() != reference.cols())
        throw Error(ErrorCode::invalid_input, "match_columns: shape mismatch");
    detail::require_unit_columns(reference, "match_columns reference");
    detail::require_unit_columns(estimate, "match_columns estimate");
    const Eigen::Index n = reference.cols();
    Matrix cost(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            cost(i, j) = std::min((reference.col(i) - estimate.col(j)).norm(),
                                  (reference.col(i) + estimate.col(j)).norm());
    ColumnMatching out;
    out.permutation = detail::solve_assignment(cost);
    out.signs.assign(static_cast<std::size_t>(n), 1.0);
    out.total_cost = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int j = out.permutation[static_cast<std::size_t>(i)];
        const double plus = (reference.col(i) - estimate.col(j)).norm();
        const double minus = (reference.col(i) + estimate.col(j)).norm();
        out.signs[static_cast<std::size_t>(i)] = plus <= minus ? 1.0 : -1.0;
        out.total_cost += std::min(plus, minus);
    }
    return out;
}

/** Apply a matching to the estimate: column i becomes sign_i * estimate[:, perm_i]. */
inline Matrix align_columns(const Matrix& estimate, const ColumnMatching& matching) {
    Matrix aligned(estimate.rows(), estimate.cols());
    for (Eigen::Index i = 0; i < estimate.cols(); ++i)
        aligned.col(i) =
            matching.signs[static_cast<std::size_t>(i)] * estimate.col(matching.permutation[static_cast<std::size_t>(i)]);
    return aligned;
}

inline double frobenius_error(const Matrix& reference, const Matrix& estimate, const ColumnMatching& matching) {
    return (reference - align_columns(estimate, matching)).norm();
}

/**
 * Amari index of P = estimate^-1 reference, normalized to [0,1]:
 * 0 exactly on signed permutations, 1 on the all-equal-magnitude matrix.
 */
inline double amari_index(const Matrix& reference, const Matrix& estimate) {
    if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols())
        throw Error(ErrorCode::invalid_input, "amari_index: shape mismatch");
    Eigen::FullPivLU<Matrix> lu(estimate);
    if (!lu.isInvertible()) throw Error(ErrorCode::invalid_input, "amari_index: estimate not invertible");
    const Matrix p = lu.solve(reference).cwiseAbs();
    const Eigen::Index n = p.rows();
    if (n < 2) return 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += p.row(i).sum() / p.row(i).maxCoeff() - 1.0;
    for (Eigen::Index j = 0; j < n; ++j) total += p.col(j).sum() / p.col(j).maxCoeff() - 1.0;
    return total / (2.0 * static_cast<double>(n) * static_cast<double>(n - 1));
}

/** Full recovery evaluation of an estimate against the ground truth. */
inline RecoveryReport evaluate_recovery(const Matrix& reference, const Matrix& estimate,
                                        RecoveryMetadata metadata = {}) {
    RecoveryReport report;
    report.matching = match_columns(reference, estimate);
    report.frobenius_error = frobenius_error(reference, estimate, report.matching);
    report.amari_index = amari_index(reference, estimate);
    report.metadata = std::move(metadata);
    return report;
}

}  // namespace htica

#endif  // HTICA_EVAL_HPP_
