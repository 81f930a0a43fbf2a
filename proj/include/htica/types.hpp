#ifndef HTICA_TYPES_HPP_
#define HTICA_TYPES_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "htica/errors.hpp"

namespace htica {

// Row-major so one sample occupies contiguous memory.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * N samples of an n-dimensional random vector, one sample per row.
 * Immutable by convention once filled; all entries finite.
 */
struct SampleMatrix {
    RowMatrix data;

    SampleMatrix() = default;
    explicit SampleMatrix(RowMatrix d) : data(std::move(d)) {}

    Eigen::Index count() const { return data.rows(); }
    Eigen::Index dim() const { return data.cols(); }

    void validate() const {
        if (data.rows() < 1) throw Error(ErrorCode::insufficient_samples, "sample matrix is empty");
        if (!data.allFinite()) throw Error(ErrorCode::invalid_input, "sample matrix has non-finite entries");
    }
};

/** Per-component tail exponents of the source density; every entry must be > 1. */
struct TailExponentVector {
    Vector eta;

    TailExponentVector() = default;
    explicit TailExponentVector(Vector e) : eta(std::move(e)) { validate(); }
    TailExponentVector(std::initializer_list<double> e) : eta(Eigen::Map<const Vector>(e.begin(), static_cast<Eigen::Index>(e.size()))) {
        validate();
    }
    static TailExponentVector constant(Eigen::Index n, double value) { return TailExponentVector(Vector::Constant(n, value)); }

    Eigen::Index dim() const { return eta.size(); }

    void validate() const {
        for (Eigen::Index i = 0; i < eta.size(); ++i)
            if (!(eta[i] > 1.0))
                throw Error(ErrorCode::invalid_parameter, "tail exponent must be > 1");
    }
};

/** Ground-truth generative model X = AS. */
struct IcaInstance {
    Matrix mixing;             // A, invertible
    TailExponentVector eta;    // source tail exponents
    std::uint64_t seed = 0;
    bool normalize_first_moment = false;  // rescale sources to E|S_i| = 1 (needs eta_i > 2)

    Eigen::Index dim() const { return mixing.rows(); }
};

}  // namespace htica

#endif  // HTICA_TYPES_HPP_
