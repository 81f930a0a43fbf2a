#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "htica/eval.hpp"
#include "htica/rng.hpp"
#include "htica/sampling.hpp"
#include "oracles.hpp"

using namespace htica;

namespace {

Matrix random_unit_columns(Eigen::Index n, RandomStream& rng) {
    Matrix m(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
        m.col(j) = v / v.norm();
    }
    return m;
}

Matrix signed_permutation(Eigen::Index n, RandomStream& rng) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<std::size_t>(i)], perm[rng.uniform_index(static_cast<std::size_t>(i) + 1)]);
    Matrix p = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) p(perm[static_cast<std::size_t>(i)], i) = rng.sign();
    return p;
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("perfect estimates match identically") {
    RandomStream rng(1);
    Matrix a = random_unit_columns(4, rng);
    ColumnMatching match = match_columns(a, a);
    for (int i = 0; i < 4; ++i) {
        CHECK(match.permutation[static_cast<std::size_t>(i)] == i);
        CHECK(match.signs[static_cast<std::size_t>(i)] == 1.0);
    }
    CHECK(match.total_cost == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(frobenius_error(a, a, match) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("swapped and negated columns are recovered exactly") {
    RandomStream rng(2);
    Matrix a = random_unit_columns(3, rng);
    Matrix shuffled(3, 3);
    shuffled.col(0) = a.col(2);
    shuffled.col(1) = -a.col(0);
    shuffled.col(2) = a.col(1);
    ColumnMatching match = match_columns(a, shuffled);
    CHECK(frobenius_error(a, shuffled, match) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(match.permutation[0] == 1);
    CHECK(match.signs[0] == -1.0);
}

TEST_CASE("the two-by-two crossed example picks the swap") {
    Matrix a = Matrix::Identity(2, 2);
    Matrix est(2, 2);
    est.col(0) << 0.6, 0.8;
    est.col(1) << 1.0, 0.0;
    ColumnMatching match = match_columns(a, est);
    CHECK(match.permutation[0] == 1);
    CHECK(match.permutation[1] == 0);
    // aligned = [e1, (0.6,0.8)]; difference norm is sqrt(0.36 + 0.04)
    CHECK(frobenius_error(a, est, match) == doctest::Approx(std::sqrt(0.4)).epsilon(1e-12));
}

TEST_CASE("Hungarian matching equals exhaustive search") {
    RandomStream rng(3);
    for (int rep = 0; rep < 200; ++rep) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(3));
        Matrix a = random_unit_columns(n, rng);
        Matrix est = random_unit_columns(n, rng);
        ColumnMatching match = match_columns(a, est);
        oracles::BruteMatch brute = oracles::brute_force_match(a, est);
        CHECK(match.total_cost == doctest::Approx(brute.cost).epsilon(1e-10));
    }
}

TEST_CASE("non-unit columns are rejected") {
    Matrix a = Matrix::Identity(2, 2);
    Matrix bad = a;
    bad(0, 0) = 2.0;
    CHECK_THROWS_AS((void)match_columns(a, bad), Error);
    CHECK_THROWS_AS((void)match_columns(bad, a), Error);
}

TEST_CASE("amari index anchors") {
    RandomStream rng(4);
    Matrix a = random_unit_columns(4, rng);
    CHECK(amari_index(a, a) == doctest::Approx(0.0).epsilon(1e-12));

    // signed permutation of the estimate leaves a signed permutation P
    Matrix p = signed_permutation(4, rng);
    CHECK(amari_index(a, Matrix(a * p)) == doctest::Approx(0.0).epsilon(1e-12));

    // all-equal-magnitude P attains exactly 1: use estimate = a * P^-1
    Matrix ones = Matrix::Ones(4, 4);
    ones += 1e-9 * Matrix::Identity(4, 4);  // invertible, magnitudes equal to 1e-9
    Matrix est = a * ones.inverse();
    CHECK(amari_index(a, est) == doctest::Approx(1.0).epsilon(1e-6));

    Matrix singular = Matrix::Zero(3, 3);
    CHECK_THROWS_AS((void)amari_index(Matrix::Identity(3, 3), singular), Error);
}

TEST_CASE("amari index is invariant to signed permutations of the estimate") {
    RandomStream rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(4));
        Matrix a = random_unit_columns(n, rng);
        Matrix est = random_unit_columns(n, rng);
        if (std::abs(est.determinant()) < 1e-6) continue;
        const double base = amari_index(a, est);
        Matrix p = signed_permutation(n, rng);
        CHECK(amari_index(a, Matrix(est * p)) == doctest::Approx(base).epsilon(1e-12));
        CHECK(base >= 0.0);
        CHECK(base <= 1.0);
    }
}

TEST_CASE("amari index stays in the unit interval on random invertible pairs") {
    RandomStream rng(6);
    int checked = 0;
    while (checked < 10000) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(5));
        Matrix a = random_unit_columns(n, rng);
        Matrix est = random_unit_columns(n, rng);
        if (std::abs(est.determinant()) < 1e-8) continue;
        const double v = amari_index(a, est);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        ++checked;
    }
}

TEST_CASE("frobenius error is zero only on exact alignment") {
    RandomStream rng(7);
    Matrix a = random_unit_columns(3, rng);
    Matrix p = signed_permutation(3, rng);
    Matrix est = a * p;
    ColumnMatching match = match_columns(a, est);
    CHECK(frobenius_error(a, est, match) <= 1e-12);
    CHECK((align_columns(est, match) - a).cwiseAbs().maxCoeff() <= 1e-12);

    Matrix perturbed = est;
    perturbed.col(1) += Vector::Constant(3, 0.05);
    perturbed.col(1) /= perturbed.col(1).norm();
    ColumnMatching match2 = match_columns(a, perturbed);
    CHECK(frobenius_error(a, perturbed, match2) > 1e-3);
}

TEST_SUITE_END();
