#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "htica/centroid.hpp"
#include "htica/rng.hpp"
#include "htica/sampling.hpp"
#include "oracles.hpp"

using namespace htica;

namespace {

SampleMatrix make_samples(std::initializer_list<std::initializer_list<double>> rows) {
    RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return SampleMatrix(std::move(m));
}

EmpiricalCentroidBody unit_square_body() {
    return EmpiricalCentroidBody(make_samples({{1.0, 0.0}, {0.0, 1.0}}));
}

RowMatrix random_points(RandomStream& rng, Eigen::Index n_rows, Eigen::Index dim, double heavy = 0.0) {
    RowMatrix m(n_rows, dim);
    for (Eigen::Index i = 0; i < n_rows; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) {
            double v = rng.normal();
            if (heavy > 0.0 && rng.uniform01() < 0.1) v *= heavy;
            m(i, j) = v;
        }
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("centroid");

TEST_CASE("support function matches hand values and homogeneity") {
    EmpiricalCentroidBody body = unit_square_body();
    CHECK(support_function(body, Vector::Zero(2)) == 0.0);
    Vector u(2);
    u << 1.0, 1.0;
    CHECK(support_function(body, u) == doctest::Approx(1.0).epsilon(1e-12));

    RandomStream rng(11);
    for (int k = 0; k < 50; ++k) {
        Vector v(2);
        v << rng.normal(), rng.normal();
        CHECK(support_function(body, 2.0 * v) == doctest::Approx(2.0 * support_function(body, v)).epsilon(1e-12));
    }
}

TEST_CASE("gauge LP on the unit square body") {
    EmpiricalCentroidBody body = unit_square_body();

    LpSolution zero = solve_gauge_lp(body, Vector::Zero(2));
    CHECK(zero.status == LpSolution::Status::unbounded);
    CHECK(std::isinf(zero.objective));
    CHECK(minkowski_functional(body, Vector::Zero(2)) == 0.0);

    Vector q(2);
    q << 0.5, 0.0;
    LpSolution s1 = solve_gauge_lp(body, q);
    CHECK(s1.status == LpSolution::Status::optimal);
    CHECK(s1.objective == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s1.scale == s1.objective);

    q << 1.0, 1.0;
    LpSolution s2 = solve_gauge_lp(body, q);
    CHECK(s2.objective == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(minkowski_functional(body, q) == doctest::Approx(2.0).epsilon(1e-9));

    q << 0.5, 0.5;
    CHECK(minkowski_functional(body, q) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("LP solution satisfies its certificates") {
    RandomStream rng(202);
    for (int rep = 0; rep < 40; ++rep) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(3));
        const Eigen::Index big_n = 2 + static_cast<Eigen::Index>(rng.uniform_index(30));
        EmpiricalCentroidBody body{SampleMatrix(random_points(rng, big_n, n, 20.0))};
        Vector q(n);
        for (Eigen::Index j = 0; j < n; ++j) q[j] = rng.normal();
        LpSolution sol = solve_gauge_lp(body, q);
        REQUIRE(sol.status == LpSolution::Status::optimal);
        CHECK(sol.coefficients.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
        Vector lhs = body.points().transpose() * sol.coefficients / static_cast<double>(big_n);
        Vector rhs = sol.objective * q;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("membership oracle on the square body") {
    EmpiricalCentroidBody body = unit_square_body();
    Vector q = Vector::Zero(2);
    CHECK(membership(body, q, 0.01).yes);

    q << 0.4, 0.4;
    OracleAnswer in = membership(body, q, 0.01);
    CHECK(in.yes);
    CHECK(in.gauge == doctest::Approx(0.8).epsilon(1e-9));

    q << 0.6, 0.0;
    OracleAnswer out = membership(body, q, 0.01);
    CHECK_FALSE(out.yes);
    CHECK(out.gauge == doctest::Approx(1.2).epsilon(1e-9));
    CHECK(out.epsilon == 0.01);
}

TEST_CASE("gauge agrees with 2-D polygon enumeration oracle") {
    RandomStream rng(303);
    int disagreements = 0;
    for (int body_idx = 0; body_idx < 40; ++body_idx) {
        const Eigen::Index big_n = 2 + static_cast<Eigen::Index>(rng.uniform_index(5));
        RowMatrix pts = random_points(rng, big_n, 2);
        EmpiricalCentroidBody body{SampleMatrix(pts)};
        auto hull = oracles::zonotope_polygon(pts);
        const double r1 = support_function(body, Vector::Unit(2, 0)) * 1.2 + 0.05;
        const double r2 = support_function(body, Vector::Unit(2, 1)) * 1.2 + 0.05;
        for (int gx = 0; gx < 21; ++gx)
            for (int gy = 0; gy < 21; ++gy) {
                Vector q(2);
                q << -r1 + 2.0 * r1 * gx / 20.0, -r2 + 2.0 * r2 * gy / 20.0;
                const double gauge = minkowski_functional(body, q);
                if (std::abs(gauge - 1.0) <= 1e-6) continue;  // boundary band excluded
                const bool lp_in = gauge < 1.0;
                const bool poly_in = oracles::polygon_contains(hull, Eigen::Vector2d(q[0], q[1]), 1e-9);
                if (lp_in != poly_in) ++disagreements;
            }
    }
    CHECK(disagreements == 0);
}

TEST_CASE("primal and dual engines agree") {
    RandomStream rng(404);
    for (int rep = 0; rep < 25; ++rep) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform_index(5));
        const Eigen::Index big_n = 3 + static_cast<Eigen::Index>(rng.uniform_index(120));
        RowMatrix pts = random_points(rng, big_n, n, 50.0);
        if (rep % 4 == 0 && big_n >= 4) {
            pts.row(1) = -pts.row(0);       // opposite pair
            pts.row(2) = 2.0 * pts.row(0);  // parallel generator
            pts.row(3).setZero();           // zero row
        }
        EmpiricalCentroidBody body{SampleMatrix(pts)};
        for (int qi = 0; qi < 6; ++qi) {
            Vector q(n);
            for (Eigen::Index j = 0; j < n; ++j) q[j] = rng.normal();
            LpSolution a = solve_gauge_lp(body, q, GaugeEngine::primal_simplex);
            LpSolution b = solve_gauge_lp(body, q, GaugeEngine::dual_walk);
            CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-8));
        }
    }
}

TEST_CASE("gauge duality, symmetry, and support inequality") {
    RandomStream rng(505);
    for (int rep = 0; rep < 30; ++rep) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(4));
        const Eigen::Index big_n = n + 1 + static_cast<Eigen::Index>(rng.uniform_index(40));
        EmpiricalCentroidBody body{SampleMatrix(random_points(rng, big_n, n, 10.0))};
        Vector q(n), u(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            q[j] = rng.normal();
            u[j] = rng.normal();
        }
        const double p = minkowski_functional(body, q);
        if (!std::isfinite(p) || p <= 0.0) continue;
        // boundary normalization
        CHECK(minkowski_functional(body, Vector(q / p)) == doctest::Approx(1.0).epsilon(1e-6));
        // positive homogeneity
        const double t = 0.25 + 3.0 * rng.uniform01();
        CHECK(minkowski_functional(body, Vector(t * q)) == doctest::Approx(t * p).epsilon(1e-6));
        // symmetry
        CHECK(minkowski_functional(body, Vector(-q)) == doctest::Approx(p).epsilon(1e-9));
        // gauge-support inequality: h(u) >= u.(q/p)
        CHECK(support_function(body, u) >= u.dot(q) / p - 1e-8 * (1.0 + std::abs(u.dot(q) / p)));
    }
}

TEST_CASE("linear equivariance of membership") {
    RandomStream rng(606);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(3));
        const Eigen::Index big_n = n + 2 + static_cast<Eigen::Index>(rng.uniform_index(20));
        RowMatrix pts = random_points(rng, big_n, n);
        Matrix t(n, n);
        do {
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) t(i, j) = rng.normal();
        } while (std::abs(t.determinant()) < 0.1);
        EmpiricalCentroidBody body{SampleMatrix(pts)};
        EmpiricalCentroidBody mapped{SampleMatrix(RowMatrix(pts * t.transpose()))};
        for (int qi = 0; qi < 5; ++qi) {
            Vector q(n);
            for (Eigen::Index j = 0; j < n; ++j) q[j] = rng.normal();
            const double g1 = minkowski_functional(body, q);
            const double g2 = minkowski_functional(mapped, Vector(t * q));
            if (std::abs(g1 - 1.0) < 1e-7) continue;
            CHECK(g1 == doctest::Approx(g2).epsilon(1e-7));
        }
    }
}

TEST_CASE("dual characterization: mixtures of the sample are members") {
    RandomStream rng(707);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(3));
        const Eigen::Index big_n = 4 + static_cast<Eigen::Index>(rng.uniform_index(40));
        RowMatrix pts = random_points(rng, big_n, n, 10.0);
        EmpiricalCentroidBody body{SampleMatrix(pts)};
        Vector lambda(big_n);
        for (Eigen::Index i = 0; i < big_n; ++i) lambda[i] = 2.0 * rng.uniform01() - 1.0;
        Vector q = pts.transpose() * lambda / static_cast<double>(big_n);
        CHECK(membership(body, q, 0.01).yes);
    }
}

TEST_CASE("span handling: queries outside the sample span") {
    // rank-1 sample in R^2
    EmpiricalCentroidBody body = EmpiricalCentroidBody(make_samples({{1.0, 1.0}, {2.0, 2.0}, {-3.0, -3.0}}));
    Vector q(2);
    q << 1.0, -1.0;
    LpSolution sol = solve_gauge_lp(body, q);
    CHECK(sol.status == LpSolution::Status::optimal);
    CHECK(sol.objective == 0.0);
    CHECK(std::isinf(minkowski_functional(body, q)));
    CHECK_FALSE(membership(body, q, 0.01).yes);
    // on-span query is finite
    q << 1.0, 1.0;
    CHECK(std::isfinite(minkowski_functional(body, q)));
}

TEST_CASE("batch gauge equals per-query gauge and is thread-deterministic") {
    RandomStream rng(808);
    const Eigen::Index n = 4;
    const Eigen::Index big_n = 700;  // above the small-N threshold: dual path
    RowMatrix pts = random_points(rng, big_n, n, 30.0);
    EmpiricalCentroidBody body{SampleMatrix(pts)};
    RowMatrix queries = random_points(rng, 200, n, 30.0);
    queries.row(0).setZero();

    GaugeBatchOptions one;
    one.threads = 1;
    GaugeBatchOptions two;
    two.threads = 2;
    Vector g1 = gauge_batch(body, queries, one);
    Vector g2 = gauge_batch(body, queries, two);
    for (Eigen::Index i = 0; i < queries.rows(); ++i) {
        CHECK(g1[i] == g2[i]);  // bitwise: fixed chunking
        const double ref = minkowski_functional(body, Vector(queries.row(i).transpose()));
        if (std::isinf(ref))
            CHECK(std::isinf(g1[i]));
        else
            CHECK(g1[i] == doctest::Approx(ref).epsilon(1e-8));
    }
}

TEST_CASE("containment of the inner ball for normalized light-tailed sources") {
    // B_1^n is inside Gamma S for normalized sources; the empirical body at
    // N = 10^4 should contain 0.9 e_i nearly always.
    int successes = 0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        IcaInstance inst;
        const Eigen::Index n = 4;
        inst.mixing = Matrix::Identity(n, n);
        inst.eta = TailExponentVector::constant(n, 6.0);
        inst.seed = 9000 + static_cast<std::uint64_t>(seed);
        inst.normalize_first_moment = true;
        SampleMatrix data = generate_ica_data(inst, 10000);
        EmpiricalCentroidBody body{std::move(data)};
        bool all_in = true;
        for (Eigen::Index j = 0; j < n && all_in; ++j) {
            for (double s : {1.0, -1.0}) {
                Vector q = Vector::Zero(n);
                q[j] = 0.9 * s;
                if (minkowski_functional(body, q) > 1.0) {
                    all_in = false;
                    break;
                }
            }
        }
        if (all_in) ++successes;
    }
    CHECK(successes >= 19);  // >= 95%
}

TEST_CASE("sample bound calculators") {
    // direct evaluations of the lemma expressions
    CHECK(chebyshev_sample_bound(1.0, 0.5, 1.0, 1.0) == 182);  // ceil(8^2.5)
    CHECK(chebyshev_sample_bound(2.0, 0.5, 1.0, 1.0) > chebyshev_sample_bound(1.0, 0.5, 1.0, 1.0));
    // with the delta term active the bound is driven by (8M/(eps^2 delta))^(3/gamma)
    const long long with_delta = chebyshev_sample_bound(1.0, 0.99, 1.0, 0.5);
    const double expect = std::ceil(std::pow(8.0 / 0.5, 3.0 / 0.99));
    CHECK(with_delta == static_cast<long long>(expect));
    CHECK_THROWS_AS((void)chebyshev_sample_bound(0.5, 0.5, 1.0, 0.5), Error);
    CHECK_THROWS_AS((void)chebyshev_sample_bound(1.0, 1.5, 1.0, 0.5), Error);

    CHECK(inner_ball_bound(1.0, 3.0, 1.0, 1.0, 1) == 64);  // ceil(16^1.5)
    CHECK(inner_ball_bound(1.0, 3.0, 1.0, 1.0, 2) > inner_ball_bound(1.0, 3.0, 1.0, 1.0, 1));
    // halving eps' multiplies the base by 4
    const double b1 = std::pow(16.0, 1.5), b2 = std::pow(64.0, 1.5);
    CHECK(inner_ball_bound(1.0, 3.0, 0.5, 1.0, 1) == static_cast<long long>(std::ceil(b2)));
    CHECK(inner_ball_bound(1.0, 3.0, 1.0, 1.0, 1) == static_cast<long long>(std::ceil(b1)));
    CHECK_THROWS_AS((void)inner_ball_bound(1.0, -1.0, 1.0, 1.0, 2), Error);
}

TEST_SUITE_END();
