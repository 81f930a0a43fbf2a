#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "htica/damping.hpp"
#include "htica/orthogonalize.hpp"
#include "htica/rng.hpp"
#include "htica/sampling.hpp"

using namespace htica;

namespace {

SampleMatrix unit_norm_rows(Eigen::Index count) {
    RandomStream rng(606);
    RowMatrix m(count, 3);
    for (Eigen::Index i = 0; i < count; ++i) {
        Vector v(3);
        v << rng.normal(), rng.normal(), rng.normal();
        m.row(i) = v.transpose() / v.norm();
    }
    return SampleMatrix(m);
}

// standard normal quantile by bisection on erf
double normal_quantile(double p) {
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * (1.0 + std::erf(mid / std::sqrt(2.0))) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE_BEGIN("damping");

TEST_CASE("acceptance fraction closed forms") {
    RowMatrix zeros = RowMatrix::Zero(5, 2);
    CHECK(acceptance_fraction(SampleMatrix(zeros), 0.5) == 1.0);
    CHECK(acceptance_fraction(SampleMatrix(zeros), 100.0) == 1.0);

    SampleMatrix unit = unit_norm_rows(64);
    CHECK(acceptance_fraction(unit, 1.86442) == doctest::Approx(0.75).epsilon(1e-5 / 0.75));
    CHECK(acceptance_fraction(unit, 1e9) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)acceptance_fraction(unit, 0.0), Error);
}

TEST_CASE("acceptance fraction is monotone in R") {
    RandomStream rng(5);
    IcaInstance inst;
    inst.mixing = generate_mixing_matrix(3, rng);
    inst.eta = TailExponentVector{2.1, 3.0, 6.0};
    inst.seed = 1;
    SampleMatrix data = generate_ica_data(inst, 500);
    double prev = 0.0;
    for (double r : {0.1, 0.5, 1.0, 3.0, 10.0, 100.0}) {
        const double f = acceptance_fraction(data, r);
        CHECK(f >= prev);
        prev = f;
    }
}

TEST_CASE("radius selection hits the analytic unit-norm values") {
    SampleMatrix unit = unit_norm_rows(200);
    DampingParams params;
    CHECK(choose_damping_radius(unit, params) == doctest::Approx(1.8644).epsilon(0.01 / 1.8644));

    params.target_rejection = 0.5;
    CHECK(choose_damping_radius(unit, params) == doctest::Approx(1.0 / std::sqrt(std::log(2.0))).epsilon(0.01));
}

TEST_CASE("radius scales with the data") {
    RandomStream rng(17);
    IcaInstance inst;
    inst.mixing = generate_mixing_matrix(2, rng);
    inst.eta = TailExponentVector::constant(2, 6.0);
    inst.seed = 3;
    SampleMatrix data = generate_ica_data(inst, 4000);
    const double r1 = choose_damping_radius(data);
    SampleMatrix scaled{RowMatrix(4.0 * data.data)};
    const double r2 = choose_damping_radius(scaled);
    CHECK(r2 == doctest::Approx(4.0 * r1).epsilon(0.02));
}

TEST_CASE("bracket failures raise un-dampable errors") {
    RowMatrix zeros = RowMatrix::Zero(4, 2);
    CHECK_THROWS_AS((void)choose_damping_radius(SampleMatrix(zeros)), Error);

    // 80% zero rows: acceptance is at least 0.8 for every R, target 0.5 unreachable
    RowMatrix mostly_zero = RowMatrix::Zero(10, 2);
    mostly_zero(0, 0) = 1.0;
    mostly_zero(1, 1) = 2.0;
    DampingParams params;
    params.target_rejection = 0.5;
    CHECK_THROWS_AS((void)choose_damping_radius(SampleMatrix(mostly_zero), params), Error);
}

TEST_CASE("rejection sampling keeps zero rows and matches the expected rate") {
    RowMatrix m(3, 2);
    m << 0, 0, 0, 0, 50, 50;
    RandomStream rng(8);
    DampingReport report = damp(SampleMatrix(m), 0.3, rng);
    CHECK(report.accepted.count() == 2);  // both zero rows always survive
    CHECK(report.accepted.data.row(0).norm() == 0.0);

    SampleMatrix unit = unit_norm_rows(100000);
    RandomStream rng2(9);
    DampingReport r2 = damp(unit, 1.8644, rng2);
    CHECK(r2.acceptance_rate == doctest::Approx(0.75).epsilon(0.01 / 0.75));
    CHECK(r2.k_estimate == doctest::Approx(0.75).epsilon(1e-4));
    CHECK(r2.accepted.count() == static_cast<Eigen::Index>(r2.acceptance_rate * 100000.0 + 0.5));

    // all rows far outside a tiny radius: everything rejected
    RowMatrix far(50, 2);
    far.setConstant(100.0);
    RandomStream rng3(10);
    CHECK_THROWS_AS((void)damp(SampleMatrix(far), 0.01, rng3), Error);
}

TEST_CASE("damping is deterministic for a fixed stream") {
    SampleMatrix unit = unit_norm_rows(5000);
    RandomStream a(123), b(123);
    DampingReport ra = damp(unit, 1.5, a);
    DampingReport rb = damp(unit, 1.5, b);
    REQUIRE(ra.accepted.count() == rb.accepted.count());
    CHECK(std::memcmp(ra.accepted.data.data(), rb.accepted.data.data(),
                      sizeof(double) * static_cast<std::size_t>(ra.accepted.count() * 2)) == 0);
}

TEST_CASE("damped standard normal matches the analytic law (chi-squared)") {
    // damping N(0,1) by exp(-x^2/R^2) gives exactly N(0, R^2/(R^2+2))
    const double r = 1.0;
    const double sigma = std::sqrt(r * r / (r * r + 2.0));
    RandomStream rng(31337);
    RowMatrix m(100000, 1);
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, 0) = rng.normal();
    RandomStream damp_rng(5150);
    DampingReport report = damp(SampleMatrix(m), r, damp_rng);

    const int bins = 20;
    std::vector<double> edges(static_cast<std::size_t>(bins) - 1);
    for (int k = 1; k < bins; ++k)
        edges[static_cast<std::size_t>(k) - 1] = sigma * normal_quantile(static_cast<double>(k) / bins);
    std::vector<double> observed(static_cast<std::size_t>(bins), 0.0);
    for (Eigen::Index i = 0; i < report.accepted.count(); ++i) {
        const double x = report.accepted.data(i, 0);
        const std::size_t bin = static_cast<std::size_t>(
            std::lower_bound(edges.begin(), edges.end(), x) - edges.begin());
        observed[bin] += 1.0;
    }
    const double expected = static_cast<double>(report.accepted.count()) / bins;
    double chi2 = 0.0;
    for (double o : observed) chi2 += (o - expected) * (o - expected) / expected;
    // upper 1% critical value of chi-squared with 19 degrees of freedom
    CHECK(chi2 < 36.191);

    // Gaussian-tail dominance: damped data has no far outliers
    const double max_abs = report.accepted.data.cwiseAbs().maxCoeff();
    CHECK(max_abs < 3.0 * r * std::sqrt(std::log(100000.0)));
}

TEST_CASE("damping after exact orthogonalization keeps coordinates uncorrelated") {
    RandomStream rng(77);
    IcaInstance inst;
    inst.mixing = generate_orthogonal_matrix(3, rng);
    inst.eta = TailExponentVector{2.1, 4.0, 6.0};
    inst.seed = 404;
    SampleMatrix data = generate_ica_data(inst, 60000);
    Orthogonalizer oracle = orthogonalize_oracle(inst.mixing);
    SampleMatrix sources{RowMatrix(data.data * oracle.b.transpose())};
    const double radius = choose_damping_radius(sources);
    RandomStream damp_rng(11);
    DampingReport report = damp(sources, radius, damp_rng);
    const Eigen::Index kept = report.accepted.count();
    for (Eigen::Index a = 0; a < 3; ++a)
        for (Eigen::Index b = a + 1; b < 3; ++b) {
            Vector va = report.accepted.data.col(a);
            Vector vb = report.accepted.data.col(b);
            va.array() -= va.mean();
            vb.array() -= vb.mean();
            const double corr = va.dot(vb) / (va.norm() * vb.norm());
            CHECK(std::abs(corr) <= 3.0 / std::sqrt(static_cast<double>(kept)));
        }
}

TEST_SUITE_END();
