#include "ecopt/complexity.hpp"
#include "ecopt/error.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ecopt;
using namespace ecopt::testing;

namespace {

Eigen::MatrixXd random_output(std::mt19937_64& rng, int nc, int np, double zero_share = 0.3) {
    std::lognormal_distribution<double> ln(3.0, 1.5);
    std::bernoulli_distribution zero(zero_share);
    Eigen::MatrixXd x(nc, np);
    for (int c = 0; c < nc; ++c)
        for (int p = 0; p < np; ++p) x(c, p) = zero(rng) ? 0.0 : ln(rng);
    for (int c = 0; c < nc; ++c) x(c, c % np) += 1.0;
    for (int p = 0; p < np; ++p) x(p % nc, p) += 1.0;
    return x;
}

}  // namespace

TEST_CASE("RCA matches a loop computation and the mass identity") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd x = random_output(rng, 12, 20);
    const auto snap = compute_rca(make_slice(x));
    const Eigen::MatrixXd ref = reference_rca(x);
    CHECK((snap.rca - ref).cwiseAbs().maxCoeff() < 1e-12);

    const double total = x.sum();
    double mass = 0.0;
    for (Eigen::Index c = 0; c < x.rows(); ++c)
        for (Eigen::Index p = 0; p < x.cols(); ++p)
            mass += snap.rca(c, p) * x.row(c).sum() * x.col(p).sum() / total;
    CHECK(std::abs(mass - total) / total < 1e-12);
}

TEST_CASE("binarization uses RCA >= 1 and margins are counted") {
    Eigen::MatrixXd r(2, 3);
    r << 1.0, 0.999999, 2.0, 0.0, 1.5, 1.0;
    const Eigen::MatrixXd m = binarize(r);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 1) == 0.0);
    CHECK(m(1, 2) == 1.0);

    Eigen::MatrixXd x(2, 2);
    x << 3, 1, 1, 3;
    const auto snap = compute_rca(make_slice(x));
    CHECK(snap.diversity(0) == 1);
    CHECK(snap.ubiquity(1) == 1);
    CHECK(snap.rca(0, 0) == doctest::Approx(1.5));
}

TEST_CASE("zero totals are rejected") {
    Eigen::MatrixXd x(2, 2);
    x << 1, 0, 1, 0;
    CHECK_THROWS_AS(compute_rca(make_slice(x)), DataError);
}

TEST_CASE("PCI agrees with a general eigensolver up to sign") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto snap = compute_rca(make_slice(random_output(rng, 15, 25)));
        ComplexityScores s;
        try {
            s = compute_eci_pci(snap.m);
        } catch (const NumericError&) {
            continue;
        }
        if (!s.dropped_activities.empty() || !s.dropped_locations.empty()) continue;
        const Eigen::VectorXd ref = reference_pci(snap.m);
        const double sign = pearson(ref, s.pci) >= 0.0 ? 1.0 : -1.0;
        CHECK((sign * ref - s.pci).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("standardization: mean 0 and sample sd 1") {
    std::mt19937_64 rng(8);
    const auto snap = compute_rca(make_slice(random_output(rng, 20, 40)));
    const auto s = compute_eci_pci(snap.m);
    auto check = [](const Eigen::VectorXd& v) {
        CHECK(std::abs(v.mean()) < 1e-9);
        const double sd = std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
        CHECK(std::abs(sd - 1.0) < 1e-9);
    };
    check(s.pci);
    check(s.eci);
}

TEST_CASE("ECI is the standardized average PCI of each location's specializations") {
    std::mt19937_64 rng(9);
    const auto snap = compute_rca(make_slice(random_output(rng, 10, 18, 0.1)));
    const auto s = compute_eci_pci(snap.m);
    REQUIRE(s.dropped_locations.empty());
    REQUIRE(s.dropped_activities.empty());
    Eigen::VectorXd raw(snap.m.rows());
    for (Eigen::Index c = 0; c < snap.m.rows(); ++c) {
        double sum = 0.0, k = 0.0;
        for (Eigen::Index p = 0; p < snap.m.cols(); ++p)
            if (snap.m(c, p) != 0.0) {
                sum += s.pci(p);
                k += 1.0;
            }
        raw(c) = sum / k;
        CHECK(eci_of_row(snap.m.row(c).transpose(), s.pci) == doctest::Approx(raw(c)).epsilon(1e-14));
    }
    const double mean = raw.mean();
    const double sd = std::sqrt((raw.array() - mean).square().sum() / static_cast<double>(raw.size() - 1));
    CHECK(((raw.array() - mean) / sd - s.eci.array()).abs().maxCoeff() < 1e-9);
}

TEST_CASE("orientation: ECI correlates nonnegatively with diversity") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 5; ++trial) {
        const auto snap = compute_rca(make_slice(random_output(rng, 14, 22)));
        const auto s = compute_eci_pci(snap.m);
        CHECK(pearson(s.eci, snap.diversity.cast<double>()) >= 0.0);
    }
}

TEST_CASE("nested 4x4 oracle: equation and eigenvector ECI have identical ranks") {
    const Eigen::MatrixXd m = nested_matrix(4);
    const auto s = compute_eci_pci(m);
    CHECK(spearman(s.eci, s.eci_eigen) == doctest::Approx(1.0).epsilon(1e-12));
    // The most diversified location is the most complex.
    for (int c = 1; c < 4; ++c) CHECK(s.eci(c - 1) > s.eci(c));
    // Rarest activity is the most complex.
    for (int p = 1; p < 4; ++p) CHECK(s.pci(p - 1) < s.pci(p));
}

TEST_CASE("degenerate inputs are explicit errors") {
    CHECK_THROWS_AS(compute_eci_pci(Eigen::MatrixXd(0, 0)), DataError);
    Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 3);
    CHECK_THROWS_AS(compute_eci_pci(one), NumericError);
    Eigen::MatrixXd zero_row(2, 2);
    zero_row << 1, 1, 0, 0;
    CHECK_THROWS_AS(compute_eci_pci(zero_row), DataError);
    // Every location holds every activity: no second eigenvector direction.
    CHECK_THROWS_AS(compute_eci_pci(Eigen::MatrixXd::Ones(3, 3)), NumericError);
    CHECK_THROWS_AS(eci_of_row(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)), DataError);
}

TEST_CASE("disconnected matrices are scored on the largest component") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(6, 6);
    m.topLeftCorner(4, 4) = nested_matrix(4);
    m.bottomRightCorner(2, 2) = nested_matrix(2);
    const auto s = compute_eci_pci(m);
    CHECK(s.dropped_locations.size() == 2);
    CHECK(s.dropped_activities.size() == 2);
    CHECK(std::isnan(s.pci(5)));
    CHECK(std::isnan(s.eci(4)));
    CHECK(std::isfinite(s.eci(0)));
}

TEST_CASE("proximity and density match loop definitions") {
    std::mt19937_64 rng(12);
    const auto snap = compute_rca(make_slice(random_output(rng, 9, 14)));
    const auto f = compute_relatedness(snap.m);
    const auto& m = snap.m;
    const Eigen::Index np = m.cols(), nc = m.rows();
    for (Eigen::Index p = 0; p < np; ++p)
        for (Eigen::Index q = 0; q < np; ++q) {
            double both = 0, up = 0, uq = 0;
            for (Eigen::Index c = 0; c < nc; ++c) {
                both += m(c, p) * m(c, q);
                up += m(c, p);
                uq += m(c, q);
            }
            const double expected = p == q ? 1.0 : std::min(both / up, both / uq);
            CHECK(f.phi(p, q) == doctest::Approx(expected).epsilon(1e-14));
        }
    for (Eigen::Index c = 0; c < nc; ++c) {
        double mean = 0.0;
        for (Eigen::Index p = 0; p < np; ++p) {
            double num = 0, den = 0;
            for (Eigen::Index q = 0; q < np; ++q) {
                num += m(c, q) * f.phi(p, q);
                den += f.phi(p, q);
            }
            CHECK(f.omega(c, p) == doctest::Approx(num / den).epsilon(1e-13));
            CHECK(f.omega(c, p) >= 0.0);
            CHECK(f.omega(c, p) <= 1.0);
            mean += f.omega(c, p);
        }
        mean /= static_cast<double>(np);
        for (Eigen::Index p = 0; p < np; ++p)
            CHECK(f.omega_rel(c, p) == doctest::Approx(f.omega(c, p) - mean).epsilon(1e-13));
    }
}

TEST_CASE("sample moments") {
    Eigen::VectorXd v(4);
    v << 1, 2, 3, 4;
    const auto s = sample_moments(v);
    CHECK(s.mean == 2.5);
    CHECK(s.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
}
