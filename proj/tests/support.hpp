#pragma once

// Fixtures and reference computations shared by the unit and acceptance tests.
// The reference versions are written with plain loops so they do not share
// code paths with the library.

#include "ecopt/complexity.hpp"
#include "ecopt/effort.hpp"
#include "ecopt/forecast.hpp"
#include "ecopt/ingest.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace ecopt::testing {

inline std::string id(const char* prefix, int i) {
    std::string n = std::to_string(i);
    while (n.size() < 3) n = "0" + n;
    return prefix + n;
}

inline YearSlice make_slice(const Eigen::MatrixXd& values, int year = 2000) {
    YearSlice s;
    s.year = year;
    for (Eigen::Index c = 0; c < values.rows(); ++c) s.locations.push_back(id("c", static_cast<int>(c)));
    for (Eigen::Index p = 0; p < values.cols(); ++p) s.activities.push_back(id("p", static_cast<int>(p)));
    s.values = values;
    return s;
}

// Nested n x n specialization matrix: location c holds activities 0..n-1-c.
inline Eigen::MatrixXd nested_matrix(int n) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int c = 0; c < n; ++c)
        for (int p = 0; p < n - c; ++p) m(c, p) = 1.0;
    return m;
}

inline Eigen::MatrixXd reference_rca(const Eigen::MatrixXd& x) {
    double total = 0.0;
    std::vector<double> rows(static_cast<std::size_t>(x.rows()), 0.0), cols(static_cast<std::size_t>(x.cols()), 0.0);
    for (Eigen::Index c = 0; c < x.rows(); ++c)
        for (Eigen::Index p = 0; p < x.cols(); ++p) {
            rows[static_cast<std::size_t>(c)] += x(c, p);
            cols[static_cast<std::size_t>(p)] += x(c, p);
            total += x(c, p);
        }
    Eigen::MatrixXd r(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.rows(); ++c)
        for (Eigen::Index p = 0; p < x.cols(); ++p)
            r(c, p) = (x(c, p) / rows[static_cast<std::size_t>(c)]) / (cols[static_cast<std::size_t>(p)] / total);
    return r;
}

// PCI from the non-symmetric activity operator with a general eigensolver,
// standardized with the sample sd. Sign is arbitrary.
inline Eigen::VectorXd reference_pci(const Eigen::MatrixXd& m) {
    const Eigen::Index nc = m.rows(), np = m.cols();
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(np, np);
    for (Eigen::Index p = 0; p < np; ++p) {
        double kp = 0.0;
        for (Eigen::Index c = 0; c < nc; ++c) kp += m(c, p);
        for (Eigen::Index q = 0; q < np; ++q) {
            double acc = 0.0;
            for (Eigen::Index c = 0; c < nc; ++c) {
                double kc = 0.0;
                for (Eigen::Index r = 0; r < np; ++r) kc += m(c, r);
                acc += m(c, p) * m(c, q) / kc;
            }
            op(p, q) = acc / kp;
        }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(op);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(np));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return es.eigenvalues()(a).real() > es.eigenvalues()(b).real(); });
    Eigen::VectorXd v = es.eigenvectors().col(order[1]).real();
    const double mean = v.mean();
    double ss = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) ss += (v(i) - mean) * (v(i) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return (v.array() - mean) / sd;
}

inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd x = a.array() - a.mean(), y = b.array() - b.mean();
    return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

inline Eigen::VectorXd ranks(const Eigen::VectorXd& v) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
    Eigen::VectorXd r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v(idx[j + 1]) == v(idx[i])) ++j;
        for (std::size_t k = i; k <= j; ++k) r(idx[k]) = 0.5 * static_cast<double>(i + j);
        i = j + 1;
    }
    return r;
}

inline double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return pearson(ranks(a), ranks(b)); }

// Random effort instance: baseline and candidate activities interleaved in
// activity order, w ~ U(0, 2], pci ~ N(0, 1).
inline EffortMatrix random_effort(std::mt19937_64& rng, std::size_t n_candidates, std::size_t n_baseline) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t total = n_candidates + n_baseline;
    std::vector<bool> is_candidate(total, false);
    std::fill(is_candidate.begin(), is_candidate.begin() + static_cast<std::ptrdiff_t>(n_candidates), true);
    std::shuffle(is_candidate.begin(), is_candidate.end(), rng);

    EffortMatrix e;
    e.focal = "focal";
    for (std::size_t a = 0; a < total; ++a) {
        const auto act = static_cast<Eigen::Index>(a);
        if (is_candidate[a]) {
            Candidate c;
            c.activity = act;
            c.id = id("p", static_cast<int>(a));
            c.w = 2.0 * (1.0 - unit(rng));  // (0, 2]
            c.pci = normal(rng);
            c.omega = unit(rng);
            c.omega_rel = c.omega - 0.5;
            e.candidates.push_back(c);
        } else {
            e.baseline.push_back({act, id("p", static_cast<int>(a)), normal(rng)});
        }
    }
    e.eci_baseline = e.baseline.empty() ? std::nan("") : achieved_eci(e, {});
    return e;
}

// Every subset, scored exactly as documented: feasible by the exact ECI
// average, then cost, size, lexicographic ids; infeasible instances maximize
// ECI first.
struct ReferenceBest {
    bool feasible = false;
    double cost = 0.0;
    std::vector<std::string> ids;
};

inline ReferenceBest reference_optimum(const EffortMatrix& e, double target) {
    const std::size_t n = e.candidates.size();
    ReferenceBest best;
    bool have = false;
    double best_eci = -INFINITY;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        std::vector<std::size_t> pos;
        std::vector<std::string> ids;
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1U) {
                pos.push_back(i);
                ids.push_back(e.candidates[i].id);
                cost += e.candidates[i].w;
            }
        const double eci = achieved_eci(e, pos);
        const bool ok = eci >= target;
        auto better = [&] {
            if (!have) return true;
            if (ok != best.feasible) return ok;
            if (!ok && eci != best_eci) return eci > best_eci;
            if (cost != best.cost) return cost < best.cost;
            if (ids.size() != best.ids.size()) return ids.size() < best.ids.size();
            return ids < best.ids;
        };
        if (better()) {
            have = true;
            best = {ok, cost, ids};
            best_eci = eci;
        }
    }
    return best;
}

inline std::vector<std::string> sorted_ids(const Portfolio& p) {
    std::vector<std::string> ids;
    for (const auto& s : p.selected) ids.push_back(s.id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

// Regression rows drawn from known coefficients with Gaussian noise.
inline RegressionRows synthetic_rows(std::mt19937_64& rng, std::size_t n, const std::array<double, 5>& b,
                                     double sigma) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    RegressionRows rows;
    rows.tau = 5;
    rows.delta_t = 10;
    rows.locations = {"c"};
    for (std::size_t i = 0; i < n; ++i) {
        RegressionRow r;
        r.activity = i;
        r.x1 = std::log1p(3.0 * unit(rng));
        r.x2 = std::log1p(unit(rng));
        r.x3 = unit(rng);
        r.x4 = r.x3 - 0.5 + 0.2 * normal(rng);
        r.y = b[0] + b[1] * r.x1 + b[2] * r.x2 + b[3] * r.x3 + b[4] * r.x4 + sigma * normal(rng);
        rows.rows.push_back(r);
        rows.activities.push_back(std::to_string(i));
    }
    return rows;
}

}  // namespace ecopt::testing
