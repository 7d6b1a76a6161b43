#include "ecopt/complexity.hpp"

#include "ecopt/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace ecopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Connected components of the bipartite graph given by m. Returns the
// location and activity indices of the largest one (ties go to the component
// containing the lowest location index).
void largest_component(const Eigen::MatrixXd& m, std::vector<Eigen::Index>& locs, std::vector<Eigen::Index>& acts) {
    const Eigen::Index nl = m.rows(), na = m.cols();
    std::vector<int> loc_comp(static_cast<std::size_t>(nl), -1), act_comp(static_cast<std::size_t>(na), -1);
    int best = -1;
    std::size_t best_size = 0;
    int comp = 0;
    for (Eigen::Index start = 0; start < nl; ++start) {
        if (loc_comp[static_cast<std::size_t>(start)] >= 0) continue;
        std::size_t size = 0;
        std::deque<std::pair<bool, Eigen::Index>> queue{{true, start}};
        loc_comp[static_cast<std::size_t>(start)] = comp;
        while (!queue.empty()) {
            auto [is_loc, i] = queue.front();
            queue.pop_front();
            ++size;
            if (is_loc) {
                for (Eigen::Index p = 0; p < na; ++p)
                    if (m(i, p) != 0.0 && act_comp[static_cast<std::size_t>(p)] < 0) {
                        act_comp[static_cast<std::size_t>(p)] = comp;
                        queue.emplace_back(false, p);
                    }
            } else {
                for (Eigen::Index c = 0; c < nl; ++c)
                    if (m(c, i) != 0.0 && loc_comp[static_cast<std::size_t>(c)] < 0) {
                        loc_comp[static_cast<std::size_t>(c)] = comp;
                        queue.emplace_back(true, c);
                    }
            }
        }
        if (size > best_size) {
            best_size = size;
            best = comp;
        }
        ++comp;
    }
    locs.clear();
    acts.clear();
    for (Eigen::Index c = 0; c < nl; ++c)
        if (loc_comp[static_cast<std::size_t>(c)] == best) locs.push_back(c);
    for (Eigen::Index p = 0; p < na; ++p)
        if (act_comp[static_cast<std::size_t>(p)] == best) acts.push_back(p);
}

// Second eigenvector of D_a^{-1} B^T D_b^{-1} B, where B is (rows x cols) and
// the operator acts on columns. Works through the symmetric similar matrix so
// a self-adjoint solver can be used.
Eigen::VectorXd second_eigenvector(const Eigen::MatrixXd& b, double& lambda2) {
    const Eigen::VectorXd kr = b.rowwise().sum();
    const Eigen::VectorXd kc = b.colwise().sum().transpose();
    if (b.cols() < 2) throw NumericError("complexity needs at least two activities and two locations in a component");
    const Eigen::VectorXd kc_isqrt = kc.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd scaled = kr.cwiseInverse().cwiseSqrt().asDiagonal() * b;  // D_b^{-1/2} B
    Eigen::MatrixXd s = scaled.transpose() * scaled;                          // B^T D_b^{-1} B
    s = kc_isqrt.asDiagonal() * s * kc_isqrt.asDiagonal();
    s = 0.5 * (s + s.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
    if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition did not converge");
    const Eigen::VectorXd& ev = solver.eigenvalues();  // ascending
    const Eigen::Index n = ev.size();
    lambda2 = ev(n - 2);
    const double tol = 1e-10 * std::max(1.0, std::abs(ev(n - 1)));
    if (ev(n - 1) - ev(n - 2) <= tol)
        throw NumericError("leading eigenvalue of the complexity operator is not simple");
    if (n >= 3 && ev(n - 2) - ev(n - 3) <= tol)
        throw NumericError("second eigenvalue of the complexity operator is degenerate");
    return kc_isqrt.asDiagonal() * solver.eigenvectors().col(n - 2);
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double ma = a.mean(), mb = b.mean();
    const Eigen::VectorXd da = a.array() - ma, db = b.array() - mb;
    const double den = std::sqrt(da.squaredNorm() * db.squaredNorm());
    return den > 0.0 ? da.dot(db) / den : 0.0;
}

Eigen::VectorXd zscore(const Eigen::VectorXd& v, Standardization& st, const char* what) {
    st = sample_moments(v);
    if (!(st.sd > 1e-12 * std::max(1.0, std::abs(st.mean))))
        throw NumericError(std::string(what) + " has zero variance; standardization is undefined");
    return (v.array() - st.mean) / st.sd;
}

}  // namespace

Standardization sample_moments(const Eigen::Ref<const Eigen::VectorXd>& v) {
    Standardization st;
    const Eigen::Index n = v.size();
    if (n < 2) {
        st.mean = n ? v(0) : 0.0;
        st.sd = 0.0;
        return st;
    }
    st.mean = v.mean();
    st.sd = std::sqrt((v.array() - st.mean).square().sum() / static_cast<double>(n - 1));
    return st;
}

SpecializationSnapshot compute_rca(const YearSlice& slice) {
    const Eigen::MatrixXd& x = slice.values;
    const Eigen::VectorXd xc = x.rowwise().sum();
    const Eigen::RowVectorXd xp = x.colwise().sum();
    const double total = x.sum();
    for (Eigen::Index c = 0; c < xc.size(); ++c)
        if (!(xc(c) > 0.0))
            throw DataError("location " + slice.locations[static_cast<std::size_t>(c)] + " has zero total in " +
                            std::to_string(slice.year) + " (filter the panel first)");
    for (Eigen::Index p = 0; p < xp.size(); ++p)
        if (!(xp(p) > 0.0))
            throw DataError("activity " + slice.activities[static_cast<std::size_t>(p)] + " has zero total in " +
                            std::to_string(slice.year) + " (filter the panel first)");

    SpecializationSnapshot s;
    s.year = slice.year;
    s.locations = slice.locations;
    s.activities = slice.activities;
    s.output = x;
    s.rca.resize(x.rows(), x.cols());
    for (Eigen::Index p = 0; p < x.cols(); ++p)
        for (Eigen::Index c = 0; c < x.rows(); ++c) s.rca(c, p) = x(c, p) * total / (xc(c) * xp(p));
    s.m = binarize(s.rca);
    s.diversity = s.m.rowwise().sum().cast<int>();
    s.ubiquity = s.m.colwise().sum().transpose().cast<int>();
    return s;
}

SpecializationSnapshot compute_rca(const OutputPanel& panel, int year) {
    if (!panel.years().contains(year))
        throw DataError("year " + std::to_string(year) + " is outside the panel's range");
    return compute_rca(panel.slice(year));
}

Eigen::MatrixXd binarize(const Eigen::MatrixXd& rca) {
    return (rca.array() >= 1.0).cast<double>().matrix();
}

ComplexityScores compute_eci_pci(const Eigen::MatrixXd& m) {
    if (m.rows() == 0 || m.cols() == 0) throw DataError("empty specialization matrix");
    for (Eigen::Index c = 0; c < m.rows(); ++c)
        if (m.row(c).sum() == 0.0) throw DataError("location row " + std::to_string(c) + " has no specializations");
    for (Eigen::Index p = 0; p < m.cols(); ++p)
        if (m.col(p).sum() == 0.0) throw DataError("activity column " + std::to_string(p) + " has zero ubiquity");

    ComplexityScores out;
    std::vector<Eigen::Index> locs, acts;
    largest_component(m, locs, acts);
    for (Eigen::Index c = 0, k = 0; c < m.rows(); ++c) {
        if (k < static_cast<Eigen::Index>(locs.size()) && locs[static_cast<std::size_t>(k)] == c) ++k;
        else out.dropped_locations.push_back(c);
    }
    for (Eigen::Index p = 0, k = 0; p < m.cols(); ++p) {
        if (k < static_cast<Eigen::Index>(acts.size()) && acts[static_cast<std::size_t>(k)] == p) ++k;
        else out.dropped_activities.push_back(p);
    }
    if (locs.size() < 2) throw NumericError("complexity needs at least two connected locations");

    Eigen::MatrixXd b(static_cast<Eigen::Index>(locs.size()), static_cast<Eigen::Index>(acts.size()));
    for (std::size_t i = 0; i < locs.size(); ++i)
        for (std::size_t j = 0; j < acts.size(); ++j)
            b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(locs[i], acts[j]);
    const Eigen::VectorXd diversity = b.rowwise().sum();

    double lambda2 = 0.0, lambda2_loc = 0.0;
    Eigen::VectorXd pci_raw = second_eigenvector(b, lambda2);
    Eigen::VectorXd eci_eig_raw = second_eigenvector(b.transpose(), lambda2_loc);
    out.second_eigenvalue = lambda2;

    Eigen::VectorXd pci = zscore(pci_raw, out.pci_standardization, "PCI");
    Eigen::VectorXd avg = (b * pci).cwiseQuotient(diversity);
    double corr = correlation(avg, diversity);
    if (corr == 0.0) {
        // Symmetric spectra: fall back to making the largest |pci| positive.
        Eigen::Index arg = 0;
        pci.cwiseAbs().maxCoeff(&arg);
        corr = pci(arg) >= 0.0 ? 1.0 : -1.0;
        out.orientation_anchor = "largest |PCI| positive (ECI uncorrelated with diversity)";
    } else {
        out.orientation_anchor = "corr(ECI, diversity) >= 0";
    }
    if (corr < 0.0) {
        pci_raw = -pci_raw;
        pci = zscore(pci_raw, out.pci_standardization, "PCI");
        avg = (b * pci).cwiseQuotient(diversity);
    }
    Eigen::VectorXd eci = zscore(avg, out.eci_standardization, "ECI");

    Standardization tmp;
    Eigen::VectorXd eci_eig = zscore(eci_eig_raw, tmp, "eigenvector ECI");
    if (correlation(eci_eig, diversity) < 0.0) eci_eig = -eci_eig;

    out.pci = Eigen::VectorXd::Constant(m.cols(), kNaN);
    out.eci = Eigen::VectorXd::Constant(m.rows(), kNaN);
    out.eci_eigen = Eigen::VectorXd::Constant(m.rows(), kNaN);
    for (std::size_t j = 0; j < acts.size(); ++j) out.pci(acts[j]) = pci(static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < locs.size(); ++i) {
        out.eci(locs[i]) = eci(static_cast<Eigen::Index>(i));
        out.eci_eigen(locs[i]) = eci_eig(static_cast<Eigen::Index>(i));
    }
    return out;
}

double eci_of_row(const Eigen::Ref<const Eigen::VectorXd, 0, Eigen::InnerStride<>>& row,
                  const Eigen::Ref<const Eigen::VectorXd>& pci) {
    if (row.size() != pci.size()) throw DataError("eci_of_row: row and pci sizes differ");
    double sum = 0.0, count = 0.0;
    for (Eigen::Index p = 0; p < row.size(); ++p) {
        if (row(p) == 0.0) continue;
        sum += row(p) * pci(p);
        count += row(p);
    }
    if (count == 0.0) throw DataError("eci_of_row: row has no specializations");
    return sum / count;
}

Eigen::MatrixXd compute_proximity(const Eigen::MatrixXd& m) {
    const Eigen::VectorXd ubiquity = m.colwise().sum().transpose();
    for (Eigen::Index p = 0; p < ubiquity.size(); ++p)
        if (!(ubiquity(p) > 0.0)) throw DataError("proximity: activity " + std::to_string(p) + " has zero ubiquity");
    Eigen::MatrixXd co = m.transpose() * m;
    const Eigen::Index n = m.cols();
    Eigen::MatrixXd phi(n, n);
    for (Eigen::Index q = 0; q < n; ++q)
        for (Eigen::Index p = 0; p < n; ++p)
            phi(p, q) = p == q ? 1.0 : co(p, q) / std::max(ubiquity(p), ubiquity(q));
    return phi;
}

Eigen::MatrixXd compute_density(const Eigen::MatrixXd& m, const Eigen::MatrixXd& phi) {
    if (phi.rows() != m.cols() || phi.cols() != m.cols()) throw DataError("density: proximity shape mismatch");
    const Eigen::VectorXd row_sum = phi.rowwise().sum();
    for (Eigen::Index p = 0; p < row_sum.size(); ++p)
        if (!(row_sum(p) > 0.0)) throw DataError("density: activity " + std::to_string(p) + " has a zero proximity row");
    // omega[c][p] = sum_q m[c][q] phi[p][q] / sum_q phi[p][q]
    Eigen::MatrixXd omega = m * phi.transpose();
    for (Eigen::Index p = 0; p < omega.cols(); ++p) omega.col(p) /= row_sum(p);
    return omega.cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::MatrixXd compute_relative_density(const Eigen::MatrixXd& omega) {
    if (omega.cols() == 0) return omega;
    Eigen::VectorXd mean = omega.rowwise().mean();
    return omega.colwise() - mean;
}

RelatednessField compute_relatedness(const Eigen::MatrixXd& m) {
    RelatednessField f;
    f.phi = compute_proximity(m);
    f.omega = compute_density(m, f.phi);
    f.omega_rel = compute_relative_density(f.omega);
    return f;
}

}  // namespace ecopt
