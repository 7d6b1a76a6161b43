#include "ecopt/report.hpp"

#include "ecopt/error.hpp"
#include "ecopt/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace ecopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) { return std::isnan(x) ? std::string() : io::format_double(x); }

}  // namespace

QuadraticFit quadratic_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw DataError("quadratic fit: x and y lengths differ");
    std::set<double> distinct(xs.begin(), xs.end());
    if (distinct.size() < 3)
        throw NumericError("quadratic fit needs at least 3 distinct x values, got " + std::to_string(distinct.size()));
    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = xs[static_cast<std::size_t>(i)];
        x(i, 0) = 1.0;
        x(i, 1) = v;
        x(i, 2) = v * v;
        y(i) = ys[static_cast<std::size_t>(i)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-12);
    if (qr.rank() < 3) throw NumericError("quadratic fit: design is numerically rank deficient");
    const Eigen::VectorXd c = qr.solve(y);

    QuadraticFit fit;
    fit.n = n;
    for (int j = 0; j < 3; ++j) fit.coef[static_cast<std::size_t>(j)] = c(j);
    if (n > 3) {
        const double s2 = (y - x * c).squaredNorm() / static_cast<double>(n - 3);
        const Eigen::MatrixXd inv = (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(3, 3));
        for (int j = 0; j < 3; ++j) fit.se[static_cast<std::size_t>(j)] = std::sqrt(std::max(0.0, inv(j, j) * s2));
    } else {
        fit.se.fill(kNaN);
    }
    return fit;
}

SequentialTable sequential_targets(const EffortMatrix& effort, const std::vector<double>& targets) {
    for (std::size_t i = 1; i < targets.size(); ++i)
        if (!(targets[i] > targets[i - 1])) throw ConfigError("sequential targets must be strictly ascending");
    SequentialTable table;
    table.targets = targets;
    std::set<std::string> seen;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        Portfolio p = optimize_portfolio(effort, targets[k]);
        std::vector<SequentialEntry> fresh;
        for (const auto& s : p.selected) {
            if (!seen.insert(s.id).second) continue;
            fresh.push_back({s.id, s.w, s.pci, targets[k], k});
        }
        std::stable_sort(fresh.begin(), fresh.end(), [](const SequentialEntry& a, const SequentialEntry& b) {
            if (a.w != b.w) return a.w < b.w;
            return a.id < b.id;
        });
        table.entries.insert(table.entries.end(), fresh.begin(), fresh.end());
        table.portfolios.push_back(std::move(p));
    }
    return table;
}

std::string sequential_csv(const SequentialTable& table) {
    std::ostringstream out;
    out << "activity,w,pci_future,first_target_eci,target_index\n";
    for (const auto& e : table.entries)
        out << e.id << ',' << io::format_double(e.w) << ',' << io::format_double(e.pci) << ','
            << io::format_double(e.first_target) << ',' << e.first_index << '\n';
    return out.str();
}

std::vector<DiagramPoint> diagram_points(const EffortMatrix& effort, const Portfolio& portfolio) {
    std::set<Eigen::Index> chosen;
    for (const auto& s : portfolio.selected) chosen.insert(s.activity);
    std::vector<DiagramPoint> points;
    points.reserve(effort.candidates.size());
    for (const auto& c : effort.candidates) points.push_back({c.id, c.w, c.pci, chosen.count(c.activity) > 0});
    return points;
}

PropertyRow property_row(const Portfolio& portfolio, const EffortMatrix& effort, const SpecializationSnapshot& snapshot,
                         double eci_t) {
    PropertyRow row;
    row.location = portfolio.focal;
    row.eci_t = eci_t;
    row.diversity_t = snapshot.diversity(effort.focal_index);
    row.method = portfolio.method;
    row.target_eci = portfolio.target_eci;
    row.feasible = portfolio.feasible;
    row.count = portfolio.selected.size();
    row.total_effort = portfolio.total_effort;
    row.added_volume = added_volume(portfolio, snapshot);
    if (portfolio.selected.empty()) {
        row.mean_rca = row.mean_omega_rel = row.var_omega_rel = kNaN;
        return row;
    }
    double rca = 0.0, rel = 0.0;
    std::vector<double> rels;
    for (const auto& s : portfolio.selected) {
        rca += snapshot.rca(effort.focal_index, s.activity);
        auto it = std::find_if(effort.candidates.begin(), effort.candidates.end(),
                               [&](const Candidate& c) { return c.activity == s.activity; });
        if (it == effort.candidates.end()) throw DataError("portfolio activity " + s.id + " is not a candidate");
        rels.push_back(it->omega_rel);
        rel += it->omega_rel;
    }
    const auto k = static_cast<double>(rels.size());
    row.mean_rca = rca / k;
    row.mean_omega_rel = rel / k;
    double ss = 0.0;
    for (double v : rels) ss += (v - row.mean_omega_rel) * (v - row.mean_omega_rel);
    row.var_omega_rel = ss / k;
    return row;
}

std::string property_panel_csv(const std::vector<PropertyRow>& rows) {
    std::ostringstream out;
    out << "location,method,eci_t,diversity_t,target_eci,feasible,mean_rca,mean_omega_rel,var_omega_rel,count,"
           "total_effort,added_volume\n";
    for (const auto& r : rows)
        out << r.location << ',' << to_string(r.method) << ',' << num(r.eci_t) << ',' << r.diversity_t << ','
            << num(r.target_eci) << ',' << (r.feasible ? 1 : 0) << ',' << num(r.mean_rca) << ','
            << num(r.mean_omega_rel) << ',' << num(r.var_omega_rel) << ',' << r.count << ','
            << num(r.total_effort) << ',' << num(r.added_volume) << '\n';
    return out.str();
}

std::string property_fits_csv(const std::vector<PropertyRow>& rows) {
    struct Series {
        const char* name;
        double (*get)(const PropertyRow&);
    };
    static const Series series[] = {
        {"mean_rca", [](const PropertyRow& r) { return r.mean_rca; }},
        {"mean_omega_rel", [](const PropertyRow& r) { return r.mean_omega_rel; }},
        {"var_omega_rel", [](const PropertyRow& r) { return r.var_omega_rel; }},
        {"count", [](const PropertyRow& r) { return static_cast<double>(r.count); }},
        {"added_volume", [](const PropertyRow& r) { return r.added_volume; }},
    };
    std::set<Method> methods;
    for (const auto& r : rows) methods.insert(r.method);

    std::ostringstream out;
    out << "method,series,n,c0,c1,c2,se0,se1,se2\n";
    for (Method m : methods) {
        for (const auto& s : series) {
            std::vector<double> xs, ys;
            for (const auto& r : rows) {
                if (r.method != m) continue;
                const double y = s.get(r);
                if (std::isfinite(y) && std::isfinite(r.eci_t)) {
                    xs.push_back(r.eci_t);
                    ys.push_back(y);
                }
            }
            out << to_string(m) << ',' << s.name << ',' << xs.size();
            if (std::set<double>(xs.begin(), xs.end()).size() < 3) {
                out << ",,,,,,\n";
                continue;
            }
            const QuadraticFit f = quadratic_fit(xs, ys);
            for (double c : f.coef) out << ',' << num(c);
            for (double e : f.se) out << ',' << num(e);
            out << '\n';
        }
    }
    return out.str();
}

std::string rca_csv(const SpecializationSnapshot& snapshot) {
    std::ostringstream out;
    out << "location,activity,rca\n";
    for (Eigen::Index c = 0; c < snapshot.rca.rows(); ++c)
        for (Eigen::Index p = 0; p < snapshot.rca.cols(); ++p)
            if (snapshot.output(c, p) > 0.0)
                out << snapshot.locations[static_cast<std::size_t>(c)] << ','
                    << snapshot.activities[static_cast<std::size_t>(p)] << ','
                    << io::format_double(snapshot.rca(c, p)) << '\n';
    return out.str();
}

std::string complexity_csv(const SpecializationSnapshot& snapshot, const ComplexityScores& scores) {
    std::ostringstream out;
    out << "kind,id,score\n";
    for (std::size_t c = 0; c < snapshot.locations.size(); ++c)
        out << "eci," << snapshot.locations[c] << ',' << num(scores.eci(static_cast<Eigen::Index>(c))) << '\n';
    for (std::size_t p = 0; p < snapshot.activities.size(); ++p)
        out << "pci," << snapshot.activities[p] << ',' << num(scores.pci(static_cast<Eigen::Index>(p))) << '\n';
    return out.str();
}

std::string proximity_csv(const SpecializationSnapshot& snapshot, const Eigen::MatrixXd& phi) {
    std::ostringstream out;
    out << "p,p2,phi\n";
    for (Eigen::Index i = 0; i < phi.rows(); ++i)
        for (Eigen::Index j = i + 1; j < phi.cols(); ++j)
            if (phi(i, j) > 0.0)
                out << snapshot.activities[static_cast<std::size_t>(i)] << ','
                    << snapshot.activities[static_cast<std::size_t>(j)] << ',' << io::format_double(phi(i, j))
                    << '\n';
    return out.str();
}

}  // namespace ecopt
