#include "ecopt/forecast.hpp"

#include "ecopt/error.hpp"
#include "ecopt/ols.hpp"
#include "ecopt/text_io.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

namespace ecopt {

namespace {

using IdIndex = std::unordered_map<std::string, Eigen::Index>;

IdIndex index_of(const std::vector<std::string>& ids) {
    IdIndex out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], static_cast<Eigen::Index>(i));
    return out;
}

const YearState& state_at(const YearStates& states, int year) {
    auto it = states.find(year);
    if (it == states.end()) throw DataError("year " + std::to_string(year) + " is not available");
    return it->second;
}

const char* kCoefNames[kSteppingstoneCoefficients] = {"b0", "b1", "b2", "b3", "b4"};

}  // namespace

std::string to_string(Regime r) { return r == Regime::entry ? "entry" : "exit"; }

Regime parse_regime(const std::string& s) {
    if (s == "entry") return Regime::entry;
    if (s == "exit") return Regime::exit;
    throw DataError("unknown regime '" + s + "'");
}

YearState build_year_state(const OutputPanel& panel, int year) {
    YearState st;
    st.snapshot = compute_rca(panel, year);
    st.relatedness = compute_relatedness(st.snapshot.m);
    return st;
}

YearStates build_year_states(const OutputPanel& panel) {
    YearStates out;
    for (int y : panel.populated_years()) out.emplace(y, build_year_state(panel, y));
    return out;
}

RegressionRows assemble_rows(const YearStates& states, int t, int tau, int delta_t, Regime regime) {
    if (!(tau > 0 && tau < delta_t))
        throw ConfigError("steppingstone requires 0 < tau < delta_t (got tau=" + std::to_string(tau) +
                          ", delta_t=" + std::to_string(delta_t) + ")");
    const YearState& s0 = state_at(states, t);
    const YearState& s1 = state_at(states, t + tau);
    const YearState& s2 = state_at(states, t + delta_t);
    const IdIndex loc1 = index_of(s1.snapshot.locations), loc2 = index_of(s2.snapshot.locations);
    const IdIndex act1 = index_of(s1.snapshot.activities), act2 = index_of(s2.snapshot.activities);

    RegressionRows out;
    out.regime = regime;
    out.start_year = t;
    out.tau = tau;
    out.delta_t = delta_t;
    out.locations = s0.snapshot.locations;
    out.activities = s0.snapshot.activities;

    const auto& snap = s0.snapshot;
    std::vector<Eigen::Index> act_in1(snap.activities.size(), -1), act_in2(snap.activities.size(), -1);
    for (std::size_t p = 0; p < snap.activities.size(); ++p) {
        if (auto a = act1.find(snap.activities[p]); a != act1.end()) act_in1[p] = a->second;
        if (auto a = act2.find(snap.activities[p]); a != act2.end()) act_in2[p] = a->second;
    }
    for (std::size_t c = 0; c < snap.locations.size(); ++c) {
        auto l1 = loc1.find(snap.locations[c]);
        auto l2 = loc2.find(snap.locations[c]);
        if (l1 == loc1.end() || l2 == loc2.end()) continue;
        const auto ci = static_cast<Eigen::Index>(c);
        for (std::size_t p = 0; p < snap.activities.size(); ++p) {
            if (act_in1[p] < 0 || act_in2[p] < 0) continue;
            const auto pi = static_cast<Eigen::Index>(p);
            const double rca_t = snap.rca(ci, pi);
            const bool is_entry = rca_t < 1.0;
            if (is_entry != (regime == Regime::entry)) continue;
            RegressionRow row;
            row.location = c;
            row.activity = p;
            row.y = log_rca(s2.snapshot.rca(l2->second, act_in2[p]));
            row.x1 = log_rca(s1.snapshot.rca(l1->second, act_in1[p]));
            row.x2 = log_rca(rca_t);
            row.x3 = s0.relatedness.omega(ci, pi);
            row.x4 = s0.relatedness.omega_rel(ci, pi);
            out.rows.push_back(row);
        }
    }
    if (out.rows.empty())
        throw DataError("no " + to_string(regime) + " observations for start year " + std::to_string(t));
    return out;
}

SteppingstoneModel fit_ols(const RegressionRows& rows) {
    const auto n = static_cast<Eigen::Index>(rows.rows.size());
    if (n < 6) throw NumericError("steppingstone regression needs at least 6 rows, got " + std::to_string(n));
    Eigen::MatrixXd x(n, 5);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows.rows[static_cast<std::size_t>(i)];
        x(i, 0) = 1.0;
        x(i, 1) = r.x1;
        x(i, 2) = r.x2;
        x(i, 3) = r.x3;
        x(i, 4) = r.x4;
        y(i) = r.y;
    }
    OlsResult fit;
    try {
        fit = ols(x, y, Covariance::classical);
    } catch (const NumericError& e) {
        throw NumericError(to_string(rows.regime) + " model, start year " + std::to_string(rows.start_year) + ": " +
                           e.what());
    }
    SteppingstoneModel m;
    m.regime = rows.regime;
    m.delta_t = rows.delta_t;
    m.tau = rows.tau;
    for (std::size_t j = 0; j < kSteppingstoneCoefficients; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        m.coef[j] = fit.coef(jj);
        m.se[j] = fit.se(jj);
        m.p_value[j] = fit.p_value(jj);
    }
    m.r2 = fit.r2;
    m.adj_r2 = fit.adj_r2;
    m.n_obs = n;
    m.start_years = {rows.start_year};
    return m;
}

SteppingstoneModel average_models(std::span<const SteppingstoneModel> models) {
    if (models.empty()) throw DataError("cannot average an empty model list");
    const auto& first = models.front();
    SteppingstoneModel out;
    out.regime = first.regime;
    out.delta_t = first.delta_t;
    out.tau = first.tau;
    std::set<int> years;
    for (const auto& m : models) {
        if (m.regime != first.regime) throw DataError("cannot average entry and exit models together");
        if (m.delta_t != first.delta_t || m.tau != first.tau)
            throw DataError("cannot average models with different (delta_t, tau)");
        for (std::size_t j = 0; j < kSteppingstoneCoefficients; ++j) {
            out.coef[j] += m.coef[j];
            out.se[j] += m.se[j];
            out.p_value[j] += m.p_value[j];
        }
        out.r2 += m.r2;
        out.adj_r2 += m.adj_r2;
        out.n_obs += m.n_obs;
        years.insert(m.start_years.begin(), m.start_years.end());
    }
    const double k = static_cast<double>(models.size());
    for (std::size_t j = 0; j < kSteppingstoneCoefficients; ++j) {
        out.coef[j] /= k;
        out.se[j] /= k;
        out.p_value[j] /= k;
    }
    out.r2 /= k;
    out.adj_r2 /= k;
    out.start_years.assign(years.begin(), years.end());
    return out;
}

std::vector<int> feasible_start_years(const YearStates& states, int tau, int delta_t) {
    std::vector<int> out;
    if (!(tau > 0 && tau < delta_t)) return out;
    for (const auto& [year, st] : states) {
        (void)st;
        if (states.count(year + tau) && states.count(year + delta_t)) out.push_back(year);
    }
    return out;
}

Calibration calibrate(const YearStates& states, Regime regime, int tau, int delta_t) {
    if (!(tau > 0 && tau < delta_t)) throw ConfigError("calibration requires 0 < tau < delta_t");
    auto years = feasible_start_years(states, tau, delta_t);
    if (years.empty())
        throw DataError("no start year has data at t, t+" + std::to_string(tau) + " and t+" + std::to_string(delta_t));
    Calibration out;
    for (int t : years) out.per_start_year.push_back(fit_ols(assemble_rows(states, t, tau, delta_t, regime)));
    out.averaged = average_models(out.per_start_year);
    return out;
}

std::vector<SweepCell> sweep(const YearStates& states, std::pair<int, int> tau_range,
                             std::pair<int, int> delta_t_range) {
    std::vector<SweepCell> out;
    for (int dt = delta_t_range.first; dt <= delta_t_range.second; ++dt) {
        for (int tau = std::max(1, tau_range.first); tau <= tau_range.second && tau < dt; ++tau) {
            if (feasible_start_years(states, tau, dt).empty()) continue;
            SweepCell cell;
            cell.delta_t = dt;
            cell.tau = tau;
            cell.entry = calibrate(states, Regime::entry, tau, dt).averaged;
            cell.exit = calibrate(states, Regime::exit, tau, dt).averaged;
            out.push_back(std::move(cell));
        }
    }
    if (out.empty()) throw ConfigError("sweep has no feasible (delta_t, tau) pair");
    return out;
}

FuturePrediction predict_future(const SteppingstoneModel& entry, const SteppingstoneModel& exit,
                                const SpecializationSnapshot& snapshot, const RelatednessField& relatedness) {
    if (entry.regime != Regime::entry || exit.regime != Regime::exit)
        throw ConfigError("predict_future needs an entry model and an exit model");
    if (entry.delta_t != exit.delta_t || entry.tau != exit.tau)
        throw ConfigError("entry and exit models have different (delta_t, tau)");
    const Eigen::Index nl = snapshot.rca.rows(), na = snapshot.rca.cols();
    if (relatedness.omega.rows() != nl || relatedness.omega.cols() != na)
        throw DataError("relatedness field does not match the snapshot");

    FuturePrediction f;
    f.base_year = snapshot.year;
    f.horizon_year = snapshot.year + entry.delta_t;
    f.locations = snapshot.locations;
    f.activities = snapshot.activities;
    f.r_hat.resize(nl, na);
    f.m_pred.resize(nl, na);
    const double threshold = std::log(2.0);
    for (Eigen::Index p = 0; p < na; ++p) {
        for (Eigen::Index c = 0; c < nl; ++c) {
            const double rca = snapshot.rca(c, p);
            const double r = log_rca(rca);
            const auto& model = rca < 1.0 ? entry : exit;
            const double v = model.predict(r, r, relatedness.omega(c, p), relatedness.omega_rel(c, p));
            f.r_hat(c, p) = v;
            f.m_pred(c, p) = v >= threshold ? 1.0 : 0.0;
        }
    }

    // Score the predicted matrix on its nonempty rows and columns.
    std::vector<Eigen::Index> rows, cols;
    for (Eigen::Index c = 0; c < nl; ++c)
        if (f.m_pred.row(c).sum() > 0.0) rows.push_back(c);
    for (Eigen::Index p = 0; p < na; ++p)
        if (f.m_pred.col(p).sum() > 0.0) cols.push_back(p);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    f.pci_future = Eigen::VectorXd::Constant(na, nan);
    f.eci_pred = Eigen::VectorXd::Constant(nl, nan);
    if (rows.empty() || cols.empty()) throw DataError("predicted specialization matrix is empty");
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f.m_pred(rows[i], cols[j]);
    ComplexityScores scores = compute_eci_pci(sub);
    for (std::size_t j = 0; j < cols.size(); ++j) f.pci_future(cols[j]) = scores.pci(static_cast<Eigen::Index>(j));

    for (Eigen::Index p = 0; p < na; ++p)
        if (std::isnan(f.pci_future(p))) f.unpriced_activities.push_back(p);
    Eigen::VectorXd priced = Eigen::VectorXd::Zero(na);
    Eigen::VectorXd pci_clean = f.pci_future.unaryExpr([](double v) { return std::isnan(v) ? 0.0 : v; });
    for (Eigen::Index p = 0; p < na; ++p) priced(p) = std::isnan(f.pci_future(p)) ? 0.0 : 1.0;
    for (Eigen::Index c = 0; c < nl; ++c) {
        Eigen::VectorXd row = f.m_pred.row(c).transpose().cwiseProduct(priced);
        if (row.sum() == 0.0) {
            f.empty_locations.push_back(c);
            continue;
        }
        f.eci_pred(c) = eci_of_row(row, pci_clean);
    }
    return f;
}

std::string models_csv(std::span<const SteppingstoneModel> models) {
    std::ostringstream out;
    out << "regime,delta_t,tau,b0,b1,b2,b3,b4,se0,se1,se2,se3,se4,r2,n_obs,start_years,p0,p1,p2,p3,p4,adj_r2\n";
    for (const auto& m : models) {
        out << to_string(m.regime) << ',' << m.delta_t << ',' << m.tau;
        for (double v : m.coef) out << ',' << io::format_double(v);
        for (double v : m.se) out << ',' << io::format_double(v);
        out << ',' << io::format_double(m.r2) << ',' << m.n_obs << ',';
        for (std::size_t i = 0; i < m.start_years.size(); ++i) out << (i ? ";" : "") << m.start_years[i];
        for (double v : m.p_value) out << ',' << io::format_double(v);
        out << ',' << io::format_double(m.adj_r2) << '\n';
    }
    return out.str();
}

std::vector<SteppingstoneModel> parse_models_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<SteppingstoneModel> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (io::trim(line).empty()) continue;
        auto f = io::split_csv(line);
        if (lineno == 1) {
            if (f.empty() || io::trim(f[0]) != "regime") throw DataError("models.csv: missing header");
            continue;
        }
        if (f.size() != 22) throw DataError("models.csv line " + std::to_string(lineno) + ": expected 22 fields");
        auto num = [&](std::size_t i) {
            auto v = io::parse_double(f[i]);
            if (!v) throw DataError("models.csv line " + std::to_string(lineno) + ": bad number '" + f[i] + "'");
            return *v;
        };
        SteppingstoneModel m;
        m.regime = parse_regime(io::trim(f[0]));
        m.delta_t = static_cast<int>(num(1));
        m.tau = static_cast<int>(num(2));
        for (std::size_t j = 0; j < 5; ++j) {
            m.coef[j] = num(3 + j);
            m.se[j] = num(8 + j);
            m.p_value[j] = num(16 + j);
        }
        m.r2 = num(13);
        m.n_obs = static_cast<long long>(num(14));
        std::istringstream ys(f[15]);
        std::string y;
        while (std::getline(ys, y, ';'))
            if (auto v = io::parse_int(y)) m.start_years.push_back(static_cast<int>(*v));
        m.adj_r2 = num(21);
        out.push_back(std::move(m));
    }
    return out;
}

std::string sweep_csv(std::span<const SweepCell> cells) {
    std::ostringstream out;
    out << "delta_t,tau,regime,coefficient,estimate,se,p_value,r2,n_obs,n_start_years\n";
    for (const auto& cell : cells) {
        for (const SteppingstoneModel* m : {&cell.entry, &cell.exit}) {
            for (std::size_t j = 0; j < kSteppingstoneCoefficients; ++j) {
                out << cell.delta_t << ',' << cell.tau << ',' << to_string(m->regime) << ',' << kCoefNames[j] << ','
                    << io::format_double(m->coef[j]) << ',' << io::format_double(m->se[j]) << ','
                    << io::format_double(m->p_value[j]) << ',' << io::format_double(m->r2) << ',' << m->n_obs << ','
                    << m->start_years.size() << '\n';
            }
        }
    }
    return out.str();
}

}  // namespace ecopt
