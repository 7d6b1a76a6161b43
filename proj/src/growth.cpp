#include "ecopt/growth.hpp"

#include "ecopt/error.hpp"
#include "ecopt/ols.hpp"
#include "ecopt/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ecopt {

namespace {

int resolve_period(const GrowthModel& model, std::optional<int> period) {
    if (!period) return model.latest_period();
    if (!model.period_effects.count(*period))
        throw ConfigError("growth model has no effect for period starting " + std::to_string(*period));
    return *period;
}

}  // namespace

int GrowthModel::latest_period() const {
    if (period_effects.empty()) throw ConfigError("growth model has no period effects");
    return period_effects.rbegin()->first;
}

GrowthPanel assemble_growth_panel(const MacroSeries& macro, const EciHistory& eci_history,
                                  const std::vector<GrowthPeriod>& periods) {
    if (periods.empty()) throw ConfigError("growth panel needs at least one period");
    GrowthPanel panel;
    for (const auto& period : periods) {
        if (period.end <= period.start)
            throw ConfigError("growth period " + std::to_string(period.start) + "-" + std::to_string(period.end) +
                              " does not move forward in time");
        if (std::any_of(panel.periods.begin(), panel.periods.end(),
                        [&](const GrowthPeriod& p) { return p.start == period.start; }))
            throw ConfigError("growth period starting " + std::to_string(period.start) + " is listed twice");
        auto eci_year = eci_history.find(period.start);
        if (eci_year == eci_history.end())
            throw DataError("no ECI available for growth period start " + std::to_string(period.start));

        std::vector<std::string> ids;
        ids.reserve(eci_year->second.size());
        for (const auto& [id, eci] : eci_year->second)
            if (std::isfinite(eci)) ids.push_back(id);
        std::sort(ids.begin(), ids.end());

        std::vector<GrowthRow> rows;
        for (const auto& id : ids) {
            const MacroRow* a = macro.find(id, period.start);
            const MacroRow* b = macro.find(id, period.end);
            if (!a || !b || !a->gdp_pc_ppp || !b->gdp_pc_ppp) continue;
            GrowthRow row;
            row.location = id;
            row.period = period;
            row.eci = eci_year->second.at(id);
            row.log_gdp_pc = std::log(*a->gdp_pc_ppp);
            row.growth = 100.0 / static_cast<double>(period.end - period.start) *
                         std::log(*b->gdp_pc_ppp / *a->gdp_pc_ppp);
            rows.push_back(std::move(row));
        }
        if (rows.size() < 2)
            throw DataError("growth period " + std::to_string(period.start) + "-" + std::to_string(period.end) +
                            " has " + std::to_string(rows.size()) + " usable locations; z-scores need at least 2");
        Eigen::VectorXd logs(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) logs(static_cast<Eigen::Index>(i)) = rows[i].log_gdp_pc;
        const Standardization s = sample_moments(logs);
        if (!(s.sd > 0.0))
            throw DataError("log GDP per capita is constant in period starting " + std::to_string(period.start));
        for (auto& row : rows) row.z = (row.log_gdp_pc - s.mean) / s.sd;
        panel.normalization[period.start] = s;
        panel.periods.push_back(period);
        panel.rows.insert(panel.rows.end(), rows.begin(), rows.end());
    }
    std::stable_sort(panel.rows.begin(), panel.rows.end(), [](const GrowthRow& a, const GrowthRow& b) {
        if (a.period.start != b.period.start) return a.period.start < b.period.start;
        return a.location < b.location;
    });
    std::sort(panel.periods.begin(), panel.periods.end(),
              [](const GrowthPeriod& a, const GrowthPeriod& b) { return a.start < b.start; });
    return panel;
}

GrowthModel fit_growth_model(const GrowthPanel& panel) {
    if (panel.rows.empty()) throw DataError("growth panel is empty");
    std::vector<int> starts;
    for (const auto& p : panel.periods) starts.push_back(p.start);
    if (starts.empty())
        for (const auto& r : panel.rows) starts.push_back(r.period.start);
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

    const auto n = static_cast<Eigen::Index>(panel.rows.size());
    const auto k = static_cast<Eigen::Index>(3 + starts.size());
    if (n <= 4) throw DataError("growth model needs more than 4 observations, got " + std::to_string(n));
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, k);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = panel.rows[static_cast<std::size_t>(i)];
        x(i, 0) = r.eci;
        x(i, 1) = r.z;
        x(i, 2) = r.eci * r.z;
        const auto j = std::lower_bound(starts.begin(), starts.end(), r.period.start) - starts.begin();
        x(i, 3 + j) = 1.0;
        y(i) = r.growth;
    }
    const OlsResult fit = ols(x, y, Covariance::hc1);

    GrowthModel m;
    m.a1 = fit.coef(0);
    m.a2 = fit.coef(1);
    m.a3 = fit.coef(2);
    m.se_a1 = fit.se(0);
    m.se_a2 = fit.se(1);
    m.se_a3 = fit.se(2);
    for (std::size_t j = 0; j < starts.size(); ++j) {
        m.period_effects[starts[j]] = fit.coef(static_cast<Eigen::Index>(3 + j));
        m.period_effect_se[starts[j]] = fit.se(static_cast<Eigen::Index>(3 + j));
    }
    m.r2 = fit.r2;
    m.n_obs = n;
    m.normalization = panel.normalization;
    m.sample = panel.rows;
    if (starts.size() == 1)
        m.warnings.push_back("single period: the period effect reduces to one intercept");
    return m;
}

double predict_growth(const GrowthModel& model, double eci, double z, std::optional<int> period) {
    const double gamma = model.period_effects.at(resolve_period(model, period));
    return model.a1 * eci + model.a2 * z + model.a3 * eci * z + gamma;
}

double invert_target_eci(const GrowthModel& model, double target_growth, double z, std::optional<int> period,
                         double eps) {
    const double gamma = model.period_effects.at(resolve_period(model, period));
    const double slope = model.a1 + model.a3 * z;
    if (!(std::abs(slope) > eps))
        throw NumericError("growth inversion is singular: a1 + a3*z = " + io::format_double(slope) +
                           " at z = " + io::format_double(z));
    return (target_growth - model.a2 * z - gamma) / slope;
}

double z_score(const GrowthModel& model, double gdp_pc, int year) {
    if (!(gdp_pc > 0.0)) throw DataError("GDP per capita must be positive");
    if (model.normalization.empty()) throw ConfigError("growth model stores no normalization moments");
    auto it = model.normalization.find(year);
    if (it == model.normalization.end()) {
        if (year < model.normalization.rbegin()->first)
            throw DataError("no normalization moments for year " + std::to_string(year));
        it = std::prev(model.normalization.end());
    }
    return (std::log(gdp_pc) - it->second.mean) / it->second.sd;
}

std::string growth_model_csv(const GrowthModel& model) {
    std::ostringstream out;
    out << "term,estimate,robust_se,r2,n_obs\n";
    auto line = [&](const std::string& term, double est, double se) {
        out << term << ',' << io::format_double(est) << ',' << io::format_double(se) << ','
            << io::format_double(model.r2) << ',' << model.n_obs << '\n';
    };
    line("a1_eci", model.a1, model.se_a1);
    line("a2_log_gdp_pc_z", model.a2, model.se_a2);
    line("a3_interaction", model.a3, model.se_a3);
    for (const auto& [year, g] : model.period_effects)
        line("gamma_" + std::to_string(year), g, model.period_effect_se.at(year));
    return out.str();
}

std::string growth_sample_csv(const GrowthModel& model) {
    std::ostringstream out;
    out << "location,period_start,period_end,eci,log_gdp_pc,z,growth\n";
    for (const auto& r : model.sample)
        out << r.location << ',' << r.period.start << ',' << r.period.end << ',' << io::format_double(r.eci) << ','
            << io::format_double(r.log_gdp_pc) << ',' << io::format_double(r.z) << ','
            << io::format_double(r.growth) << '\n';
    return out.str();
}

}  // namespace ecopt
