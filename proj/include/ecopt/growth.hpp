#pragma once

#include "ecopt/complexity.hpp"
#include "ecopt/ingest.hpp"

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ecopt {

// ECI by year, then by location id.
using EciHistory = std::map<int, std::unordered_map<std::string, double>>;

struct GrowthPeriod {
    int start = 0;
    int end = 0;
    bool operator==(const GrowthPeriod&) const = default;
};

struct GrowthRow {
    std::string location;
    GrowthPeriod period;
    double eci = 0.0;
    double log_gdp_pc = 0.0;  // log GDPpc at the period start
    double z = 0.0;           // log_gdp_pc standardized across the period sample
    double growth = 0.0;      // annualized log growth, percent per year
};

struct GrowthPanel {
    std::vector<GrowthPeriod> periods;
    std::vector<GrowthRow> rows;                   // sorted by (period, location)
    std::map<int, Standardization> normalization;  // log GDPpc moments by start year
};

// One row per location with ECI at the period start and GDPpc at both ends.
// Throws DataError when a period keeps fewer than two locations, ConfigError
// for empty or malformed periods.
GrowthPanel assemble_growth_panel(const MacroSeries& macro, const EciHistory& eci_history,
                                  const std::vector<GrowthPeriod>& periods);

struct GrowthModel {
    double a1 = 0.0;  // ECI
    double a2 = 0.0;  // z-scored log initial GDPpc
    double a3 = 0.0;  // interaction
    double se_a1 = 0.0, se_a2 = 0.0, se_a3 = 0.0;  // HC1
    std::map<int, double> period_effects;           // by period start year
    std::map<int, double> period_effect_se;
    double r2 = 0.0;
    long long n_obs = 0;
    std::map<int, Standardization> normalization;
    std::vector<GrowthRow> sample;
    std::vector<std::string> warnings;

    int latest_period() const;
};

// OLS of growth on [eci, z, eci*z, period dummies] without a separate
// intercept, with HC1 standard errors.
GrowthModel fit_growth_model(const GrowthPanel& panel);

// a1 eci + a2 z + a3 eci z + gamma_period; the latest period by default.
double predict_growth(const GrowthModel& model, double eci, double z, std::optional<int> period = std::nullopt);

inline constexpr double kSlopeEpsilon = 1e-6;

// ECI at which predict_growth equals target_growth. Throws NumericError when
// |a1 + a3 z| <= eps.
double invert_target_eci(const GrowthModel& model, double target_growth, double z,
                         std::optional<int> period = std::nullopt, double eps = kSlopeEpsilon);

// z-score of log GDPpc with the moments stored for `year`, or the latest
// stored year when `year` is later than every period start.
double z_score(const GrowthModel& model, double gdp_pc, int year);

std::string growth_model_csv(const GrowthModel& model);
std::string growth_sample_csv(const GrowthModel& model);

}  // namespace ecopt
