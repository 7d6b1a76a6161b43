#pragma once

#include "ecopt/complexity.hpp"
#include "ecopt/ingest.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ecopt {

enum class Regime { entry, exit };

std::string to_string(Regime r);
Regime parse_regime(const std::string& s);

// r = log(RCA + 1)
inline double log_rca(double rca) { return std::log1p(rca); }

// Snapshot and relatedness for one year of a filtered panel.
struct YearState {
    SpecializationSnapshot snapshot;
    RelatednessField relatedness;
};

using YearStates = std::map<int, YearState>;

YearStates build_year_states(const OutputPanel& panel);
YearState build_year_state(const OutputPanel& panel, int year);

// One (location, activity) observation of the steppingstone regression.
// Indices refer to RegressionRows::locations / activities.
struct RegressionRow {
    std::size_t location = 0;
    std::size_t activity = 0;
    double y = 0.0;   // r(t + delta_t)
    double x1 = 0.0;  // r(t + tau)
    double x2 = 0.0;  // r(t)
    double x3 = 0.0;  // omega(t)
    double x4 = 0.0;  // relative omega(t)
};

struct RegressionRows {
    Regime regime = Regime::entry;
    int start_year = 0;
    int tau = 0;
    int delta_t = 0;
    std::vector<std::string> locations;
    std::vector<std::string> activities;
    std::vector<RegressionRow> rows;  // sorted by (location, activity)
};

// Cells whose location and activity exist in all three years; regime chosen by
// RCA at t (entry: RCA < 1, exit: RCA >= 1).
RegressionRows assemble_rows(const YearStates& states, int t, int tau, int delta_t, Regime regime);

inline constexpr std::size_t kSteppingstoneCoefficients = 5;

// Coefficients are ordered b0 (intercept), b1 (r(t+tau)), b2 (r(t)),
// b3 (omega), b4 (relative omega).
struct SteppingstoneModel {
    Regime regime = Regime::entry;
    int delta_t = 0;
    int tau = 0;
    std::array<double, kSteppingstoneCoefficients> coef{};
    std::array<double, kSteppingstoneCoefficients> se{};
    std::array<double, kSteppingstoneCoefficients> p_value{};
    double r2 = 0.0;
    double adj_r2 = 0.0;
    long long n_obs = 0;
    std::vector<int> start_years;

    double b0() const { return coef[0]; }
    double b1() const { return coef[1]; }

    // Predicted r(t + delta_t).
    double predict(double r_steppingstone, double r_t, double omega, double omega_rel) const {
        return coef[0] + coef[1] * r_steppingstone + coef[2] * r_t + coef[3] * omega + coef[4] * omega_rel;
    }
};

SteppingstoneModel fit_ols(const RegressionRows& rows);

// Unweighted coefficient-wise mean; n_obs summed, start years merged.
SteppingstoneModel average_models(std::span<const SteppingstoneModel> models);

// Start years t with t, t + tau and t + delta_t all present.
std::vector<int> feasible_start_years(const YearStates& states, int tau, int delta_t);

struct Calibration {
    SteppingstoneModel averaged;
    std::vector<SteppingstoneModel> per_start_year;
};

Calibration calibrate(const YearStates& states, Regime regime, int tau, int delta_t);

struct SweepCell {
    int delta_t = 0;
    int tau = 0;
    SteppingstoneModel entry;
    SteppingstoneModel exit;
};

// Inclusive ranges; only pairs with 0 < tau < delta_t and at least one feasible
// start year are fitted. Throws ConfigError when no pair qualifies.
std::vector<SweepCell> sweep(const YearStates& states, std::pair<int, int> tau_range,
                             std::pair<int, int> delta_t_range);

struct FuturePrediction {
    int base_year = 0;
    int horizon_year = 0;
    std::vector<std::string> locations;
    std::vector<std::string> activities;
    Eigen::MatrixXd r_hat;
    Eigen::MatrixXd m_pred;        // 1 where r_hat >= log 2
    Eigen::VectorXd pci_future;    // NaN for activities nobody is predicted to hold
    Eigen::VectorXd eci_pred;      // NaN for locations with an empty predicted row
    std::vector<Eigen::Index> empty_locations;
    std::vector<Eigen::Index> unpriced_activities;
};

// Applies the regime-matching model to every cell with the steppingstone RCA
// set to RCA(t) and scores the predicted specialization matrix.
FuturePrediction predict_future(const SteppingstoneModel& entry, const SteppingstoneModel& exit,
                                const SpecializationSnapshot& snapshot, const RelatednessField& relatedness);

std::string models_csv(std::span<const SteppingstoneModel> models);
std::vector<SteppingstoneModel> parse_models_csv(const std::string& text);
std::string sweep_csv(std::span<const SweepCell> cells);

}  // namespace ecopt
