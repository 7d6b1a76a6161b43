#pragma once

#include "ecopt/complexity.hpp"
#include "ecopt/forecast.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace ecopt {

enum class Pricing { future_pci, current_pci };

std::string to_string(Pricing p);

// An activity the focal location could enter: M(t) = 0 and M_pred = 0.
struct Candidate {
    Eigen::Index activity = 0;  // column in the base-year snapshot
    std::string id;
    double w = 0.0;             // added RCA needed at the steppingstone year
    double pci = 0.0;           // complexity used to price the activity
    double rca = 0.0;           // RCA(t)
    double omega = 0.0;
    double omega_rel = 0.0;
};

// An activity the focal location is predicted to hold without any effort.
struct BaselineActivity {
    Eigen::Index activity = 0;
    std::string id;
    double pci = 0.0;
};

struct EffortMatrix {
    std::string focal;
    Eigen::Index focal_index = 0;
    int base_year = 0;
    int horizon_year = 0;
    Pricing pricing = Pricing::future_pci;
    std::vector<Candidate> candidates;       // sorted by activity
    std::vector<BaselineActivity> baseline;  // sorted by activity
    double eci_baseline = 0.0;               // NaN when the baseline is empty
    std::vector<std::string> unpriced;       // skipped: no complexity available
};

// Required added RCA: solves the steppingstone model for the W that puts the
// predicted RCA at the horizon exactly at 1. Not clamped.
double required_effort(const SteppingstoneModel& entry, double rca, double omega, double omega_rel);

// r_hat at the horizon when RCA(t) + w is realized at the steppingstone.
double predicted_with_effort(const SteppingstoneModel& entry, double rca, double w, double omega, double omega_rel);

// Throws ConfigError when entry.b1 <= 0 and DataError when the focal location
// is unknown or a candidate's effort contradicts the prediction.
EffortMatrix compute_effort(const std::string& focal, const SteppingstoneModel& entry,
                            const SpecializationSnapshot& snapshot, const RelatednessField& relatedness,
                            const FuturePrediction& prediction);

// Same, but prices activities with the supplied complexity vector (e.g. current PCI).
EffortMatrix compute_effort(const std::string& focal, const SteppingstoneModel& entry,
                            const SpecializationSnapshot& snapshot, const RelatednessField& relatedness,
                            const FuturePrediction& prediction, const Eigen::VectorXd& pricing_pci,
                            Pricing pricing);

enum class Method { optimal, benchmark, brute_force };

std::string to_string(Method m);

struct Selection {
    Eigen::Index activity = 0;
    std::string id;
    double w = 0.0;
    double pci = 0.0;
};

struct Portfolio {
    std::string focal;
    double target_eci = 0.0;
    std::vector<Selection> selected;  // in inclusion order
    double achieved_eci = 0.0;
    double total_effort = 0.0;
    bool feasible = false;
    Method method = Method::optimal;
};

// ECI of baseline plus the candidates at the given positions (indices into
// effort.candidates, ascending). Sums in activity order, so the value equals
// eci_of_row on the corresponding row.
double achieved_eci(const EffortMatrix& effort, std::span<const std::size_t> positions);

// The two equivalent forms of the target constraint.
bool ratio_constraint_holds(std::span<const double> baseline_pci, std::span<const double> selected_pci,
                            double target);
bool linear_constraint_holds(std::span<const double> baseline_pci, std::span<const double> selected_pci,
                             double target);

// Minimum total effort set of candidates that lifts the focal ECI to the
// target. Ties go to fewer activities, then the lexicographically smallest id
// list. When the target cannot be reached, returns feasible = false with the
// set that maximizes ECI.
Portfolio optimize_portfolio(const EffortMatrix& effort, double target_eci);

inline constexpr std::size_t kBruteForceCap = 22;

// Exhaustive enumeration with the same objective and tie-break.
Portfolio brute_force_portfolio(const EffortMatrix& effort, double target_eci);

// Ranks candidates by min-max normalized omega times normalized pci and adds
// them in order until the target is met.
Portfolio benchmark_portfolio(const EffortMatrix& effort, double target_eci);

// First-order export volume needed for RCA = 1 in each selected activity,
// holding year-t totals fixed.
double added_volume(const Portfolio& portfolio, const SpecializationSnapshot& snapshot);

std::string portfolio_csv(const Portfolio& portfolio, const EffortMatrix& effort);
std::string effort_diagram_csv(const EffortMatrix& effort, const Portfolio& optimal, const Portfolio* benchmark);

}  // namespace ecopt
