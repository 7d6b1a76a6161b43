#pragma once

#include "ecopt/complexity.hpp"
#include "ecopt/effort.hpp"
#include "ecopt/forecast.hpp"
#include "ecopt/growth.hpp"
#include "ecopt/ingest.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ecopt {

// ---- analytics ----

struct QuadraticFit {
    std::array<double, 3> coef{};  // y = c0 + c1 x + c2 x^2
    std::array<double, 3> se{};    // classical; NaN when there are no residual degrees of freedom
    long long n = 0;
};

// Least squares parabola. Throws NumericError with fewer than 3 distinct x.
QuadraticFit quadratic_fit(const std::vector<double>& xs, const std::vector<double>& ys);

struct SequentialEntry {
    std::string id;
    double w = 0.0;
    double pci = 0.0;
    double first_target = 0.0;
    std::size_t first_index = 0;
};

struct SequentialTable {
    std::vector<double> targets;
    std::vector<Portfolio> portfolios;   // one per target
    std::vector<SequentialEntry> entries;  // by first target, then w, then id
};

// Throws ConfigError unless targets are strictly ascending.
SequentialTable sequential_targets(const EffortMatrix& effort, const std::vector<double>& targets);
std::string sequential_csv(const SequentialTable& table);

struct DiagramPoint {
    std::string id;
    double w = 0.0;
    double pci = 0.0;
    bool selected = false;
};

std::vector<DiagramPoint> diagram_points(const EffortMatrix& effort, const Portfolio& portfolio);

// Standalone SVG 1.1 scatter of (w, pci). Selected points are blue circles,
// the rest grey. Throws DataError for empty input.
std::string diagram_svg(const std::vector<DiagramPoint>& points, const std::string& title);
void emit_diagram_svg(const std::vector<DiagramPoint>& points, const std::string& title,
                      const std::filesystem::path& path);

struct PropertyRow {
    std::string location;
    double eci_t = 0.0;
    int diversity_t = 0;
    Method method = Method::optimal;
    double target_eci = 0.0;
    bool feasible = false;
    double mean_rca = 0.0;           // NaN for an empty selection
    double mean_omega_rel = 0.0;     // NaN for an empty selection
    double var_omega_rel = 0.0;      // population variance; NaN for an empty selection
    std::size_t count = 0;
    double total_effort = 0.0;
    double added_volume = 0.0;
};

PropertyRow property_row(const Portfolio& portfolio, const EffortMatrix& effort, const SpecializationSnapshot& snapshot,
                         double eci_t);
std::string property_panel_csv(const std::vector<PropertyRow>& rows);
// Quadratic fits of each series on eci_t per method; series with fewer than
// three distinct x are listed with empty coefficients.
std::string property_fits_csv(const std::vector<PropertyRow>& rows);

// ---- complexity dumps ----

std::string rca_csv(const SpecializationSnapshot& snapshot);
std::string complexity_csv(const SpecializationSnapshot& snapshot, const ComplexityScores& scores);
std::string proximity_csv(const SpecializationSnapshot& snapshot, const Eigen::MatrixXd& phi);

// ---- run configuration ----

// eci_delta is added to the focal location's no-effort ECI under the chosen pricing.
enum class TargetKind { eci_delta, eci, growth };

struct TargetSpec {
    TargetKind kind = TargetKind::eci_delta;
    double value = 0.0;
};

struct RunConfig {
    std::filesystem::path panel;           // CSV in `schema` or a saved panel
    Schema schema = Schema::trade;
    std::optional<std::filesystem::path> macro;
    std::optional<FilterRules> filters;    // nullopt: schema defaults
    bool apply_filters = true;
    int window = 4;
    int delta_t = 10;
    int tau = 5;
    std::optional<int> base_year;          // default: last year in the panel
    TargetSpec target;
    std::vector<std::string> focal;        // empty: every location
    std::filesystem::path output_dir = "out";
    Pricing pricing = Pricing::future_pci;
    bool benchmark = true;
    std::vector<GrowthPeriod> growth_periods;
    std::vector<double> sequential;        // extra ascending targets (absolute ECI)
    std::vector<double> sequential_growth; // extra ascending growth targets
};

// Parses the JSON run config. Relative paths resolve against base_dir. The
// ECOPT_OUTPUT_DIR environment variable overrides output_dir.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_json(const RunConfig& config);

// ---- pipeline ----

// Loads a CSV panel and smooths/filters it, or loads a saved panel as is.
OutputPanel prepare_panel(const RunConfig& config, const MacroSeries* macro);

struct FocalResult {
    std::string location;
    double eci_t = 0.0;
    double eci_pred = 0.0;
    double target_eci = 0.0;
    std::optional<double> z;
    std::optional<double> expected_growth;
    Portfolio optimal;
    std::optional<Portfolio> benchmark;
};

struct RunSummary {
    std::filesystem::path output_dir;
    std::vector<std::string> written;    // relative file names, sorted
    std::vector<FocalResult> focal;
    std::vector<std::string> infeasible; // focal locations whose target was not reached
    std::vector<std::string> skipped;    // focal locations skipped, with reasons
    std::vector<std::string> warnings;
};

// Runs ingest through report and writes every artifact. Module errors are
// rethrown as StageError naming the stage.
RunSummary run_pipeline(const RunConfig& config);

}  // namespace ecopt
