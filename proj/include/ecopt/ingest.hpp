#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ecopt {

enum class Schema { trade, payroll };
enum class Provenance { raw, smoothed, filtered };

std::string to_string(Schema s);
std::string to_string(Provenance p);
Schema parse_schema(const std::string& s);

struct PanelEntry {
    std::string location;
    std::string activity;
    int year = 0;
    double value = 0.0;  // USD, >= 0
};

// Inclusive year range; empty when first > last.
struct YearRange {
    int first = 0;
    int last = -1;

    bool empty() const noexcept { return first > last; }
    bool contains(int y) const noexcept { return y >= first && y <= last; }
    int span() const noexcept { return empty() ? 0 : last - first + 1; }
    bool operator==(const YearRange&) const = default;
};

// Dense output matrix for a single year. Rows are the locations with at least
// one entry that year, columns the activities; both sorted.
struct YearSlice {
    int year = 0;
    std::vector<std::string> locations;
    std::vector<std::string> activities;
    Eigen::MatrixXd values;
};

// Sparse location x activity x year output tensor. Immutable once built.
class OutputPanel {
public:
    OutputPanel() = default;

    // Sorts entries by (location, activity, year) and validates them. Throws
    // DataError on duplicate keys, negative or non-finite values, ids that
    // contain tabs or newlines, or years outside the declared range.
    OutputPanel(Schema schema, Provenance provenance, std::vector<PanelEntry> entries,
                YearRange years, std::optional<int> smoothing_window = std::nullopt);

    Schema schema() const noexcept { return schema_; }
    Provenance provenance() const noexcept { return provenance_; }
    std::optional<int> smoothing_window() const noexcept { return window_; }
    YearRange years() const noexcept { return years_; }

    const std::vector<PanelEntry>& entries() const noexcept { return entries_; }
    const std::vector<std::string>& locations() const noexcept { return locations_; }
    const std::vector<std::string>& activities() const noexcept { return activities_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    // Years in range that hold at least one entry.
    std::vector<int> populated_years() const;

    YearSlice slice(int year) const;

    // Total value of all entries for a year.
    double year_total(int year) const;

private:
    Schema schema_ = Schema::trade;
    Provenance provenance_ = Provenance::raw;
    std::optional<int> window_;
    YearRange years_;
    std::vector<PanelEntry> entries_;
    std::vector<std::string> locations_;
    std::vector<std::string> activities_;
};

struct MacroRow {
    std::string location;
    int year = 0;
    std::optional<double> gdp_pc_ppp;  // constant 2021 USD
    std::optional<double> population;
};

class MacroSeries {
public:
    MacroSeries() = default;
    explicit MacroSeries(std::vector<MacroRow> rows);

    const std::vector<MacroRow>& rows() const noexcept { return rows_; }
    const MacroRow* find(const std::string& location, int year) const;

private:
    std::vector<MacroRow> rows_;  // sorted by (location, year)
};

struct FilterRules {
    double min_location_total = 0.0;
    double min_population = 0.0;  // only applied when a MacroSeries is supplied
    double min_activity_total = 0.0;

    // Thresholds used for the trade and payroll datasets.
    static FilterRules defaults(Schema schema);
};

// Reads {"min_location_total": .., "min_population": .., "min_activity_total": ..}.
// Missing keys keep their zero default.
FilterRules parse_filter_rules(const std::string& json_text);
FilterRules load_filter_rules(const std::filesystem::path& path);

OutputPanel load_panel_csv(const std::filesystem::path& path, Schema schema);
OutputPanel parse_panel_csv(const std::string& text, Schema schema);
MacroSeries load_macro_csv(const std::filesystem::path& path);
MacroSeries parse_macro_csv(const std::string& text);

// value(c,p,y) = mean of raw values over [y-window+1, y], absent cells count
// as zero. Only years with a full window survive.
OutputPanel smooth_moving_average(const OutputPanel& panel, int window);

// Per-year location and activity thresholds, iterated to a fixed point so a
// second application changes nothing.
OutputPanel apply_filters(const OutputPanel& panel, const MacroSeries* macro, const FilterRules& rules);

std::string serialize_panel(const OutputPanel& panel);
OutputPanel deserialize_panel(const std::string& text);
void save_panel(const OutputPanel& panel, const std::filesystem::path& path);
OutputPanel load_saved_panel(const std::filesystem::path& path);

}  // namespace ecopt
