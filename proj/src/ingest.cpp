#include "ecopt/ingest.hpp"

#include "ecopt/error.hpp"
#include "ecopt/text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace ecopt {

namespace {

constexpr const char* kPanelMagic = "ecopt-panel";
constexpr int kPanelFormatVersion = 1;

bool valid_id(const std::string& id) {
    return !id.empty() && id.find_first_of("\t\n\r") == std::string::npos;
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::string line_ref(std::size_t line) { return "line " + std::to_string(line); }

}  // namespace

std::string to_string(Schema s) { return s == Schema::trade ? "trade" : "payroll"; }

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::raw: return "raw";
        case Provenance::smoothed: return "smoothed";
        case Provenance::filtered: return "filtered";
    }
    return "raw";
}

Schema parse_schema(const std::string& s) {
    if (s == "trade") return Schema::trade;
    if (s == "payroll") return Schema::payroll;
    throw ConfigError("unknown schema '" + s + "' (expected trade or payroll)");
}

namespace {

Provenance parse_provenance(const std::string& s) {
    if (s == "raw") return Provenance::raw;
    if (s == "smoothed") return Provenance::smoothed;
    if (s == "filtered") return Provenance::filtered;
    throw DataError("unknown provenance '" + s + "'");
}

}  // namespace

OutputPanel::OutputPanel(Schema schema, Provenance provenance, std::vector<PanelEntry> entries,
                         YearRange years, std::optional<int> smoothing_window)
    : schema_(schema), provenance_(provenance), window_(smoothing_window), years_(years),
      entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const PanelEntry& a, const PanelEntry& b) {
        return std::tie(a.location, a.activity, a.year) < std::tie(b.location, b.activity, b.year);
    });
    std::vector<std::string> locs, acts;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (!valid_id(e.location) || !valid_id(e.activity))
            throw DataError("invalid location/activity id in panel entry");
        if (!std::isfinite(e.value) || e.value < 0.0)
            throw DataError("negative or non-finite value for (" + e.location + ", " + e.activity + ", " +
                            std::to_string(e.year) + ")");
        if (!years_.contains(e.year))
            throw DataError("year " + std::to_string(e.year) + " outside panel range");
        if (i > 0) {
            const auto& p = entries_[i - 1];
            if (p.location == e.location && p.activity == e.activity && p.year == e.year)
                throw DataError("duplicate key (" + e.location + ", " + e.activity + ", " +
                                std::to_string(e.year) + ")");
        }
        locs.push_back(e.location);
        acts.push_back(e.activity);
    }
    locations_ = sorted_unique(std::move(locs));
    activities_ = sorted_unique(std::move(acts));
}

std::vector<int> OutputPanel::populated_years() const {
    std::set<int> ys;
    for (const auto& e : entries_) ys.insert(e.year);
    return {ys.begin(), ys.end()};
}

YearSlice OutputPanel::slice(int year) const {
    YearSlice s;
    s.year = year;
    std::vector<const PanelEntry*> hits;
    for (const auto& e : entries_)
        if (e.year == year) hits.push_back(&e);
    if (hits.empty()) throw DataError("year " + std::to_string(year) + " has no entries in panel");

    std::vector<std::string> locs, acts;
    for (auto* e : hits) {
        locs.push_back(e->location);
        acts.push_back(e->activity);
    }
    s.locations = sorted_unique(std::move(locs));
    s.activities = sorted_unique(std::move(acts));

    std::unordered_map<std::string, Eigen::Index> act_pos;
    for (std::size_t j = 0; j < s.activities.size(); ++j) act_pos[s.activities[j]] = static_cast<Eigen::Index>(j);
    s.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.locations.size()),
                                     static_cast<Eigen::Index>(s.activities.size()));
    // Entries are sorted by location first, so rows fill in order.
    Eigen::Index row = -1;
    const std::string* current = nullptr;
    for (auto* e : hits) {
        if (!current || *current != e->location) {
            ++row;
            current = &e->location;
        }
        s.values(row, act_pos.at(e->activity)) = e->value;
    }
    return s;
}

double OutputPanel::year_total(int year) const {
    double total = 0.0;
    for (const auto& e : entries_)
        if (e.year == year) total += e.value;
    return total;
}

MacroSeries::MacroSeries(std::vector<MacroRow> rows) : rows_(std::move(rows)) {
    std::sort(rows_.begin(), rows_.end(), [](const MacroRow& a, const MacroRow& b) {
        return std::tie(a.location, a.year) < std::tie(b.location, b.year);
    });
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto& r = rows_[i];
        if (r.gdp_pc_ppp && !(*r.gdp_pc_ppp > 0.0 && std::isfinite(*r.gdp_pc_ppp)))
            throw DataError("gdp_pc_ppp must be positive for (" + r.location + ", " + std::to_string(r.year) + ")");
        if (r.population && !(*r.population > 0.0 && std::isfinite(*r.population)))
            throw DataError("population must be positive for (" + r.location + ", " + std::to_string(r.year) + ")");
        if (i > 0 && rows_[i - 1].location == r.location && rows_[i - 1].year == r.year)
            throw DataError("duplicate macro key (" + r.location + ", " + std::to_string(r.year) + ")");
    }
}

const MacroRow* MacroSeries::find(const std::string& location, int year) const {
    auto it = std::lower_bound(rows_.begin(), rows_.end(), std::tie(location, year),
                               [](const MacroRow& r, const std::tuple<const std::string&, int&>& key) {
                                   return std::tie(r.location, r.year) < key;
                               });
    if (it == rows_.end() || it->location != location || it->year != year) return nullptr;
    return &*it;
}

FilterRules FilterRules::defaults(Schema schema) {
    FilterRules r;
    if (schema == Schema::trade) {
        r.min_location_total = 1e9;
        r.min_population = 1e6;
        r.min_activity_total = 5e5;
    } else {
        r.min_location_total = 1e5;
        r.min_population = 0.0;
        r.min_activity_total = 1.5e5;
    }
    return r;
}

FilterRules parse_filter_rules(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("filter rules: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("filter rules must be a JSON object");
    FilterRules r;
    auto read = [&](const char* key, double& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) throw ConfigError(std::string("filter rule '") + key + "' must be a number");
        out = j[key].get<double>();
        if (!(out >= 0.0)) throw ConfigError(std::string("filter rule '") + key + "' must be >= 0");
    };
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "min_location_total" && it.key() != "min_population" && it.key() != "min_activity_total")
            throw ConfigError("unknown filter rule '" + it.key() + "'");
    }
    read("min_location_total", r.min_location_total);
    read("min_population", r.min_population);
    read("min_activity_total", r.min_activity_total);
    return r;
}

FilterRules load_filter_rules(const std::filesystem::path& path) {
    return parse_filter_rules(io::read_file(path));
}

OutputPanel parse_panel_csv(const std::string& text, Schema schema) {
    const std::vector<std::string> expected = schema == Schema::trade
        ? std::vector<std::string>{"country_id", "product_hs4", "year", "export_value"}
        : std::vector<std::string>{"msa_id", "naics", "year", "payroll"};

    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::vector<PanelEntry> entries;
    int ymin = 0, ymax = -1;
    std::map<std::tuple<std::string, std::string, int>, std::size_t> seen;

    while (std::getline(in, line)) {
        ++lineno;
        if (io::trim(line).empty()) continue;
        auto fields = io::split_csv(line);
        if (!have_header) {
            for (auto& f : fields) f = io::trim(f);
            if (fields != expected)
                throw DataError(line_ref(lineno) + ": header does not match " + to_string(schema) +
                                " schema (expected " + io::join(expected, ",") + ")");
            have_header = true;
            continue;
        }
        if (fields.size() != 4)
            throw DataError(line_ref(lineno) + ": expected 4 fields, got " + std::to_string(fields.size()));
        PanelEntry e;
        e.location = io::trim(fields[0]);
        e.activity = io::trim(fields[1]);
        if (!valid_id(e.location) || !valid_id(e.activity))
            throw DataError(line_ref(lineno) + ": missing or invalid id");
        auto year = io::parse_int(fields[2]);
        if (!year) throw DataError(line_ref(lineno) + ": invalid year '" + fields[2] + "'");
        e.year = static_cast<int>(*year);
        auto value = io::parse_double(fields[3]);
        if (!value) throw DataError(line_ref(lineno) + ": missing or invalid value '" + fields[3] + "'");
        if (!std::isfinite(*value) || *value < 0.0)
            throw DataError(line_ref(lineno) + ": negative or non-finite value '" + io::trim(fields[3]) + "'");
        e.value = *value;
        auto key = std::make_tuple(e.location, e.activity, e.year);
        if (auto it = seen.find(key); it != seen.end())
            throw DataError(line_ref(lineno) + ": duplicate key (" + e.location + ", " + e.activity + ", " +
                            std::to_string(e.year) + "), first seen on " + line_ref(it->second));
        seen.emplace(std::move(key), lineno);
        if (entries.empty()) {
            ymin = ymax = e.year;
        } else {
            ymin = std::min(ymin, e.year);
            ymax = std::max(ymax, e.year);
        }
        entries.push_back(std::move(e));
    }
    if (!have_header) throw DataError("empty file");
    if (entries.empty()) throw DataError("file has a header but no data rows");
    return OutputPanel(schema, Provenance::raw, std::move(entries), YearRange{ymin, ymax});
}

OutputPanel load_panel_csv(const std::filesystem::path& path, Schema schema) {
    try {
        return parse_panel_csv(io::read_file(path), schema);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

MacroSeries parse_macro_csv(const std::string& text) {
    const std::vector<std::string> expected{"country_id", "year", "gdp_pc_ppp_const2021", "population"};
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::vector<MacroRow> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (io::trim(line).empty()) continue;
        auto fields = io::split_csv(line);
        if (!have_header) {
            for (auto& f : fields) f = io::trim(f);
            if (fields != expected)
                throw DataError(line_ref(lineno) + ": macro header must be " + io::join(expected, ","));
            have_header = true;
            continue;
        }
        if (fields.size() != 4)
            throw DataError(line_ref(lineno) + ": expected 4 fields, got " + std::to_string(fields.size()));
        MacroRow r;
        r.location = io::trim(fields[0]);
        if (!valid_id(r.location)) throw DataError(line_ref(lineno) + ": missing country id");
        auto year = io::parse_int(fields[1]);
        if (!year) throw DataError(line_ref(lineno) + ": invalid year");
        r.year = static_cast<int>(*year);
        for (int k : {2, 3}) {
            auto& out = k == 2 ? r.gdp_pc_ppp : r.population;
            if (io::trim(fields[static_cast<std::size_t>(k)]).empty()) continue;
            auto v = io::parse_double(fields[static_cast<std::size_t>(k)]);
            if (!v || !(*v > 0.0) || !std::isfinite(*v))
                throw DataError(line_ref(lineno) + ": " + expected[static_cast<std::size_t>(k)] + " must be positive");
            out = *v;
        }
        rows.push_back(std::move(r));
    }
    if (!have_header) throw DataError("empty macro file");
    return MacroSeries(std::move(rows));
}

MacroSeries load_macro_csv(const std::filesystem::path& path) {
    try {
        return parse_macro_csv(io::read_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

OutputPanel smooth_moving_average(const OutputPanel& panel, int window) {
    if (window < 1) throw ConfigError("smoothing window must be >= 1");
    if (panel.provenance() != Provenance::raw) throw DataError("smoothing expects a raw panel");
    const YearRange in = panel.years();
    if (window > in.span())
        throw DataError("smoothing window " + std::to_string(window) + " exceeds the panel's year span " +
                        std::to_string(in.span()));
    const YearRange out{in.first + window - 1, in.last};

    std::vector<PanelEntry> result;
    const auto& es = panel.entries();
    std::vector<double> series(static_cast<std::size_t>(in.span()));
    std::size_t i = 0;
    while (i < es.size()) {
        std::size_t j = i;
        std::fill(series.begin(), series.end(), 0.0);
        while (j < es.size() && es[j].location == es[i].location && es[j].activity == es[i].activity) {
            series[static_cast<std::size_t>(es[j].year - in.first)] = es[j].value;
            ++j;
        }
        for (int y = out.first; y <= out.last; ++y) {
            double sum = 0.0;
            for (int k = y - window + 1; k <= y; ++k) sum += series[static_cast<std::size_t>(k - in.first)];
            if (sum > 0.0) result.push_back({es[i].location, es[i].activity, y, sum / window});
        }
        i = j;
    }
    return OutputPanel(panel.schema(), Provenance::smoothed, std::move(result), out, window);
}

OutputPanel apply_filters(const OutputPanel& panel, const MacroSeries* macro, const FilterRules& rules) {
    if (panel.provenance() == Provenance::raw) throw DataError("filters expect a smoothed panel");
    const bool population_rule = macro != nullptr && rules.min_population > 0.0;

    // (location, year) and (activity, year) pairs that survive.
    std::set<std::pair<std::string, int>> keep_loc, keep_act;
    for (int year : panel.populated_years()) {
        YearSlice s = panel.slice(year);
        const auto nl = s.values.rows(), na = s.values.cols();
        std::vector<bool> loc_on(static_cast<std::size_t>(nl), true), act_on(static_cast<std::size_t>(na), true);

        if (population_rule) {
            for (Eigen::Index c = 0; c < nl; ++c) {
                const auto& id = s.locations[static_cast<std::size_t>(c)];
                const MacroRow* row = macro->find(id, year);
                if (!row || !row->population)
                    throw DataError("macro series has no population for (" + id + ", " + std::to_string(year) + ")");
                if (*row->population < rules.min_population) loc_on[static_cast<std::size_t>(c)] = false;
            }
        }

        bool changed = true;
        while (changed) {
            changed = false;
            for (Eigen::Index c = 0; c < nl; ++c) {
                if (!loc_on[static_cast<std::size_t>(c)]) continue;
                double total = 0.0;
                for (Eigen::Index p = 0; p < na; ++p)
                    if (act_on[static_cast<std::size_t>(p)]) total += s.values(c, p);
                if (total < rules.min_location_total) {
                    loc_on[static_cast<std::size_t>(c)] = false;
                    changed = true;
                }
            }
            for (Eigen::Index p = 0; p < na; ++p) {
                if (!act_on[static_cast<std::size_t>(p)]) continue;
                double total = 0.0;
                for (Eigen::Index c = 0; c < nl; ++c)
                    if (loc_on[static_cast<std::size_t>(c)]) total += s.values(c, p);
                if (total < rules.min_activity_total) {
                    act_on[static_cast<std::size_t>(p)] = false;
                    changed = true;
                }
            }
        }
        for (Eigen::Index c = 0; c < nl; ++c)
            if (loc_on[static_cast<std::size_t>(c)]) keep_loc.emplace(s.locations[static_cast<std::size_t>(c)], year);
        for (Eigen::Index p = 0; p < na; ++p)
            if (act_on[static_cast<std::size_t>(p)]) keep_act.emplace(s.activities[static_cast<std::size_t>(p)], year);
    }

    std::vector<PanelEntry> kept;
    for (const auto& e : panel.entries()) {
        if (keep_loc.count({e.location, e.year}) && keep_act.count({e.activity, e.year})) kept.push_back(e);
    }
    return OutputPanel(panel.schema(), Provenance::filtered, std::move(kept), panel.years(),
                       panel.smoothing_window());
}

std::string serialize_panel(const OutputPanel& panel) {
    std::string body;
    body += std::string(kPanelMagic) + " " + std::to_string(kPanelFormatVersion) + "\n";
    body += "schema " + to_string(panel.schema()) + "\n";
    body += "provenance " + to_string(panel.provenance()) + "\n";
    body += "window " + (panel.smoothing_window() ? std::to_string(*panel.smoothing_window()) : std::string("-")) + "\n";
    if (panel.years().empty())
        body += "years - -\n";
    else
        body += "years " + std::to_string(panel.years().first) + " " + std::to_string(panel.years().last) + "\n";
    body += "entries " + std::to_string(panel.size()) + "\n";
    body += "location\tactivity\tyear\tvalue\n";
    for (const auto& e : panel.entries()) {
        body += e.location;
        body += '\t';
        body += e.activity;
        body += '\t';
        body += std::to_string(e.year);
        body += '\t';
        body += io::format_double(e.value);
        body += '\n';
    }
    body += "end " + io::hex64(io::fnv1a64(body)) + "\n";
    return body;
}

OutputPanel deserialize_panel(const std::string& text) {
    {
        std::istringstream hs(text.substr(0, text.find('\n')));
        std::string magic;
        int version = 0;
        hs >> magic >> version;
        if (magic != kPanelMagic) throw DataError("not a saved panel file");
        if (version != kPanelFormatVersion)
            throw DataError("saved panel format version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kPanelFormatVersion) + ")");
    }
    auto end_pos = text.rfind("end ");
    if (end_pos == std::string::npos || (end_pos != 0 && text[end_pos - 1] != '\n'))
        throw DataError("saved panel is truncated (no end marker)");
    const std::string body = text.substr(0, end_pos);
    const std::string trailer = io::trim(text.substr(end_pos + 4));
    if (trailer != io::hex64(io::fnv1a64(body))) throw DataError("saved panel failed its integrity check");

    std::istringstream in(body);
    std::string line;
    auto next = [&](const char* what) {
        if (!std::getline(in, line)) throw DataError(std::string("saved panel is missing ") + what);
        return line;
    };
    auto header_value = [&](const char* key) {
        std::string l = next(key);
        std::string prefix = std::string(key) + " ";
        if (l.rfind(prefix, 0) != 0) throw DataError(std::string("saved panel: expected '") + key + "' line");
        return l.substr(prefix.size());
    };

    next("header");
    Schema schema = parse_schema(header_value("schema"));
    Provenance prov = parse_provenance(header_value("provenance"));
    std::string w = header_value("window");
    std::optional<int> window;
    if (w != "-") {
        auto v = io::parse_int(w);
        if (!v) throw DataError("saved panel: bad window");
        window = static_cast<int>(*v);
    }
    YearRange years;
    {
        std::istringstream ys(header_value("years"));
        std::string a, b;
        ys >> a >> b;
        if (a != "-") {
            auto fa = io::parse_int(a), fb = io::parse_int(b);
            if (!fa || !fb) throw DataError("saved panel: bad year range");
            years = {static_cast<int>(*fa), static_cast<int>(*fb)};
        }
    }
    auto n = io::parse_int(header_value("entries"));
    if (!n || *n < 0) throw DataError("saved panel: bad entry count");
    next("column header");

    std::vector<PanelEntry> entries;
    entries.reserve(static_cast<std::size_t>(*n));
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::size_t start = 0;
        for (;;) {
            auto tab = line.find('\t', start);
            f.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (f.size() != 4) throw DataError("saved panel: malformed entry line");
        auto y = io::parse_int(f[2]);
        auto v = io::parse_double(f[3]);
        if (!y || !v) throw DataError("saved panel: malformed entry line");
        entries.push_back({f[0], f[1], static_cast<int>(*y), *v});
    }
    if (static_cast<long long>(entries.size()) != *n)
        throw DataError("saved panel: expected " + std::to_string(*n) + " entries, found " +
                        std::to_string(entries.size()));
    return OutputPanel(schema, prov, std::move(entries), years, window);
}

void save_panel(const OutputPanel& panel, const std::filesystem::path& path) {
    io::write_file(path, serialize_panel(panel));
}

OutputPanel load_saved_panel(const std::filesystem::path& path) {
    try {
        return deserialize_panel(io::read_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace ecopt
