#include "ecopt/error.hpp"
#include "ecopt/report.hpp"
#include "ecopt/text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace ecopt {

namespace {

using nlohmann::json;

constexpr const char* kManifestVersion = "1";

TargetKind parse_target_kind(const std::string& s) {
    if (s == "eci_delta") return TargetKind::eci_delta;
    if (s == "eci") return TargetKind::eci;
    if (s == "growth") return TargetKind::growth;
    throw ConfigError("target.kind must be eci_delta, eci or growth, got '" + s + "'");
}

std::string to_string(TargetKind k) {
    switch (k) {
        case TargetKind::eci_delta: return "eci_delta";
        case TargetKind::eci: return "eci";
        case TargetKind::growth: return "growth";
    }
    return "eci_delta";
}

template <class T>
T get_as(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

std::vector<double> ascending_list(const json& j, const char* key) {
    std::vector<double> v = get_as<std::vector<double>>(j, key);
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) throw ConfigError(std::string(key) + " must be strictly ascending");
    return v;
}

std::string safe_name(const std::string& id) {
    std::string out = id;
    for (char& ch : out)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
    return out;
}

// Runs fn, rethrowing library errors tagged with the stage name.
template <class F>
auto in_stage(const std::string& stage, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e, exit_code_for(e));
    }
}

class OutputSink {
public:
    explicit OutputSink(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& contents) {
        io::write_file(dir_ / name, contents);
        hashes_[name] = io::hex64(io::fnv1a64(contents));
    }
    const std::map<std::string, std::string>& hashes() const { return hashes_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::map<std::string, std::string> hashes_;
};

double latest_gdp(const MacroSeries& macro, const std::string& location, int year) {
    const MacroRow* best = nullptr;
    for (const auto& r : macro.rows())
        if (r.location == location && r.year <= year && r.gdp_pc_ppp) best = &r;
    if (!best) throw DataError("no GDP per capita for " + location + " at or before " + std::to_string(year));
    return *best->gdp_pc_ppp;
}

std::string focal_summary_csv(const std::vector<FocalResult>& results) {
    auto num = [](double x) { return std::isnan(x) ? std::string() : io::format_double(x); };
    std::ostringstream out;
    out << "location,eci_t,eci_pred,z,expected_growth,target_eci,optimal_achieved_eci,optimal_total_effort,"
           "optimal_count,optimal_feasible,benchmark_achieved_eci,benchmark_total_effort,benchmark_count,"
           "benchmark_feasible\n";
    for (const auto& r : results) {
        out << r.location << ',' << num(r.eci_t) << ',' << num(r.eci_pred) << ','
            << (r.z ? num(*r.z) : "") << ',' << (r.expected_growth ? num(*r.expected_growth) : "") << ','
            << num(r.target_eci) << ',' << num(r.optimal.achieved_eci) << ',' << num(r.optimal.total_effort) << ','
            << r.optimal.selected.size() << ',' << (r.optimal.feasible ? 1 : 0);
        if (r.benchmark)
            out << ',' << num(r.benchmark->achieved_eci) << ',' << num(r.benchmark->total_effort) << ','
                << r.benchmark->selected.size() << ',' << (r.benchmark->feasible ? 1 : 0);
        else
            out << ",,,,";
        out << '\n';
    }
    return out.str();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    static const std::set<std::string> known = {
        "panel", "schema", "macro", "filters", "window", "delta_t", "tau", "base_year", "target", "focal",
        "output_dir", "pricing", "benchmark", "growth_periods", "sequential_targets", "sequential_growth"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError("unknown run config field '" + key + "'");

    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    RunConfig c;
    if (!j.contains("panel")) throw ConfigError("run config needs 'panel'");
    c.panel = resolve(get_as<std::string>(j, "panel"));
    if (j.contains("schema")) {
        try {
            c.schema = parse_schema(get_as<std::string>(j, "schema"));
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    if (j.contains("macro") && !j["macro"].is_null()) c.macro = resolve(get_as<std::string>(j, "macro"));
    if (j.contains("filters")) {
        const json& f = j["filters"];
        if (f.is_string()) {
            const auto s = f.get<std::string>();
            if (s == "none") c.apply_filters = false;
            else if (s != "defaults") throw ConfigError("filters must be an object, \"defaults\" or \"none\"");
        } else if (f.is_object()) {
            c.filters = parse_filter_rules(f.dump());
        } else {
            throw ConfigError("filters must be an object, \"defaults\" or \"none\"");
        }
    }
    if (j.contains("window")) c.window = get_as<int>(j, "window");
    if (j.contains("delta_t")) c.delta_t = get_as<int>(j, "delta_t");
    if (j.contains("tau")) c.tau = get_as<int>(j, "tau");
    if (j.contains("base_year") && !j["base_year"].is_null()) c.base_year = get_as<int>(j, "base_year");
    if (c.window < 1) throw ConfigError("window must be at least 1");
    if (!(c.tau > 0 && c.tau < c.delta_t)) throw ConfigError("need 0 < tau < delta_t");

    if (!j.contains("target")) throw ConfigError("run config needs exactly one 'target'");
    {
        const json& t = j["target"];
        if (!t.is_object() || t.size() != 2 || !t.contains("kind") || !t.contains("value"))
            throw ConfigError("target must be {\"kind\": ..., \"value\": ...}");
        c.target.kind = parse_target_kind(get_as<std::string>(t, "kind"));
        c.target.value = get_as<double>(t, "value");
        if (!std::isfinite(c.target.value)) throw ConfigError("target value must be finite");
    }
    if (j.contains("focal")) {
        const json& f = j["focal"];
        if (f.is_string()) {
            if (f.get<std::string>() != "all") throw ConfigError("focal must be a list of ids or \"all\"");
        } else {
            c.focal = get_as<std::vector<std::string>>(j, "focal");
            std::sort(c.focal.begin(), c.focal.end());
            c.focal.erase(std::unique(c.focal.begin(), c.focal.end()), c.focal.end());
        }
    }
    if (j.contains("output_dir")) c.output_dir = resolve(get_as<std::string>(j, "output_dir"));
    else c.output_dir = base_dir / "out";
    if (const char* env = std::getenv("ECOPT_OUTPUT_DIR"); env && *env) c.output_dir = env;
    if (j.contains("pricing")) {
        const auto p = get_as<std::string>(j, "pricing");
        if (p == "future_pci") c.pricing = Pricing::future_pci;
        else if (p == "current_pci") c.pricing = Pricing::current_pci;
        else throw ConfigError("pricing must be future_pci or current_pci");
    }
    if (j.contains("benchmark")) c.benchmark = get_as<bool>(j, "benchmark");
    if (j.contains("growth_periods")) {
        for (const auto& pair : get_as<std::vector<std::vector<int>>>(j, "growth_periods")) {
            if (pair.size() != 2) throw ConfigError("growth_periods entries must be [start, end]");
            if (pair[1] <= pair[0]) throw ConfigError("growth period end must follow its start");
            c.growth_periods.push_back({pair[0], pair[1]});
        }
    }
    if (j.contains("sequential_targets")) c.sequential = ascending_list(j, "sequential_targets");
    if (j.contains("sequential_growth")) c.sequential_growth = ascending_list(j, "sequential_growth");

    const bool needs_growth = c.target.kind == TargetKind::growth || !c.sequential_growth.empty();
    if (needs_growth && (!c.macro || c.growth_periods.empty()))
        throw ConfigError("growth targets need 'macro' and 'growth_periods'");
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return parse_run_config(text, path.parent_path());
}

std::string run_config_json(const RunConfig& c) {
    json j;
    j["panel"] = c.panel.generic_string();
    j["schema"] = to_string(c.schema);
    j["macro"] = c.macro ? json(c.macro->generic_string()) : json(nullptr);
    if (!c.apply_filters) {
        j["filters"] = "none";
    } else {
        const FilterRules f = c.filters.value_or(FilterRules::defaults(c.schema));
        j["filters"] = {{"min_location_total", f.min_location_total},
                        {"min_population", f.min_population},
                        {"min_activity_total", f.min_activity_total}};
    }
    j["window"] = c.window;
    j["delta_t"] = c.delta_t;
    j["tau"] = c.tau;
    j["base_year"] = c.base_year ? json(*c.base_year) : json(nullptr);
    j["target"] = {{"kind", to_string(c.target.kind)}, {"value", c.target.value}};
    j["focal"] = c.focal.empty() ? json("all") : json(c.focal);
    j["output_dir"] = c.output_dir.generic_string();
    j["pricing"] = to_string(c.pricing);
    j["benchmark"] = c.benchmark;
    json periods = json::array();
    for (const auto& p : c.growth_periods) periods.push_back({p.start, p.end});
    j["growth_periods"] = periods;
    j["sequential_targets"] = c.sequential;
    j["sequential_growth"] = c.sequential_growth;
    return j.dump(2);
}

OutputPanel prepare_panel(const RunConfig& config, const MacroSeries* macro) {
    const std::string text = io::read_file(config.panel);
    OutputPanel panel = text.rfind("ecopt-panel", 0) == 0 ? deserialize_panel(text)
                                                          : parse_panel_csv(text, config.schema);
    if (panel.schema() != config.schema)
        throw ConfigError("panel schema " + to_string(panel.schema()) + " does not match config schema " +
                          to_string(config.schema));
    if (panel.provenance() == Provenance::raw) panel = smooth_moving_average(panel, config.window);
    if (config.apply_filters && panel.provenance() == Provenance::smoothed)
        panel = apply_filters(panel, macro, config.filters.value_or(FilterRules::defaults(config.schema)));
    return panel;
}

RunSummary run_pipeline(const RunConfig& config) {
    RunSummary summary;
    summary.output_dir = config.output_dir;
    OutputSink sink(config.output_dir);

    std::optional<MacroSeries> macro;
    const OutputPanel panel = in_stage("ingest", [&] {
        if (config.macro) macro = load_macro_csv(*config.macro);
        return prepare_panel(config, macro ? &*macro : nullptr);
    });

    const YearStates states = in_stage("complexity", [&] {
        if (panel.empty()) throw DataError("panel is empty after smoothing and filtering");
        return build_year_states(panel);
    });
    const int base_year = config.base_year.value_or(states.rbegin()->first);
    const YearState& base = in_stage("complexity", [&]() -> const YearState& {
        auto it = states.find(base_year);
        if (it == states.end()) throw ConfigError("base year " + std::to_string(base_year) + " is not in the panel");
        return it->second;
    });
    const ComplexityScores current = in_stage("complexity", [&] { return compute_eci_pci(base.snapshot.m); });

    struct Models {
        Calibration entry, exit;
    };
    const Models models = in_stage("forecast", [&] {
        return Models{calibrate(states, Regime::entry, config.tau, config.delta_t),
                      calibrate(states, Regime::exit, config.tau, config.delta_t)};
    });
    const FuturePrediction prediction = in_stage("forecast", [&] {
        return predict_future(models.entry.averaged, models.exit.averaged, base.snapshot, base.relatedness);
    });
    in_stage("forecast", [&] {
        const std::vector<SteppingstoneModel> averaged = {models.entry.averaged, models.exit.averaged};
        sink.write("models.csv", models_csv(averaged));
        std::vector<SteppingstoneModel> per_year = models.entry.per_start_year;
        per_year.insert(per_year.end(), models.exit.per_start_year.begin(), models.exit.per_start_year.end());
        sink.write("models_by_start_year.csv", models_csv(per_year));
    });

    std::optional<GrowthModel> growth;
    if (macro && !config.growth_periods.empty()) {
        growth = in_stage("growth", [&] {
            EciHistory history;
            for (const auto& period : config.growth_periods) {
                auto it = states.find(period.start);
                if (it == states.end())
                    throw DataError("growth period start " + std::to_string(period.start) +
                                    " is not a year of the prepared panel");
                const ComplexityScores s = compute_eci_pci(it->second.snapshot.m);
                auto& year = history[period.start];
                for (std::size_t c = 0; c < it->second.snapshot.locations.size(); ++c) {
                    const double e = s.eci(static_cast<Eigen::Index>(c));
                    if (std::isfinite(e)) year[it->second.snapshot.locations[c]] = e;
                }
            }
            GrowthModel m = fit_growth_model(assemble_growth_panel(*macro, history, config.growth_periods));
            sink.write("growth_model.csv", growth_model_csv(m));
            sink.write("growth_sample.csv", growth_sample_csv(m));
            return m;
        });
        for (const auto& w : growth->warnings) summary.warnings.push_back("growth: " + w);
    }

    const auto& locations = base.snapshot.locations;
    std::vector<std::string> focal = config.focal;
    const bool explicit_focal = !focal.empty();
    if (!explicit_focal) focal = locations;

    std::vector<PropertyRow> properties;
    for (const auto& loc : focal) {
        const auto it = std::lower_bound(locations.begin(), locations.end(), loc);
        if (it == locations.end() || *it != loc) {
            if (explicit_focal)
                throw StageError("effort",
                                 ConfigError("focal location '" + loc + "' is not in the " +
                                             std::to_string(base_year) + " panel"),
                                 kExitConfig);
            continue;
        }
        const auto c = static_cast<Eigen::Index>(it - locations.begin());
        FocalResult r;
        r.location = loc;
        r.eci_t = current.eci(c);
        r.eci_pred = prediction.eci_pred(c);

        std::optional<EffortMatrix> effort;
        try {
            effort = in_stage("effort", [&] {
                if (config.pricing == Pricing::current_pci)
                    return compute_effort(loc, models.entry.averaged, base.snapshot, base.relatedness, prediction,
                                          current.pci, Pricing::current_pci);
                return compute_effort(loc, models.entry.averaged, base.snapshot, base.relatedness, prediction);
            });
            if (effort->baseline.empty()) throw StageError("effort", DataError("empty predicted baseline"), kExitData);
        } catch (const StageError& e) {
            if (explicit_focal) throw;
            summary.skipped.push_back(loc + ": " + e.what());
            continue;
        }

        if (growth) {
            in_stage("growth", [&] {
                r.z = z_score(*growth, latest_gdp(*macro, loc, base_year), base_year);
                if (std::isfinite(r.eci_pred)) r.expected_growth = predict_growth(*growth, r.eci_pred, *r.z);
            });
        }
        r.target_eci = in_stage("growth", [&] {
            switch (config.target.kind) {
                case TargetKind::eci_delta: return effort->eci_baseline + config.target.value;
                case TargetKind::eci: return config.target.value;
                case TargetKind::growth:
                    if (!r.z) throw ConfigError("growth target needs a fitted growth model");
                    return invert_target_eci(*growth, config.target.value, *r.z);
            }
            return config.target.value;
        });

        const std::string stem = safe_name(loc);
        in_stage("optimize", [&] {
            r.optimal = optimize_portfolio(*effort, r.target_eci);
            sink.write("portfolio_" + stem + "_optimal.csv", portfolio_csv(r.optimal, *effort));
            if (config.benchmark) {
                if (effort->candidates.size() >= 2) {
                    r.benchmark = benchmark_portfolio(*effort, r.target_eci);
                    sink.write("portfolio_" + stem + "_benchmark.csv", portfolio_csv(*r.benchmark, *effort));
                } else {
                    summary.warnings.push_back(loc + ": benchmark needs at least two candidates");
                }
            }
        });

        in_stage("report", [&] {
            sink.write("effort_diagram_" + stem + ".csv",
                       effort_diagram_csv(*effort, r.optimal, r.benchmark ? &*r.benchmark : nullptr));
            if (!effort->candidates.empty()) {
                const std::string svg = diagram_svg(
                    diagram_points(*effort, r.optimal),
                    loc + " " + std::to_string(base_year) + ": target ECI " + io::format_double(r.target_eci, 4));
                sink.write("effort_diagram_" + stem + ".svg", svg);
            }
            properties.push_back(property_row(r.optimal, *effort, base.snapshot, r.eci_t));
            if (r.benchmark) properties.push_back(property_row(*r.benchmark, *effort, base.snapshot, r.eci_t));

            std::vector<double> seq = config.sequential;
            if (!config.sequential_growth.empty()) {
                if (!growth || !r.z) throw ConfigError("sequential growth targets need a fitted growth model");
                for (double g : config.sequential_growth) seq.push_back(invert_target_eci(*growth, g, *r.z));
                std::sort(seq.begin(), seq.end());
                seq.erase(std::unique(seq.begin(), seq.end()), seq.end());
            }
            if (!seq.empty()) {
                const SequentialTable table = sequential_targets(*effort, seq);
                sink.write("sequential_" + stem + ".csv", sequential_csv(table));
                for (std::size_t k = 0; k < table.portfolios.size() && !effort->candidates.empty(); ++k)
                    sink.write("effort_diagram_" + stem + "_seq" + std::to_string(k + 1) + ".svg",
                               diagram_svg(diagram_points(*effort, table.portfolios[k]),
                                           loc + ": target ECI " + io::format_double(seq[k], 4)));
            }
        });

        if (!r.optimal.feasible) summary.infeasible.push_back(loc);
        summary.focal.push_back(std::move(r));
    }

    in_stage("report", [&] {
        if (summary.focal.empty()) throw DataError("no focal location could be optimized");
        sink.write("property_panel.csv", property_panel_csv(properties));
        sink.write("property_fits.csv", property_fits_csv(properties));
        sink.write("focal_summary.csv", focal_summary_csv(summary.focal));

        json manifest;
        manifest["format"] = "ecopt-run";
        manifest["version"] = kManifestVersion;
        manifest["config"] = json::parse(run_config_json(config));
        json inputs = json::object();
        inputs["panel"] = io::hex64(io::fnv1a64(io::read_file(config.panel)));
        if (config.macro) inputs["macro"] = io::hex64(io::fnv1a64(io::read_file(*config.macro)));
        manifest["inputs"] = inputs;
        manifest["base_year"] = base_year;
        manifest["horizon_year"] = prediction.horizon_year;
        manifest["panel_years"] = {panel.years().first, panel.years().last};
        manifest["sample_locations"] = locations;
        manifest["skipped"] = summary.skipped;
        manifest["infeasible"] = summary.infeasible;
        manifest["warnings"] = summary.warnings;
        json outputs = json::object();
        for (const auto& [name, hash] : sink.hashes()) outputs[name] = hash;
        manifest["outputs"] = outputs;
        sink.write("run_manifest.json", manifest.dump(2) + "\n");
    });
    for (const auto& [name, _] : sink.hashes()) summary.written.push_back(name);
    return summary;
}

}  // namespace ecopt
