// ecopt: command-line front end for the ECI optimization pipeline.

#include "ecopt/complexity.hpp"
#include "ecopt/effort.hpp"
#include "ecopt/error.hpp"
#include "ecopt/forecast.hpp"
#include "ecopt/growth.hpp"
#include "ecopt/ingest.hpp"
#include "ecopt/report.hpp"
#include "ecopt/text_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace ecopt;

namespace {

struct PanelOpts {
    std::string panel;
    std::string schema = "trade";
    std::string macro;
    std::string filters;
    bool no_filters = false;
    int window = 4;
};

void add_panel_opts(CLI::App* cmd, PanelOpts& o) {
    cmd->add_option("--panel", o.panel, "Saved panel or raw CSV")->required();
    cmd->add_option("--schema", o.schema, "trade or payroll")->check(CLI::IsMember({"trade", "payroll"}));
    cmd->add_option("--macro", o.macro, "Macro CSV (GDP per capita, population)");
    cmd->add_option("--filters", o.filters, "JSON file with filter thresholds");
    cmd->add_flag("--no-filters", o.no_filters, "Skip location and activity filters");
    cmd->add_option("--window", o.window, "Moving-average window in years");
}

RunConfig panel_config(const PanelOpts& o) {
    RunConfig c;
    c.panel = o.panel;
    c.schema = parse_schema(o.schema);
    c.window = o.window;
    if (o.window < 1) throw ConfigError("--window must be at least 1");
    if (!o.macro.empty()) c.macro = o.macro;
    c.apply_filters = !o.no_filters;
    if (!o.filters.empty()) {
        try {
            c.filters = load_filter_rules(o.filters);
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
    }
    return c;
}

struct Prepared {
    std::optional<MacroSeries> macro;
    OutputPanel panel;
};

Prepared prepare(const PanelOpts& o) {
    const RunConfig c = panel_config(o);
    Prepared p;
    if (c.macro) p.macro = load_macro_csv(*c.macro);
    p.panel = prepare_panel(c, p.macro ? &*p.macro : nullptr);
    return p;
}

int last_year(const YearStates& states) {
    if (states.empty()) throw DataError("panel has no populated years");
    return states.rbegin()->first;
}

struct ModelOpts {
    std::string models;
    int tau = 5;
    int delta_t = 10;
};

void add_model_opts(CLI::App* cmd, ModelOpts& o) {
    cmd->add_option("--models", o.models, "models.csv from calibrate (otherwise calibrated here)");
    cmd->add_option("--tau", o.tau, "Steppingstone offset in years");
    cmd->add_option("--delta-t", o.delta_t, "Forecast horizon in years");
}

std::pair<SteppingstoneModel, SteppingstoneModel> entry_exit(const ModelOpts& o, const YearStates& states) {
    if (o.models.empty())
        return {calibrate(states, Regime::entry, o.tau, o.delta_t).averaged,
                calibrate(states, Regime::exit, o.tau, o.delta_t).averaged};
    std::optional<SteppingstoneModel> entry, exit;
    for (const auto& m : parse_models_csv(io::read_file(o.models))) {
        auto& slot = m.regime == Regime::entry ? entry : exit;
        if (slot) throw ConfigError("models file has more than one " + to_string(m.regime) + " model");
        slot = m;
    }
    if (!entry || !exit) throw ConfigError("models file needs one entry and one exit model");
    if (entry->tau != exit->tau || entry->delta_t != exit->delta_t)
        throw ConfigError("entry and exit models use different (delta_t, tau)");
    return {*entry, *exit};
}

struct EffortOpts {
    PanelOpts panel;
    ModelOpts models;
    std::string focal;
    std::optional<int> base_year;
    std::string pricing = "future_pci";
};

void add_effort_opts(CLI::App* cmd, EffortOpts& o) {
    add_panel_opts(cmd, o.panel);
    add_model_opts(cmd, o.models);
    cmd->add_option("--focal", o.focal, "Focal location id")->required();
    cmd->add_option("--base-year", o.base_year, "Base year t (default: last panel year)");
    cmd->add_option("--pricing", o.pricing, "future_pci or current_pci")
        ->check(CLI::IsMember({"future_pci", "current_pci"}));
}

struct EffortContext {
    YearStates states;
    int base_year = 0;
    SteppingstoneModel entry, exit;
    std::optional<FuturePrediction> prediction;
    ComplexityScores current;
    EffortMatrix effort;
};

EffortContext build_effort(const EffortOpts& o) {
    EffortContext ctx;
    const Prepared p = prepare(o.panel);
    ctx.states = build_year_states(p.panel);
    ctx.base_year = o.base_year.value_or(last_year(ctx.states));
    auto it = ctx.states.find(ctx.base_year);
    if (it == ctx.states.end()) throw ConfigError("base year " + std::to_string(ctx.base_year) + " is not in the panel");
    std::tie(ctx.entry, ctx.exit) = entry_exit(o.models, ctx.states);
    const auto& snap = it->second.snapshot;
    const auto& rel = it->second.relatedness;
    ctx.prediction = predict_future(ctx.entry, ctx.exit, snap, rel);
    ctx.current = compute_eci_pci(snap.m);
    if (!std::binary_search(snap.locations.begin(), snap.locations.end(), o.focal))
        throw ConfigError("focal location '" + o.focal + "' is not in the " + std::to_string(ctx.base_year) + " panel");
    ctx.effort = o.pricing == "current_pci"
                     ? compute_effort(o.focal, ctx.entry, snap, rel, *ctx.prediction, ctx.current.pci,
                                      Pricing::current_pci)
                     : compute_effort(o.focal, ctx.entry, snap, rel, *ctx.prediction);
    return ctx;
}

struct TargetOpts {
    std::optional<double> target;
    std::optional<double> delta;
};

void add_target_opts(CLI::App* cmd, TargetOpts& o) {
    auto* t = cmd->add_option("--target", o.target, "Absolute target ECI");
    auto* d = cmd->add_option("--target-delta", o.delta, "Target as an increase over the no-effort ECI");
    t->excludes(d);
    d->excludes(t);
}

double resolve_target(const TargetOpts& o, const EffortContext& ctx) {
    if (o.target) return *o.target;
    if (!o.delta) throw ConfigError("give --target or --target-delta");
    return ctx.effort.eci_baseline + *o.delta;
}

void write_or_print(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") std::cout << text;
    else io::write_file(path, text);
}

void print_portfolio(const Portfolio& p) {
    std::cerr << to_string(p.method) << " portfolio for " << p.focal << ": " << p.selected.size()
              << " activities, total effort " << io::format_double(p.total_effort, 6) << ", ECI "
              << io::format_double(p.achieved_eci, 6) << " vs target " << io::format_double(p.target_eci, 6)
              << (p.feasible ? "" : " (target not reached)") << '\n';
}

std::vector<GrowthPeriod> parse_periods(const std::vector<std::string>& specs) {
    std::vector<GrowthPeriod> out;
    for (const auto& s : specs) {
        const auto colon = s.find(':');
        const auto a = io::parse_int(s.substr(0, colon));
        const auto b = colon == std::string::npos ? std::nullopt : io::parse_int(s.substr(colon + 1));
        if (!a || !b) throw ConfigError("period must look like 2009:2019, got '" + s + "'");
        out.push_back({static_cast<int>(*a), static_cast<int>(*b)});
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimum-effort diversification portfolios that reach a target economic complexity"};
    app.require_subcommand(1);

    // ingest
    PanelOpts ingest_opts;
    std::string ingest_out;
    auto* ingest = app.add_subcommand("ingest", "Load, smooth and filter a raw panel, then save it");
    ingest->add_option("--input", ingest_opts.panel, "Raw CSV panel")->required();
    ingest->add_option("--schema", ingest_opts.schema, "trade or payroll")->check(CLI::IsMember({"trade", "payroll"}));
    ingest->add_option("--macro", ingest_opts.macro, "Macro CSV for the population rule");
    ingest->add_option("--filters", ingest_opts.filters, "JSON file with filter thresholds");
    ingest->add_flag("--no-filters", ingest_opts.no_filters, "Skip filters");
    ingest->add_option("--window", ingest_opts.window, "Moving-average window in years");
    ingest->add_option("--output", ingest_out, "Saved panel path")->required();

    // complexity
    PanelOpts cx_panel;
    std::optional<int> cx_year;
    std::string cx_out = ".";
    auto* cx = app.add_subcommand("complexity", "RCA, ECI/PCI and proximity for one year");
    add_panel_opts(cx, cx_panel);
    cx->add_option("--year", cx_year, "Year (default: last)");
    cx->add_option("--out-dir", cx_out, "Directory for rca.csv, complexity.csv, proximity.csv");

    // calibrate
    PanelOpts cal_panel;
    int cal_tau = 5, cal_dt = 10;
    std::string cal_out = ".";
    auto* cal = app.add_subcommand("calibrate", "Fit entry and exit steppingstone models");
    add_panel_opts(cal, cal_panel);
    cal->add_option("--tau", cal_tau, "Steppingstone offset");
    cal->add_option("--delta-t", cal_dt, "Horizon");
    cal->add_option("--out-dir", cal_out, "Directory for models.csv and models_by_start_year.csv");

    // sweep
    PanelOpts sw_panel;
    int tau_min = 1, tau_max = 9, dt_min = 2, dt_max = 10;
    std::string sw_out;
    auto* sw = app.add_subcommand("sweep", "Averaged models over a (delta_t, tau) grid");
    add_panel_opts(sw, sw_panel);
    sw->add_option("--tau-min", tau_min);
    sw->add_option("--tau-max", tau_max);
    sw->add_option("--delta-t-min", dt_min);
    sw->add_option("--delta-t-max", dt_max);
    sw->add_option("--out", sw_out, "sweep.csv path (default: stdout)");

    // effort
    EffortOpts ef_opts;
    std::string ef_out, ef_svg;
    auto* ef = app.add_subcommand("effort", "Effort needed for each candidate activity of a location");
    add_effort_opts(ef, ef_opts);
    ef->add_option("--out", ef_out, "effort_diagram.csv path (default: stdout)");
    ef->add_option("--svg", ef_svg, "Also write the effort-complexity diagram");

    // optimize
    EffortOpts op_opts;
    TargetOpts op_target;
    std::string op_method = "optimal", op_out, op_svg;
    auto* op = app.add_subcommand("optimize", "Minimum-effort portfolio reaching a target ECI");
    add_effort_opts(op, op_opts);
    add_target_opts(op, op_target);
    op->add_option("--method", op_method, "optimal or brute_force")->check(CLI::IsMember({"optimal", "brute_force"}));
    op->add_option("--out", op_out, "portfolio.csv path (default: stdout)");
    op->add_option("--svg", op_svg, "Also write the effort-complexity diagram");

    // benchmark
    EffortOpts bm_opts;
    TargetOpts bm_target;
    std::string bm_out;
    auto* bm = app.add_subcommand("benchmark", "Relatedness-complexity ranking portfolio");
    add_effort_opts(bm, bm_opts);
    add_target_opts(bm, bm_target);
    bm->add_option("--out", bm_out, "portfolio.csv path (default: stdout)");

    // growth-target
    PanelOpts gt_panel;
    std::vector<std::string> gt_periods;
    std::string gt_focal, gt_out;
    double gt_growth = 0.0;
    std::optional<int> gt_year;
    auto* gt = app.add_subcommand("growth-target", "Fit the growth regression and invert a growth target");
    add_panel_opts(gt, gt_panel);
    gt->add_option("--period", gt_periods, "Growth period start:end (repeatable)")->required();
    gt->add_option("--focal", gt_focal, "Focal location id")->required();
    gt->add_option("--growth", gt_growth, "Target growth, percent per year")->required();
    gt->add_option("--year", gt_year, "Year of the focal GDP per capita (default: last panel year)");
    gt->add_option("--out-dir", gt_out, "Directory for growth_model.csv and growth_sample.csv");

    // report
    std::string rp_config;
    auto* rp = app.add_subcommand("report", "Run the full pipeline from a JSON config");
    rp->add_option("--config", rp_config, "Run config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*ingest) {
            const Prepared p = prepare(ingest_opts);
            save_panel(p.panel, ingest_out);
            const auto years = p.panel.populated_years();
            std::cerr << "saved " << p.panel.size() << " entries, " << p.panel.locations().size() << " locations, "
                      << p.panel.activities().size() << " activities";
            if (!years.empty()) std::cerr << ", years " << years.front() << "-" << years.back();
            std::cerr << '\n';
        } else if (*cx) {
            const Prepared p = prepare(cx_panel);
            const auto years = p.panel.populated_years();
            if (years.empty()) throw DataError("panel has no populated years");
            const int year = cx_year.value_or(years.back());
            const SpecializationSnapshot snap = compute_rca(p.panel, year);
            const ComplexityScores scores = compute_eci_pci(snap.m);
            const fs::path dir = cx_out;
            io::write_file(dir / "rca.csv", rca_csv(snap));
            io::write_file(dir / "complexity.csv", complexity_csv(snap, scores));
            io::write_file(dir / "proximity.csv", proximity_csv(snap, compute_proximity(snap.m)));
            if (!scores.dropped_locations.empty() || !scores.dropped_activities.empty())
                std::cerr << "scored the largest component; dropped " << scores.dropped_locations.size()
                          << " locations and " << scores.dropped_activities.size() << " activities\n";
        } else if (*cal) {
            const YearStates states = build_year_states(prepare(cal_panel).panel);
            const Calibration entry = calibrate(states, Regime::entry, cal_tau, cal_dt);
            const Calibration exit = calibrate(states, Regime::exit, cal_tau, cal_dt);
            const std::vector<SteppingstoneModel> avg = {entry.averaged, exit.averaged};
            std::vector<SteppingstoneModel> per = entry.per_start_year;
            per.insert(per.end(), exit.per_start_year.begin(), exit.per_start_year.end());
            io::write_file(fs::path(cal_out) / "models.csv", models_csv(avg));
            io::write_file(fs::path(cal_out) / "models_by_start_year.csv", models_csv(per));
            for (const auto& m : avg)
                std::cerr << to_string(m.regime) << ": b1=" << io::format_double(m.coef[1], 4)
                          << " b2=" << io::format_double(m.coef[2], 4) << " b3=" << io::format_double(m.coef[3], 4)
                          << " b4=" << io::format_double(m.coef[4], 4) << " R2=" << io::format_double(m.r2, 4)
                          << " over " << m.start_years.size() << " start years\n";
        } else if (*sw) {
            const YearStates states = build_year_states(prepare(sw_panel).panel);
            write_or_print(sw_out, sweep_csv(sweep(states, {tau_min, tau_max}, {dt_min, dt_max})));
        } else if (*ef) {
            const EffortContext ctx = build_effort(ef_opts);
            const Portfolio none = optimize_portfolio(ctx.effort, -INFINITY);
            write_or_print(ef_out, effort_diagram_csv(ctx.effort, none, nullptr));
            if (!ef_svg.empty())
                emit_diagram_svg(diagram_points(ctx.effort, none), ef_opts.focal + " effort", ef_svg);
            std::cerr << ctx.effort.candidates.size() << " candidates, " << ctx.effort.baseline.size()
                      << " predicted specializations, baseline ECI "
                      << io::format_double(ctx.effort.eci_baseline, 6) << '\n';
        } else if (*op) {
            const EffortContext ctx = build_effort(op_opts);
            const double target = resolve_target(op_target, ctx);
            const Portfolio p = op_method == "brute_force" ? brute_force_portfolio(ctx.effort, target)
                                                            : optimize_portfolio(ctx.effort, target);
            write_or_print(op_out, portfolio_csv(p, ctx.effort));
            if (!op_svg.empty())
                emit_diagram_svg(diagram_points(ctx.effort, p),
                                 op_opts.focal + ": target ECI " + io::format_double(target, 4), op_svg);
            print_portfolio(p);
            if (!p.feasible) return kExitInfeasible;
        } else if (*bm) {
            const EffortContext ctx = build_effort(bm_opts);
            const double target = resolve_target(bm_target, ctx);
            const Portfolio p = benchmark_portfolio(ctx.effort, target);
            write_or_print(bm_out, portfolio_csv(p, ctx.effort));
            print_portfolio(p);
            if (!p.feasible) return kExitInfeasible;
        } else if (*gt) {
            if (gt_panel.macro.empty()) throw ConfigError("growth-target needs --macro");
            const auto periods = parse_periods(gt_periods);
            const Prepared p = prepare(gt_panel);
            const YearStates states = build_year_states(p.panel);
            EciHistory history;
            for (const auto& period : periods) {
                auto it = states.find(period.start);
                if (it == states.end())
                    throw DataError("period start " + std::to_string(period.start) + " is not in the panel");
                const ComplexityScores s = compute_eci_pci(it->second.snapshot.m);
                for (std::size_t c = 0; c < it->second.snapshot.locations.size(); ++c)
                    if (std::isfinite(s.eci(static_cast<Eigen::Index>(c))))
                        history[period.start][it->second.snapshot.locations[c]] = s.eci(static_cast<Eigen::Index>(c));
            }
            const GrowthModel model = fit_growth_model(assemble_growth_panel(*p.macro, history, periods));
            for (const auto& w : model.warnings) std::cerr << "warning: " << w << '\n';
            const int year = gt_year.value_or(last_year(states));
            const MacroRow* row = nullptr;
            for (const auto& r : p.macro->rows())
                if (r.location == gt_focal && r.year <= year && r.gdp_pc_ppp) row = &r;
            if (!row) throw DataError("no GDP per capita for " + gt_focal + " at or before " + std::to_string(year));
            const double z = z_score(model, *row->gdp_pc_ppp, year);
            const double eci = invert_target_eci(model, gt_growth, z);
            if (!gt_out.empty()) {
                io::write_file(fs::path(gt_out) / "growth_model.csv", growth_model_csv(model));
                io::write_file(fs::path(gt_out) / "growth_sample.csv", growth_sample_csv(model));
            }
            std::cout << "location,z,target_growth,target_eci\n"
                      << gt_focal << ',' << io::format_double(z) << ',' << io::format_double(gt_growth) << ','
                      << io::format_double(eci) << '\n';
        } else if (*rp) {
            const RunSummary s = run_pipeline(load_run_config(rp_config));
            for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
            for (const auto& k : s.skipped) std::cerr << "skipped " << k << '\n';
            std::cerr << "wrote " << s.written.size() << " files to " << s.output_dir.string() << '\n';
            if (!s.infeasible.empty()) {
                std::cerr << "target not reached for: " << io::join(s.infeasible, ", ") << '\n';
                return kExitInfeasible;
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}
