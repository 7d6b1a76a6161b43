#include "ecopt/synthetic.hpp"

#include "ecopt/error.hpp"
#include "ecopt/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace ecopt {

namespace {

// Log output relative to the location and activity size at which a cell is
// recorded as zero.
constexpr double kPresenceCutoff = -2.5;
constexpr double kPersistence = 0.8;

std::string location_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "L%02d", i + 1);
    return buf;
}

std::string activity_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", 1001 + 43 * i);
    return buf;
}

}  // namespace

SyntheticWorld generate_synthetic(const SyntheticSpec& spec) {
    if (spec.locations < 2 || spec.activities < 2) throw ConfigError("synthetic world needs at least 2x2 cells");
    if (spec.last_year < spec.first_year) throw ConfigError("synthetic year range is empty");
    if (spec.activities > 200) throw ConfigError("synthetic activity ids support at most 200 activities");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto nc = static_cast<std::size_t>(spec.locations);
    const auto np = static_cast<std::size_t>(spec.activities);

    SyntheticWorld w;
    std::vector<double> size(nc), drift(nc), vol(np);
    for (std::size_t c = 0; c < nc; ++c) {
        w.location_ids.push_back(location_id(static_cast<int>(c)));
        w.capability.push_back(normal(rng));
        size[c] = 18.0 + 0.6 * normal(rng) + 0.4 * w.capability[c];
        drift[c] = 0.02 + 0.02 * normal(rng);
    }
    for (std::size_t p = 0; p < np; ++p) {
        w.activity_ids.push_back(activity_id(static_cast<int>(p)));
        w.complexity.push_back(normal(rng));
        vol[p] = 0.7 * normal(rng);
    }
    // Static idiosyncratic fit of a location to an activity.
    std::vector<double> fit(nc * np);
    for (double& f : fit) f = 0.8 * normal(rng);

    std::vector<PanelEntry> entries;
    std::vector<double> state(nc * np);
    for (int year = spec.first_year; year <= spec.last_year; ++year) {
        const int age = year - spec.first_year;
        for (std::size_t c = 0; c < nc; ++c) {
            const double k = w.capability[c] + drift[c] * age;
            for (std::size_t p = 0; p < np; ++p) {
                const double gap = std::max(0.0, w.complexity[p] - k);
                const double level = fit[c * np + p] - 2.5 * gap;
                double& s = state[c * np + p];
                const double shock = 0.45 * normal(rng);
                s = age == 0 ? level + shock : kPersistence * s + (1.0 - kPersistence) * level + shock;
                if (s <= kPresenceCutoff) continue;
                const double value = std::round(std::exp(size[c] + vol[p] + s));
                if (value > 0.0) entries.push_back({w.location_ids[c], w.activity_ids[p], year, value});
            }
        }
    }
    w.panel = OutputPanel(Schema::trade, Provenance::raw, std::move(entries), {spec.first_year, spec.last_year});

    // Growth depends on capability and on initial income (convergence).
    std::vector<MacroRow> macro;
    std::vector<double> log_gdp(nc), pop(nc), base_growth(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        log_gdp[c] = 8.8 + 0.7 * w.capability[c] + 0.4 * normal(rng);
        pop[c] = std::max(1.5e6, std::exp(16.3 + 1.0 * normal(rng)));
        base_growth[c] = 0.4 * normal(rng);
    }
    double mean0 = 0.0;
    for (double v : log_gdp) mean0 += v;
    mean0 /= static_cast<double>(nc);
    for (int year = spec.first_year; year <= spec.last_year; ++year) {
        const int age = year - spec.first_year;
        for (std::size_t c = 0; c < nc; ++c) {
            if (age > 0) {
                const double k = w.capability[c] + drift[c] * age;
                const double pct = 2.0 + 1.0 * k - 0.8 * (log_gdp[c] - mean0) + base_growth[c] + 0.8 * normal(rng);
                log_gdp[c] += pct / 100.0;
                pop[c] *= 1.01;
            }
            macro.push_back({w.location_ids[c], year, std::exp(log_gdp[c]), std::round(pop[c])});
        }
    }
    w.macro = MacroSeries(std::move(macro));
    return w;
}

std::string panel_csv(const OutputPanel& panel) {
    std::ostringstream out;
    out << (panel.schema() == Schema::trade ? "country_id,product_hs4,year,export_value\n"
                                            : "msa_id,naics,year,payroll\n");
    for (const auto& e : panel.entries())
        out << e.location << ',' << e.activity << ',' << e.year << ',' << io::format_double(e.value) << '\n';
    return out.str();
}

std::string macro_csv(const MacroSeries& macro) {
    std::ostringstream out;
    out << "country_id,year,gdp_pc_ppp_const2021,population\n";
    for (const auto& r : macro.rows()) {
        out << r.location << ',' << r.year << ',';
        if (r.gdp_pc_ppp) out << io::format_double(*r.gdp_pc_ppp, 10);
        out << ',';
        if (r.population) out << io::format_double(*r.population);
        out << '\n';
    }
    return out.str();
}

}  // namespace ecopt
