#include "ecopt/error.hpp"
#include "ecopt/growth.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ecopt;
using namespace ecopt::testing;

namespace {

// Locations L0..L(n-1) with GDPpc at both ends of each period chosen so that
// growth = a1 eci + a2 z + a3 eci z + gamma + noise.
struct Fixture {
    MacroSeries macro;
    EciHistory eci;
    std::vector<GrowthPeriod> periods;
};

Fixture noise_free(std::mt19937_64& rng, int n, double a1, double a2, double a3, std::map<int, double> gamma,
                   double sigma = 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Fixture f;
    std::vector<MacroRow> rows;
    for (const auto& [start, g] : gamma) {
        const int end = start + 10;
        f.periods.push_back({start, end});
        std::vector<double> log_gdp(static_cast<std::size_t>(n));
        for (auto& v : log_gdp) v = 9.0 + normal(rng);
        double mean = 0.0, ss = 0.0;
        for (double v : log_gdp) mean += v;
        mean /= n;
        for (double v : log_gdp) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / (n - 1));
        for (int i = 0; i < n; ++i) {
            const std::string loc = id("L", i);
            const double e = normal(rng);
            f.eci[start][loc] = e;
            const double z = (log_gdp[static_cast<std::size_t>(i)] - mean) / sd;
            const double growth = a1 * e + a2 * z + a3 * e * z + g + sigma * normal(rng);
            const double log_end = log_gdp[static_cast<std::size_t>(i)] + growth * (end - start) / 100.0;
            rows.push_back({loc, start, std::exp(log_gdp[static_cast<std::size_t>(i)]), 1e7});
            rows.push_back({loc, end, std::exp(log_end), 1e7});
        }
    }
    f.macro = MacroSeries(std::move(rows));
    return f;
}

}  // namespace

TEST_CASE("annualized growth: doubling over ten years and flat GDP") {
    MacroSeries macro({{"A", 2000, 100.0, 1e7}, {"A", 2010, 200.0, 1e7}, {"B", 2000, 50.0, 1e7}, {"B", 2010, 50.0, 1e7}});
    EciHistory eci;
    eci[2000] = {{"A", 0.5}, {"B", -0.5}};
    const auto panel = assemble_growth_panel(macro, eci, {{2000, 2010}});
    REQUIRE(panel.rows.size() == 2);
    CHECK(panel.rows[0].growth == doctest::Approx(10.0 * std::log(2.0)).epsilon(1e-14));
    CHECK(panel.rows[1].growth == 0.0);
    CHECK(panel.rows[0].z == doctest::Approx(-panel.rows[1].z));
    CHECK(panel.rows[0].z * panel.rows[0].z + panel.rows[1].z * panel.rows[1].z == doctest::Approx(1.0));
}

TEST_CASE("growth panel contract errors") {
    MacroSeries macro({{"A", 2000, 100.0, 1e7}, {"A", 2010, 200.0, 1e7}});
    EciHistory eci;
    eci[2000] = {{"A", 0.5}};
    CHECK_THROWS_AS(assemble_growth_panel(macro, eci, {{2000, 2010}}), DataError);
    CHECK_THROWS_AS(assemble_growth_panel(macro, eci, {{2010, 2000}}), ConfigError);
    CHECK_THROWS_AS(assemble_growth_panel(macro, eci, {}), ConfigError);
}

TEST_CASE("noise-free growth data recovers coefficients") {
    std::mt19937_64 rng(1);
    const auto f = noise_free(rng, 40, 1.073, -1.536, -0.461, {{2002, 2.5}, {2013, 2.9}});
    const auto model = fit_growth_model(assemble_growth_panel(f.macro, f.eci, f.periods));
    CHECK(std::abs(model.a1 - 1.073) < 1e-8);
    CHECK(std::abs(model.a2 + 1.536) < 1e-8);
    CHECK(std::abs(model.a3 + 0.461) < 1e-8);
    CHECK(std::abs(model.period_effects.at(2002) - 2.5) < 1e-8);
    CHECK(std::abs(model.period_effects.at(2013) - 2.9) < 1e-8);
    CHECK(model.latest_period() == 2013);
    CHECK(model.n_obs == 80);
    CHECK(model.r2 == doctest::Approx(1.0));
}

TEST_CASE("noisy growth data: residuals average zero in each period, HC1 SEs are finite") {
    std::mt19937_64 rng(2);
    const auto f = noise_free(rng, 80, 1.0, -1.5, -0.5, {{1990, 2.0}, {2001, 3.0}, {2012, 1.0}}, 1.0);
    const auto model = fit_growth_model(assemble_growth_panel(f.macro, f.eci, f.periods));
    std::map<int, std::pair<double, int>> resid;
    for (const auto& r : model.sample) {
        auto& [sum, k] = resid[r.period.start];
        sum += r.growth - predict_growth(model, r.eci, r.z, r.period.start);
        ++k;
    }
    for (const auto& [year, s] : resid) CHECK(std::abs(s.first / s.second) < 1e-9);
    for (double se : {model.se_a1, model.se_a2, model.se_a3}) {
        CHECK(std::isfinite(se));
        CHECK(se > 0.0);
    }
    for (const auto& [year, se] : model.period_effect_se) CHECK(se > 0.0);
    CHECK(std::abs(model.a1 - 1.0) < 4.0 * model.se_a1);
    CHECK(model.r2 > 0.0);
    CHECK(model.r2 < 1.0);
}

TEST_CASE("inversion undoes prediction") {
    std::mt19937_64 rng(3);
    const auto f = noise_free(rng, 30, 1.073, -1.536, -0.461, {{2000, 2.6}, {2011, 2.8}}, 0.5);
    const auto model = fit_growth_model(assemble_growth_panel(f.macro, f.eci, f.periods));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double e = normal(rng), z = 0.5 * normal(rng);
        const double g = predict_growth(model, e, z);
        CHECK(invert_target_eci(model, g, z) == doctest::Approx(e).epsilon(1e-9));
        CHECK(predict_growth(model, invert_target_eci(model, g + 0.3, z), z) == doctest::Approx(g + 0.3).epsilon(1e-9));
    }
}

TEST_CASE("singular inversion slope is an error") {
    GrowthModel m;
    m.a1 = 1.0;
    m.a3 = -0.5;
    m.period_effects[2010] = 2.0;
    CHECK_THROWS_AS(invert_target_eci(m, 3.0, 2.0), NumericError);
    CHECK_NOTHROW(invert_target_eci(m, 3.0, 1.9));
}

TEST_CASE("rounded worked example is internally consistent") {
    // With a1 = 1.073, a2 = -1.536, a3 = -0.461, a location predicted at
    // ECI 0.933 with 3.23% growth needs ECI 1.225 for 3.5%. The two numbers pin
    // down z and the period effect; prediction and inversion must then agree
    // to the rounding of the inputs.
    GrowthModel m;
    m.a1 = 1.073;
    m.a2 = -1.536;
    m.a3 = -0.461;
    const double slope = (3.5 - 3.23) / (1.225 - 0.933);
    const double z = (m.a1 - slope) / -m.a3;
    m.period_effects[2012] = 3.23 - m.a1 * 0.933 - m.a2 * z - m.a3 * 0.933 * z;
    CHECK(predict_growth(m, 0.933, z) == doctest::Approx(3.23).epsilon(1e-12));
    CHECK(invert_target_eci(m, 3.5, z) == doctest::Approx(1.225).epsilon(1e-9));
    CHECK(z == doctest::Approx(0.3217).epsilon(1e-3));
}

TEST_CASE("z-score reuses the latest stored moments") {
    GrowthModel m;
    m.normalization[2000] = {1.0, 2.0};
    m.normalization[2010] = {9.0, 0.5};
    CHECK(z_score(m, std::exp(10.0), 2010) == doctest::Approx(2.0));
    CHECK(z_score(m, std::exp(10.0), 2022) == doctest::Approx(2.0));
    CHECK(z_score(m, std::exp(5.0), 2000) == doctest::Approx(2.0));
    CHECK_THROWS_AS(z_score(m, 1.0, 1995), DataError);
}

TEST_CASE("single-period fits warn, tiny samples fail") {
    std::mt19937_64 rng(4);
    const auto f = noise_free(rng, 12, 1.0, -1.0, 0.0, {{2000, 2.0}}, 0.3);
    const auto model = fit_growth_model(assemble_growth_panel(f.macro, f.eci, f.periods));
    CHECK_FALSE(model.warnings.empty());
    const auto tiny = noise_free(rng, 4, 1.0, -1.0, 0.0, {{2000, 2.0}}, 0.3);
    CHECK_THROWS_AS(fit_growth_model(assemble_growth_panel(tiny.macro, tiny.eci, tiny.periods)), DataError);
}

TEST_CASE("growth model CSV lists every term") {
    std::mt19937_64 rng(5);
    const auto f = noise_free(rng, 20, 1.0, -1.0, -0.3, {{2000, 2.0}, {2011, 3.0}}, 0.3);
    const auto csv = growth_model_csv(fit_growth_model(assemble_growth_panel(f.macro, f.eci, f.periods)));
    CHECK(csv.rfind("term,estimate,robust_se,r2,n_obs\n", 0) == 0);
    for (const char* term : {"a1_eci,", "a2_log_gdp_pc_z,", "a3_interaction,", "gamma_2000,", "gamma_2011,"})
        CHECK(csv.find(term) != std::string::npos);
}
