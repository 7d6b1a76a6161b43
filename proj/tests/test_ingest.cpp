#include "ecopt/error.hpp"
#include "ecopt/ingest.hpp"
#include "ecopt/text_io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>

using namespace ecopt;

namespace {

OutputPanel raw(std::vector<PanelEntry> e, int first, int last) {
    return OutputPanel(Schema::trade, Provenance::raw, std::move(e), {first, last});
}

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "ecopt_test_ingest";
    std::filesystem::create_directories(dir);
    return dir / name;
}

double value_at(const OutputPanel& p, const std::string& c, const std::string& a, int y) {
    for (const auto& e : p.entries())
        if (e.location == c && e.activity == a && e.year == y) return e.value;
    return 0.0;
}

}  // namespace

TEST_CASE("three-row CSV parses into a raw panel") {
    const auto p = parse_panel_csv(
        "country_id,product_hs4,year,export_value\nTHA,8532,2020,10\nTHA,8477,2020,5.5\nMEX,8532,2021,3\n",
        Schema::trade);
    CHECK(p.size() == 3);
    CHECK(p.provenance() == Provenance::raw);
    CHECK(p.locations() == std::vector<std::string>{"MEX", "THA"});
    CHECK(p.activities() == std::vector<std::string>{"8477", "8532"});
    CHECK(p.years() == YearRange{2020, 2021});
}

TEST_CASE("payroll header is accepted only for the payroll schema") {
    const std::string text = "msa_id,naics,year,payroll\n10180,3111,2015,200000\n";
    CHECK(parse_panel_csv(text, Schema::payroll).size() == 1);
    CHECK_THROWS_AS(parse_panel_csv(text, Schema::trade), DataError);
}

TEST_CASE("malformed rows name their line") {
    const std::string head = "country_id,product_hs4,year,export_value\n";
    auto message = [&](const std::string& body) {
        try {
            parse_panel_csv(head + body, Schema::trade);
        } catch (const DataError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("A,1,2000,1\nA,2,2000,-5\n").find("line 3") != std::string::npos);
    CHECK(message("A,1,2000,\n").find("line 2") != std::string::npos);
    CHECK(message("A,1,2000\n").find("line 2") != std::string::npos);
    CHECK(message("A,1,20x0,1\n").find("line 2") != std::string::npos);
    CHECK(message("A,1,2000,1\nA,1,2000,2\n").find("duplicate") != std::string::npos);
    CHECK_THROWS_AS(parse_panel_csv("", Schema::trade), DataError);
    CHECK_THROWS_AS(parse_panel_csv(head, Schema::trade), DataError);
}

TEST_CASE("panel constructor rejects bad entries") {
    CHECK_THROWS_AS(raw({{"a", "x", 2000, -1.0}}, 2000, 2000), DataError);
    CHECK_THROWS_AS(raw({{"a", "x", 2000, NAN}}, 2000, 2000), DataError);
    CHECK_THROWS_AS(raw({{"a", "x", 2001, 1.0}}, 2000, 2000), DataError);
    CHECK_THROWS_AS(raw({{"a", "x", 2000, 1.0}, {"a", "x", 2000, 2.0}}, 2000, 2000), DataError);
    CHECK_THROWS_AS(raw({{"a\tb", "x", 2000, 1.0}}, 2000, 2000), DataError);
}

TEST_CASE("macro series loads with optional fields and rejects nonpositive values") {
    const auto m = parse_macro_csv(
        "country_id,year,gdp_pc_ppp_const2021,population\nTHA,2022,20000,71000000\nMEX,2022,,128000000\n");
    REQUIRE(m.find("THA", 2022));
    CHECK(*m.find("THA", 2022)->gdp_pc_ppp == 20000.0);
    CHECK_FALSE(m.find("MEX", 2022)->gdp_pc_ppp.has_value());
    CHECK(m.find("MEX", 2021) == nullptr);
    CHECK_THROWS_AS(parse_macro_csv("country_id,year,gdp_pc_ppp_const2021,population\nA,2000,0,5\n"), DataError);
    CHECK_THROWS_AS(
        parse_macro_csv("country_id,year,gdp_pc_ppp_const2021,population\nA,2000,1,5\nA,2000,2,5\n"), DataError);
}

TEST_CASE("window 1 smoothing is the identity") {
    const auto p = raw({{"a", "x", 2000, 1.0}, {"a", "y", 2001, 2.5}, {"b", "x", 2001, 4.0}}, 2000, 2001);
    const auto s = smooth_moving_average(p, 1);
    CHECK(s.provenance() == Provenance::smoothed);
    REQUIRE(s.size() == p.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s.entries()[i].location == p.entries()[i].location);
        CHECK(s.entries()[i].value == p.entries()[i].value);
    }
}

TEST_CASE("four-year window averages absent years as zero") {
    // 2019..2022 = (0, 4, 4, 8): 2019 is absent.
    const auto p = raw({{"a", "x", 2020, 4.0}, {"a", "x", 2021, 4.0}, {"a", "x", 2022, 8.0}, {"b", "x", 2019, 1.0}},
                       2019, 2022);
    const auto s = smooth_moving_average(p, 4);
    CHECK(s.years() == YearRange{2022, 2022});
    CHECK(value_at(s, "a", "x", 2022) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(value_at(s, "b", "x", 2022) == doctest::Approx(0.25));
}

TEST_CASE("window 4 on 1998-2022 keeps 2001-2022") {
    std::vector<PanelEntry> e;
    for (int y = 1998; y <= 2022; ++y) e.push_back({"a", "x", y, 1.0 + y % 3});
    const auto s = smooth_moving_average(raw(e, 1998, 2022), 4);
    CHECK(s.years() == YearRange{2001, 2022});
    CHECK(s.populated_years().front() == 2001);
    CHECK(s.populated_years().back() == 2022);
}

TEST_CASE("smoothing preserves window means of year totals") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::bernoulli_distribution present(0.6);
    std::vector<PanelEntry> e;
    for (int c = 0; c < 5; ++c)
        for (int a = 0; a < 6; ++a)
            for (int y = 2000; y <= 2009; ++y)
                if (present(rng)) e.push_back({"c" + std::to_string(c), "a" + std::to_string(a), y, u(rng)});
    const auto p = raw(e, 2000, 2009);
    const auto s = smooth_moving_average(p, 3);
    for (int y = 2002; y <= 2009; ++y) {
        const double expected = (p.year_total(y) + p.year_total(y - 1) + p.year_total(y - 2)) / 3.0;
        CHECK(s.year_total(y) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("smoothing contract errors") {
    const auto p = raw({{"a", "x", 2000, 1.0}, {"a", "x", 2001, 1.0}}, 2000, 2001);
    CHECK_THROWS_AS(smooth_moving_average(p, 3), DataError);
    CHECK_THROWS(smooth_moving_average(p, 0));
    CHECK_THROWS_AS(smooth_moving_average(smooth_moving_average(p, 1), 1), DataError);
}

TEST_CASE("trade filter thresholds") {
    // Location b exports 0.9B: dropped. Activity z has a world total of 400k: dropped.
    std::vector<PanelEntry> e = {{"a", "x", 2022, 2e9}, {"a", "y", 2022, 1e9}, {"a", "z", 2022, 3e5},
                                 {"b", "x", 2022, 9e8}, {"c", "y", 2022, 5e9}, {"c", "z", 2022, 1e5}};
    const auto s = smooth_moving_average(raw(e, 2022, 2022), 1);
    const auto f = apply_filters(s, nullptr, FilterRules::defaults(Schema::trade));
    CHECK(f.provenance() == Provenance::filtered);
    CHECK(f.locations() == std::vector<std::string>{"a", "c"});
    CHECK(f.activities() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("population rule needs macro coverage") {
    std::vector<PanelEntry> e = {{"a", "x", 2022, 2e9}, {"b", "x", 2022, 2e9}};
    const auto s = smooth_moving_average(raw(e, 2022, 2022), 1);
    const MacroSeries macro({{"a", 2022, 1000.0, 5e6}, {"b", 2022, 1000.0, 5e5}});
    const auto f = apply_filters(s, &macro, FilterRules::defaults(Schema::trade));
    CHECK(f.locations() == std::vector<std::string>{"a"});
    const MacroSeries partial({{"a", 2022, 1000.0, 5e6}});
    CHECK_THROWS_AS(apply_filters(s, &partial, FilterRules::defaults(Schema::trade)), DataError);
}

TEST_CASE("filters are per year, zero rules are the identity, and filtering is idempotent") {
    std::mt19937_64 rng(11);
    std::lognormal_distribution<double> ln(12.0, 2.0);
    std::vector<PanelEntry> e;
    for (int c = 0; c < 12; ++c)
        for (int a = 0; a < 15; ++a)
            for (int y = 2000; y <= 2004; ++y)
                if ((c + a + y) % 4 != 0) e.push_back({"c" + std::to_string(c), "a" + std::to_string(a), y, ln(rng)});
    const auto s = smooth_moving_average(raw(e, 2000, 2004), 2);
    const auto same = apply_filters(s, nullptr, FilterRules{});
    CHECK(serialize_panel(same).find("filtered") != std::string::npos);
    CHECK(same.entries().size() == s.entries().size());

    const FilterRules rules{2e6, 0.0, 3e5};
    const auto once = apply_filters(s, nullptr, rules);
    const auto twice = apply_filters(once, nullptr, rules);
    CHECK(serialize_panel(once) == serialize_panel(twice));
    for (int y : once.populated_years()) {
        std::map<std::string, double> loc, act;
        for (const auto& x : once.entries())
            if (x.year == y) {
                loc[x.location] += x.value;
                act[x.activity] += x.value;
            }
        for (const auto& [k, v] : loc) CHECK(v >= rules.min_location_total);
        for (const auto& [k, v] : act) CHECK(v >= rules.min_activity_total);
    }
}

TEST_CASE("filter rules parse from JSON and reject unknown keys") {
    const auto r = parse_filter_rules(R"({"min_location_total": 1e9, "min_activity_total": 5e5})");
    CHECK(r.min_location_total == 1e9);
    CHECK(r.min_population == 0.0);
    CHECK(r.min_activity_total == 5e5);
    CHECK_THROWS_AS(parse_filter_rules(R"({"min_total": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_filter_rules("not json"), ConfigError);
    const auto payroll = FilterRules::defaults(Schema::payroll);
    CHECK(payroll.min_location_total == 1e5);
    CHECK(payroll.min_activity_total == 1.5e5);
    CHECK(payroll.min_population == 0.0);
}

TEST_CASE("saved panels round-trip byte for byte") {
    const auto p = smooth_moving_average(
        raw({{"a", "x", 2000, 0.1}, {"a", "x", 2001, 1.0 / 3.0}, {"b", "y", 2001, 1e300}}, 2000, 2001), 2);
    const auto path = temp_path("panel.txt");
    save_panel(p, path);
    const auto q = load_saved_panel(path);
    CHECK(serialize_panel(q) == serialize_panel(p));
    CHECK(q.smoothing_window() == 2);
    CHECK(q.provenance() == Provenance::smoothed);
    CHECK(value_at(q, "a", "x", 2001) == value_at(p, "a", "x", 2001));
}

TEST_CASE("empty panels save and load") {
    const OutputPanel empty(Schema::payroll, Provenance::filtered, {}, {});
    const auto q = deserialize_panel(serialize_panel(empty));
    CHECK(q.empty());
    CHECK(q.schema() == Schema::payroll);
}

TEST_CASE("truncated, tampered and wrong-version panels are rejected") {
    const auto text = serialize_panel(raw({{"a", "x", 2000, 1.0}, {"b", "x", 2000, 2.0}}, 2000, 2000));
    CHECK_THROWS_AS(deserialize_panel(text.substr(0, text.size() / 2)), DataError);
    std::string tampered = text;
    tampered[tampered.find("2000\t1")] = '3';
    CHECK_THROWS_AS(deserialize_panel(tampered), DataError);
    std::string body = text.substr(0, text.rfind("end "));
    body.replace(0, body.find('\n'), "ecopt-panel 2");
    const std::string version = body + "end " + io::hex64(io::fnv1a64(body)) + "\n";
    try {
        deserialize_panel(version);
        FAIL("version 2 accepted");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
}
