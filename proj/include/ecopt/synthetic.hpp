#pragma once

#include "ecopt/ingest.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ecopt {

// Parameters of the bundled synthetic world: locations with a slowly rising
// latent capability produce activities whose latent complexity they can
// reach, with AR(1) log-output dynamics around that level.
struct SyntheticSpec {
    int locations = 30;
    int activities = 200;
    int first_year = 1998;
    int last_year = 2022;
    std::uint64_t seed = 20240917;
};

struct SyntheticWorld {
    OutputPanel panel;  // raw, trade schema
    MacroSeries macro;
    std::vector<std::string> location_ids;
    std::vector<std::string> activity_ids;
    std::vector<double> capability;  // at first_year, per location
    std::vector<double> complexity;  // per activity
};

SyntheticWorld generate_synthetic(const SyntheticSpec& spec = {});

// CSV writers in the loader formats.
std::string panel_csv(const OutputPanel& panel);
std::string macro_csv(const MacroSeries& macro);

}  // namespace ecopt
