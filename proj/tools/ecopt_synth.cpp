// Writes the bundled synthetic trade panel and macro series.

#include "ecopt/error.hpp"
#include "ecopt/synthetic.hpp"
#include "ecopt/text_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Generate the synthetic trade and macro CSVs"};
    ecopt::SyntheticSpec spec;
    std::string out = "data";
    app.add_option("--out-dir", out, "Output directory");
    app.add_option("--seed", spec.seed, "Random seed");
    app.add_option("--locations", spec.locations);
    app.add_option("--activities", spec.activities);
    CLI11_PARSE(app, argc, argv);
    try {
        const auto world = ecopt::generate_synthetic(spec);
        const std::filesystem::path dir = out;
        ecopt::io::write_file(dir / "synthetic_trade.csv", ecopt::panel_csv(world.panel));
        ecopt::io::write_file(dir / "synthetic_macro.csv", ecopt::macro_csv(world.macro));
        std::cerr << world.panel.size() << " panel entries written to " << dir.string() << '\n';
    } catch (const ecopt::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ecopt::exit_code_for(e);
    }
    return 0;
}
