// slpgen-mkdata: procedural fingerprint corpora for experiments and demos.
// Writes "<id>_roll.png" rolled prints and, unless disabled, a degraded
// "<id>_lat.png" mate for each identity.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "slp/slp.hpp"

int main(int argc, char** argv) {
    CLI::App app{"procedural fingerprint corpus builder"};

    int n = 32;
    int size = 64;
    std::uint64_t seed = 1;
    std::string out_dir = "data";
    std::string degrade = "bad";  // good|bad|ugly|mixed|none
    std::string prefix = "id";
    double wavelength = 7.0;

    app.add_option("--n", n, "identities to generate")->check(CLI::PositiveNumber);
    app.add_option("--size", size, "square image edge in pixels")
        ->check(CLI::Range(16, 1024));
    app.add_option("--seed", seed, "base seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--degrade", degrade, "latent degradation preset, or none for rolled-only")
        ->check(CLI::IsMember({"good", "bad", "ugly", "mixed", "none"}));
    app.add_option("--prefix", prefix, "identity prefix");
    app.add_option("--wavelength", wavelength, "ridge period in pixels");

    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);
        slp::RidgePatternParams params;
        params.size = size;
        params.wavelength = wavelength;
        auto ids = slp::make_identities(n, seed, params, prefix);

        for (std::size_t i = 0; i < ids.size(); ++i) {
            slp::FingerprintImage rolled = ids[i];
            std::string identity = rolled.id;
            rolled.id = identity + "_roll";
            slp::write_png(rolled, out_dir + "/" + rolled.id + ".png");
            if (degrade == "none") continue;

            slp::DegradationParams p;
            std::string pick = degrade;
            if (pick == "mixed") {
                const char* cycle[3] = {"good", "bad", "ugly"};
                pick = cycle[i % 3];
            }
            if (pick == "good") p = slp::DegradationParams::good();
            else if (pick == "bad") p = slp::DegradationParams::bad();
            else p = slp::DegradationParams::ugly();

            slp::FingerprintImage latent =
                slp::apply_degradation(ids[i], p, slp::derive_seed(seed, 0xde6, i));
            latent.id = identity + "_lat";
            slp::write_png(latent, out_dir + "/" + latent.id + ".png");
        }
        std::cout << "wrote " << ids.size() << " identities to " << out_dir << "\n";
        return 0;
    } catch (const slp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
