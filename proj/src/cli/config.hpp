#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcgl/potential.hpp"

namespace mcgl::cli {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
    std::string potential_kind = "tilted-quartic";
    double tilt = 0.0;
    PotentialSpec potential = PotentialSpec::tilted_quartic(0.0);

    std::vector<double> eps_list{0.2, 0.15, 0.1, 0.08};
    std::vector<double> r_list{1.5, 2.0, 2.5};
    double solver_tol = 1e-11;
    double quad_tol = 1e-13;
    double window = 0.1;
    int n_max = 3;
    int grid_size = 2001;
    double exclusion_halfwidth = 0.1;
    std::filesystem::path output_dir = ".";
    std::uint64_t seed = 1;

    // [simulate]
    int n_cells = 200;
    double sim_eps = 0.1;
    double sim_r = 2.0;
    double t_end = 10.0;
    double dt_init = 1e-4;
    double dt_max = 2e-2;
    double safety = 0.9;
    double sample_interval = 0.05;
    std::string stepper = "semi-implicit";
    std::string init = "step";
    std::string init_file;

    std::vector<std::string> warnings;

    // Stable text form of every setting; the config hash is taken over it.
    std::string canonical() const;
};

RunConfig load_config(const std::filesystem::path& path);
void validate(const RunConfig& cfg);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::string config_hash(const std::string& canonical);

// 17 significant digits, '.' decimal, NaN spelled "NaN".
std::string fmt17(double v);
// Shortest round-trip form, for file names.
std::string fmt_short(double v);

std::vector<double> parse_list(const std::string& text);

}  // namespace mcgl::cli
