#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace mcgl::cli {

// Each command writes its artifacts under cfg.output_dir, prints a short
// summary to `out`, and returns the paths it wrote. Library errors propagate.
using Written = std::vector<std::filesystem::path>;

Written cmd_maxwell_point(const RunConfig& cfg, std::ostream& out);
Written cmd_solve(const RunConfig& cfg, double eps, double r, std::ostream& out);
Written cmd_sweep(const RunConfig& cfg, std::ostream& out);
Written cmd_rank(const RunConfig& cfg, double eps, double r, std::ostream& out);
Written cmd_second_variation(const RunConfig& cfg, double eps, double r, int n, std::ostream& out);
Written cmd_limit_check(const RunConfig& cfg, std::ostream& out);
// init: maxwell | step | spinodal | file
Written cmd_simulate(const RunConfig& cfg, const std::string& init, std::ostream& out);

// MCGL_THREADS if set and positive, else the hardware concurrency.
unsigned worker_count();

// Rows of a CSV file, '#' lines skipped, header row dropped.
std::vector<std::vector<double>> read_csv(const std::filesystem::path& path);

}  // namespace mcgl::cli
