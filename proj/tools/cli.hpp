#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace gpv::cli {

// Exit statuses.
enum Exit : int { ok = 0, other = 1, config = 2, regime = 3, convergence = 4, io = 5 };

// Runs one command; argv[0] is the program name. Errors are reported on
// stderr and mapped to an exit status.
int run(int argc, const char* const* argv);

// Tidy CSVs (one row per observation) from report JSON files, by report
// kind: energy_ratio.csv (trial, minimize, sweep), bulk_axes.csv (derive),
// box_histogram.csv (vortices), square_audit.csv (audit). All four are
// written, header first. MissingInput when the list is empty or a file is absent.
std::vector<std::filesystem::path> emit_plot_data(const std::vector<std::filesystem::path>& reports,
                                                  const std::filesystem::path& out_dir);

// Environment overrides from "NAME=VALUE" entries: GPV_<NAME> sets config
// key <name> in lower case, with "__" descending into objects
// (GPV_MINIMIZE__TOL). Values are parsed as JSON when they parse and kept
// as strings otherwise. Command-line flags win over the environment.
void apply_env_overrides(nlohmann::json& cfg, const std::vector<std::string>& env);

}  // namespace gpv::cli
