#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "holonomy/protocols.hpp"

namespace holonomy::cli {

/// Resolved experiment parameters. Values come from, in order of
/// precedence: command-line flags, a --config JSON file with the same
/// field names, the HOLONOMY_SEED environment variable (seed only),
/// and the defaults below.
struct ExperimentConfig {
  std::string mode;
  std::size_t k = 1;
  std::size_t m = 1;
  std::vector<double> phases;
  double phi = 0.0;
  std::size_t refinement = 1;
  double theta = 0.78539816339744831;  // pi/4
  std::size_t ambient = 0;             // 0 = per-mode default (2k)
  std::uint64_t seed = 0;
  std::size_t shots = 1;
  std::size_t max_steps = 10000;
  std::string output_path = ".";
  bool per_shot = false;
};

/// Executes one CLI invocation (argv without the program name) and
/// writes report files under the configured output path.
/// Returns 0 on success, 2 on configuration errors, 1 on numerical
/// failure. Identical (config, seed) pairs produce byte-identical
/// reports.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace holonomy::cli
