#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace slc::app {

struct Table {
  std::string name;  // file name, e.g. "divergence_0_1.csv"
  std::string csv;
};

struct RunReport {
  nlohmann::json summary;  // {subcommand, config, seed, results, timings}
  std::vector<Table> tables;
  // False when the run finished but its Monte Carlo part is invalid (blow-up fraction too high).
  bool valid = true;
  std::string output_dir;  // empty when the config names none
};

// Shortest round-trip text of a double; "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double v);

// Runs the subcommand. `threads` only affects scheduling, never the output.
RunReport run(const RunConfig& config, std::size_t threads);

}  // namespace slc::app
