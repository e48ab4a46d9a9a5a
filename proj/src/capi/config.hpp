#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "detlip.hpp"
#include "experiments.hpp"
#include "models.hpp"
#include "norms.hpp"
#include "pairs.hpp"

namespace slc::app {

inline constexpr std::uint64_t kDefaultSeed = 20240611;

const std::vector<std::string>& subcommands();

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> realizations;
};

// Fully parsed run description. `resolved` is the canonical JSON form (defaults filled
// in, overrides applied); feeding it back in reproduces the run exactly.
struct RunConfig {
  std::string subcommand;
  std::uint64_t seed = kDefaultSeed;
  nlohmann::json resolved;

  std::optional<SystemModel> model;
  NormSpec norm{};
  std::optional<DomainBox> domain;
  Matrix matrix;
  std::vector<double> ladder;
  std::vector<double> sllc_ladder;
  double l = 2.0;
  double T = 0.0;
  double h = 1e-3;
  std::size_t realizations = 1000;
  std::size_t grid = 41;
  std::size_t mc_samples = 20000;
  std::size_t screen_samples = 512;
  std::size_t final_candidates = 4;
  std::size_t record_stride = 1;
  std::size_t paths = 1;
  std::size_t path_stride = 100;
  LipschitzMode mode = LipschitzMode::StrongLub;
  PairSamplingConfig pairs{};
  std::vector<Vector> initials;
  std::optional<double> window_lo, window_hi;
  std::vector<double> sigmas;
  double sigma = 0.35;
  double threshold = 1e-2;
  double tolerance = 1e-3;
  bool expect_decay = false;
  bool sllc_check = false;
  // Destination for the CLI; not part of `resolved` so outputs do not depend on it.
  std::optional<std::string> output_dir;
};

struct Validation {
  std::optional<RunConfig> config;
  std::vector<std::string> errors;
};

// Schema validation collecting every error. `subcommand` (if non-empty) must agree with
// the config's own "subcommand" key when both are present.
Validation validate(const std::string& subcommand, const std::string& config_text, const RunOverrides& overrides = {});

}  // namespace slc::app
