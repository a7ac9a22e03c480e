#pragma once

#include <stdexcept>
#include <string>

#include "catoni/harness.hpp"

namespace catoni {

struct ConfigError : std::runtime_error {
  ConfigError(int line_number, const std::string& what)
      : std::runtime_error(line_number > 0
                               ? "line " + std::to_string(line_number) + ": " + what
                               : what),
        line(line_number) {}
  int line = 0;
};

// Full tool configuration: the experiment description plus the handful of
// keys only individual subcommands use.
struct ToolConfig {
  ExperimentConfig experiment{};
  InfluenceSpec influence{};   // psi1/psi2 selection for joint-catoni fits
  std::string model = "mean";  // mean | regression | ridge
  double lambda0 = 0.0;        // joint_ridge penalty scale (ridge subcommand)
  double ridge_lambda = -1.0;  // fixed ridge penalty; < 0 means select by CV
  std::string response;        // response column (name or 0-based index)
  std::size_t sis_keep = 0;    // screen subcommand
};

// key = value file, '#' comments, blank lines ignored. Unknown keys,
// malformed values and missing required fields raise ConfigError with the
// offending line number. Defaults: eps 0.01, reps 1000, trim_alpha 0.1.
ToolConfig parse_config(const std::string& path);

// Serialised echo of the resolved configuration, used for report metadata.
std::map<std::string, std::string> config_metadata(const ToolConfig& cfg);

}  // namespace catoni
