#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpsbp/forward.hpp"
#include "dpsbp/inverse.hpp"

namespace dpsbp {

enum class ExperimentKind {
  Convergence1d,
  Convergence2d,
  Forward1d,
  Forward2d,
  Inverse1d,
  Inverse2d,
  CertifyOps,
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::CertifyOps;
  int order = 4;
  std::optional<std::pair<TimeFlavor, TimeFlavor>> flavors;  // all four if unset
  double sigma = 0.0;
  double c = 1.0;
  std::vector<double> deltas;
  std::vector<int> blocks;  // one entry, or one per delta
  PenaltyConfig penalty = PenaltyConfig::defaults();
  ObjectiveForm objective_form = ObjectiveForm::Printed;
  int max_iter = 10;
  std::vector<double> snapshot_times{0.5, 1.0, 1.5, 2.0};
  std::string out_dir = ".";
  int threads = 1;

  std::string to_json() const;
};

/// Parse and validate a JSON config file. Throws Error{ParseError} with line
/// information on malformed input and Error{InvalidConfig} listing every
/// violated constraint.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<string>");

/// Run the experiment, writing CSV outputs into cfg.out_dir.
/// Returns 0 on success.
int run(const ExperimentConfig& cfg);

}  // namespace dpsbp
