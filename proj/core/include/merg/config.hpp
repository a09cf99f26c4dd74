#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "merg/markov_model.hpp"
#include "merg/report.hpp"
#include "merg/tilted_operator.hpp"

namespace merg {

struct ConfigIssue {
  int line = 0;  // 1-based; 0 when the issue is not tied to a line
  std::string key;
  std::string message;
};

// Carries every problem found in one pass; parsing is all-or-nothing.
struct ConfigError : std::runtime_error {
  explicit ConfigError(std::vector<ConfigIssue> issues_);
  std::vector<ConfigIssue> issues;
};

// Fully validated run configuration: a config the parser accepts runs
// without configuration-related failure.
struct RunConfig {
  MarkovModel model;
  GridSpec grid;
  InitialLaw initial;

  std::vector<double> gammas;

  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
  int mc_horizon = 10;

  double nu_bracket_lo = 0.01;
  double nu_bracket_hi = 8.0;
  double nu_tol = 1e-8;

  double lambda = 2.0;
  int fit_horizons = 25;
  double series_tol = 1e-6;

  double ce_step = 1.0;
  std::vector<double> ce_betas = {1.0, 0.1, 0.01};
  std::vector<int> ce_ns = {1, 2, 5, 10};

  int precision = 17;

  std::uint64_t config_hash = 0;

  ReportOptions report_options() const;
};

// Strict parser for the line-oriented `section.key = value` format:
// unknown keys, malformed values and out-of-range parameters are collected
// and reported together with line numbers (expression errors carry a caret
// position). Aborts with ConfigError on any issue.
RunConfig parse_config(const std::string& text);

RunConfig load_config_file(const std::string& path);

}  // namespace merg
