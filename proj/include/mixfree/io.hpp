#pragma once

// JSON experiment configs (strict: unknown keys are rejected) and readers
// for the CSV artifacts the command-line tool writes.

#include <iosfwd>
#include <optional>
#include <string>
#include <json.hpp>

#include "mixfree/harness.hpp"

namespace mixfree {

/// Parses JSON text; syntax errors become ConfigError "<source>:<line>:<col>: ...".
nlohmann::json parse_json_text(const std::string& text, const std::string& source);
nlohmann::json load_json_file(const std::string& path);

/// Throws ConfigError naming `path.key` for the first key not in `allowed`.
void require_known_keys(const nlohmann::json& object, std::initializer_list<const char*> allowed,
                        const std::string& path);

/// `level`, when given, overrides the chain's dependence knob
/// (symmetric_two_state.dependence, refresh.stay, or the base of a product).
MarkovChainModel chain_from_json(const nlohmann::json& j, std::optional<double> level = {},
                                 const std::string& path = "problem.chain");
RegressionProblem problem_from_json(const nlohmann::json& j, std::optional<double> level = {});
HypothesisClass class_from_json(const nlohmann::json& j, const RegressionProblem& problem);
BoundConfig bound_config_from_json(const nlohmann::json& j);

struct ExperimentConfig {
  nlohmann::json problem;
  nlohmann::json cls;
  BoundConfig bound;
  std::uint64_t seed = 1;
  nlohmann::json simulate, sweep, coverage, diagnose, certify;  // null when absent
};

ExperimentConfig experiment_from_json(const nlohmann::json& root);

ProblemFactory problem_factory(const ExperimentConfig& config);
ClassFactory class_factory(const ExperimentConfig& config);
SweepConfig sweep_config(const ExperimentConfig& config);

/// "blockedBernstein" (the default) or "riskBound".
std::string coverage_kind(const ExperimentConfig& config);
BlockedBernsteinConfig blocked_bernstein_config(const ExperimentConfig& config);
/// Calibration and validation seeds are derived from the config seed as
/// streams 1 and 2.
RiskCoverageConfig risk_coverage_config(const ExperimentConfig& config);
DiagnosticsConfig diagnostics_config(const ExperimentConfig& config);

std::vector<SweepRow> read_sweep_csv(std::istream& in);
std::vector<CoverageRow> read_coverage_csv(std::istream& in);

}  // namespace mixfree
