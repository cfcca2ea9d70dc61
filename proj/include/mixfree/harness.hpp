#pragma once

// Monte Carlo experiments: rate sweeps over (n, mixing level), log-log rate
// fits, the mixing-free comparison of leading constants, coverage of the
// probabilistic bounds, and sign/magnitude diagnostics of the processes.

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <json.hpp>

#include "mixfree/bounds/report.hpp"

namespace mixfree {

using ProblemFactory = std::function<RegressionProblem(double level)>;
using ClassFactory = std::function<HypothesisClass(const RegressionProblem&)>;

struct SweepConfig {
  ProblemFactory make_problem;
  ClassFactory make_class;
  std::vector<std::size_t> n_grid;
  std::vector<double> mixing_levels;
  std::size_t replicates = 1;
  std::uint64_t master_seed = 1;
  /// n and (unless fixed) k are set per cell.
  BoundConfig bound;
};

/// Seed of the trajectory for one (level, n, replicate) cell.
std::uint64_t cell_seed(std::uint64_t master, double level, std::size_t n, std::size_t replicate);

/// Excess L2 risk of ERM on one sampled trajectory.
double run_cell(const SweepConfig& config, std::size_t n, double level, std::size_t replicate);

struct SweepRow {
  std::size_t n = 0;
  double level = 0.0;
  std::size_t replicate = 0;
  double excess_risk = 0.0;
  std::size_t k = 0, n_quad = 0, n_mult = 0, k_mix = 0;
  double r_star = 0.0, risk_bound = 0.0;
};

struct CellSummary {
  std::size_t n = 0;
  double median = 0.0;
  BoundReport bound;
};

struct RateFit {
  double exponent = 0.0;
  double log_constant = 0.0;
  double r_squared = 0.0;
  std::vector<double> ns;
  std::vector<double> medians;
};

/// OLS of log median on log n. Needs >= 3 points and positive medians.
RateFit fit_rate(std::span<const double> ns, std::span<const double> medians);

/// Intercept with the slope held fixed: mean of log(median) - slope log n.
RateFit fit_rate_fixed_slope(std::span<const double> ns, std::span<const double> medians,
                             double slope);

struct LevelSummary {
  double level = 0.0;
  std::vector<CellSummary> cells;
  std::optional<RateFit> fit;  // over every n, when >= 3 points
  std::size_t inversions = 0;  // adjacent increases of the median in n
};

struct MixingFreeReport {
  double slow_level = 0.0, fast_level = 0.0;
  std::vector<std::size_t> n_used;  // past burn-in at every level
  double constant_slow = 0.0, constant_fast = 0.0;  // exp intercept, slope -1
  double ratio = 0.0;                               // slow / fast
  std::size_t k_slow = 0, k_fast = 0;               // block lengths at the smallest used n
  double naive_ratio = 0.0;                         // k_slow / k_fast
  std::optional<RateFit> free_fit_slow, free_fit_fast;
  bool accepted = false;  // ratio <= naive_ratio
};

/// Slowest and fastest levels are those with the largest and smallest k_mix
/// at the largest n. Throws NumericError when no grid n is past burn-in at
/// both levels.
MixingFreeReport mixing_free_check(const std::vector<LevelSummary>& levels);

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<LevelSummary> levels;
  std::optional<MixingFreeReport> mixing_free;
  std::string mixing_free_error;
  bool monotone_ok = true;  // at most one inversion per level
};

SweepResult run_sweep(const SweepConfig& config);

void write_sweep_csv(const SweepResult& result, std::ostream& out);
nlohmann::json sweep_summary_json(const SweepResult& result);
/// Log-log plot of cell medians per level.
void write_sweep_svg(const SweepResult& result, std::ostream& out);

struct CoverageRow {
  std::size_t trial = 0;
  double blocked_mean = 0.0;  // realised quantity
  double bound = 0.0;
  bool exceeded = false;
};

struct CoverageResult {
  std::size_t replicates = 0;
  std::size_t exceedances = 0;
  double frequency = 0.0;
  double std_error = 0.0;   // binomial SE at the nominal level
  double level = 0.0;       // nominal failure probability
  double threshold = 0.0;   // level + 3 SE
  bool passed = false;
  std::optional<double> calibrated_c2;
  std::vector<CoverageRow> rows;
};

/// Fraction of realised values strictly above their bounds, judged against
/// `level` + 3 binomial standard errors.
CoverageResult exceedance_frequency(std::span<const double> realised,
                                    std::span<const double> bounds, double level);

struct BlockedBernsteinConfig {
  double dependence = 0.9;  // second eigenvalue of the symmetric two-state chain
  std::size_t n = 1024;
  std::size_t k = 8;
  double delta = 0.05;
  std::size_t replicates = 10000;
  std::uint64_t seed = 1;
};

/// E(block sum)^2 for the +-1 sign of a symmetric two-state chain:
/// k + 2 sum_{l<k} (k - l) dependence^l.
double two_state_block_second_moment(double dependence, std::size_t k);

/// k-wise independent +-1 data; realised value is the sample mean.
CoverageResult blocked_bernstein_coverage(const BlockedBernsteinConfig& config);

struct RiskCoverageConfig {
  ProblemFactory make_problem;
  ClassFactory make_class;
  double level = 0.0;
  std::size_t n = 1024;
  double delta = 0.0125;
  std::size_t calibration_replicates = 500;
  std::size_t validation_replicates = 2000;
  std::uint64_t calibration_seed = 1;
  std::uint64_t validation_seed = 2;
  BoundConfig bound;
};

/// c2 is the smallest constant leaving at most a 4 delta fraction of
/// calibration replicates above c2 (r*^2 + V log(1/delta)/n); validation
/// reports the exceedance frequency on fresh seeds at level 4 delta.
CoverageResult risk_bound_coverage(const RiskCoverageConfig& config);

struct DiagnosticsConfig {
  ProblemFactory make_problem;
  ClassFactory make_class;
  double level = 0.0;
  std::size_t n = 8192;
  double epsilon = 0.5;
  std::size_t replicates = 500;
  std::uint64_t seed = 1;
  std::size_t linear_directions = 1000;
  BoundConfig bound;
};

struct DiagnosticsReport {
  double r_star = 0.0;
  std::size_t n_quad = 0;
  std::size_t pairs = 0;
  std::size_t positive_pairs = 0;
  double positive_fraction = 0.0;
  std::vector<double> multiplier_sup;  // per replicate
  double multiplier_rhs = 0.0;         // c1 = c2 = 1
  double calibrated_constant = 0.0;    // from the first half of replicates
  double within_fraction = 0.0;        // second half under the calibrated rhs
};

/// Q_n sign outside the r*-ball and sup of (1/(r n)) sum (1 - E) W f over
/// the r*-sphere. Finite classes use their star-hull directions; linear
/// classes a seeded direction grid for Q_n and the exact supremum for M_n.
DiagnosticsReport process_diagnostics(const DiagnosticsConfig& config);

nlohmann::json to_json(const CoverageResult& result);
nlohmann::json to_json(const DiagnosticsReport& report);
void write_coverage_csv(const CoverageResult& result, std::ostream& out);

}  // namespace mixfree
