#pragma once

// Stationary finite-state Markov models, their exact beta-mixing
// coefficients, and seeded trajectory sampling.
//
// Conventions:
//  * total variation between discrete laws is (1/2) * l1 distance;
//  * the supremum over the conditioning time in the beta-mixing definition
//    is dropped: for a time-homogeneous chain started from its stationary
//    law the conditional term does not depend on t, so
//        beta(i) = sum_x pi(x) * TV(P^i(x, .), pi)
//    is exact here (and only here; general processes are not covered).

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mixfree {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Stationary law of an irreducible row-stochastic matrix. Throws
/// ConfigError when the matrix is not stochastic or not irreducible (no
/// unique stationary law).
Vector stationary_distribution(const Matrix& transition);

class MarkovChainModel {
 public:
  /// Validates `transition` (square, entries in [0,1], rows summing to 1
  /// within 1e-12, irreducible) and solves for the stationary law.
  static MarkovChainModel from_transition(Matrix transition);

  /// Two states with P(0->1) = p and P(1->0) = q.
  static MarkovChainModel two_state(double p, double q);

  /// Symmetric two-state chain whose second eigenvalue is `dependence`
  /// (p = q = (1 - dependence)/2, uniform stationary law).
  static MarkovChainModel symmetric_two_state(double dependence);

  /// `copies` independent copies of `base` run in lockstep. State index
  /// encodes the copies in base-S digits, copy 0 least significant.
  static MarkovChainModel product(const MarkovChainModel& base, int copies);

  /// P = stay * I + (1 - stay) * 1 pi^T: with probability 1 - stay the chain
  /// redraws from pi, otherwise it holds. Requires stay in [0, 1) and pi > 0.
  static MarkovChainModel refresh(const Vector& pi, double stay);

  int states() const { return static_cast<int>(stationary_.size()); }
  const Matrix& transition() const { return transition_; }
  const Vector& stationary() const { return stationary_; }

  /// Cumulative tables used by the samplers.
  const std::vector<double>& stationary_cdf() const { return stationary_cdf_; }
  const std::vector<double>& row_cdf(int state) const { return row_cdf_[state]; }

 private:
  MarkovChainModel(Matrix transition, Vector stationary);

  Matrix transition_;
  Vector stationary_;
  std::vector<double> stationary_cdf_;
  std::vector<std::vector<double>> row_cdf_;
};

/// beta(1..horizon) by repeated multiplication with the transition matrix.
std::vector<double> beta_coefficients(const MarkovChainModel& model, int horizon);

enum class NoiseKind { BoundedIid, MartingaleDifference, StateDependentBias };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

struct NoiseAtom {
  double value;
  double prob;
};

using NoiseLaw = std::vector<NoiseAtom>;

/// Additive noise on top of the regression function. The draw at time i
/// depends only on the state at time i, so the chain is never influenced by
/// past noise.
class NoiseSpec {
 public:
  /// One law shared by every state.
  static NoiseSpec bounded_iid(NoiseLaw law, std::optional<double> bound = std::nullopt);
  /// One zero-mean law per state.
  static NoiseSpec martingale_difference(std::vector<NoiseLaw> per_state,
                                         std::optional<double> bound = std::nullopt);
  /// One law per state with arbitrary means (misspecification source).
  static NoiseSpec state_dependent_bias(std::vector<NoiseLaw> per_state,
                                        std::optional<double> bound = std::nullopt);

  NoiseKind kind() const { return kind_; }
  /// Law at `state` (the shared law for bounded-iid noise).
  const NoiseLaw& law(int state) const;
  std::size_t law_count() const { return laws_.size(); }
  /// Declared bound, or the largest |value| in the support when none was set.
  double bound() const { return bound_; }
  bool bound_declared() const { return declared_; }

  double conditional_mean(int state) const;
  double conditional_second_moment(int state) const;
  const std::vector<double>& law_cdf(int state) const;

 private:
  NoiseSpec(NoiseKind kind, std::vector<NoiseLaw> laws, std::optional<double> bound);

  NoiseKind kind_;
  std::vector<NoiseLaw> laws_;
  std::vector<std::vector<double>> cdfs_;
  double bound_ = 0.0;
  bool declared_ = false;
};

enum class TargetMode { Linear, Tabular };

/// Y_i = mu(X_i) + noise, with mu either <beta, phi(state)> (linear mode) or
/// a table over states (tabular mode). Covariates are phi(state).
class RegressionProblem {
 public:
  static RegressionProblem linear(MarkovChainModel chain, Matrix embedding, Vector true_param,
                                  NoiseSpec noise);
  static RegressionProblem tabular(MarkovChainModel chain, Matrix embedding,
                                   std::vector<double> true_table, NoiseSpec noise);

  const MarkovChainModel& chain() const { return chain_; }
  /// S x d, row s is the covariate of state s.
  const Matrix& embedding() const { return embedding_; }
  int dim() const { return static_cast<int>(embedding_.cols()); }
  int states() const { return chain_.states(); }
  TargetMode mode() const { return mode_; }
  const Vector& true_param() const { return true_param_; }
  const NoiseSpec& noise() const { return noise_; }

  /// mu(state) for every state.
  const std::vector<double>& regression_table() const { return regression_; }
  /// Population second moment E[X X^T] under pi.
  Matrix second_moment() const;

 private:
  RegressionProblem(MarkovChainModel chain, Matrix embedding, TargetMode mode, Vector param,
                    std::vector<double> table, NoiseSpec noise);

  MarkovChainModel chain_;
  Matrix embedding_;
  TargetMode mode_;
  Vector true_param_;
  std::vector<double> regression_;
  NoiseSpec noise_;
};

/// One sampled path. Covariates are n x d, column-major.
struct Trajectory {
  std::size_t n = 0;
  std::vector<std::int32_t> states;
  Matrix covariates;
  std::vector<double> targets;
  std::uint64_t seed = 0;
};

/// Stationary start, kernel transitions, targets from the problem. A pure
/// function of (problem, n, seed).
Trajectory sample_trajectory(const RegressionProblem& problem, std::size_t n, std::uint64_t seed);

/// n/k independent stationary blocks of length k, concatenated. Throws
/// ConfigError unless k divides n.
Trajectory kwise_independent_surrogate(const RegressionProblem& problem, std::size_t n,
                                       std::size_t k, std::uint64_t seed);

/// Writes columns t, state, x_1..x_d, y (t is 1-based).
void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out);
/// Parses what write_trajectory_csv writes.
Trajectory read_trajectory_csv(std::istream& in);

}  // namespace mixfree
