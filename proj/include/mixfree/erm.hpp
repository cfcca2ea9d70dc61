#pragma once

// Hypothesis classes, empirical risk minimisation under square loss, exact
// population quantities under the stationary law, and the two empirical
// processes (quadratic and multiplier) that control the ERM excess risk.
//
// Every hypothesis ultimately acts on chain states, so a function is stored
// as a table over states (StateFunction). Linear hypotheses are additionally
// represented by their parameter vector.

#include <optional>
#include <span>
#include <vector>

#include "mixfree/processgen.hpp"

namespace mixfree {

using StateFunction = std::vector<double>;

class HypothesisClass {
 public:
  static HypothesisClass linear(int dim);
  /// Throws ConfigError on an empty list or tables of unequal length.
  static HypothesisClass finite(std::vector<StateFunction> members);

  bool is_linear() const { return linear_; }
  int dim() const { return dim_; }
  const std::vector<StateFunction>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }

  /// Points per segment used where a supremum over the star hull
  /// {rho (f - f*) : rho in [0,1]} is discretised.
  int star_grid() const { return star_grid_; }
  void set_star_grid(int points);

 private:
  bool linear_ = true;
  int dim_ = 0;
  std::vector<StateFunction> members_;
  int star_grid_ = 64;
};

struct PopulationQuantities {
  StateFunction f_star;
  std::optional<Vector> param;        // linear classes
  std::optional<std::size_t> index;   // finite classes
  Matrix sigma;                       // E[X X^T]
  double noise_variance = 0.0;        // V(W), W = Y - f*(X)
  double risk = 0.0;                  // E (f*(X) - Y)^2
  std::vector<double> w_mean;         // E[W | state]
  std::vector<double> w_second;       // E[W^2 | state]
};

/// Best in-class predictor and the noise it leaves behind, computed exactly
/// as sums over the stationary law. Linear classes need lambda_min(Sigma) > 0.
PopulationQuantities population_quantities(const RegressionProblem& problem,
                                           const HypothesisClass& cls);

struct ERMResult {
  std::optional<Vector> fitted_param;
  std::optional<std::size_t> fitted_index;
  double empirical_risk = 0.0;
  std::optional<double> excess_l2_squared;
  /// Linear: the design was rank deficient and the minimum-norm minimiser
  /// was chosen. Finite: another member had exactly the same empirical risk.
  bool tie_broken = false;
};

/// Minimum-norm least-squares fit over the trajectory covariates.
ERMResult fit_erm_linear(const Trajectory& trajectory);
/// Exhaustive scan; ties go to the lowest index.
ERMResult fit_erm_finite(const Trajectory& trajectory, const HypothesisClass& cls);
/// Dispatches on the class kind and fills excess_l2_squared.
ERMResult fit_erm(const Trajectory& trajectory, const HypothesisClass& cls,
                  const RegressionProblem& problem, const PopulationQuantities& pop);

/// <beta, phi(state)> for every state.
StateFunction linear_table(const RegressionProblem& problem, const Vector& beta);

/// E (f - f*)^2(X) under pi.
double excess_l2(const StateFunction& f, const StateFunction& f_star,
                 const RegressionProblem& problem);
/// (beta - beta*)^T Sigma (beta - beta*).
double excess_l2(const Vector& beta, const PopulationQuantities& pop);

/// Mean over the trajectory of E(f-f*)^2(X_i) minus (1+eps) times the
/// empirical mean of (f-f*)^2(X_i).
double quadratic_process(const StateFunction& f, const StateFunction& f_star,
                         const Trajectory& trajectory, const RegressionProblem& problem,
                         double epsilon);

/// W_i = Y_i - f*(X_i).
std::vector<double> residuals(const Trajectory& trajectory, const StateFunction& f_star);

/// ((1+eps)/n) sum_i 2 (W_i g(X_i) - E[W g(X)]), with the centring term
/// evaluated exactly from the model.
double multiplier_process(const StateFunction& g, const Trajectory& trajectory,
                          const RegressionProblem& problem, const PopulationQuantities& pop,
                          double epsilon);
/// Same, reusing precomputed residuals.
double multiplier_process(const StateFunction& g, std::span<const double> residuals,
                          const Trajectory& trajectory, const RegressionProblem& problem,
                          const PopulationQuantities& pop, double epsilon);

/// E[W g(X)] under the model.
double noise_correlation(const StateFunction& g, const RegressionProblem& problem,
                         const PopulationQuantities& pop);

/// sqrt(E g(X)^2) under pi.
double l2_norm(const StateFunction& g, const RegressionProblem& problem);

}  // namespace mixfree
