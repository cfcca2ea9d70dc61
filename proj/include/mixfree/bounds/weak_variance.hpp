#pragma once

// Noise level V_{2q}: the supremum over a resolution set of functions g of
//   ( E | n^{-1/2} sum_i W_i g(X_i) / ||g|| - mean |^{2q} )^{1/q}.

#include <cstdint>
#include <vector>

#include "mixfree/erm.hpp"

namespace mixfree {

enum class WeakVarianceMode { Exact, MonteCarlo, Analytic };

WeakVarianceMode weak_variance_mode_from_string(const std::string& name);
std::string to_string(WeakVarianceMode mode);

struct WeakVarianceOptions {
  WeakVarianceMode mode = WeakVarianceMode::Exact;
  std::size_t replicates = 20000;
  std::uint64_t seed = 1;
  /// Largest number of enumerated (state, noise) paths allowed in exact mode.
  double enumeration_cap = 2e7;
};

struct WeakVarianceResult {
  double value = 0.0;
  double std_error = 0.0;  // zero outside Monte Carlo mode
  std::size_t argmax = 0;
  std::vector<double> per_function;
  std::vector<double> per_function_se;
};

/// Exact mode enumerates the joint law of the path; Monte Carlo samples it;
/// analytic mode (q = 1 only) sums exact lagged covariances of the chain.
/// Throws ConfigError for an empty set or a member with zero L2 norm, and
/// when the enumeration would exceed the cap.
WeakVarianceResult weak_variance_2q(const RegressionProblem& problem,
                                    const PopulationQuantities& pop,
                                    const std::vector<StateFunction>& resolution, double q,
                                    std::size_t n, const WeakVarianceOptions& options = {});

/// C_ab = n^{-1} Cov(sum_i W_i g_a(X_i), sum_i W_i g_b(X_i)), exact.
Matrix noise_interaction_covariance(const RegressionProblem& problem,
                                    const PopulationQuantities& pop,
                                    const std::vector<StateFunction>& features, std::size_t n);

/// q = 1 supremum over every nonzero linear functional of the covariates:
/// the top generalised eigenvalue of C (features = coordinates) against Sigma.
double weak_variance_linear(const RegressionProblem& problem, const PopulationQuantities& pop,
                            std::size_t n);

}  // namespace mixfree
