#pragma once

// End-to-end evaluation of the risk bound for one problem, class and n.

#include <iosfwd>
#include <json.hpp>

#include "mixfree/bounds/certify.hpp"
#include "mixfree/bounds/psi_norm.hpp"
#include "mixfree/bounds/radius.hpp"
#include "mixfree/bounds/weak_variance.hpp"

namespace mixfree {

struct BoundConfig {
  std::size_t n = 1024;
  double delta = 0.05;
  double q = 1.0;
  double p = kInf;
  double epsilon = 0.5;
  double c = 1.0, c1 = 1.0, c2 = 1.0, c3 = 1.0, c_alpha = 1.0;
  /// Block length; 0 picks the smallest divisor of n/2 that is >= k_mix.
  std::size_t k = 0;
  WeakVarianceMode weak_variance_mode = WeakVarianceMode::Analytic;
  std::size_t weak_variance_replicates = 4000;
  std::uint64_t seed = 1;
  /// Finite classes only; linear classes always use linear-exact.
  CertMethod cert_method = CertMethod::FiniteExact;
  CertifyOptions certify;
};

struct BoundReport {
  double q = 1.0, q_prime = kInf, p = kInf;
  double L = 1.0, eta = 1.0;
  std::string cert_method;
  double noise_psi = 0.0;
  double weak_variance = 0.0;
  double gamma2 = 0.0, gamma_eta = 0.0, gamma_mixed = 0.0;
  double r_star = 1.0;
  bool r_floored = false, r_saturated = false;
  std::size_t n = 0, k = 0;
  std::size_t n_quad = 0, n_mult = 0, k_mix = 0;
  bool past_burn_in = false;
  double risk_bound = 0.0;
  double delta = 0.05, epsilon = 0.5;
  double c = 1.0, c1 = 1.0, c2 = 1.0, c3 = 1.0, c_alpha = 1.0;
  std::vector<Term> multiplier_terms;
  std::vector<Term> quadratic_terms;
};

/// Smallest divisor of n/2 that is >= k_min (n must be even).
std::size_t block_length_for(std::size_t n, std::size_t k_min);

/// Weak variance as a function of the localisation radius: constant for
/// linear classes, a max over members at distance >= r for finite ones.
std::function<double(double)> weak_variance_profile(const RegressionProblem& problem,
                                                    const HypothesisClass& cls,
                                                    const PopulationQuantities& pop,
                                                    const BoundConfig& config);

/// Law of W = Y - f*(X) under stationarity.
FiniteLaw residual_law(const RegressionProblem& problem, const PopulationQuantities& pop);

/// beta(1..h) with h doubled until k_mix is found or h reaches n.
std::size_t k_mix_for(const MarkovChainModel& chain, std::size_t n, double delta);

BoundReport compute_bound_report(const RegressionProblem& problem, const HypothesisClass& cls,
                                 const BoundConfig& config);

/// Same as compute_bound_report but reuses the certificate and complexity
/// profiles, so a sweep can evaluate many n cheaply. The weak-variance
/// profile is recomputed when config.n differs from the one it was built for.
struct BoundContext {
  const RegressionProblem* problem = nullptr;
  HypothesisClass cls = HypothesisClass::linear(1);
  PopulationQuantities pop;
  ClassCertificate cert;
  double noise_psi = 0.0;
  std::function<double(double)> weak_variance;
  std::size_t weak_variance_n = 0;  // n the profile was computed for
  std::function<double(double)> gamma2, gamma_eta, gamma_mixed;
};

BoundContext make_bound_context(const RegressionProblem& problem, const HypothesisClass& cls,
                                const BoundConfig& config);
BoundReport evaluate_bound(const BoundContext& ctx, const BoundConfig& config);

nlohmann::json to_json(const BoundReport& report);
BoundReport bound_report_from_json(const nlohmann::json& j);

/// Columns: group, term, value.
void write_terms_csv(const BoundReport& report, std::ostream& out);

}  // namespace mixfree
