#pragma once

// Certificates that a class satisfies ||f||_{Psi_p} <= L ||f||_{L2}^eta.

#include <cstdint>
#include <string>
#include <vector>

#include "mixfree/erm.hpp"

namespace mixfree {

enum class CertMethod { LinearExact, FiniteExact, SampledFit };

std::string to_string(CertMethod method);
CertMethod cert_method_from_string(const std::string& name);

struct ClassCertificate {
  double L = 1.0;
  double eta = 1.0;
  double p = 2.0;
  CertMethod method = CertMethod::FiniteExact;
  /// Linear method only: the grid supremum is a lower bound on the true
  /// supremum; upper_estimate bounds it using the grid's covering radius.
  double lower_bound = 1.0;
  double upper_estimate = 1.0;
  std::size_t directions = 0;
};

struct CertifyOptions {
  std::size_t directions = 10000;
  int refinement_rounds = 3;
  std::uint64_t seed = 0x5eed;
};

/// ||f||_{Psi_p} / ||f||_{L2} of a state function under pi (exact sweep).
double psi_l2_ratio(const StateFunction& f, const Vector& pi, double p);

/// sup over unit v of ||<v, X>||_{Psi_p} / ||<v, X>||_{L2}, eta = 1. Needs
/// lambda_min(Sigma) > 0.
ClassCertificate certify_linear(const RegressionProblem& problem, double p,
                                const CertifyOptions& options = {});

/// L = max(1, max_f ||f||_{Psi_p} / ||f||_{L2}), eta = 1. Throws ConfigError
/// on a member with zero L2 norm.
ClassCertificate certify_finite(const std::vector<StateFunction>& members, const Vector& pi,
                                double p);

/// Least-squares fit of log ||f||_{Psi_p} against log ||f||_{L2}; the slope
/// is clipped into (0, 1] and L is then raised until every sample is covered.
ClassCertificate certify_sampled(const std::vector<StateFunction>& samples, const Vector& pi,
                                 double p);

/// Differences g - h over the star hull of a finite class, discretised with
/// the class's star grid, zero functions removed.
std::vector<StateFunction> star_difference_witnesses(const HypothesisClass& cls,
                                                     const PopulationQuantities& pop,
                                                     const Vector& pi);

/// Dispatch: linear classes use certify_linear; finite classes certify the
/// star-hull difference witnesses with the requested method.
ClassCertificate certify_weak_subgaussian(const HypothesisClass& cls,
                                          const RegressionProblem& problem,
                                          const PopulationQuantities& pop, double p,
                                          CertMethod method, const CertifyOptions& options = {});

/// Every member satisfies ||f||_{Psi_p} <= L ||f||^eta + tol.
bool certificate_holds(const ClassCertificate& cert, const std::vector<StateFunction>& members,
                       const Vector& pi, double tol = 1e-9);

}  // namespace mixfree
