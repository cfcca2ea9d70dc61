#pragma once

// Psi_p norms ||Z||_{Psi_p} = sup_{m>=1} m^{-1/p} ||Z||_{L^m} of finitely
// supported laws, and the product inequality between them.

#include <limits>
#include <span>
#include <vector>

#include "mixfree/processgen.hpp"

namespace mixfree {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Finitely supported law. Zero-probability atoms are allowed and ignored.
struct FiniteLaw {
  std::vector<double> values;
  std::vector<double> probs;

  /// Plug-in law of a sample (equal weights).
  static FiniteLaw from_sample(std::span<const double> sample);
  /// Law of g(X) for X ~ pi.
  static FiniteLaw from_state_function(std::span<const double> g, const Vector& pi);

  double mean() const;
  /// Largest |value| carrying positive mass.
  double ess_sup() const;
  /// (E|Z|^m)^{1/m} for real m > 0, computed with max-scaling.
  double lm_norm(double m) const;
};

struct PsiNormEstimate {
  double p = 2.0;
  double value = 0.0;      // sup over m in [1, m_max]
  int m_max = 0;
  bool exact = false;      // no m > m_max can exceed `value`
  int argmax_m = 1;
  double sup_to_half = 0.0;  // sup over m in [1, m_max/2], convergence diagnostic
  double term_at_max = 0.0;  // m_max^{-1/p} ||Z||_{m_max}
};

/// p in [1, inf]; p = inf returns the essential supremum. Throws ConfigError
/// on an empty support or m_max < 1.
PsiNormEstimate psi_p_norm(const FiniteLaw& law, double p, int m_max = 200);

/// Raises m_max until the truncation is provably exact, i.e. until
/// (m_max + 1)^{-1/p} ess_sup <= value.
PsiNormEstimate psi_p_norm_exact(const FiniteLaw& law, double p);

/// 2^{2/p} ||Z||_{Psi_p} ||Z'||_{Psi_p}; bounds ||Z Z'||_{Psi_{p/2}}.
double psi_product_bound(double psi_z, double psi_z_prime, double p);
double psi_product_bound(const FiniteLaw& z, const FiniteLaw& z_prime, double p);

/// sup_m m^{-1/p} ||Z||_{L^m} for any p > 0 (used for Psi_{p/2} with p < 2).
double psi_norm_any(const FiniteLaw& law, double p);

}  // namespace mixfree
