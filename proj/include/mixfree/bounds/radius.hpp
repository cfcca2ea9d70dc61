#pragma once

// Critical radius, burn-in sample sizes, the multiplier and quadratic
// right-hand sides, and the final excess-risk bound.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mixfree {

struct RadiusResult {
  double r = 1.0;
  bool floored = false;    // inequality held everywhere, r = r_min
  bool saturated = false;  // inequality failed at r = 1
};

/// Smallest r in (0, 1] past which r >= c1 sqrt(V(r)) gamma2(r) / (r sqrt(n))
/// holds: a 2000-point log scan locates the last failure, bisection refines it.
RadiusResult critical_radius(const std::function<double(double)>& weak_variance,
                             const std::function<double(double)>& gamma2, std::size_t n,
                             double c1, double r_min = 1e-6, double tol = 1e-12);

/// Inputs shared by the burn-ins and both right-hand sides. Gamma values
/// are evaluated at the radius r.
struct LocalisedParams {
  double L = 1.0;
  double eta = 1.0;
  double p = 2.0;
  double q = 1.0;
  double q_prime = 0.0;  // 0: derive from q
  double k = 1.0;
  double r = 1.0;
  double delta = 0.05;
  double noise_psi = 1.0;     // ||W||_{Psi_p}
  double gamma_eta = 0.0;     // gamma_eta
  double gamma_mixed = 0.0;   // gamma_{(2+6 eta)/4}
  double gamma2 = 0.0;        // gamma_2
  double weak_variance = 0.0;
};

/// Validates the parameter block and fills q' when it was left at 0.
LocalisedParams resolved(LocalisedParams params);

/// Left side of the quadratic burn-in condition at sample size n (to be
/// compared with r^2).
double quad_burn_in_lhs(const LocalisedParams& params, double n);
/// Left side of the multiplier burn-in condition (to be compared with r).
double mult_burn_in_lhs(const LocalisedParams& params, double n);

std::size_t n_quad(const LocalisedParams& params);
std::size_t n_mult(const LocalisedParams& params);

/// inf{k in [n] : k / beta(k) >= n / delta}, beta(k) = 0 counting as
/// satisfied. `betas[i]` is beta(i + 1). Throws NumericError when no k in
/// the available horizon qualifies.
std::size_t k_mix(std::span<const double> betas, std::size_t n, double delta);

struct BurnIns {
  std::size_t n_quad = 0;
  std::size_t n_mult = 0;
  std::size_t k_mix = 0;
};

BurnIns burn_ins(const LocalisedParams& params, std::span<const double> betas, std::size_t n);

struct Term {
  std::string name;
  double value;
};

struct MultiplierRhs {
  double variance_group = 0.0;      // c2 sqrt(V) (gamma2/(r sqrt n) + sqrt(log/n))
  double higher_order_group = 0.0;  // c1 (q'e)^{2/p} L k ||W|| (...)
  std::vector<Term> terms;
  double value() const { return variance_group + higher_order_group; }
};

/// Right side of the uniform multiplier bound for
/// sup (1/(r n)) sum_i (1 - E) <W_i, f(X_i)> over the r-sphere.
MultiplierRhs multiplier_bound_rhs(const LocalisedParams& params, std::size_t n, double c1,
                                   double c2);

struct QuadraticRhs {
  double leading = 0.0;      // r^2 (1 - eps^2)
  double sqrt_term = 0.0;    // n^{-1/2} part inside the braces
  double linear_term = 0.0;  // n^{-1} part inside the braces
  double c = 1.0;
  std::vector<Term> terms;
  double deficit() const { return c * (sqrt_term + linear_term); }
  double value() const { return leading - deficit(); }
};

/// Lower bound on the empirical second moment of every f outside the r-ball.
QuadraticRhs quadratic_bound_rhs(const LocalisedParams& params, std::size_t n, double epsilon,
                                 double c);

/// c2 (r*^2 + V log(1/delta) / n).
double risk_bound(double r_star, double weak_variance, std::size_t n, double delta, double c2);

}  // namespace mixfree
