#pragma once

#include "mixfree/bounds/psi_norm.hpp"

namespace mixfree {

/// q' with 1/q + 1/q' = 1; q = 1 gives inf, q = inf gives 1.
double holder_conjugate(double q);

/// Throws ConfigError unless q, q' >= 1 and |1/q + 1/q' - 1| <= 1e-12.
void check_holder_pair(double q, double q_prime);

/// (q' e)^{1/p}, with the convention that the factor is 1 whenever p = inf.
double bernstein_scale(double p, double q_prime);

/// Supremum of the admissible range, ((q' e)^{1/p} psi)^{-1}; 0 when the
/// scale is infinite (p < inf with q' = inf), inf when psi = 0.
double bernstein_lambda_limit(double psi_norm, double p, double q_prime);

/// exp((lambda^2 / 2) var2q / (1 - lambda (q' e)^{1/p} psi)), for
/// var2q = (E|Z|^{2q})^{1/q}. Throws ConfigError outside 0 <= lambda < limit
/// (lambda = 0 is always admitted).
double bernstein_mgf_rhs(double lambda, double var2q, double psi_norm, double p, double q_prime);

/// (E|Z|^{2q})^{1/q} of a finite law.
double raw_moment_2q(const FiniteLaw& law, double q);

/// E exp(lambda Z) of a finite law.
double exact_mgf(const FiniteLaw& law, double lambda);

}  // namespace mixfree
