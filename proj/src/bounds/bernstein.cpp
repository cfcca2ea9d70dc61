#include "mixfree/bounds/bernstein.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mixfree/error.hpp"

namespace mixfree {

double holder_conjugate(double q) {
  if (!(q >= 1.0)) throw ConfigError("Hoelder exponent q must lie in [1, inf]");
  if (q == 1.0) return kInf;
  if (std::isinf(q)) return 1.0;
  return q / (q - 1.0);
}

void check_holder_pair(double q, double q_prime) {
  if (!(q >= 1.0) || !(q_prime >= 1.0))
    throw ConfigError("Hoelder exponents q, q' must lie in [1, inf]");
  const double gap = std::abs(1.0 / q + 1.0 / q_prime - 1.0);
  if (!(gap <= 1e-12))
    throw ConfigError("q and q' are not Hoelder conjugates: |1/q + 1/q' - 1| = " +
                      std::to_string(gap));
}

double bernstein_scale(double p, double q_prime) {
  if (!(p >= 1.0)) throw ConfigError("p must lie in [1, inf]");
  if (!(q_prime >= 1.0)) throw ConfigError("q' must lie in [1, inf]");
  if (std::isinf(p)) return 1.0;
  if (std::isinf(q_prime)) return kInf;
  return std::pow(q_prime * std::numbers::e, 1.0 / p);
}

double bernstein_lambda_limit(double psi_norm, double p, double q_prime) {
  if (!(psi_norm >= 0.0)) throw ConfigError("Psi_p norm must be nonnegative");
  const double scale = bernstein_scale(p, q_prime);
  if (std::isinf(scale)) return 0.0;
  if (psi_norm == 0.0) return kInf;
  return 1.0 / (scale * psi_norm);
}

double bernstein_mgf_rhs(double lambda, double var2q, double psi_norm, double p, double q_prime) {
  if (!(var2q >= 0.0)) throw ConfigError("var2q must be nonnegative");
  const double limit = bernstein_lambda_limit(psi_norm, p, q_prime);
  if (lambda == 0.0) return 1.0;
  if (!(lambda > 0.0 && lambda < limit))
    throw ConfigError("lambda must lie in [0, " + std::to_string(limit) +
                      ") = [0, 1/((q' e)^{1/p} ||Z||_Psi_p))");
  const double denom = 1.0 - lambda * bernstein_scale(p, q_prime) * psi_norm;
  return std::exp(0.5 * lambda * lambda * var2q / denom);
}

double raw_moment_2q(const FiniteLaw& law, double q) {
  if (!(q >= 1.0) || std::isinf(q)) throw ConfigError("q must lie in [1, inf)");
  return std::pow(law.lm_norm(2.0 * q), 2.0);
}

double exact_mgf(const FiniteLaw& law, double lambda) {
  double acc = 0.0;
  for (std::size_t i = 0; i < law.values.size(); ++i)
    acc += law.probs[i] * std::exp(lambda * law.values[i]);
  return acc;
}

}  // namespace mixfree
