#include "mixfree/bounds/radius.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <limits>

#include "mixfree/bounds/bernstein.hpp"
#include "mixfree/error.hpp"

namespace mixfree {

namespace {

double crossing(const std::function<double(double)>& v, const std::function<double(double)>& g2,
                double sqrt_n, double c1, double r) {
  const double vr = v(r);
  const double gr = g2(r);
  if (!std::isfinite(vr) || !std::isfinite(gr) || vr < 0.0 || gr < 0.0)
    throw NumericError("critical radius profile is not finite and nonnegative at r = " +
                       std::to_string(r));
  return r - c1 * std::sqrt(vr) * gr / (r * sqrt_n);
}

// x^{1/p} with the p = inf convention x^0 = 1.
double root_p(double x, double p) { return std::isinf(p) ? 1.0 : std::pow(x, 1.0 / p); }

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
}

template <class Lhs>
std::size_t smallest_n(const Lhs& lhs, double target, const char* what) {
  auto ok = [&](double n) { return lhs(n) <= target; };
  double hi = 1.0;
  const double cap = 4.6e18;
  while (!ok(hi)) {
    hi *= 2.0;
    if (hi > cap)
      throw NumericError(std::string(what) + " burn-in exceeds 2^62; the condition cannot be met");
  }
  if (hi == 1.0) return 1;
  std::size_t lo = static_cast<std::size_t>(hi / 2.0);  // fails
  std::size_t up = static_cast<std::size_t>(hi);        // holds
  while (up - lo > 1) {
    const std::size_t mid = lo + (up - lo) / 2;
    if (ok(static_cast<double>(mid))) up = mid; else lo = mid;
  }
  return up;
}

}  // namespace

RadiusResult critical_radius(const std::function<double(double)>& weak_variance,
                             const std::function<double(double)>& gamma2, std::size_t n,
                             double c1, double r_min, double tol) {
  if (n < 1) throw ConfigError("n must be at least 1");
  if (!(c1 > 0.0)) throw ConfigError("c1 must be positive");
  if (!(r_min > 0.0 && r_min < 1.0)) throw ConfigError("r_min must lie in (0, 1)");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  auto h = [&](double r) { return crossing(weak_variance, gamma2, sqrt_n, c1, r); };

  RadiusResult res;
  if (h(1.0) < 0.0) {
    res.r = 1.0;
    res.saturated = true;
    return res;
  }
  constexpr int kScan = 2000;
  const double span = std::log(1.0 / r_min);
  double fail = -1.0, pass = 1.0;
  for (int i = kScan - 1; i >= 0; --i) {
    const double r = r_min * std::exp(span * i / (kScan - 1));
    if (h(r) < 0.0) {
      fail = r;
      break;
    }
    pass = r;
  }
  if (fail < 0.0) {
    res.r = r_min;
    res.floored = true;
    return res;
  }
  double lo = fail, hi = pass;
  for (int it = 0; it < 400 && hi - lo > tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) >= 0.0) hi = mid; else lo = mid;
  }
  res.r = hi;
  return res;
}

LocalisedParams resolved(LocalisedParams p) {
  if (p.q_prime == 0.0) p.q_prime = holder_conjugate(p.q);
  check_holder_pair(p.q, p.q_prime);
  check_delta(p.delta);
  if (!(p.L >= 1.0)) throw ConfigError("L must be at least 1");
  if (!(p.eta > 0.0 && p.eta <= 1.0)) throw ConfigError("eta must lie in (0, 1]");
  if (!(p.p >= 1.0)) throw ConfigError("p must lie in [1, inf]");
  if (!(p.k >= 1.0)) throw ConfigError("block length k must be at least 1");
  if (!(p.r > 0.0 && p.r <= 1.0)) throw ConfigError("radius r must lie in (0, 1]");
  if (!(p.noise_psi >= 0.0) || !(p.gamma_eta >= 0.0) || !(p.gamma_mixed >= 0.0) ||
      !(p.gamma2 >= 0.0) || !(p.weak_variance >= 0.0))
    throw ConfigError("norms, gamma values and weak variance must be nonnegative");
  return p;
}

double quad_burn_in_lhs(const LocalisedParams& p, double n) {
  const double log_term = root_p(std::log(std::pow(4.0, 2.0 / p.p + 0.5) * p.L / p.r), p.p);
  const double ld = std::log(1.0 / p.delta);
  const double first = std::sqrt(p.k / n) * std::pow(p.L, 1.75) * std::pow(p.r, p.eta) * log_term *
                       (p.gamma_mixed + std::pow(p.r, (1.0 + 3.0 * p.eta) / 4.0) * std::sqrt(ld));
  const double second = p.L * p.L * root_p(p.q_prime, p.p) * p.k * std::pow(p.r, p.eta) *
                        log_term * (p.gamma_eta + std::pow(p.r, p.eta) * ld) / n;
  return first + second;
}

double mult_burn_in_lhs(const LocalisedParams& p, double n) {
  const double ld = std::log(1.0 / p.delta);
  const double scale = bernstein_scale(p.p, p.q_prime);
  return scale * scale * p.L * p.k * p.noise_psi *
         (p.gamma_eta / (p.r * n) + std::pow(p.r, p.eta - 1.0) * ld / n);
}

std::size_t n_quad(const LocalisedParams& params) {
  const LocalisedParams p = resolved(params);
  return smallest_n([&](double n) { return quad_burn_in_lhs(p, n); }, p.r * p.r, "quadratic");
}

std::size_t n_mult(const LocalisedParams& params) {
  const LocalisedParams p = resolved(params);
  return smallest_n([&](double n) { return mult_burn_in_lhs(p, n); }, p.r, "multiplier");
}

std::size_t k_mix(std::span<const double> betas, std::size_t n, double delta) {
  check_delta(delta);
  if (n < 1) throw ConfigError("n must be at least 1");
  const double need = static_cast<double>(n) / delta;
  const std::size_t horizon = std::min(betas.size(), n);
  for (std::size_t k = 1; k <= horizon; ++k) {
    const double b = betas[k - 1];
    if (b == 0.0 || static_cast<double>(k) / b >= need) return k;
  }
  throw NumericError("no block length k <= " + std::to_string(horizon) +
                     " reaches k / beta(k) >= n / delta = " + std::to_string(need) +
                     "; the chain mixes too slowly for this n and delta");
}

BurnIns burn_ins(const LocalisedParams& params, std::span<const double> betas, std::size_t n) {
  BurnIns b;
  b.n_quad = n_quad(params);
  b.n_mult = n_mult(params);
  b.k_mix = k_mix(betas, n, params.delta);
  return b;
}

MultiplierRhs multiplier_bound_rhs(const LocalisedParams& params, std::size_t n, double c1,
                                   double c2) {
  const LocalisedParams p = resolved(params);
  if (n < 1) throw ConfigError("n must be at least 1");
  const double nd = static_cast<double>(n);
  const double ld = std::log(1.0 / p.delta);
  const double sv = std::sqrt(p.weak_variance);
  const double scale = bernstein_scale(p.p, p.q_prime);
  const double coeff = c1 * scale * scale * p.L * p.k * p.noise_psi;

  MultiplierRhs out;
  const double var_complexity = c2 * sv * p.gamma2 / (p.r * std::sqrt(nd));
  const double var_deviation = c2 * sv * std::sqrt(ld / nd);
  const double ho_complexity = coeff * p.gamma_eta / (p.r * nd);
  const double ho_deviation = coeff * std::pow(p.r, p.eta - 1.0) * ld / nd;
  out.variance_group = var_complexity + var_deviation;
  out.higher_order_group = ho_complexity + ho_deviation;
  out.terms = {{"variance_complexity", var_complexity},
               {"variance_deviation", var_deviation},
               {"higher_order_complexity", ho_complexity},
               {"higher_order_deviation", ho_deviation}};
  return out;
}

QuadraticRhs quadratic_bound_rhs(const LocalisedParams& params, std::size_t n, double epsilon,
                                 double c) {
  const LocalisedParams p = resolved(params);
  if (n < 1) throw ConfigError("n must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  const double nd = static_cast<double>(n);
  const double ld = std::log(1.0 / p.delta);
  const double log_term = root_p(std::log(std::pow(4.0, 2.0 / p.p) * p.L / (epsilon * p.r)), p.p);
  const double re = std::pow(p.r, p.eta);

  QuadraticRhs out;
  out.c = c;
  out.leading = p.r * p.r * (1.0 - epsilon * epsilon);
  out.sqrt_term = std::sqrt(p.k / nd) * std::pow(p.L, 1.75) * re * log_term *
                  (p.gamma_mixed + std::pow(p.r, (1.0 + 3.0 * p.eta) / 4.0) * std::sqrt(ld));
  out.linear_term =
      root_p(p.q_prime, p.p) * p.k * re * log_term * p.L * p.L * (p.gamma_eta + re * ld) / nd;
  out.terms = {{"leading", out.leading},
               {"sqrt_term", -c * out.sqrt_term},
               {"linear_term", -c * out.linear_term}};
  return out;
}

double risk_bound(double r_star, double weak_variance, std::size_t n, double delta, double c2) {
  check_delta(delta);
  if (n < 1) throw ConfigError("n must be at least 1");
  if (!(r_star >= 0.0) || !(weak_variance >= 0.0) || !(c2 > 0.0))
    throw ConfigError("risk bound inputs must be nonnegative with c2 > 0");
  return c2 * (r_star * r_star + weak_variance * std::log(1.0 / delta) / static_cast<double>(n));
}

}  // namespace mixfree
