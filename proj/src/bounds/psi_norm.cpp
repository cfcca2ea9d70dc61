#include "mixfree/bounds/psi_norm.hpp"

#include <algorithm>
#include <cmath>

#include "mixfree/error.hpp"

namespace mixfree {

FiniteLaw FiniteLaw::from_sample(std::span<const double> sample) {
  if (sample.empty()) throw ConfigError("sample is empty");
  FiniteLaw law;
  law.values.assign(sample.begin(), sample.end());
  law.probs.assign(sample.size(), 1.0 / static_cast<double>(sample.size()));
  return law;
}

FiniteLaw FiniteLaw::from_state_function(std::span<const double> g, const Vector& pi) {
  if (g.size() != static_cast<std::size_t>(pi.size()))
    throw ConfigError("function table and stationary law differ in length");
  FiniteLaw law;
  law.values.assign(g.begin(), g.end());
  law.probs.assign(pi.data(), pi.data() + pi.size());
  return law;
}

double FiniteLaw::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += probs[i] * values[i];
  return m;
}

double FiniteLaw::ess_sup() const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (probs[i] > 0.0) s = std::max(s, std::abs(values[i]));
  return s;
}

double FiniteLaw::lm_norm(double m) const {
  const double top = ess_sup();
  if (top == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (probs[i] > 0.0) acc += probs[i] * std::pow(std::abs(values[i]) / top, m);
  return top * std::pow(acc, 1.0 / m);
}

namespace {

void validate(const FiniteLaw& law) {
  if (law.values.empty() || law.values.size() != law.probs.size())
    throw ConfigError("law has empty support");
  double total = 0.0;
  for (double p : law.probs) {
    if (!(p >= 0.0)) throw ConfigError("law has a negative probability");
    total += p;
  }
  if (!(total > 0.0)) throw ConfigError("law has empty support");
}

// Integer moments by repeated multiplication of the scaled atoms.
PsiNormEstimate sweep(const FiniteLaw& law, double p, int m_max) {
  PsiNormEstimate est;
  est.p = p;
  est.m_max = m_max;
  const double top = law.ess_sup();
  if (top == 0.0) {
    est.exact = true;
    return est;
  }
  std::vector<double> ratio, weight, power;
  for (std::size_t i = 0; i < law.values.size(); ++i) {
    if (law.probs[i] <= 0.0) continue;
    ratio.push_back(std::abs(law.values[i]) / top);
    weight.push_back(law.probs[i]);
  }
  power.assign(ratio.size(), 1.0);
  for (int m = 1; m <= m_max; ++m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < ratio.size(); ++i) {
      power[i] *= ratio[i];
      acc += weight[i] * power[i];
    }
    const double md = static_cast<double>(m);
    const double term = std::pow(md, -1.0 / p) * top * std::pow(acc, 1.0 / md);
    if (term > est.value) {
      est.value = term;
      est.argmax_m = m;
    }
    if (m == std::max(1, m_max / 2)) est.sup_to_half = est.value;
    if (m == m_max) est.term_at_max = term;
  }
  est.exact = std::pow(static_cast<double>(m_max) + 1.0, -1.0 / p) * top <= est.value;
  return est;
}

}  // namespace

PsiNormEstimate psi_p_norm(const FiniteLaw& law, double p, int m_max) {
  validate(law);
  if (m_max < 1) throw ConfigError("m_max must be at least 1");
  if (!(p >= 1.0)) throw ConfigError("p must lie in [1, inf]");
  if (std::isinf(p)) {
    PsiNormEstimate est;
    est.p = p;
    est.m_max = m_max;
    est.value = est.sup_to_half = est.term_at_max = law.ess_sup();
    est.exact = true;
    return est;
  }
  return sweep(law, p, m_max);
}

PsiNormEstimate psi_p_norm_exact(const FiniteLaw& law, double p) {
  PsiNormEstimate est = psi_p_norm(law, p, 200);
  while (!est.exact) {
    // Beyond m* = (ess_sup / value)^p no term can exceed value.
    const double needed = std::pow(law.ess_sup() / std::max(est.value, 1e-300), p);
    const int next = static_cast<int>(std::min(1e7, std::max(2.0 * est.m_max, std::ceil(needed))));
    if (next <= est.m_max) throw NumericError("Psi_p sweep cannot certify its truncation");
    est = psi_p_norm(law, p, next);
  }
  return est;
}

double psi_norm_any(const FiniteLaw& law, double p) {
  validate(law);
  if (!(p > 0.0)) throw ConfigError("p must be positive");
  if (std::isinf(p)) return law.ess_sup();
  int m_max = 200;
  for (;;) {
    const PsiNormEstimate est = sweep(law, p, m_max);
    if (est.exact) return est.value;
    m_max *= 2;
    if (m_max > 10'000'000) throw NumericError("Psi_p sweep cannot certify its truncation");
  }
}

double psi_product_bound(double psi_z, double psi_z_prime, double p) {
  if (!(p > 0.0)) throw ConfigError("p must be positive");
  return std::pow(2.0, 2.0 / p) * psi_z * psi_z_prime;
}

double psi_product_bound(const FiniteLaw& z, const FiniteLaw& z_prime, double p) {
  return psi_product_bound(psi_p_norm_exact(z, p).value, psi_p_norm_exact(z_prime, p).value, p);
}

}  // namespace mixfree
