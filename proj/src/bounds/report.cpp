#include "mixfree/bounds/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "mixfree/bounds/bernstein.hpp"
#include "mixfree/bounds/complexity.hpp"
#include "mixfree/error.hpp"
#include "mixfree/rng.hpp"

namespace mixfree {

std::size_t block_length_for(std::size_t n, std::size_t k_min) {
  if (n < 2 || n % 2 != 0) throw ConfigError("blocked experiments need an even n");
  const std::size_t half = n / 2;
  for (std::size_t k = std::max<std::size_t>(1, k_min); k <= half; ++k)
    if (half % k == 0) return k;
  throw NumericError("no divisor of n/2 = " + std::to_string(half) + " is >= k_mix = " +
                     std::to_string(k_min));
}

FiniteLaw residual_law(const RegressionProblem& problem, const PopulationQuantities& pop) {
  FiniteLaw law;
  const Vector& pi = problem.chain().stationary();
  const auto& mu = problem.regression_table();
  for (int x = 0; x < problem.states(); ++x)
    for (const auto& atom : problem.noise().law(x)) {
      law.values.push_back(mu[x] - pop.f_star[x] + atom.value);
      law.probs.push_back(pi[x] * atom.prob);
    }
  return law;
}

std::size_t k_mix_for(const MarkovChainModel& chain, std::size_t n, double delta) {
  std::size_t horizon = std::min<std::size_t>(n, 256);
  for (;;) {
    const auto betas = beta_coefficients(chain, static_cast<int>(horizon));
    try {
      return k_mix(betas, n, delta);
    } catch (const NumericError&) {
      if (horizon >= n) throw;
      horizon = std::min(n, horizon * 4);
    }
  }
}

std::function<double(double)> weak_variance_profile(const RegressionProblem& problem,
                                                    const HypothesisClass& cls,
                                                    const PopulationQuantities& pop,
                                                    const BoundConfig& config) {
  WeakVarianceOptions opts;
  opts.mode = config.weak_variance_mode;
  opts.replicates = config.weak_variance_replicates;
  opts.seed = derive_seed(config.seed, 0x77);

  if (cls.is_linear()) {
    double value;
    if (config.q == 1.0 && config.weak_variance_mode == WeakVarianceMode::Analytic) {
      value = weak_variance_linear(problem, pop, config.n);
    } else {
      // Coordinate functionals plus seeded random directions.
      std::vector<StateFunction> set;
      Rng rng(derive_seed(config.seed, 0x78));
      const int d = problem.dim();
      for (int t = 0; t < d + 64; ++t) {
        Vector v = Vector::Zero(d);
        if (t < d) v[t] = 1.0; else for (int i = 0; i < d; ++i) v[i] = rng.normal();
        set.push_back(linear_table(problem, v));
      }
      value = weak_variance_2q(problem, pop, set, config.q, config.n, opts).value;
    }
    return [value](double) { return value; };
  }

  std::vector<StateFunction> diffs;
  std::vector<double> dist;
  for (const auto& f : cls.members()) {
    StateFunction g(f.size());
    for (std::size_t x = 0; x < f.size(); ++x) g[x] = f[x] - pop.f_star[x];
    const double norm = l2_norm(g, problem);
    if (norm <= 0.0) continue;
    diffs.push_back(std::move(g));
    dist.push_back(norm);
  }
  std::vector<double> values;
  if (!diffs.empty()) values = weak_variance_2q(problem, pop, diffs, config.q, config.n, opts).per_function;
  return [dist, values](double r) {
    double v = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i)
      if (dist[i] >= r) v = std::max(v, values[i]);
    return v;
  };
}

BoundContext make_bound_context(const RegressionProblem& problem, const HypothesisClass& cls,
                                const BoundConfig& config) {
  BoundContext ctx;
  ctx.problem = &problem;
  ctx.cls = cls;
  ctx.pop = population_quantities(problem, cls);
  const CertMethod method = cls.is_linear() ? CertMethod::LinearExact : config.cert_method;
  ctx.cert = certify_weak_subgaussian(cls, problem, ctx.pop, config.p, method, config.certify);
  ctx.noise_psi = psi_p_norm_exact(residual_law(problem, ctx.pop), config.p).value;
  ctx.weak_variance = weak_variance_profile(problem, cls, ctx.pop, config);
  ctx.weak_variance_n = config.n;
  const double eta = ctx.cert.eta;
  ctx.gamma2 = gamma_profile(cls, problem, ctx.pop, 2.0, config.c_alpha);
  ctx.gamma_eta = gamma_profile(cls, problem, ctx.pop, eta, config.c_alpha);
  ctx.gamma_mixed = gamma_profile(cls, problem, ctx.pop, (2.0 + 6.0 * eta) / 4.0, config.c_alpha);
  return ctx;
}

BoundReport evaluate_bound(const BoundContext& ctx, const BoundConfig& config) {
  const RegressionProblem& problem = *ctx.problem;
  BoundReport rep;
  rep.q = config.q;
  rep.q_prime = holder_conjugate(config.q);
  check_holder_pair(rep.q, rep.q_prime);
  rep.p = config.p;
  rep.L = ctx.cert.L;
  rep.eta = ctx.cert.eta;
  rep.cert_method = to_string(ctx.cert.method);
  rep.noise_psi = ctx.noise_psi;
  rep.n = config.n;
  rep.delta = config.delta;
  rep.epsilon = config.epsilon;
  rep.c = config.c;
  rep.c1 = config.c1;
  rep.c2 = config.c2;
  rep.c3 = config.c3;
  rep.c_alpha = config.c_alpha;

  rep.k_mix = k_mix_for(problem.chain(), config.n, config.delta);
  rep.k = config.k != 0 ? config.k : block_length_for(config.n, rep.k_mix);

  const auto weak_variance = ctx.weak_variance_n == config.n
                                ? ctx.weak_variance
                                : weak_variance_profile(problem, ctx.cls, ctx.pop, config);
  const RadiusResult rr = critical_radius(weak_variance, ctx.gamma2, config.n, config.c1);
  rep.r_star = rr.r;
  rep.r_floored = rr.floored;
  rep.r_saturated = rr.saturated;
  rep.weak_variance = weak_variance(rep.r_star);
  rep.gamma2 = ctx.gamma2(rep.r_star);
  rep.gamma_eta = ctx.gamma_eta(rep.r_star);
  rep.gamma_mixed = ctx.gamma_mixed(rep.r_star);

  LocalisedParams lp;
  lp.L = rep.L;
  lp.eta = rep.eta;
  lp.p = rep.p;
  lp.q = rep.q;
  lp.q_prime = rep.q_prime;
  lp.k = static_cast<double>(rep.k);
  lp.r = rep.r_star;
  lp.delta = rep.delta;
  lp.noise_psi = rep.noise_psi;
  lp.gamma_eta = rep.gamma_eta;
  lp.gamma_mixed = rep.gamma_mixed;
  lp.gamma2 = rep.gamma2;
  lp.weak_variance = rep.weak_variance;
  rep.n_quad = n_quad(lp);
  rep.n_mult = n_mult(lp);
  const double need = config.c3 * static_cast<double>(std::max(rep.n_quad, rep.n_mult));
  rep.past_burn_in = static_cast<double>(config.n) >= need && rep.k >= rep.k_mix;
  rep.risk_bound = risk_bound(rep.r_star, rep.weak_variance, config.n, config.delta, config.c2);
  rep.multiplier_terms = multiplier_bound_rhs(lp, config.n, config.c1, config.c2).terms;
  rep.quadratic_terms = quadratic_bound_rhs(lp, config.n, config.epsilon, config.c).terms;
  return rep;
}

BoundReport compute_bound_report(const RegressionProblem& problem, const HypothesisClass& cls,
                                 const BoundConfig& config) {
  return evaluate_bound(make_bound_context(problem, cls, config), config);
}

namespace {

// JSON has no infinity; the strings "inf" and "-inf" stand in for it.
nlohmann::json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double read_num(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw ConfigError("expected a number, got '" + s + "'");
  }
  return j.get<double>();
}

nlohmann::json terms_json(const std::vector<Term>& terms) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& t : terms) out[t.name] = t.value;
  return out;
}

std::vector<Term> terms_from(const nlohmann::json& j) {
  std::vector<Term> out;
  for (auto it = j.begin(); it != j.end(); ++it) out.push_back({it.key(), it.value().get<double>()});
  return out;
}

}  // namespace

nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json j;
  j["q"] = num(r.q);
  j["qPrime"] = num(r.q_prime);
  j["p"] = num(r.p);
  j["L"] = r.L;
  j["eta"] = r.eta;
  j["certMethod"] = r.cert_method;
  j["noisePsi"] = r.noise_psi;
  j["weakVariance"] = r.weak_variance;
  j["gamma2"] = r.gamma2;
  j["gammaEta"] = r.gamma_eta;
  j["gammaMixed"] = r.gamma_mixed;
  j["rStar"] = r.r_star;
  j["rFloored"] = r.r_floored;
  j["rSaturated"] = r.r_saturated;
  j["n"] = r.n;
  j["k"] = r.k;
  j["nQuad"] = r.n_quad;
  j["nMult"] = r.n_mult;
  j["kMix"] = r.k_mix;
  j["pastBurnIn"] = r.past_burn_in;
  j["riskBound"] = r.risk_bound;
  j["delta"] = r.delta;
  j["epsilon"] = r.epsilon;
  j["constants"] = {{"c", r.c}, {"c1", r.c1}, {"c2", r.c2}, {"c3", r.c3}, {"cAlpha", r.c_alpha}};
  j["multiplierTerms"] = terms_json(r.multiplier_terms);
  j["quadraticTerms"] = terms_json(r.quadratic_terms);
  return j;
}

BoundReport bound_report_from_json(const nlohmann::json& j) {
  try {
    BoundReport r;
    r.q = read_num(j.at("q"));
    r.q_prime = read_num(j.at("qPrime"));
    check_holder_pair(r.q, r.q_prime);
    r.p = read_num(j.at("p"));
    r.L = j.at("L").get<double>();
    r.eta = j.at("eta").get<double>();
    r.cert_method = j.at("certMethod").get<std::string>();
    r.noise_psi = j.at("noisePsi").get<double>();
    r.weak_variance = j.at("weakVariance").get<double>();
    r.gamma2 = j.at("gamma2").get<double>();
    r.gamma_eta = j.at("gammaEta").get<double>();
    r.gamma_mixed = j.at("gammaMixed").get<double>();
    r.r_star = j.at("rStar").get<double>();
    r.r_floored = j.at("rFloored").get<bool>();
    r.r_saturated = j.at("rSaturated").get<bool>();
    r.n = j.at("n").get<std::size_t>();
    r.k = j.at("k").get<std::size_t>();
    r.n_quad = j.at("nQuad").get<std::size_t>();
    r.n_mult = j.at("nMult").get<std::size_t>();
    r.k_mix = j.at("kMix").get<std::size_t>();
    r.past_burn_in = j.at("pastBurnIn").get<bool>();
    r.risk_bound = j.at("riskBound").get<double>();
    r.delta = j.at("delta").get<double>();
    r.epsilon = j.at("epsilon").get<double>();
    const auto& c = j.at("constants");
    r.c = c.at("c").get<double>();
    r.c1 = c.at("c1").get<double>();
    r.c2 = c.at("c2").get<double>();
    r.c3 = c.at("c3").get<double>();
    r.c_alpha = c.at("cAlpha").get<double>();
    r.multiplier_terms = terms_from(j.at("multiplierTerms"));
    r.quadratic_terms = terms_from(j.at("quadraticTerms"));
    if (!(r.r_star > 0.0 && r.r_star <= 1.0)) throw ConfigError("rStar must lie in (0, 1]");
    if (r.risk_bound < r.c2 * r.r_star * r.r_star * (1.0 - 1e-12))
      throw ConfigError("riskBound is below c2 * rStar^2");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed bound report: ") + e.what());
  }
}

void write_terms_csv(const BoundReport& report, std::ostream& out) {
  out << "group,term,value\n";
  char buf[64];
  for (const auto& t : report.multiplier_terms) {
    std::snprintf(buf, sizeof buf, "%.17g", t.value);
    out << "multiplier," << t.name << ',' << buf << '\n';
  }
  for (const auto& t : report.quadratic_terms) {
    std::snprintf(buf, sizeof buf, "%.17g", t.value);
    out << "quadratic," << t.name << ',' << buf << '\n';
  }
}

}  // namespace mixfree
