#include "mixfree/bounds/weak_variance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mixfree/error.hpp"
#include "mixfree/parallel.hpp"
#include "mixfree/rng.hpp"

namespace mixfree {

WeakVarianceMode weak_variance_mode_from_string(const std::string& name) {
  if (name == "exact") return WeakVarianceMode::Exact;
  if (name == "montecarlo") return WeakVarianceMode::MonteCarlo;
  if (name == "analytic") return WeakVarianceMode::Analytic;
  throw ConfigError("unknown weak-variance mode '" + name + "'");
}

std::string to_string(WeakVarianceMode mode) {
  switch (mode) {
    case WeakVarianceMode::Exact: return "exact";
    case WeakVarianceMode::MonteCarlo: return "montecarlo";
    case WeakVarianceMode::Analytic: return "analytic";
  }
  return "exact";
}

namespace {

// Functions scaled by 1/||g||, ready to be summed along a path.
std::vector<StateFunction> normalise(const RegressionProblem& problem,
                                     const std::vector<StateFunction>& set) {
  if (set.empty()) throw ConfigError("resolution set is empty");
  std::vector<StateFunction> out;
  out.reserve(set.size());
  for (const auto& g : set) {
    const double norm = l2_norm(g, problem);
    if (!(norm > 0.0))
      throw ConfigError("resolution set member has zero L2 norm; the noise level divides by it");
    StateFunction h(g.size());
    for (std::size_t x = 0; x < g.size(); ++x) h[x] = g[x] / norm;
    out.push_back(std::move(h));
  }
  return out;
}

void check_q(double q) {
  if (!(q >= 1.0) || std::isinf(q)) throw ConfigError("q must lie in [1, inf)");
}

double abs_pow(double x, double e) { return std::pow(std::abs(x), e); }

// Noise atoms at each state expressed as W = Y - f*(X).
std::vector<NoiseLaw> residual_laws(const RegressionProblem& problem,
                                    const PopulationQuantities& pop) {
  std::vector<NoiseLaw> laws(problem.states());
  const auto& mu = problem.regression_table();
  for (int x = 0; x < problem.states(); ++x) {
    for (const auto& atom : problem.noise().law(x))
      if (atom.prob > 0.0) laws[x].push_back({mu[x] - pop.f_star[x] + atom.value, atom.prob});
  }
  return laws;
}

WeakVarianceResult exact_mode(const RegressionProblem& problem, const PopulationQuantities& pop,
                              const std::vector<StateFunction>& gs, double q, std::size_t n,
                              double cap) {
  const int s = problem.states();
  const auto laws = residual_laws(problem, pop);
  std::size_t widest = 1;
  for (const auto& l : laws) widest = std::max(widest, l.size());
  const double leaves = std::pow(static_cast<double>(s) * static_cast<double>(widest),
                                 static_cast<double>(n));
  if (leaves > cap)
    throw ConfigError("exact weak-variance enumeration needs ~" + std::to_string(leaves) +
                      " paths, above the cap; use montecarlo or analytic mode");

  const Matrix& P = problem.chain().transition();
  const Vector& pi = problem.chain().stationary();
  const std::size_t G = gs.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));

  std::vector<double> leaf_prob;
  std::vector<double> leaf_sums;  // G values per leaf
  std::vector<double> sums(G * (n + 1), 0.0);

  // Depth-first walk; sums[t*G + g] holds the partial sum after t steps.
  auto walk = [&](auto&& self, std::size_t t, int prev, double prob) -> void {
    if (t == n) {
      leaf_prob.push_back(prob);
      leaf_sums.insert(leaf_sums.end(), sums.begin() + static_cast<long>(n * G),
                       sums.begin() + static_cast<long>((n + 1) * G));
      return;
    }
    for (int x = 0; x < s; ++x) {
      const double px = (t == 0) ? pi[x] : P(prev, x);
      if (px <= 0.0) continue;
      for (const auto& atom : laws[x]) {
        for (std::size_t g = 0; g < G; ++g)
          sums[(t + 1) * G + g] = sums[t * G + g] + atom.value * gs[g][x];
        self(self, t + 1, x, prob * px * atom.prob);
      }
    }
  };
  walk(walk, 0, 0, 1.0);

  WeakVarianceResult res;
  res.per_function.assign(G, 0.0);
  res.per_function_se.assign(G, 0.0);
  for (std::size_t g = 0; g < G; ++g) {
    double mean = 0.0;
    for (std::size_t l = 0; l < leaf_prob.size(); ++l) mean += leaf_prob[l] * leaf_sums[l * G + g];
    double moment = 0.0;
    for (std::size_t l = 0; l < leaf_prob.size(); ++l)
      moment += leaf_prob[l] * abs_pow(scale * (leaf_sums[l * G + g] - mean), 2.0 * q);
    res.per_function[g] = std::pow(moment, 1.0 / q);
  }
  return res;
}

WeakVarianceResult monte_carlo_mode(const RegressionProblem& problem,
                                    const PopulationQuantities& pop,
                                    const std::vector<StateFunction>& gs, double q, std::size_t n,
                                    const WeakVarianceOptions& options) {
  const std::size_t R = options.replicates;
  if (R < 2) throw ConfigError("Monte Carlo weak variance needs at least two replicates");
  const std::size_t G = gs.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> stats(R * G);
  parallel_for(R, [&](std::size_t r) {
    const Trajectory traj = sample_trajectory(problem, n, derive_seed(options.seed, r));
    const auto w = residuals(traj, pop.f_star);
    for (std::size_t g = 0; g < G; ++g) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += w[i] * gs[g][traj.states[i]];
      stats[r * G + g] = scale * acc;
    }
  });

  WeakVarianceResult res;
  res.per_function.assign(G, 0.0);
  res.per_function_se.assign(G, 0.0);
  const double rd = static_cast<double>(R);
  for (std::size_t g = 0; g < G; ++g) {
    double mean = 0.0;
    for (std::size_t r = 0; r < R; ++r) mean += stats[r * G + g];
    mean /= rd;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      const double v = abs_pow(stats[r * G + g] - mean, 2.0 * q);
      m1 += v;
      m2 += v * v;
    }
    m1 /= rd;
    const double var = std::max(0.0, (m2 / rd - m1 * m1) * rd / (rd - 1.0));
    const double se_moment = std::sqrt(var / rd);
    res.per_function[g] = std::pow(m1, 1.0 / q);
    // delta method for M -> M^{1/q}
    res.per_function_se[g] = (m1 > 0.0) ? std::pow(m1, 1.0 / q - 1.0) * se_moment / q : 0.0;
  }
  return res;
}

}  // namespace

Matrix noise_interaction_covariance(const RegressionProblem& problem,
                                    const PopulationQuantities& pop,
                                    const std::vector<StateFunction>& features, std::size_t n) {
  if (n < 1) throw ConfigError("n must be at least 1");
  const int s = problem.states();
  const std::size_t F = features.size();
  const Matrix& P = problem.chain().transition();
  const Vector& pi = problem.chain().stationary();

  // h_a(x) = g_a(x) E[W | x]; lag-l cross moments only involve h.
  Matrix h(s, static_cast<Eigen::Index>(F));
  Matrix lag0(F, F);
  for (std::size_t a = 0; a < F; ++a) {
    if (features[a].size() != static_cast<std::size_t>(s))
      throw ConfigError("feature table length must equal the number of states");
    for (int x = 0; x < s; ++x) h(x, a) = features[a][x] * pop.w_mean[x];
  }
  const Vector eh = h.transpose() * pi;
  for (std::size_t a = 0; a < F; ++a)
    for (std::size_t b = 0; b < F; ++b) {
      double acc = 0.0;
      for (int x = 0; x < s; ++x) acc += pi[x] * features[a][x] * features[b][x] * pop.w_second[x];
      lag0(a, b) = acc - eh[a] * eh[b];
    }

  Matrix centred = h.rowwise() - eh.transpose();
  const double hscale = std::max(centred.cwiseAbs().maxCoeff(), 1e-300);
  const double nd = static_cast<double>(n);
  Matrix lagged = Matrix::Zero(F, F);
  Matrix v = centred;
  const Matrix weighted_h = pi.asDiagonal() * centred;
  for (std::size_t l = 1; l < n; ++l) {
    v = P * v;  // v = P^l (h - E h)
    const Matrix gamma = weighted_h.transpose() * v;  // gamma(a,b) = Cov(h_a(X_0), h_b(X_l))
    lagged += ((nd - static_cast<double>(l)) / nd) * (gamma + gamma.transpose());
    const double size = v.cwiseAbs().maxCoeff();
    if (size <= 1e-18 * hscale) break;  // geometric tail is below double precision
  }
  return lag0 + lagged;
}

double weak_variance_linear(const RegressionProblem& problem, const PopulationQuantities& pop,
                            std::size_t n) {
  std::vector<StateFunction> coords(problem.dim());
  for (int j = 0; j < problem.dim(); ++j) {
    const auto col = problem.embedding().col(j);
    coords[j].assign(col.data(), col.data() + col.size());
  }
  const Matrix C = noise_interaction_covariance(problem, pop, coords, n);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(C, pop.sigma);
  if (ges.info() != Eigen::Success) throw NumericError("generalised eigenproblem failed");
  return std::max(0.0, ges.eigenvalues().maxCoeff());
}

WeakVarianceResult weak_variance_2q(const RegressionProblem& problem,
                                    const PopulationQuantities& pop,
                                    const std::vector<StateFunction>& resolution, double q,
                                    std::size_t n, const WeakVarianceOptions& options) {
  check_q(q);
  if (n < 1) throw ConfigError("n must be at least 1");
  const auto gs = normalise(problem, resolution);
  WeakVarianceResult res;
  switch (options.mode) {
    case WeakVarianceMode::Exact:
      res = exact_mode(problem, pop, gs, q, n, options.enumeration_cap);
      break;
    case WeakVarianceMode::MonteCarlo:
      res = monte_carlo_mode(problem, pop, gs, q, n, options);
      break;
    case WeakVarianceMode::Analytic: {
      if (q != 1.0) throw ConfigError("analytic weak variance is available for q = 1 only");
      const Matrix C = noise_interaction_covariance(problem, pop, gs, n);
      res.per_function.resize(gs.size());
      res.per_function_se.assign(gs.size(), 0.0);
      for (std::size_t g = 0; g < gs.size(); ++g) res.per_function[g] = std::max(0.0, C(g, g));
      break;
    }
  }
  res.argmax = static_cast<std::size_t>(
      std::max_element(res.per_function.begin(), res.per_function.end()) -
      res.per_function.begin());
  res.value = res.per_function[res.argmax];
  res.std_error = res.per_function_se[res.argmax];
  return res;
}

}  // namespace mixfree
