// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance [--criterion N]...   (no flag runs all ten)
// Exit status is nonzero when any selected criterion fails.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "mixfree/blocking.hpp"
#include "mixfree/bounds/bernstein.hpp"
#include "mixfree/bounds/complexity.hpp"
#include "mixfree/bounds/psi_norm.hpp"
#include "mixfree/bounds/radius.hpp"
#include "mixfree/bounds/weak_variance.hpp"
#include "mixfree/harness.hpp"
#include "mixfree/io.hpp"

using namespace mixfree;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

ExperimentConfig config(const char* name) {
  return experiment_from_json(load_json_file(std::string(MIXFREE_CONFIG_DIR) + "/" + name));
}

std::vector<double> grid9() {
  std::vector<double> g;
  for (int i = 1; i <= 9; ++i) g.push_back(i / 10.0);
  return g;
}

Outcome beta_exactness() {
  double worst_brute = 0.0, worst_closed = 0.0;
  for (double p : grid9()) {
    for (double q : grid9()) {
      const auto b = beta_coefficients(MarkovChainModel::two_state(p, q), 50);
      const double pi0 = q / (p + q), pi1 = p / (p + q);
      const auto brute = oracle::brute_force_beta(oracle::two_state(p, q), {pi0, pi1}, 50);
      for (int i = 1; i <= 50; ++i) {
        worst_brute = std::max(worst_brute, std::abs(b[i - 1] - brute[i - 1]));
        worst_closed = std::max(worst_closed, std::abs(b[i - 1] - 2 * pi0 * pi1 * std::pow(std::abs(1 - p - q), i)));
      }
    }
  }
  return {worst_brute <= 1e-12 && worst_closed <= 1e-10,
          fmt("max |beta - TV oracle| = %.2e (tol 1e-12), max |beta - closed form| = %.2e (tol 1e-10)",
              worst_brute, worst_closed)};
}

// Joint law of the odd-block coordinates versus the product of their block
// laws, for n = 10 and blocks of length k laid end to end (the last block
// may be the only one of its parity when k does not divide n / 2).
Outcome decoupling_gap() {
  const std::size_t n = 10;
  double worst_slack = -1.0;
  std::size_t cases = 0;
  for (double p : grid9()) {
    for (double q : grid9()) {
      const auto P = oracle::two_state(p, q);
      const oracle::Vec pi{q / (p + q), p / (p + q)};
      const auto betas = beta_coefficients(MarkovChainModel::two_state(p, q), 10);
      for (std::size_t k : {1, 2, 5}) {
        std::vector<std::size_t> odd;
        std::size_t odd_blocks = 0;
        for (std::size_t j = 0; j * k < n; j += 2, ++odd_blocks)
          for (std::size_t t = j * k; t < std::min(n, (j + 1) * k); ++t) odd.push_back(t);
        const std::size_t m = odd.size();
        std::vector<double> coupled(std::size_t{1} << m, 0.0), decoupled(std::size_t{1} << m, 0.0);
        oracle::for_each_path(2, n, [&](const std::vector<int>& path) {
          std::size_t code = 0;
          for (std::size_t a = 0; a < m; ++a) code |= static_cast<std::size_t>(path[odd[a]]) << a;
          coupled[code] += oracle::path_prob(P, pi, path);
        });
        oracle::for_each_path(2, m, [&](const std::vector<int>& sub) {
          double pr = 1.0;
          std::size_t code = 0;
          for (std::size_t a = 0; a < m; ++a) {
            code |= static_cast<std::size_t>(sub[a]) << a;
            const bool starts_block = a == 0 || odd[a] != odd[a - 1] + 1;
            pr *= starts_block ? pi[sub[a]] : P[sub[a - 1]][sub[a]];
          }
          decoupled[code] = pr;
        });
        // sup over {0,1}-valued f of |E f - E f~| is the positive part sum.
        double gap = 0.0;
        for (std::size_t c = 0; c < coupled.size(); ++c) gap += std::max(0.0, coupled[c] - decoupled[c]);
        const double bound = static_cast<double>(odd_blocks - 1) * betas[k - 1];
        if ((n / 2) % k == 0) {
          const double lib = decoupling_gap_bound(betas, make_blocks(n, k));
          if (std::abs(lib - bound) > 1e-15) return {false, "library gap bound disagrees with block count"};
        }
        worst_slack = std::max(worst_slack, gap - bound);
        ++cases;
      }
    }
  }
  return {worst_slack <= 1e-12,
          fmt("%g chain/k cases, max (gap - bound) = %.3e", static_cast<double>(cases), worst_slack)};
}

Outcome bernstein_mgf() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t checks = 0, violations = 0, positive_range = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int atoms = 2 + trial % 5;
    oracle::Vec v(atoms), w(atoms);
    double total = 0.0, mean = 0.0;
    for (int a = 0; a < atoms; ++a) total += (w[a] = 0.05 + u(gen));
    for (int a = 0; a < atoms; ++a) {
      w[a] /= total;
      v[a] = -3.0 + 6.0 * u(gen);
      mean += w[a] * v[a];
    }
    const double shift = std::max(mean, 0.0) + 0.3 * u(gen);
    for (auto& x : v) x -= shift;
    const FiniteLaw law{v, w};
    for (double p : {2.0, 4.0, kInf}) {
      const double psi = psi_p_norm_exact(law, p).value;
      for (double q : {1.0, 1.5, 2.0}) {
        double m2q = 0.0;
        for (int a = 0; a < atoms; ++a) m2q += w[a] * std::pow(std::abs(v[a]), 2 * q);
        const double var2q = std::pow(m2q, 1.0 / q);
        const double qp = holder_conjugate(q);
        const double limit = bernstein_lambda_limit(psi, p, qp);
        if (limit > 0.0) ++positive_range;
        for (int j = 0; j < 50; ++j) {
          const double lam = limit * j / 50.0;
          const double rhs = bernstein_mgf_rhs(lam, var2q, psi, p, qp);
          if (oracle::exact_mgf(v, w, lam) > rhs * (1 + 1e-12)) ++violations;
          ++checks;
        }
      }
    }
  }
  return {violations == 0,
          fmt("%g (law, p, q, lambda) checks, %g violations; %g of 900 (law, p, q) cells have a nontrivial lambda range",
              double(checks), double(violations), double(positive_range))};
}

Outcome blocked_coverage() {
  BlockedBernsteinConfig bc;
  bc.k = 8;
  bc.n = 1024;
  bc.delta = 0.05;
  bc.replicates = 10000;
  bc.seed = 17;
  const auto res = blocked_bernstein_coverage(bc);
  double worst = 0.0;
  for (std::size_t k : {1, 2, 4, 8, 16, 32})
    for (double b : {0.5, 1.0, 3.0}) {
      const double var = 0.7;
      const double iid = blocked_bernstein_terms(b, var, 1024, 1, 0.05).variance_term;
      const double blocked = blocked_bernstein_terms(b, var * static_cast<double>(k), 1024, k, 0.05).variance_term;
      worst = std::max(worst, std::abs(iid - blocked));
    }
  return {res.passed && worst <= 1e-12,
          fmt("exceedance %.4f <= %.4f (0.05 + 3 SE); leading-term identity max error %.2e",
              res.frequency, res.threshold, worst)};
}

Outcome weak_variance_identities() {
  // Homoscedastic martingale differences on a 4-state chain.
  const auto chain = MarkovChainModel::product(MarkovChainModel::symmetric_two_state(0.6), 2);
  Matrix emb(4, 2);
  emb << -1, -1, 1, -1, -1, 1, 1, 1;
  std::vector<NoiseLaw> laws;
  for (int s = 0; s < 4; ++s)
    laws.push_back(s == 0 || s == 3 ? NoiseLaw{{-0.8, 0.5}, {0.8, 0.5}} : NoiseLaw{{1.6, 0.2}, {-0.4, 0.8}});
  Vector beta(2);
  beta << 1.0, -0.5;
  const auto mds = RegressionProblem::linear(chain, emb, beta, NoiseSpec::martingale_difference(laws));
  const auto pop = population_quantities(mds, HypothesisClass::linear(2));
  std::vector<StateFunction> set;
  for (double a : {0.0, 0.7, 1.9, 3.0}) {
    Vector v(2);
    v << std::cos(a), std::sin(a);
    set.push_back(linear_table(mds, v));
  }
  const double exact = weak_variance_2q(mds, pop, set, 1.0, 4).value;
  const double identity_err = std::abs(exact - pop.noise_variance);

  Matrix P(3, 3);
  P << 0.5, 0.4, 0.1, 0.1, 0.6, 0.3, 0.3, 0.2, 0.5;
  const auto biased = RegressionProblem::tabular(MarkovChainModel::from_transition(P), Matrix::Identity(3, 3),
                                                 {0.4, -0.2, 1.0},
                                                 NoiseSpec::bounded_iid({{-0.5, 0.5}, {0.5, 0.5}}));
  const auto bpop = population_quantities(biased, HypothesisClass::finite({{0.0, 0.0, 0.5}}));
  const std::vector<StateFunction> two{{1.0, -0.5, 0.2}, {0.0, 1.0, 1.0}};
  const auto ex = weak_variance_2q(biased, bpop, two, 1.0, 4);
  WeakVarianceOptions mc;
  mc.mode = WeakVarianceMode::MonteCarlo;
  mc.replicates = 100000;
  mc.seed = 5;
  const auto est = weak_variance_2q(biased, bpop, two, 1.0, 4, mc);
  double worst_z = 0.0;
  for (std::size_t j = 0; j < 2; ++j)
    worst_z = std::max(worst_z, std::abs(ex.per_function[j] - est.per_function[j]) / est.per_function_se[j]);
  return {identity_err <= 1e-12 && worst_z <= 3.0,
          fmt("|V_2(exact) - V(W)| = %.2e (tol 1e-12); exact vs Monte Carlo max |z| = %.2f (tol 3)",
              identity_err, worst_z)};
}

Outcome gamma_and_radius() {
  double worst_q = 0.0, worst_r = 0.0;
  for (double eta : {0.5, 1.0, 2.0})
    for (double d : {1.0, 2.0, 5.0, 20.0})
      for (double r : {0.01, 0.3, 1.0}) {
        const double closed = gamma_alpha_parametric(d, r, eta, 1.7);
        const double quad = gamma_alpha_quadrature(parametric_profile(d, r), eta, 1.7);
        worst_q = std::max(worst_q, std::abs(quad - closed) / closed);
      }
  for (double d : {1.0, 5.0, 10.0})
    for (std::size_t n : {1000, 100000, 10000000})
      for (double c1 : {0.5, 1.0, 2.0}) {
        const double v = 0.8, c = 1.0;
        const double expect = c1 * c * std::sqrt(v * d / static_cast<double>(n));
        if (expect >= 1.0) continue;
        const auto res = critical_radius([&](double) { return v; },
                                         [&](double r) { return gamma_alpha_parametric(d, r, 2.0, c) / std::tgamma(1.5); },
                                         n, c1);
        worst_r = std::max(worst_r, std::abs(res.r - expect) / expect);
      }
  return {worst_q <= 1e-5 && worst_r <= 1e-9,
          fmt("closed form vs quadrature max rel. error %.2e (tol 1e-5); r* vs c1 c sqrt(V d / n) max rel. error %.2e (tol 1e-9)",
              worst_q, worst_r)};
}

Outcome rate_exponent() {
  const auto cfg = config("cor32.json");
  const auto sc = sweep_config(cfg);
  const auto res = run_sweep(sc);
  const auto& fit = res.levels.front().fit;
  if (!fit) return {false, "sweep produced fewer than three grid points"};
  return {fit->exponent >= -1.2 && fit->exponent <= -0.8 && fit->r_squared >= 0.95,
          fmt("d = %g, %g replicates per cell: exponent %.4f (want [-1.2, -0.8]), R^2 %.4f (want >= 0.95)",
              sc.make_problem(0.5).dim(), double(sc.replicates), fit->exponent, fit->r_squared)};
}

Outcome mixing_free() {
  const auto cfg = config("mixfree.json");
  const auto res = run_sweep(sweep_config(cfg));
  if (!res.mixing_free) return {false, res.mixing_free_error};
  const auto& m = *res.mixing_free;
  std::size_t kmix_slow = 0, kmix_fast = 0;
  for (const auto& l : res.levels)
    for (const auto& c : l.cells)
      if (c.n == m.n_used.front()) (l.level == m.slow_level ? kmix_slow : kmix_fast) = c.bound.k_mix;
  std::ostringstream used;
  for (auto n : m.n_used) used << (used.tellp() ? "," : "") << n;
  const bool ok = m.ratio <= 3.0 && m.naive_ratio >= 10.0 && kmix_slow >= 10 * kmix_fast;
  return {ok, "levels " + fmt("%g vs %g", m.slow_level, m.fast_level) + ", n past burn-in {" + used.str() +
                  "}: constant ratio " + fmt("%.3f (want <= 3), block-length ratio %g (want >= 10), k_mix %g vs %g",
                                             m.ratio, m.naive_ratio, double(kmix_slow), double(kmix_fast))};
}

Outcome risk_coverage() {
  const auto cfg = config("cor32.json");
  const auto rc = risk_coverage_config(cfg);
  const auto res = risk_bound_coverage(rc);
  return {res.passed && rc.delta == 0.0125 && rc.calibration_replicates == 500 && rc.validation_replicates == 2000,
          fmt("c2 = %.4f from 500 calibration runs; validation exceedance %.4f <= %.4f (4 delta + 3 SE)",
              res.calibrated_c2.value_or(NAN), res.frequency, res.threshold)};
}

Outcome quadratic_sign() {
  const auto cfg = config("qsign.json");
  const auto dc = diagnostics_config(cfg);
  const auto cls = dc.make_class(dc.make_problem(dc.level));
  const auto rep = process_diagnostics(dc);
  const bool ok = rep.positive_fraction <= 0.05 && cls.size() == 16 && dc.n == 8192 && dc.replicates == 500 &&
                  dc.epsilon == 0.5 && dc.level == 0.0;
  return {ok, fmt("%g pairs outside the r* = %.4g ball, %g with Q_n > 0: fraction %.4f (want <= 0.05)",
                  double(rep.pairs), rep.r_star, double(rep.positive_pairs), rep.positive_fraction)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "criterion number (1-10); repeatable")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "beta-coefficient exactness", 1, beta_exactness},
      {2, "decoupling gap", 10, decoupling_gap},
      {3, "Psi_p-Bernstein MGF", 5, bernstein_mgf},
      {4, "blocked Bernstein coverage", 30, blocked_coverage},
      {5, "weak-variance identities", 10, weak_variance_identities},
      {6, "gamma and critical-radius calculus", 1, gamma_and_radius},
      {7, "rate exponent", 600, rate_exponent},
      {8, "mixing-free leading term", 1200, mixing_free},
      {9, "calibrated risk-bound coverage", 600, risk_coverage},
      {10, "quadratic-process sign", 300, quadratic_sign},
  };

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.ok && in_time;
    if (!pass) ++failures;
    std::cout << "criterion " << c.id << " " << (pass ? "PASS" : "FAIL") << " [" << c.name << "] "
              << o.detail << fmt("; %.2f s (limit %g s)", secs, c.limit_seconds)
              << (in_time ? "" : " OVER TIME") << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
