#include "mixfree/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>

#include "mixfree/blocking.hpp"
#include "mixfree/error.hpp"
#include "mixfree/parallel.hpp"
#include "mixfree/rng.hpp"

namespace mixfree {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) throw ConfigError("median of an empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

// Smallest c such that at most a `tail` fraction of values exceeds c.
double upper_quantile(std::vector<double> v, double tail) {
  if (v.empty()) throw ConfigError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double keep = std::ceil((1.0 - tail) * static_cast<double>(v.size()) - 1e-9);
  const std::size_t idx = static_cast<std::size_t>(std::clamp(keep, 1.0, static_cast<double>(v.size()))) - 1;
  return v[idx];
}

double excess_for(const RegressionProblem& problem, const HypothesisClass& cls,
                  const PopulationQuantities& pop, std::size_t n, std::uint64_t seed) {
  const Trajectory traj = sample_trajectory(problem, n, seed);
  return *fit_erm(traj, cls, problem, pop).excess_l2_squared;
}

}  // namespace

std::uint64_t cell_seed(std::uint64_t master, double level, std::size_t n, std::size_t replicate) {
  return derive_seed(master, std::bit_cast<std::uint64_t>(level), n, replicate);
}

double run_cell(const SweepConfig& config, std::size_t n, double level, std::size_t replicate) {
  const RegressionProblem problem = config.make_problem(level);
  const HypothesisClass cls = config.make_class(problem);
  const PopulationQuantities pop = population_quantities(problem, cls);
  return excess_for(problem, cls, pop, n, cell_seed(config.master_seed, level, n, replicate));
}

RateFit fit_rate(std::span<const double> ns, std::span<const double> medians) {
  if (ns.size() != medians.size() || ns.size() < 3)
    throw ConfigError("a rate fit needs at least three (n, median) points");
  RateFit fit;
  fit.ns.assign(ns.begin(), ns.end());
  fit.medians.assign(medians.begin(), medians.end());
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(medians[i] > 0.0) || !(ns[i] > 0.0))
      throw ConfigError("rate fits need positive n and positive medians");
    x.push_back(std::log(ns[i]));
    y.push_back(std::log(medians[i]));
  }
  const double m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("rate fit needs at least two distinct n");
  fit.exponent = sxy / sxx;
  fit.log_constant = my - fit.exponent * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - fit.log_constant - fit.exponent * x[i];
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

RateFit fit_rate_fixed_slope(std::span<const double> ns, std::span<const double> medians,
                             double slope) {
  if (ns.size() != medians.size() || ns.empty()) throw ConfigError("fit needs at least one point");
  RateFit fit;
  fit.ns.assign(ns.begin(), ns.end());
  fit.medians.assign(medians.begin(), medians.end());
  fit.exponent = slope;
  double acc = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(medians[i] > 0.0) || !(ns[i] > 0.0))
      throw ConfigError("rate fits need positive n and positive medians");
    const double v = std::log(medians[i]) - slope * std::log(ns[i]);
    acc += v;
  }
  const double m = static_cast<double>(ns.size());
  fit.log_constant = acc / m;
  // share of log-median variation explained by the fixed-slope line
  double my = 0.0;
  for (double v : medians) my += std::log(v) / m;
  double syy = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double y = std::log(medians[i]);
    syy += (y - my) * (y - my);
    const double e = y - fit.log_constant - slope * std::log(ns[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

MixingFreeReport mixing_free_check(const std::vector<LevelSummary>& levels) {
  if (levels.size() < 2) throw ConfigError("the mixing-free check needs at least two levels");
  for (const auto& l : levels)
    if (l.cells.empty()) throw ConfigError("every mixing level needs at least one cell");

  auto k_mix_at_top = [](const LevelSummary& l) {
    return std::max_element(l.cells.begin(), l.cells.end(),
                            [](const CellSummary& a, const CellSummary& b) { return a.n < b.n; })
        ->bound.k_mix;
  };
  std::size_t slow = 0, fast = 0;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const auto km = k_mix_at_top(levels[i]);
    if (km > k_mix_at_top(levels[slow]) ||
        (km == k_mix_at_top(levels[slow]) && levels[i].level > levels[slow].level))
      slow = i;
    if (km < k_mix_at_top(levels[fast]) ||
        (km == k_mix_at_top(levels[fast]) && levels[i].level < levels[fast].level))
      fast = i;
  }
  if (slow == fast) fast = (slow == 0) ? 1 : 0;

  const auto& ls = levels[slow];
  const auto& lf = levels[fast];
  std::vector<double> ns, ms, mf;
  MixingFreeReport rep;
  rep.slow_level = ls.level;
  rep.fast_level = lf.level;
  std::size_t largest_need = 0;
  for (const auto& cs : ls.cells) {
    const double need = cs.bound.c3 * static_cast<double>(std::max(cs.bound.n_quad, cs.bound.n_mult));
    largest_need = std::max(largest_need, static_cast<std::size_t>(need));
    if (!cs.bound.past_burn_in) continue;
    auto it = std::find_if(lf.cells.begin(), lf.cells.end(),
                           [&](const CellSummary& c) { return c.n == cs.n; });
    if (it == lf.cells.end() || !it->bound.past_burn_in) continue;
    if (rep.n_used.empty()) {
      rep.k_slow = cs.bound.k;
      rep.k_fast = it->bound.k;
    }
    rep.n_used.push_back(cs.n);
    ns.push_back(static_cast<double>(cs.n));
    ms.push_back(cs.median);
    mf.push_back(it->median);
  }
  if (rep.n_used.empty())
    throw NumericError("no n on the grid is past the computed burn-ins at both levels; extend "
                       "the grid to at least n = " + std::to_string(largest_need));

  rep.constant_slow = std::exp(fit_rate_fixed_slope(ns, ms, -1.0).log_constant);
  rep.constant_fast = std::exp(fit_rate_fixed_slope(ns, mf, -1.0).log_constant);
  rep.ratio = rep.constant_slow / rep.constant_fast;
  rep.naive_ratio = static_cast<double>(rep.k_slow) / static_cast<double>(rep.k_fast);
  if (ns.size() >= 3) {
    rep.free_fit_slow = fit_rate(ns, ms);
    rep.free_fit_fast = fit_rate(ns, mf);
  }
  rep.accepted = rep.ratio <= rep.naive_ratio;
  return rep;
}

SweepResult run_sweep(const SweepConfig& config) {
  if (config.replicates < 1) throw ConfigError("replicates must be at least 1");
  if (config.n_grid.empty()) throw ConfigError("nGrid is empty");
  if (config.mixing_levels.empty()) throw ConfigError("mixingLevels is empty");
  const std::size_t L = config.mixing_levels.size();
  const std::size_t N = config.n_grid.size();
  const std::size_t R = config.replicates;

  std::vector<RegressionProblem> problems;
  std::vector<HypothesisClass> classes;
  std::vector<PopulationQuantities> pops;
  std::vector<BoundReport> reports(L * N);
  for (std::size_t li = 0; li < L; ++li) {
    problems.push_back(config.make_problem(config.mixing_levels[li]));
    classes.push_back(config.make_class(problems.back()));
  }
  for (std::size_t li = 0; li < L; ++li) {
    BoundConfig bc = config.bound;
    bc.n = config.n_grid.front();
    const BoundContext ctx = make_bound_context(problems[li], classes[li], bc);
    pops.push_back(ctx.pop);
    for (std::size_t ni = 0; ni < N; ++ni) {
      bc.n = config.n_grid[ni];
      reports[li * N + ni] = evaluate_bound(ctx, bc);
    }
  }

  std::vector<double> excess(L * N * R);
  parallel_for(excess.size(), [&](std::size_t t) {
    const std::size_t li = t / (N * R);
    const std::size_t ni = (t / R) % N;
    const std::size_t r = t % R;
    const std::size_t n = config.n_grid[ni];
    excess[t] = excess_for(problems[li], classes[li], pops[li], n,
                           cell_seed(config.master_seed, config.mixing_levels[li], n, r));
  });

  SweepResult res;
  for (std::size_t li = 0; li < L; ++li) {
    LevelSummary ls;
    ls.level = config.mixing_levels[li];
    for (std::size_t ni = 0; ni < N; ++ni) {
      const BoundReport& b = reports[li * N + ni];
      std::vector<double> cell;
      for (std::size_t r = 0; r < R; ++r) {
        const double e = excess[(li * N + ni) * R + r];
        cell.push_back(e);
        res.rows.push_back({config.n_grid[ni], ls.level, r, e, b.k, b.n_quad, b.n_mult, b.k_mix,
                            b.r_star, b.risk_bound});
      }
      ls.cells.push_back({config.n_grid[ni], median(cell), b});
    }
    std::vector<CellSummary> sorted = ls.cells;
    std::sort(sorted.begin(), sorted.end(),
              [](const CellSummary& a, const CellSummary& b) { return a.n < b.n; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (sorted[i].median > sorted[i - 1].median) ++ls.inversions;
    if (ls.inversions > 1) res.monotone_ok = false;
    if (ls.cells.size() >= 3) {
      std::vector<double> ns, ms;
      for (const auto& c : ls.cells) {
        ns.push_back(static_cast<double>(c.n));
        ms.push_back(c.median);
      }
      bool positive = std::all_of(ms.begin(), ms.end(), [](double v) { return v > 0.0; });
      if (positive) ls.fit = fit_rate(ns, ms);
    }
    res.levels.push_back(std::move(ls));
  }
  if (L >= 2) {
    try {
      res.mixing_free = mixing_free_check(res.levels);
    } catch (const NumericError& e) {
      res.mixing_free_error = e.what();
    }
  }
  return res;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "nGrid,mixingLevel,replicate,excessRisk,k,nQuad,nMult,kMix,rStar,riskBound\n";
  for (const auto& r : result.rows)
    out << r.n << ',' << fmt(r.level) << ',' << r.replicate << ',' << fmt(r.excess_risk) << ','
        << r.k << ',' << r.n_quad << ',' << r.n_mult << ',' << r.k_mix << ',' << fmt(r.r_star)
        << ',' << fmt(r.risk_bound) << '\n';
}

namespace {

nlohmann::json fit_json(const RateFit& f) {
  return {{"exponent", f.exponent},
          {"logConstant", f.log_constant},
          {"rSquared", f.r_squared},
          {"n", f.ns},
          {"medians", f.medians}};
}

}  // namespace

nlohmann::json sweep_summary_json(const SweepResult& result) {
  nlohmann::json j;
  j["monotoneOk"] = result.monotone_ok;
  j["levels"] = nlohmann::json::array();
  for (const auto& l : result.levels) {
    nlohmann::json lj;
    lj["mixingLevel"] = l.level;
    lj["inversions"] = l.inversions;
    lj["fit"] = l.fit ? fit_json(*l.fit) : nlohmann::json(nullptr);
    lj["cells"] = nlohmann::json::array();
    for (const auto& c : l.cells)
      lj["cells"].push_back({{"n", c.n},
                             {"median", c.median},
                             {"k", c.bound.k},
                             {"kMix", c.bound.k_mix},
                             {"nQuad", c.bound.n_quad},
                             {"nMult", c.bound.n_mult},
                             {"rStar", c.bound.r_star},
                             {"riskBound", c.bound.risk_bound},
                             {"pastBurnIn", c.bound.past_burn_in}});
    j["levels"].push_back(lj);
  }
  if (result.mixing_free) {
    const auto& m = *result.mixing_free;
    j["mixingFree"] = {{"slowLevel", m.slow_level},
                       {"fastLevel", m.fast_level},
                       {"nUsed", m.n_used},
                       {"constantSlow", m.constant_slow},
                       {"constantFast", m.constant_fast},
                       {"ratio", m.ratio},
                       {"kSlow", m.k_slow},
                       {"kFast", m.k_fast},
                       {"naiveRatio", m.naive_ratio},
                       {"accepted", m.accepted},
                       {"freeFitSlow", m.free_fit_slow ? fit_json(*m.free_fit_slow) : nlohmann::json(nullptr)},
                       {"freeFitFast", m.free_fit_fast ? fit_json(*m.free_fit_fast) : nlohmann::json(nullptr)}};
  } else {
    j["mixingFree"] = nullptr;
    if (!result.mixing_free_error.empty()) j["mixingFreeError"] = result.mixing_free_error;
  }
  return j;
}

void write_sweep_svg(const SweepResult& result, std::ostream& out) {
  const double W = 640, H = 420, M = 60;
  double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
  for (const auto& l : result.levels)
    for (const auto& c : l.cells) {
      if (!(c.median > 0.0)) continue;
      xmin = std::min(xmin, std::log10(static_cast<double>(c.n)));
      xmax = std::max(xmax, std::log10(static_cast<double>(c.n)));
      ymin = std::min(ymin, std::log10(c.median));
      ymax = std::max(ymax, std::log10(c.median));
    }
  if (!(xmax > xmin)) { xmin -= 0.5; xmax += 0.5; }
  if (!(ymax > ymin)) { ymin -= 0.5; ymax += 0.5; }
  auto px = [&](double x) { return M + (x - xmin) / (xmax - xmin) * (W - 2 * M); };
  auto py = [&](double y) { return H - M - (y - ymin) / (ymax - ymin) * (H - 2 * M); };
  const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">log10 n</text>\n";
  out << "<text x=\"15\" y=\"" << H / 2 << "\" transform=\"rotate(-90 15 " << H / 2
      << ")\" text-anchor=\"middle\">log10 median excess risk</text>\n";
  for (std::size_t i = 0; i < result.levels.size(); ++i) {
    const auto& l = result.levels[i];
    const char* col = colours[i % 5];
    out << "<polyline fill=\"none\" stroke=\"" << col << "\" points=\"";
    for (const auto& c : l.cells)
      if (c.median > 0.0)
        out << fmt(px(std::log10(static_cast<double>(c.n)))) << ',' << fmt(py(std::log10(c.median))) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << W - M - 120 << "\" y=\"" << M + 18 * static_cast<double>(i) << "\" fill=\"" << col
        << "\">level " << fmt(l.level) << "</text>\n";
  }
  out << "</svg>\n";
}

CoverageResult exceedance_frequency(std::span<const double> realised,
                                    std::span<const double> bounds, double level) {
  if (realised.size() != bounds.size() || realised.empty())
    throw ConfigError("coverage needs matching, nonempty realised and bound arrays");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("nominal level must lie in (0, 1)");
  CoverageResult res;
  res.replicates = realised.size();
  res.level = level;
  for (std::size_t i = 0; i < realised.size(); ++i) {
    const bool ex = realised[i] > bounds[i];
    res.exceedances += ex ? 1 : 0;
    res.rows.push_back({i, realised[i], bounds[i], ex});
  }
  const double R = static_cast<double>(res.replicates);
  res.frequency = static_cast<double>(res.exceedances) / R;
  res.std_error = std::sqrt(level * (1.0 - level) / R);
  res.threshold = level + 3.0 * res.std_error;
  res.passed = res.frequency <= res.threshold;
  return res;
}

double two_state_block_second_moment(double dependence, std::size_t k) {
  if (k < 1) throw ConfigError("block length must be at least 1");
  double acc = static_cast<double>(k);
  double lag = 1.0;
  for (std::size_t l = 1; l < k; ++l) {
    lag *= dependence;
    acc += 2.0 * static_cast<double>(k - l) * lag;
  }
  return acc;
}

CoverageResult blocked_bernstein_coverage(const BlockedBernsteinConfig& config) {
  if (config.replicates < 1) throw ConfigError("replicates must be at least 1");
  const MarkovChainModel chain = MarkovChainModel::symmetric_two_state(config.dependence);
  Matrix emb(2, 1);
  emb << -1.0, 1.0;
  const RegressionProblem problem = RegressionProblem::tabular(
      chain, emb, {-1.0, 1.0}, NoiseSpec::bounded_iid({{0.0, 1.0}}));
  const double bound = blocked_bernstein_bound(
      1.0, two_state_block_second_moment(config.dependence, config.k), config.n, config.k,
      config.delta);
  std::vector<double> realised(config.replicates);
  parallel_for(config.replicates, [&](std::size_t r) {
    const Trajectory t =
        kwise_independent_surrogate(problem, config.n, config.k, derive_seed(config.seed, r));
    realised[r] = std::accumulate(t.targets.begin(), t.targets.end(), 0.0) /
                  static_cast<double>(config.n);
  });
  const std::vector<double> bounds(config.replicates, bound);
  return exceedance_frequency(realised, bounds, config.delta);
}

CoverageResult risk_bound_coverage(const RiskCoverageConfig& config) {
  if (config.calibration_seed == config.validation_seed)
    throw ConfigError("calibration and validation seeds must differ");
  const double level = 4.0 * config.delta;
  if (!(level < 1.0)) throw ConfigError("4 delta must be below 1");
  const RegressionProblem problem = config.make_problem(config.level);
  const HypothesisClass cls = config.make_class(problem);
  BoundConfig bc = config.bound;
  bc.n = config.n;
  bc.delta = config.delta;
  bc.c2 = 1.0;
  const BoundContext ctx = make_bound_context(problem, cls, bc);
  const BoundReport rep = evaluate_bound(ctx, bc);
  const double scale = rep.r_star * rep.r_star +
                       rep.weak_variance * std::log(1.0 / config.delta) / static_cast<double>(config.n);

  auto run = [&](std::size_t count, std::uint64_t master) {
    std::vector<double> out(count);
    parallel_for(count, [&](std::size_t r) {
      out[r] = excess_for(problem, cls, ctx.pop, config.n, derive_seed(master, r));
    });
    return out;
  };
  const auto calib = run(config.calibration_replicates, config.calibration_seed);
  std::vector<double> ratios;
  for (double e : calib) ratios.push_back(e / scale);
  const double c2 = std::max(upper_quantile(ratios, level), 1e-300);

  const auto valid = run(config.validation_replicates, config.validation_seed);
  const std::vector<double> bounds(valid.size(), c2 * scale);
  CoverageResult res = exceedance_frequency(valid, bounds, level);
  res.calibrated_c2 = c2;
  return res;
}

DiagnosticsReport process_diagnostics(const DiagnosticsConfig& config) {
  if (config.replicates < 2) throw ConfigError("diagnostics need at least two replicates");
  const RegressionProblem problem = config.make_problem(config.level);
  const HypothesisClass cls = config.make_class(problem);
  BoundConfig bc = config.bound;
  bc.n = config.n;
  bc.epsilon = config.epsilon;
  const BoundContext ctx = make_bound_context(problem, cls, bc);
  const BoundReport rep = evaluate_bound(ctx, bc);
  const PopulationQuantities& pop = ctx.pop;
  const double r = rep.r_star;

  LocalisedParams lp;
  lp.L = rep.L;
  lp.eta = rep.eta;
  lp.p = rep.p;
  lp.q = rep.q;
  lp.q_prime = rep.q_prime;
  lp.k = static_cast<double>(rep.k);
  lp.r = r;
  lp.delta = rep.delta;
  lp.noise_psi = rep.noise_psi;
  lp.gamma_eta = rep.gamma_eta;
  lp.gamma_mixed = rep.gamma_mixed;
  lp.gamma2 = rep.gamma2;
  lp.weak_variance = rep.weak_variance;

  DiagnosticsReport out;
  out.r_star = r;
  out.n_quad = rep.n_quad;
  out.multiplier_rhs = multiplier_bound_rhs(lp, config.n, 1.0, 1.0).value();

  // Members outside the r-ball (for Q_n) and unit directions on the sphere (for M_n).
  std::vector<StateFunction> outside, units;
  std::vector<double> unit_centre;
  std::vector<Vector> dirs;
  Matrix sigma_inv_sqrt;
  if (cls.is_linear()) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(pop.sigma);
    sigma_inv_sqrt = eig.operatorInverseSqrt();
    Rng rng(derive_seed(config.seed, 0xd1));
    for (std::size_t t = 0; t < config.linear_directions; ++t) {
      Vector v(problem.dim());
      for (int i = 0; i < problem.dim(); ++i) v[i] = rng.normal();
      v /= std::sqrt(v.dot(pop.sigma * v));
      dirs.push_back(v);
    }
  } else {
    for (const auto& f : cls.members()) {
      StateFunction g(f.size());
      for (std::size_t x = 0; x < f.size(); ++x) g[x] = f[x] - pop.f_star[x];
      const double norm = l2_norm(g, problem);
      if (norm > r) outside.push_back(f);
      if (norm >= r && norm > 0.0) {
        for (double& v : g) v /= norm;
        unit_centre.push_back(noise_correlation(g, problem, pop));
        units.push_back(std::move(g));
      }
    }
  }

  const std::size_t R = config.replicates;
  std::vector<std::size_t> positive(R, 0), counted(R, 0);
  std::vector<double> sup(R, 0.0);
  Vector exw = Vector::Zero(problem.dim());
  if (cls.is_linear())
    for (int x = 0; x < problem.states(); ++x)
      exw += problem.chain().stationary()[x] * pop.w_mean[x] * problem.embedding().row(x).transpose();

  parallel_for(R, [&](std::size_t rep_i) {
    const Trajectory traj = sample_trajectory(problem, config.n, derive_seed(config.seed, rep_i));
    const auto w = residuals(traj, pop.f_star);
    const double nd = static_cast<double>(config.n);
    if (cls.is_linear()) {
      const Matrix& X = traj.covariates;
      const Matrix gram = X.transpose() * X / nd;
      for (const auto& v : dirs) {
        const double q = 1.0 - (1.0 + config.epsilon) * v.dot(gram * v);
        ++counted[rep_i];
        if (q > 0.0) ++positive[rep_i];
      }
      const Vector c = X.transpose() * Eigen::Map<const Vector>(w.data(), config.n) / nd - exw;
      sup[rep_i] = (sigma_inv_sqrt * c).norm();
    } else {
      for (const auto& f : outside) {
        ++counted[rep_i];
        if (quadratic_process(f, pop.f_star, traj, problem, config.epsilon) > 0.0) ++positive[rep_i];
      }
      double best = units.empty() ? 0.0 : -kInf;
      for (std::size_t u = 0; u < units.size(); ++u) {
        double acc = 0.0;
        for (std::size_t i = 0; i < config.n; ++i) acc += w[i] * units[u][traj.states[i]];
        best = std::max(best, acc / nd - unit_centre[u]);
      }
      sup[rep_i] = best;
    }
  });

  out.pairs = std::accumulate(counted.begin(), counted.end(), std::size_t{0});
  out.positive_pairs = std::accumulate(positive.begin(), positive.end(), std::size_t{0});
  out.positive_fraction =
      out.pairs ? static_cast<double>(out.positive_pairs) / static_cast<double>(out.pairs) : 0.0;
  out.multiplier_sup = sup;

  const std::size_t half = R / 2;
  std::vector<double> ratios;
  for (std::size_t i = 0; i < half; ++i) ratios.push_back(sup[i] / out.multiplier_rhs);
  out.calibrated_constant = upper_quantile(ratios, bc.delta);
  std::size_t within = 0;
  for (std::size_t i = half; i < R; ++i)
    if (sup[i] <= out.calibrated_constant * out.multiplier_rhs) ++within;
  out.within_fraction = static_cast<double>(within) / static_cast<double>(R - half);
  return out;
}

nlohmann::json to_json(const CoverageResult& r) {
  nlohmann::json j = {{"replicates", r.replicates},
                      {"exceedances", r.exceedances},
                      {"frequency", r.frequency},
                      {"stdError", r.std_error},
                      {"level", r.level},
                      {"threshold", r.threshold},
                      {"passed", r.passed}};
  j["calibratedC2"] = r.calibrated_c2 ? nlohmann::json(*r.calibrated_c2) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const DiagnosticsReport& r) {
  return {{"rStar", r.r_star},
          {"nQuad", r.n_quad},
          {"pairs", r.pairs},
          {"positivePairs", r.positive_pairs},
          {"positiveFraction", r.positive_fraction},
          {"multiplierRhs", r.multiplier_rhs},
          {"calibratedConstant", r.calibrated_constant},
          {"withinFraction", r.within_fraction},
          {"multiplierSup", r.multiplier_sup}};
}

void write_coverage_csv(const CoverageResult& result, std::ostream& out) {
  out << "trial,blockedMean,bound,exceeded\n";
  for (const auto& row : result.rows)
    out << row.trial << ',' << fmt(row.blocked_mean) << ',' << fmt(row.bound) << ','
        << (row.exceeded ? 1 : 0) << '\n';
}

}  // namespace mixfree
