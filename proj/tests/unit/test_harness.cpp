#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mixfree/error.hpp"
#include "mixfree/harness.hpp"
#include "mixfree/io.hpp"

using namespace mixfree;

namespace {

RegressionProblem sign_bits(int d, double level, double sigma) {
  const auto chain = MarkovChainModel::product(MarkovChainModel::symmetric_two_state(level), d);
  Matrix emb(chain.states(), d);
  for (int s = 0; s < chain.states(); ++s)
    for (int j = 0; j < d; ++j) emb(s, j) = ((s >> j) & 1) ? 1.0 : -1.0;
  Vector beta = Vector::LinSpaced(d, 1.0, -1.0);
  NoiseLaw law = sigma > 0 ? NoiseLaw{{-sigma, 0.5}, {sigma, 0.5}} : NoiseLaw{{0.0, 1.0}};
  return RegressionProblem::linear(chain, emb, beta, NoiseSpec::bounded_iid(law));
}

SweepConfig small_sweep(int d, double sigma) {
  SweepConfig c;
  c.make_problem = [=](double level) { return sign_bits(d, level, sigma); };
  c.make_class = [=](const RegressionProblem&) { return HypothesisClass::linear(d); };
  c.n_grid = {64, 128, 256};
  c.mixing_levels = {0.0, 0.6};
  c.replicates = 20;
  c.master_seed = 5;
  return c;
}

CellSummary cell(std::size_t n, double median, std::size_t k, std::size_t k_mix, bool past) {
  CellSummary c;
  c.n = n;
  c.median = median;
  c.bound.n = n;
  c.bound.k = k;
  c.bound.k_mix = k_mix;
  c.bound.n_quad = past ? n / 4 : 4 * n;
  c.bound.n_mult = past ? n / 2 : 4 * n;
  c.bound.past_burn_in = past;
  return c;
}

}  // namespace

TEST_CASE("rate fits") {
  const std::vector<double> ns{100, 200, 400, 800, 1600};
  std::vector<double> inv, root;
  for (double n : ns) {
    inv.push_back(3.0 / n);
    root.push_back(3.0 / std::sqrt(n));
  }
  const auto a = fit_rate(ns, inv);
  CHECK(std::abs(a.exponent + 1.0) < 1e-9);
  CHECK(std::abs(a.log_constant - std::log(3.0)) < 1e-9);
  CHECK(a.r_squared == doctest::Approx(1.0));
  CHECK(std::abs(fit_rate(ns, root).exponent + 0.5) < 1e-9);
  CHECK(std::abs(fit_rate_fixed_slope(ns, inv, -1.0).log_constant - std::log(3.0)) < 1e-12);

  std::vector<double> bad = inv;
  bad[2] = 0.0;
  CHECK_THROWS_AS(fit_rate(ns, bad), ConfigError);
  const std::vector<double> two{1.0, 2.0};
  CHECK_THROWS_AS(fit_rate(two, two), ConfigError);
}

TEST_CASE("cells") {
  SUBCASE("noiseless interpolation") {
    auto c = small_sweep(3, 0.0);
    for (std::size_t n : {8, 64})
      for (std::size_t rep = 0; rep < 5; ++rep) CHECK(run_cell(c, n, 0.6, rep) <= 1e-18);
  }
  SUBCASE("repeatable") {
    auto c = small_sweep(3, 1.0);
    CHECK(run_cell(c, 128, 0.6, 3) == run_cell(c, 128, 0.6, 3));
    CHECK(run_cell(c, 128, 0.6, 3) != run_cell(c, 128, 0.6, 4));
    CHECK(cell_seed(1, 0.6, 128, 3) != cell_seed(1, 0.0, 128, 3));
  }
  SUBCASE("iid median near V d / n") {
    auto c = small_sweep(5, 1.0);
    const std::size_t n = 2000;
    std::vector<double> v;
    for (std::size_t rep = 0; rep < 200; ++rep) v.push_back(run_cell(c, n, 0.0, rep));
    std::nth_element(v.begin(), v.begin() + 100, v.end());
    const double ref = 1.0 * 5 / n;
    CHECK(v[100] <= 4 * ref);
    CHECK(v[100] >= ref / 4);
  }
}

TEST_CASE("mixing-free check") {
  SUBCASE("identical levels give ratio one") {
    LevelSummary a{0.0, {}, {}, 0}, b{0.5, {}, {}, 0};
    for (std::size_t n : {1000, 2000, 4000}) {
      a.cells.push_back(cell(n, 2.0 / n, 1, 1, true));
      b.cells.push_back(cell(n, 2.0 / n, 1, 1, true));
    }
    const auto rep = mixing_free_check({a, b});
    CHECK(rep.ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.n_used.size() == 3);
  }
  SUBCASE("naive ratio is the block-length ratio") {
    LevelSummary fast{0.0, {}, {}, 0}, slow{0.9, {}, {}, 0};
    for (std::size_t n : {1000, 2000, 4000}) {
      fast.cells.push_back(cell(n, 2.0 / n, 1, 1, true));
      slow.cells.push_back(cell(n, 2.5 / n, 20, 18, true));
    }
    const auto rep = mixing_free_check({slow, fast});
    CHECK(rep.slow_level == 0.9);
    CHECK(rep.naive_ratio == 20.0);
    CHECK(rep.ratio == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(rep.accepted);
  }
  SUBCASE("nothing past burn-in") {
    LevelSummary fast{0.0, {}, {}, 0}, slow{0.9, {}, {}, 0};
    for (std::size_t n : {1000, 2000}) {
      fast.cells.push_back(cell(n, 2.0 / n, 1, 1, true));
      slow.cells.push_back(cell(n, 2.0 / n, 20, 18, false));
    }
    CHECK_THROWS_AS(mixing_free_check({slow, fast}), NumericError);
  }
}

TEST_CASE("sweep") {
  const auto c = small_sweep(2, 1.0);
  const auto a = run_sweep(c);
  const auto b = run_sweep(c);
  CHECK(a.rows.size() == 2 * 3 * 20);
  std::ostringstream sa, sb;
  write_sweep_csv(a, sa);
  write_sweep_csv(b, sb);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("nGrid,mixingLevel,replicate,excessRisk,k,nQuad,nMult,kMix,rStar,riskBound\n", 0) == 0);

  std::istringstream in(sa.str());
  const auto rows = read_sweep_csv(in);
  REQUIRE(rows.size() == a.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].excess_risk == a.rows[i].excess_risk);
    CHECK(rows[i].k == a.rows[i].k);
    CHECK(rows[i].r_star == a.rows[i].r_star);
  }
  CHECK(a.levels.size() == 2);
  for (const auto& l : a.levels) CHECK(l.inversions <= 1);
  CHECK(a.monotone_ok);

  std::ostringstream svg;
  write_sweep_svg(a, svg);
  CHECK(svg.str().find("<svg") != std::string::npos);
  const auto j = sweep_summary_json(a);
  CHECK(j.contains("levels"));
}

TEST_CASE("coverage") {
  SUBCASE("infinite bound is never exceeded") {
    const std::vector<double> realised{1.0, 5.0, 1e300};
    const std::vector<double> bounds(3, std::numeric_limits<double>::infinity());
    const auto r = exceedance_frequency(realised, bounds, 0.05);
    CHECK(r.frequency == 0.0);
    CHECK(r.passed);
  }
  SUBCASE("loose regime") {
    BlockedBernsteinConfig bc;
    bc.delta = 0.5;
    bc.replicates = 4000;
    bc.seed = 3;
    const auto r = blocked_bernstein_coverage(bc);
    CHECK(r.frequency <= 0.5 + 3 * r.std_error);
    std::ostringstream csv;
    write_coverage_csv(r, csv);
    std::istringstream in(csv.str());
    const auto rows = read_coverage_csv(in);
    REQUIRE(rows.size() == r.rows.size());
    CHECK(rows[17].blocked_mean == r.rows[17].blocked_mean);
    CHECK(rows[17].exceeded == r.rows[17].exceeded);
  }
  SUBCASE("block second moment") {
    CHECK(two_state_block_second_moment(0.0, 8) == 8.0);
    double direct = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) direct += std::pow(0.5, std::abs(i - j));
    CHECK(two_state_block_second_moment(0.5, 4) == doctest::Approx(direct).epsilon(1e-14));
  }
  SUBCASE("calibration and validation seeds must differ") {
    RiskCoverageConfig rc;
    rc.make_problem = [](double level) { return sign_bits(2, level, 1.0); };
    rc.make_class = [](const RegressionProblem&) { return HypothesisClass::linear(2); };
    rc.calibration_seed = rc.validation_seed = 4;
    CHECK_THROWS_AS(risk_bound_coverage(rc), ConfigError);
  }
}

TEST_CASE("process diagnostics") {
  DiagnosticsConfig dc;
  dc.make_problem = [](double level) { return sign_bits(2, level, 0.5); };
  dc.make_class = [](const RegressionProblem&) { return HypothesisClass::linear(2); };
  dc.n = 20000;
  dc.replicates = 40;
  dc.linear_directions = 64;
  const auto rep = process_diagnostics(dc);
  CHECK(rep.pairs > 0);
  CHECK(rep.positive_fraction <= 0.05);
  CHECK(rep.multiplier_sup.size() == 40);
  CHECK(rep.within_fraction >= 0.0);
}
