#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mixfree/blocking.hpp"
#include "mixfree/error.hpp"

using namespace mixfree;

namespace {

RegressionProblem sign_problem(const MarkovChainModel& chain) {
  Matrix emb(chain.states(), 1);
  for (int s = 0; s < chain.states(); ++s) emb(s, 0) = s == 0 ? -1.0 : 1.0;
  Vector beta = Vector::Ones(1);
  return RegressionProblem::linear(chain, emb, beta, NoiseSpec::bounded_iid({{-0.5, 0.5}, {0.5, 0.5}}));
}

}  // namespace

TEST_CASE("block construction") {
  const auto s = make_blocks(8, 2);
  CHECK(s.m == 2);
  CHECK(s.block_count() == 4);
  CHECK(s.odd_indices == std::vector<std::size_t>{0, 1, 4, 5});
  CHECK(s.even_indices == std::vector<std::size_t>{2, 3, 6, 7});
  CHECK(s.block(3) == std::pair<std::size_t, std::size_t>{6, 8});

  const auto t = make_blocks(6, 3);
  CHECK(t.block_count() == 2);
  CHECK(t.m == 1);

  CHECK_THROWS_AS(make_blocks(8, 3), ConfigError);
  CHECK_THROWS_AS(make_blocks(7, 1), ConfigError);
  CHECK_THROWS_AS(make_blocks(8, 0), ConfigError);
}

TEST_CASE("split and merge reconstruct the trajectory") {
  const auto prob = sign_problem(MarkovChainModel::two_state(0.2, 0.3));
  const auto traj = sample_trajectory(prob, 48, 4);
  for (std::size_t k : {1, 2, 3, 4, 6, 8, 12, 24}) {
    const auto scheme = make_blocks(48, k);
    const auto split = split_blocks(traj, scheme);
    CHECK(split.odd.n + split.even.n == 48);
    const auto back = merge_blocks(split, scheme);
    CHECK(back.states == traj.states);
    CHECK(back.targets == traj.targets);
    CHECK(back.covariates == traj.covariates);
  }
}

TEST_CASE("decoupled resampling") {
  SUBCASE("two blocks are independent") {
    const auto prob = sign_problem(MarkovChainModel::symmetric_two_state(0.95));
    const auto scheme = make_blocks(20, 10);
    const std::size_t reps = 20000;
    double sxy = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto t = decouple_resample(prob, scheme, 77 + r);
      const double x = t.covariates(9, 0), y = t.covariates(10, 0);
      sxy += x * y;
      sx += x;
      sy += y;
    }
    const double cov = sxy / reps - (sx / reps) * (sy / reps);
    // Coupled, the lag-1 covariance would be 0.95.
    CHECK(std::abs(cov) < 4.0 / std::sqrt(static_cast<double>(reps)));
  }
  SUBCASE("each block keeps the chain's joint law") {
    const double lam = 0.8;
    const auto prob = sign_problem(MarkovChainModel::symmetric_two_state(lam));
    const auto scheme = make_blocks(16, 4);
    const std::size_t reps = 20000;
    double within = 0.0, ones = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto t = decouple_resample(prob, scheme, 1234 + r);
      within += t.covariates(4, 0) * t.covariates(5, 0);
      ones += t.states[6];
    }
    CHECK(std::abs(within / reps - lam) < 4 * std::sqrt((1 - lam * lam) / reps));
    CHECK(std::abs(ones / reps - 0.5) < 4 * std::sqrt(0.25 / reps));
  }
  SUBCASE("single state with deterministic noise is unchanged") {
    Matrix one = Matrix::Ones(1, 1);
    const auto chain = MarkovChainModel::from_transition(one);
    Matrix emb = Matrix::Ones(1, 1);
    const auto prob = RegressionProblem::linear(chain, emb, Vector::Ones(1),
                                                NoiseSpec::bounded_iid({{0.25, 1.0}}));
    const auto scheme = make_blocks(12, 3);
    const auto orig = sample_trajectory(prob, 12, 5);
    const auto dec = decouple_resample(prob, scheme, 6);
    CHECK(orig.states == dec.states);
    CHECK(orig.targets == dec.targets);
  }
}

TEST_CASE("decoupling gap bound") {
  const auto scheme = make_blocks(12, 2);  // m = 3
  std::vector<double> zero(4, 0.0);
  CHECK(decoupling_gap_bound(zero, scheme) == 0.0);
  std::vector<double> betas{0.5, 0.01, 0.001};
  CHECK(decoupling_gap_bound(betas, scheme) == doctest::Approx(0.02).epsilon(1e-14));
  std::vector<double> short_betas{0.5};
  CHECK_THROWS(decoupling_gap_bound(short_betas, scheme));
}

TEST_CASE("blocked Bernstein bound") {
  const double l = std::log(20.0);
  const auto t = blocked_bernstein_terms(1.0, 0.4, 1000, 1, 0.05);
  CHECK(t.variance_term == doctest::Approx(2 * std::sqrt(0.4 * l / 1000)).epsilon(1e-14));
  CHECK(t.range_term == doctest::Approx(4 * l / 3000).epsilon(1e-14));
  CHECK(blocked_bernstein_bound(1.0, 0.4, 1000, 1, 1.0 - 1e-15) < 1e-6);

  const double base = blocked_bernstein_bound(1.0, 2.0, 1024, 8, 0.05);
  CHECK(blocked_bernstein_bound(2.0, 2.0, 1024, 8, 0.05) > base);
  CHECK(blocked_bernstein_bound(1.0, 2.0, 1024, 16, 0.05) > base);
  CHECK(blocked_bernstein_bound(1.0, 2.0, 1024, 8, 0.01) > base);
  CHECK(blocked_bernstein_bound(1.0, 2.0, 2048, 8, 0.05) < base);

  CHECK_THROWS(blocked_bernstein_bound(0.0, 1.0, 100, 1, 0.05));
  CHECK_THROWS(blocked_bernstein_bound(1.0, -1.0, 100, 1, 0.05));
  CHECK_THROWS(blocked_bernstein_bound(1.0, 1.0, 100, 1, 1.5));
  CHECK_THROWS(blocked_bernstein_bound(1.0, 1.0, 100, 3, 0.05));
}
