#include "mixfree/blocking.hpp"

#include <cmath>

#include "mixfree/error.hpp"

namespace mixfree {

BlockingScheme make_blocks(std::size_t n, std::size_t k) {
  if (k < 1) throw ConfigError("block length k must be at least 1");
  if (n < 2 || n % 2 != 0 || (n / 2) % k != 0)
    throw ConfigError("block length k must divide n/2 (got n=" + std::to_string(n) +
                      ", k=" + std::to_string(k) + ")");
  BlockingScheme s;
  s.n = n;
  s.k = k;
  s.m = n / (2 * k);
  s.odd_indices.reserve(n / 2);
  s.even_indices.reserve(n / 2);
  for (std::size_t j = 0; j < s.block_count(); ++j) {
    auto& target = (j % 2 == 0) ? s.odd_indices : s.even_indices;
    for (std::size_t i = j * k; i < (j + 1) * k; ++i) target.push_back(i);
  }
  return s;
}

namespace {

Trajectory gather(const Trajectory& t, const std::vector<std::size_t>& idx) {
  Trajectory out;
  out.n = idx.size();
  out.seed = t.seed;
  out.states.reserve(idx.size());
  out.targets.reserve(idx.size());
  out.covariates.resize(static_cast<Eigen::Index>(idx.size()), t.covariates.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.states.push_back(t.states[idx[r]]);
    out.targets.push_back(t.targets[idx[r]]);
    out.covariates.row(static_cast<Eigen::Index>(r)) =
        t.covariates.row(static_cast<Eigen::Index>(idx[r]));
  }
  return out;
}

void scatter(const Trajectory& part, const std::vector<std::size_t>& idx, Trajectory& out) {
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.states[idx[r]] = part.states[r];
    out.targets[idx[r]] = part.targets[r];
    out.covariates.row(static_cast<Eigen::Index>(idx[r])) =
        part.covariates.row(static_cast<Eigen::Index>(r));
  }
}

}  // namespace

BlockSplit split_blocks(const Trajectory& trajectory, const BlockingScheme& scheme) {
  if (trajectory.n != scheme.n) throw ConfigError("trajectory length does not match the scheme");
  return {gather(trajectory, scheme.odd_indices), gather(trajectory, scheme.even_indices)};
}

Trajectory merge_blocks(const BlockSplit& split, const BlockingScheme& scheme) {
  if (split.odd.n != scheme.odd_indices.size() || split.even.n != scheme.even_indices.size())
    throw ConfigError("block split does not match the scheme");
  Trajectory out;
  out.n = scheme.n;
  out.seed = split.odd.seed;
  out.states.resize(scheme.n);
  out.targets.resize(scheme.n);
  out.covariates.resize(static_cast<Eigen::Index>(scheme.n), split.odd.covariates.cols());
  scatter(split.odd, scheme.odd_indices, out);
  scatter(split.even, scheme.even_indices, out);
  return out;
}

Trajectory decouple_resample(const RegressionProblem& problem, const BlockingScheme& scheme,
                             std::uint64_t seed) {
  return kwise_independent_surrogate(problem, scheme.n, scheme.k, seed);
}

double decoupling_gap_bound(std::span<const double> betas, const BlockingScheme& scheme) {
  if (scheme.m <= 1) return 0.0;
  if (betas.size() < scheme.k)
    throw ConfigError("beta coefficients must cover lags up to the block length");
  return static_cast<double>(scheme.m - 1) * betas[scheme.k - 1];
}

BernsteinTerms blocked_bernstein_terms(double b, double block_second_moment, std::size_t n,
                                       std::size_t k, double delta) {
  if (!(b > 0.0)) throw ConfigError("bound b must be positive");
  if (!(block_second_moment >= 0.0)) throw ConfigError("block second moment must be nonnegative");
  if (n < 1 || k < 1) throw ConfigError("n and k must be positive");
  if (n % k != 0) throw ConfigError("block length k must divide n");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  const double log_term = std::log(1.0 / delta);
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  BernsteinTerms t;
  t.variance_term = 2.0 * std::sqrt(block_second_moment / kd * log_term / nd);
  t.range_term = 4.0 * b * kd * log_term / (3.0 * nd);
  return t;
}

double blocked_bernstein_bound(double b, double block_second_moment, std::size_t n,
                               std::size_t k, double delta) {
  return blocked_bernstein_terms(b, block_second_moment, n, k, delta).total();
}

}  // namespace mixfree
