#pragma once

// Equal-length blocking of [n] into 2m consecutive blocks of length k, the
// decoupled (block-independent) resampler, and the two bounds that blocking
// arguments rest on: the decoupling gap and the blocked Bernstein inequality.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mixfree/processgen.hpp"

namespace mixfree {

struct BlockingScheme {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t m = 0;  // blocks per parity; 2m blocks in total
  /// 0-based positions covered by blocks a_1, a_3, ... (resp. a_2, a_4, ...).
  std::vector<std::size_t> odd_indices;
  std::vector<std::size_t> even_indices;

  std::size_t block_count() const { return 2 * m; }
  /// Half-open [begin, end) of block j (0-based, so j = 0 is a_1).
  std::pair<std::size_t, std::size_t> block(std::size_t j) const { return {j * k, (j + 1) * k}; }
};

/// Requires k >= 1 and k | n/2 (n even).
BlockingScheme make_blocks(std::size_t n, std::size_t k);

/// Odd-block and even-block subsequences of a trajectory, each in block order.
struct BlockSplit {
  Trajectory odd;
  Trajectory even;
};

BlockSplit split_blocks(const Trajectory& trajectory, const BlockingScheme& scheme);
/// Inverse of split_blocks.
Trajectory merge_blocks(const BlockSplit& split, const BlockingScheme& scheme);

/// Every block redrawn independently from the chain's stationary block law.
Trajectory decouple_resample(const RegressionProblem& problem, const BlockingScheme& scheme,
                             std::uint64_t seed);

/// Sum of beta over the blocks skipped between kept blocks of one parity:
/// (m - 1) * beta(k). `betas[i-1]` holds beta(i) and must reach lag k.
double decoupling_gap_bound(std::span<const double> betas, const BlockingScheme& scheme);

struct BernsteinTerms {
  double variance_term = 0.0;  // 2 sqrt(k^-1 E(Vbar_1)^2 ln(1/delta) / n)
  double range_term = 0.0;     // 4 b k ln(1/delta) / (3n)
  double total() const { return variance_term + range_term; }
};

/// Right side of the blocked Bernstein inequality for b-bounded, centred,
/// k-wise independent data. `block_second_moment` is E(Vbar_1)^2 for the
/// block sum Vbar_1 = V_1 + ... + V_k.
BernsteinTerms blocked_bernstein_terms(double b, double block_second_moment, std::size_t n,
                                       std::size_t k, double delta);
double blocked_bernstein_bound(double b, double block_second_moment, std::size_t n,
                               std::size_t k, double delta);

}  // namespace mixfree
