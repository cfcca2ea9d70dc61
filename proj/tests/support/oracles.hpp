#pragma once
// Independent reference computations used by the tests. Nothing here calls
// into the library: plain loops over std::vector only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat two_state(double p, double q) { return {{1 - p, p}, {q, 1 - q}}; }

inline Mat matmul(const Mat& a, const Mat& b) {
  const std::size_t n = a.size(), m = b[0].size(), inner = b.size();
  Mat c(n, Vec(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < inner; ++l)
      for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
  return c;
}

inline Mat identity(std::size_t n) {
  Mat c(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) c[i][i] = 1.0;
  return c;
}

/// pi P^t from the uniform start, iterated to convergence.
inline Vec power_iteration(const Mat& p, int iterations = 200000) {
  const std::size_t s = p.size();
  Vec v(s, 1.0 / static_cast<double>(s));
  for (int it = 0; it < iterations; ++it) {
    Vec w(s, 0.0);
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) w[j] += v[i] * p[i][j];
    double diff = 0.0;
    for (std::size_t j = 0; j < s; ++j) diff = std::max(diff, std::abs(w[j] - v[j]));
    v = w;
    if (diff < 1e-17) break;
  }
  return v;
}

/// sum_x pi(x) (1/2) sum_y |P^i(x, y) - pi(y)| for i = 1..horizon.
inline Vec brute_force_beta(const Mat& p, const Vec& pi, int horizon) {
  Vec out;
  Mat power = identity(p.size());
  for (int i = 1; i <= horizon; ++i) {
    power = matmul(power, p);
    double b = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
      double tv = 0.0;
      for (std::size_t y = 0; y < p.size(); ++y) tv += std::abs(power[x][y] - pi[y]);
      b += pi[x] * 0.5 * tv;
    }
    out.push_back(b);
  }
  return out;
}

/// Probability of a state path under the stationary chain.
inline double path_prob(const Mat& p, const Vec& pi, const std::vector<int>& path) {
  double pr = pi[path[0]];
  for (std::size_t t = 1; t < path.size(); ++t) pr *= p[path[t - 1]][path[t]];
  return pr;
}

/// Visits every path of length n over s states.
inline void for_each_path(int s, std::size_t n, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> path(n, 0);
  while (true) {
    f(path);
    std::size_t t = 0;
    while (t < n && ++path[t] == s) path[t++] = 0;
    if (t == n) return;
  }
}

inline double exact_mgf(const Vec& values, const Vec& probs, double lambda) {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += probs[i] * std::exp(lambda * values[i]);
  return m;
}

/// sup over m = 1..m_max of m^{-1/p} (E|Z|^m)^{1/m}.
inline double psi_sweep(const Vec& values, const Vec& probs, double p, int m_max = 200) {
  double best = 0.0;
  for (int m = 1; m <= m_max; ++m) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += probs[i] * std::pow(std::abs(values[i]), m);
    const double v = std::pow(m, -1.0 / p) * std::pow(s, 1.0 / m);
    best = std::max(best, v);
  }
  return best;
}

/// Ordinary least squares slope and intercept.
inline std::pair<double, double> ols(const Vec& x, const Vec& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace oracle
