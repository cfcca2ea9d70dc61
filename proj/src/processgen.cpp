#include "mixfree/processgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mixfree/error.hpp"
#include "mixfree/rng.hpp"

namespace mixfree {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kFixedPointTol = 1e-10;

std::vector<double> cumulative(const Vector& probs) {
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cdf[i] = acc;
  }
  return cdf;
}

void validate_stochastic(const Matrix& p) {
  if (p.rows() == 0 || p.rows() != p.cols())
    throw ConfigError("transition matrix must be square and nonempty");
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double v = p(r, c);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw ConfigError("transition matrix entry (" + std::to_string(r) + "," +
                          std::to_string(c) + ") is not a probability");
    }
    if (std::abs(p.row(r).sum() - 1.0) > kRowSumTol)
      throw ConfigError("transition matrix row " + std::to_string(r) + " does not sum to 1");
  }
}

// Every state reaches every other state along positive-probability edges.
bool irreducible(const Matrix& p) {
  const Eigen::Index s = p.rows();
  auto reaches_all = [&](bool transpose) {
    std::vector<char> seen(s, 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < s; ++v) {
        const double w = transpose ? p(v, u) : p(u, v);
        if (w > 0.0 && !seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reaches_all(false) && reaches_all(true);
}

double fixed_point_residual(const Matrix& p, const Vector& pi) {
  return (p.transpose() * pi - pi).cwiseAbs().maxCoeff();
}

void validate_law(const NoiseLaw& law, const std::string& where) {
  if (law.empty()) throw ConfigError(where + ": noise law has empty support");
  double total = 0.0;
  for (const auto& atom : law) {
    if (!std::isfinite(atom.value) || !std::isfinite(atom.prob) || atom.prob < 0.0)
      throw ConfigError(where + ": noise atom is not finite or has negative probability");
    total += atom.prob;
  }
  if (std::abs(total - 1.0) > kRowSumTol)
    throw ConfigError(where + ": noise probabilities do not sum to 1");
}

double law_mean(const NoiseLaw& law) {
  double m = 0.0;
  for (const auto& a : law) m += a.prob * a.value;
  return m;
}

}  // namespace

Vector stationary_distribution(const Matrix& transition) {
  validate_stochastic(transition);
  const Eigen::Index s = transition.rows();
  if (!irreducible(transition))
    throw ConfigError("transition matrix is reducible: no unique stationary distribution");
  if (s == 1) return Vector::Ones(1);

  // pi^T (P - I) = 0 with the last equation replaced by sum(pi) = 1.
  Matrix a = transition.transpose() - Matrix::Identity(s, s);
  a.row(s - 1).setOnes();
  Vector rhs = Vector::Zero(s);
  rhs[s - 1] = 1.0;
  Vector pi = a.fullPivLu().solve(rhs);
  // One refinement step against the same system.
  pi += a.fullPivLu().solve(rhs - a * pi);
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  if (pi.minCoeff() <= 0.0)
    throw ConfigError("stationary distribution is not strictly positive");
  if (fixed_point_residual(transition, pi) > kFixedPointTol)
    throw NumericError("stationary solve did not reach the fixed-point tolerance");
  return pi;
}

MarkovChainModel::MarkovChainModel(Matrix transition, Vector stationary)
    : transition_(std::move(transition)), stationary_(std::move(stationary)) {
  stationary_cdf_ = cumulative(stationary_);
  row_cdf_.reserve(transition_.rows());
  for (Eigen::Index r = 0; r < transition_.rows(); ++r)
    row_cdf_.push_back(cumulative(transition_.row(r).transpose()));
}

MarkovChainModel MarkovChainModel::from_transition(Matrix transition) {
  Vector pi = stationary_distribution(transition);
  return MarkovChainModel(std::move(transition), std::move(pi));
}

MarkovChainModel MarkovChainModel::two_state(double p, double q) {
  Matrix t(2, 2);
  t << 1.0 - p, p, q, 1.0 - q;
  return from_transition(std::move(t));
}

MarkovChainModel MarkovChainModel::symmetric_two_state(double dependence) {
  if (!(dependence > -1.0 && dependence < 1.0))
    throw ConfigError("two-state dependence must lie in (-1, 1)");
  const double flip = 0.5 * (1.0 - dependence);
  Matrix t(2, 2);
  t << 1.0 - flip, flip, flip, 1.0 - flip;
  validate_stochastic(t);
  Vector pi = Vector::Constant(2, 0.5);
  return MarkovChainModel(std::move(t), std::move(pi));
}

MarkovChainModel MarkovChainModel::product(const MarkovChainModel& base, int copies) {
  if (copies < 1) throw ConfigError("product chain needs at least one copy");
  Matrix t = base.transition();
  Vector pi = base.stationary();
  for (int c = 1; c < copies; ++c) {
    // New copy becomes the more significant digit.
    const Eigen::Index bs = base.states();
    Matrix next(t.rows() * bs, t.cols() * bs);
    Vector next_pi(pi.size() * bs);
    for (Eigen::Index hi = 0; hi < bs; ++hi) {
      next_pi.segment(hi * pi.size(), pi.size()) = base.stationary()[hi] * pi;
      for (Eigen::Index hj = 0; hj < bs; ++hj)
        next.block(hi * t.rows(), hj * t.cols(), t.rows(), t.cols()) =
            base.transition()(hi, hj) * t;
    }
    t = std::move(next);
    pi = std::move(next_pi);
  }
  validate_stochastic(t);
  if (!irreducible(t)) throw ConfigError("product chain is reducible");
  if (fixed_point_residual(t, pi) > kFixedPointTol)
    throw NumericError("product chain stationary law failed the fixed-point check");
  return MarkovChainModel(std::move(t), std::move(pi));
}

MarkovChainModel MarkovChainModel::refresh(const Vector& pi, double stay) {
  if (!(stay >= 0.0 && stay < 1.0)) throw ConfigError("refresh chain needs stay in [0, 1)");
  if (pi.size() == 0 || pi.minCoeff() <= 0.0 || std::abs(pi.sum() - 1.0) > kRowSumTol)
    throw ConfigError("refresh chain needs a strictly positive probability vector");
  const Eigen::Index s = pi.size();
  Matrix t = stay * Matrix::Identity(s, s) + (1.0 - stay) * Vector::Ones(s) * pi.transpose();
  validate_stochastic(t);
  return MarkovChainModel(std::move(t), pi);
}

std::vector<double> beta_coefficients(const MarkovChainModel& model, int horizon) {
  if (horizon < 1) throw ConfigError("beta horizon must be at least 1");
  const Matrix& p = model.transition();
  const Vector& pi = model.stationary();
  std::vector<double> betas;
  betas.reserve(horizon);
  Matrix power = p;
  for (int i = 1; i <= horizon; ++i) {
    double beta = 0.0;
    for (Eigen::Index x = 0; x < p.rows(); ++x)
      beta += pi[x] * 0.5 * (power.row(x).transpose() - pi).cwiseAbs().sum();
    betas.push_back(beta);
    if (i < horizon) power = power * p;
  }
  return betas;
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::BoundedIid:
      return "bounded-iid";
    case NoiseKind::MartingaleDifference:
      return "martingale-difference";
    case NoiseKind::StateDependentBias:
      return "state-dependent-bias";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "bounded-iid") return NoiseKind::BoundedIid;
  if (name == "martingale-difference") return NoiseKind::MartingaleDifference;
  if (name == "state-dependent-bias") return NoiseKind::StateDependentBias;
  throw ConfigError("unknown noise kind '" + name + "'");
}

NoiseSpec::NoiseSpec(NoiseKind kind, std::vector<NoiseLaw> laws, std::optional<double> bound)
    : kind_(kind), laws_(std::move(laws)) {
  if (laws_.empty()) throw ConfigError("noise specification has no laws");
  double max_abs = 0.0;
  for (std::size_t s = 0; s < laws_.size(); ++s) {
    const std::string where = "noise law " + std::to_string(s);
    validate_law(laws_[s], where);
    if (kind_ == NoiseKind::MartingaleDifference && std::abs(law_mean(laws_[s])) > 1e-12)
      throw ConfigError(where + ": martingale-difference noise must have zero conditional mean");
    std::vector<double> cdf;
    double acc = 0.0;
    for (const auto& a : laws_[s]) {
      acc += a.prob;
      cdf.push_back(acc);
      if (a.prob > 0.0) max_abs = std::max(max_abs, std::abs(a.value));
    }
    cdfs_.push_back(std::move(cdf));
  }
  if (bound) {
    if (!(*bound > 0.0)) throw ConfigError("noise bound must be positive");
    if (max_abs > *bound) throw ConfigError("noise value exceeds the declared bound");
    bound_ = *bound;
    declared_ = true;
  } else {
    bound_ = max_abs;
  }
}

NoiseSpec NoiseSpec::bounded_iid(NoiseLaw law, std::optional<double> bound) {
  return NoiseSpec(NoiseKind::BoundedIid, {std::move(law)}, bound);
}

NoiseSpec NoiseSpec::martingale_difference(std::vector<NoiseLaw> per_state,
                                           std::optional<double> bound) {
  return NoiseSpec(NoiseKind::MartingaleDifference, std::move(per_state), bound);
}

NoiseSpec NoiseSpec::state_dependent_bias(std::vector<NoiseLaw> per_state,
                                          std::optional<double> bound) {
  return NoiseSpec(NoiseKind::StateDependentBias, std::move(per_state), bound);
}

const NoiseLaw& NoiseSpec::law(int state) const {
  return laws_.size() == 1 ? laws_.front() : laws_.at(static_cast<std::size_t>(state));
}

const std::vector<double>& NoiseSpec::law_cdf(int state) const {
  return cdfs_.size() == 1 ? cdfs_.front() : cdfs_.at(static_cast<std::size_t>(state));
}

double NoiseSpec::conditional_mean(int state) const { return law_mean(law(state)); }

double NoiseSpec::conditional_second_moment(int state) const {
  double m = 0.0;
  for (const auto& a : law(state)) m += a.prob * a.value * a.value;
  return m;
}

RegressionProblem::RegressionProblem(MarkovChainModel chain, Matrix embedding, TargetMode mode,
                                     Vector param, std::vector<double> table, NoiseSpec noise)
    : chain_(std::move(chain)),
      embedding_(std::move(embedding)),
      mode_(mode),
      true_param_(std::move(param)),
      regression_(std::move(table)),
      noise_(std::move(noise)) {
  const int s = chain_.states();
  if (embedding_.rows() != s)
    throw ConfigError("embedding must have one row per chain state");
  if (embedding_.cols() < 1) throw ConfigError("embedding dimension must be at least 1");
  if (!embedding_.allFinite()) throw ConfigError("embedding vectors must be finite");
  if (noise_.law_count() != 1 && noise_.law_count() != static_cast<std::size_t>(s))
    throw ConfigError("noise needs one shared law or one law per state");
  if (mode_ == TargetMode::Linear) {
    if (true_param_.size() != embedding_.cols())
      throw ConfigError("true parameter length must equal the embedding dimension");
    regression_.resize(s);
    for (int x = 0; x < s; ++x) regression_[x] = embedding_.row(x).dot(true_param_);
  } else if (regression_.size() != static_cast<std::size_t>(s)) {
    throw ConfigError("true table must have one entry per chain state");
  }
}

RegressionProblem RegressionProblem::linear(MarkovChainModel chain, Matrix embedding,
                                            Vector true_param, NoiseSpec noise) {
  return RegressionProblem(std::move(chain), std::move(embedding), TargetMode::Linear,
                           std::move(true_param), {}, std::move(noise));
}

RegressionProblem RegressionProblem::tabular(MarkovChainModel chain, Matrix embedding,
                                             std::vector<double> true_table, NoiseSpec noise) {
  return RegressionProblem(std::move(chain), std::move(embedding), TargetMode::Tabular, Vector(),
                           std::move(true_table), std::move(noise));
}

Matrix RegressionProblem::second_moment() const {
  const Vector& pi = chain_.stationary();
  return embedding_.transpose() * pi.asDiagonal() * embedding_;
}

namespace {

// Fills rows [offset, offset + len) with a stationary path.
void fill_path(const RegressionProblem& problem, Trajectory& out, std::size_t offset,
               std::size_t len, Rng& rng) {
  const auto& chain = problem.chain();
  const auto& noise = problem.noise();
  const auto& mu = problem.regression_table();
  auto state = static_cast<std::int32_t>(rng.categorical(chain.stationary_cdf()));
  for (std::size_t t = 0; t < len; ++t) {
    if (t > 0) state = static_cast<std::int32_t>(rng.categorical(chain.row_cdf(state)));
    const std::size_t i = offset + t;
    out.states[i] = state;
    const auto& law = noise.law(state);
    const double w = law[rng.categorical(noise.law_cdf(state))].value;
    out.targets[i] = mu[state] + w;
  }
}

Trajectory allocate(const RegressionProblem& problem, std::size_t n, std::uint64_t seed) {
  Trajectory t;
  t.n = n;
  t.seed = seed;
  t.states.resize(n);
  t.targets.resize(n);
  t.covariates.resize(static_cast<Eigen::Index>(n), problem.dim());
  return t;
}

void fill_covariates(const RegressionProblem& problem, Trajectory& t) {
  const Matrix& emb = problem.embedding();
  for (Eigen::Index j = 0; j < emb.cols(); ++j) {
    double* col = t.covariates.col(j).data();
    for (std::size_t i = 0; i < t.n; ++i) col[i] = emb(t.states[i], j);
  }
}

}  // namespace

Trajectory sample_trajectory(const RegressionProblem& problem, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("trajectory length must be at least 1");
  Trajectory t = allocate(problem, n, seed);
  Rng rng(seed);
  fill_path(problem, t, 0, n, rng);
  fill_covariates(problem, t);
  return t;
}

Trajectory kwise_independent_surrogate(const RegressionProblem& problem, std::size_t n,
                                       std::size_t k, std::uint64_t seed) {
  if (n < 1 || k < 1) throw ConfigError("surrogate needs n >= 1 and k >= 1");
  if (n % k != 0) throw ConfigError("block length k must divide n for a k-wise surrogate");
  Trajectory t = allocate(problem, n, seed);
  for (std::size_t b = 0; b < n / k; ++b) {
    Rng rng(derive_seed(seed, b));
    fill_path(problem, t, b * k, k, rng);
  }
  fill_covariates(problem, t);
  return t;
}

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out) {
  const Eigen::Index d = trajectory.covariates.cols();
  out << "t,state";
  for (Eigen::Index j = 0; j < d; ++j) out << ",x_" << (j + 1);
  out << ",y\n";
  char buf[32];
  for (std::size_t i = 0; i < trajectory.n; ++i) {
    out << (i + 1) << ',' << trajectory.states[i];
    for (Eigen::Index j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", trajectory.covariates(static_cast<Eigen::Index>(i), j));
      out << ',' << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", trajectory.targets[i]);
    out << ',' << buf << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trajectory CSV is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 4 || header[0] != "t" || header[1] != "state" || header.back() != "y")
    throw ConfigError("trajectory CSV header must be t,state,x_1..x_d,y");
  const std::size_t d = header.size() - 3;
  std::vector<std::vector<double>> rows;
  Trajectory t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != header.size()) throw ConfigError("trajectory CSV row has wrong width");
    t.states.push_back(static_cast<std::int32_t>(row[1]));
    t.targets.push_back(row.back());
    rows.push_back(std::vector<double>(row.begin() + 2, row.end() - 1));
  }
  t.n = rows.size();
  t.covariates.resize(static_cast<Eigen::Index>(t.n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < t.n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      t.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

}  // namespace mixfree
