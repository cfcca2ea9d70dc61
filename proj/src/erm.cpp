#include "mixfree/erm.hpp"

#include <cmath>

#include "mixfree/error.hpp"
#include "mixfree/kernels.hpp"

namespace mixfree {

namespace {

constexpr double kRankTol = 1e-12;

void check_table(const StateFunction& f, const RegressionProblem& problem) {
  if (f.size() != static_cast<std::size_t>(problem.states()))
    throw ConfigError("function table length must equal the number of chain states");
}

}  // namespace

HypothesisClass HypothesisClass::linear(int dim) {
  if (dim < 1) throw ConfigError("linear class dimension must be at least 1");
  HypothesisClass c;
  c.linear_ = true;
  c.dim_ = dim;
  return c;
}

HypothesisClass HypothesisClass::finite(std::vector<StateFunction> members) {
  if (members.empty()) throw ConfigError("finite hypothesis class is empty");
  for (const auto& m : members)
    if (m.size() != members.front().size() || m.empty())
      throw ConfigError("finite class members must be tables of equal, nonzero length");
  HypothesisClass c;
  c.linear_ = false;
  c.dim_ = 0;
  c.members_ = std::move(members);
  return c;
}

void HypothesisClass::set_star_grid(int points) {
  if (points < 2) throw ConfigError("star-hull grid needs at least two points");
  star_grid_ = points;
}

StateFunction linear_table(const RegressionProblem& problem, const Vector& beta) {
  if (beta.size() != problem.dim()) throw ConfigError("parameter length must equal dimension");
  const Vector v = problem.embedding() * beta;
  return StateFunction(v.data(), v.data() + v.size());
}

PopulationQuantities population_quantities(const RegressionProblem& problem,
                                           const HypothesisClass& cls) {
  const int s = problem.states();
  const Vector& pi = problem.chain().stationary();
  const auto& mu = problem.regression_table();
  const auto& noise = problem.noise();

  PopulationQuantities pop;
  pop.sigma = problem.second_moment();

  std::vector<double> cond_mean(s), cond_var(s);
  for (int x = 0; x < s; ++x) {
    cond_mean[x] = mu[x] + noise.conditional_mean(x);
    cond_var[x] = noise.conditional_second_moment(x) - noise.conditional_mean(x) * noise.conditional_mean(x);
  }

  if (cls.is_linear()) {
    if (cls.dim() != problem.dim()) throw ConfigError("linear class dimension does not match");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(pop.sigma);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    if (!(lmin > kRankTol * std::max(1.0, lmax)))
      throw NumericError("population second moment is singular: the linear class requires "
                         "lambda_min(E[X X^T]) > 0");
    Vector exy = Vector::Zero(problem.dim());
    for (int x = 0; x < s; ++x) exy += pi[x] * cond_mean[x] * problem.embedding().row(x).transpose();
    Vector beta = pop.sigma.ldlt().solve(exy);
    pop.f_star = linear_table(problem, beta);
    pop.param = std::move(beta);
  } else {
    if (cls.members().front().size() != static_cast<std::size_t>(s))
      throw ConfigError("finite class tables must have one entry per chain state");
    double best = 0.0;
    for (std::size_t j = 0; j < cls.size(); ++j) {
      const auto& f = cls.members()[j];
      double risk = 0.0;
      for (int x = 0; x < s; ++x) {
        const double bias = f[x] - cond_mean[x];
        risk += pi[x] * (bias * bias + cond_var[x]);
      }
      if (!pop.index || risk < best) {
        best = risk;
        pop.index = j;
      }
    }
    pop.f_star = cls.members()[*pop.index];
  }

  pop.w_mean.resize(s);
  pop.w_second.resize(s);
  double mean = 0.0;
  double second = 0.0;
  for (int x = 0; x < s; ++x) {
    const double shift = mu[x] - pop.f_star[x];
    const double m = noise.conditional_mean(x);
    pop.w_mean[x] = shift + m;
    pop.w_second[x] = shift * shift + 2.0 * shift * m + noise.conditional_second_moment(x);
    mean += pi[x] * pop.w_mean[x];
    second += pi[x] * pop.w_second[x];
  }
  pop.risk = second;
  pop.noise_variance = second - mean * mean;
  return pop;
}

ERMResult fit_erm_linear(const Trajectory& trajectory) {
  if (trajectory.n < 1) throw ConfigError("ERM needs at least one sample");
  const Matrix& x = trajectory.covariates;
  const Eigen::Index d = x.cols();
  const std::size_t n = trajectory.n;
  const double inv_n = 1.0 / static_cast<double>(n);

  Matrix gram(d, d);
  Vector xty(d);
  for (Eigen::Index a = 0; a < d; ++a) {
    std::span<const double> ca(x.col(a).data(), n);
    xty[a] = kernels::dot(ca, trajectory.targets) * inv_n;
    for (Eigen::Index b = a; b < d; ++b) {
      gram(a, b) = kernels::dot(ca, std::span<const double>(x.col(b).data(), n)) * inv_n;
      gram(b, a) = gram(a, b);
    }
  }

  // Minimum-norm solution through the eigendecomposition of the Gram matrix.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector& lambda = eig.eigenvalues();
  const double cutoff = kRankTol * std::max(lambda.cwiseAbs().maxCoeff(), 1e-300);
  Vector coords = eig.eigenvectors().transpose() * xty;
  bool deficient = false;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lambda[i] > cutoff) {
      coords[i] /= lambda[i];
    } else {
      coords[i] = 0.0;
      deficient = true;
    }
  }
  Vector beta = eig.eigenvectors() * coords;

  const Vector resid = x * beta - Eigen::Map<const Vector>(trajectory.targets.data(), n);
  ERMResult r;
  r.empirical_risk = kernels::dot({resid.data(), n}, {resid.data(), n}) * inv_n;
  r.fitted_param = std::move(beta);
  r.tie_broken = deficient;
  return r;
}

ERMResult fit_erm_finite(const Trajectory& trajectory, const HypothesisClass& cls) {
  if (cls.is_linear()) throw ConfigError("fit_erm_finite needs a finite class");
  if (cls.size() == 0) throw ConfigError("finite hypothesis class is empty");
  const double inv_n = 1.0 / static_cast<double>(trajectory.n);
  ERMResult r;
  std::size_t ties = 0;
  for (std::size_t j = 0; j < cls.size(); ++j) {
    const double risk =
        kernels::gathered_sq_error(cls.members()[j], trajectory.states, trajectory.targets) * inv_n;
    if (!r.fitted_index || risk < r.empirical_risk) {
      r.fitted_index = j;
      r.empirical_risk = risk;
      ties = 0;
    } else if (risk == r.empirical_risk) {
      ++ties;
    }
  }
  r.tie_broken = ties > 0;
  return r;
}

ERMResult fit_erm(const Trajectory& trajectory, const HypothesisClass& cls,
                  const RegressionProblem& problem, const PopulationQuantities& pop) {
  if (cls.is_linear()) {
    ERMResult r = fit_erm_linear(trajectory);
    r.excess_l2_squared = excess_l2(*r.fitted_param, pop);
    return r;
  }
  ERMResult r = fit_erm_finite(trajectory, cls);
  r.excess_l2_squared = excess_l2(cls.members()[*r.fitted_index], pop.f_star, problem);
  return r;
}

double l2_norm(const StateFunction& g, const RegressionProblem& problem) {
  check_table(g, problem);
  const Vector& pi = problem.chain().stationary();
  double acc = 0.0;
  for (std::size_t x = 0; x < g.size(); ++x) acc += pi[x] * g[x] * g[x];
  return std::sqrt(acc);
}

double excess_l2(const StateFunction& f, const StateFunction& f_star,
                 const RegressionProblem& problem) {
  check_table(f, problem);
  check_table(f_star, problem);
  const Vector& pi = problem.chain().stationary();
  double acc = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) {
    const double diff = f[x] - f_star[x];
    acc += pi[x] * diff * diff;
  }
  return acc;
}

double excess_l2(const Vector& beta, const PopulationQuantities& pop) {
  if (!pop.param) throw ConfigError("population quantities carry no linear parameter");
  const Vector diff = beta - *pop.param;
  return std::max(0.0, diff.dot(pop.sigma * diff));
}

double quadratic_process(const StateFunction& f, const StateFunction& f_star,
                         const Trajectory& trajectory, const RegressionProblem& problem,
                         double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in [0, 1)");
  check_table(f, problem);
  check_table(f_star, problem);
  StateFunction diff(f.size());
  for (std::size_t x = 0; x < f.size(); ++x) diff[x] = f[x] - f_star[x];
  const double population = excess_l2(f, f_star, problem);
  const double empirical =
      kernels::gathered_sq_sum(diff, trajectory.states) / static_cast<double>(trajectory.n);
  return population - (1.0 + epsilon) * empirical;
}

std::vector<double> residuals(const Trajectory& trajectory, const StateFunction& f_star) {
  std::vector<double> w(trajectory.n);
  for (std::size_t i = 0; i < trajectory.n; ++i)
    w[i] = trajectory.targets[i] - f_star[trajectory.states[i]];
  return w;
}

double noise_correlation(const StateFunction& g, const RegressionProblem& problem,
                         const PopulationQuantities& pop) {
  check_table(g, problem);
  const Vector& pi = problem.chain().stationary();
  double acc = 0.0;
  for (std::size_t x = 0; x < g.size(); ++x) acc += pi[x] * pop.w_mean[x] * g[x];
  return acc;
}

double multiplier_process(const StateFunction& g, std::span<const double> w,
                          const Trajectory& trajectory, const RegressionProblem& problem,
                          const PopulationQuantities& pop, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in [0, 1)");
  const double n = static_cast<double>(trajectory.n);
  const double empirical = kernels::gathered_weighted_sum(g, trajectory.states, w) / n;
  const double centre = noise_correlation(g, problem, pop);
  return (1.0 + epsilon) * 2.0 * (empirical - centre);
}

double multiplier_process(const StateFunction& g, const Trajectory& trajectory,
                          const RegressionProblem& problem, const PopulationQuantities& pop,
                          double epsilon) {
  const auto w = residuals(trajectory, pop.f_star);
  return multiplier_process(g, w, trajectory, problem, pop, epsilon);
}

}  // namespace mixfree
