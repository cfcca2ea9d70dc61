#include "mixfree/bounds/complexity.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <memory>

#include "mixfree/error.hpp"

namespace mixfree {

namespace {

double distance(const StateFunction& a, const StateFunction& b, const Vector& pi) {
  double acc = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) acc += pi[x] * (a[x] - b[x]) * (a[x] - b[x]);
  return std::sqrt(acc);
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || alpha > 2.0) throw ConfigError("alpha must lie in (0, 2]");
}

std::size_t greedy(const std::vector<std::vector<double>>& dist, double s) {
  const std::size_t m = dist.size();
  std::vector<char> covered(m, 0);
  std::size_t centres = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (covered[i]) continue;
    ++centres;
    for (std::size_t j = i; j < m; ++j)
      if (dist[i][j] <= s) covered[j] = 1;
  }
  return centres;
}

std::vector<std::vector<double>> distance_table(const std::vector<StateFunction>& pts,
                                                const Vector& pi) {
  std::vector<std::vector<double>> d(pts.size(), std::vector<double>(pts.size(), 0.0));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d[i][j] = d[j][i] = distance(pts[i], pts[j], pi);
  return d;
}

}  // namespace

CoveringCount covering_number_finite(const std::vector<StateFunction>& points, const Vector& pi,
                                     double s) {
  if (!(s > 0.0)) throw ConfigError("covering scale must be positive");
  if (points.empty()) return {0, false};
  return {greedy(distance_table(points, pi), s), false};
}

CoveringCount covering_number_ball(int dim, double r, double s) {
  if (!(s > 0.0)) throw ConfigError("covering scale must be positive");
  if (dim < 1) throw ConfigError("dimension must be at least 1");
  const double v = std::ceil(std::pow(1.0 + 2.0 * r / s, dim));
  return {static_cast<std::size_t>(std::min(v, 1e18)), true};
}

std::vector<StateFunction> sphere_points(const HypothesisClass& cls,
                                         const RegressionProblem& problem,
                                         const PopulationQuantities& pop, double r) {
  if (cls.is_linear()) throw ConfigError("sphere_points needs a finite class");
  std::vector<StateFunction> out;
  for (const auto& f : cls.members()) {
    StateFunction d(f.size());
    for (std::size_t x = 0; x < f.size(); ++x) d[x] = f[x] - pop.f_star[x];
    const double norm = l2_norm(d, problem);
    if (norm <= 0.0 || norm < r) continue;
    for (double& v : d) v *= r / norm;
    out.push_back(std::move(d));
  }
  return out;
}

CoveringCount covering_number(const HypothesisClass& cls, const RegressionProblem& problem,
                              const PopulationQuantities& pop, double r, double s) {
  if (cls.is_linear()) return covering_number_ball(cls.dim(), r, s);
  return covering_number_finite(sphere_points(cls, problem, pop, r),
                                problem.chain().stationary(), s);
}

CoveringProfile parametric_profile(double dim, double r) {
  if (!(dim > 0.0) || !(r >= 0.0)) throw ConfigError("parametric profile needs d > 0, r >= 0");
  CoveringProfile p;
  p.radius = r;
  p.parametric = true;
  p.dim = dim;
  p.log_n = [dim, r](double s) { return s < r ? dim * std::log(r / s) : 0.0; };
  return p;
}

CoveringProfile finite_profile(const std::vector<StateFunction>& points, const Vector& pi,
                               double r) {
  auto dist = std::make_shared<std::vector<std::vector<double>>>(distance_table(points, pi));
  CoveringProfile p;
  p.radius = r;
  p.step = true;
  for (const auto& row : *dist)
    for (double v : row)
      if (v > 0.0 && v < r) p.breakpoints.push_back(v);
  std::sort(p.breakpoints.begin(), p.breakpoints.end());
  p.breakpoints.erase(std::unique(p.breakpoints.begin(), p.breakpoints.end()),
                      p.breakpoints.end());
  p.log_n = [dist](double s) {
    if (dist->empty()) return 0.0;
    return std::log(static_cast<double>(greedy(*dist, s)));
  };
  return p;
}

double gamma_alpha_parametric(double dim, double r, double alpha, double c_alpha) {
  check_alpha(alpha);
  return c_alpha * std::pow(dim, 1.0 / alpha) * r * std::tgamma(1.0 / alpha + 1.0);
}

double gamma_alpha_quadrature(const CoveringProfile& profile, double alpha, double c_alpha) {
  check_alpha(alpha);
  const double r = profile.radius;
  if (!(r > 0.0)) return 0.0;
  std::vector<double> cuts{0.0};
  for (double b : profile.breakpoints)
    if (b > 0.0 && b < r) cuts.push_back(b);
  cuts.push_back(r);

  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double v = profile.log_n(s);
    return v > 0.0 ? std::pow(v, 1.0 / alpha) : 0.0;
  };
  double total = 0.0;
  if (profile.step) {
    // Midpoint evaluation is exact on each constant piece.
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double a = cuts[i], b = cuts[i + 1];
      if (b > a) total += (b - a) * integrand(0.5 * (a + b));
    }
    return c_alpha * total;
  }
  boost::math::quadrature::tanh_sinh<double> integrator;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += integrator.integrate(integrand, cuts[i], cuts[i + 1], 1e-9);
  return c_alpha * total;
}

double gamma_alpha_upper(const CoveringProfile& profile, double alpha, double c_alpha) {
  check_alpha(alpha);
  if (profile.parametric) return gamma_alpha_parametric(profile.dim, profile.radius, alpha, c_alpha);
  return gamma_alpha_quadrature(profile, alpha, c_alpha);
}

std::function<double(double)> gamma_profile(const HypothesisClass& cls,
                                            const RegressionProblem& problem,
                                            const PopulationQuantities& pop, double alpha,
                                            double c_alpha) {
  check_alpha(alpha);
  if (cls.is_linear()) {
    const double d = cls.dim();
    return [=](double r) { return gamma_alpha_parametric(d, r, alpha, c_alpha); };
  }
  // Covering rU at scale s equals covering U at scale s/r, so only the unit
  // directions (and which members survive the distance filter) matter.
  auto cls_copy = std::make_shared<HypothesisClass>(cls);
  auto problem_ptr = &problem;
  auto pop_copy = std::make_shared<PopulationQuantities>(pop);
  return [=](double r) {
    if (!(r > 0.0)) return 0.0;
    const auto pts = sphere_points(*cls_copy, *problem_ptr, *pop_copy, r);
    return gamma_alpha_quadrature(finite_profile(pts, problem_ptr->chain().stationary(), r),
                                  alpha, c_alpha);
  };
}

}  // namespace mixfree
