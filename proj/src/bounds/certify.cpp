#include "mixfree/bounds/certify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mixfree/bounds/psi_norm.hpp"
#include "mixfree/error.hpp"
#include "mixfree/rng.hpp"

namespace mixfree {

std::string to_string(CertMethod method) {
  switch (method) {
    case CertMethod::LinearExact: return "linear-exact";
    case CertMethod::FiniteExact: return "finite-exact";
    case CertMethod::SampledFit: return "sampled-fit";
  }
  return "finite-exact";
}

CertMethod cert_method_from_string(const std::string& name) {
  if (name == "linear-exact") return CertMethod::LinearExact;
  if (name == "finite-exact") return CertMethod::FiniteExact;
  if (name == "sampled-fit") return CertMethod::SampledFit;
  throw ConfigError("unknown certification method '" + name + "'");
}

namespace {

double l2(const StateFunction& f, const Vector& pi) {
  double acc = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) acc += pi[x] * f[x] * f[x];
  return std::sqrt(acc);
}

double psi(const StateFunction& f, const Vector& pi, double p) {
  return psi_p_norm_exact(FiniteLaw::from_state_function(f, pi), p).value;
}

Vector random_unit(Rng& rng, int d) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  const double n = v.norm();
  return n > 0.0 ? Vector(v / n) : Vector(Vector::Unit(d, 0));
}

}  // namespace

double psi_l2_ratio(const StateFunction& f, const Vector& pi, double p) {
  const double norm = l2(f, pi);
  if (!(norm > 0.0)) throw ConfigError("certified member has zero L2 norm");
  return psi(f, pi, p) / norm;
}

ClassCertificate certify_linear(const RegressionProblem& problem, double p,
                                const CertifyOptions& options) {
  const Matrix sigma = problem.second_moment();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 1e-12 * std::max(1.0, lmax)))
    throw NumericError("linear certification needs lambda_min(E[X X^T]) > 0");
  const int d = problem.dim();
  const Vector& pi = problem.chain().stationary();
  const Matrix& phi = problem.embedding();
  if (options.directions < 1) throw ConfigError("direction grid must be nonempty");

  auto ratio = [&](const Vector& v) {
    const Vector f = phi * v;
    return psi_l2_ratio(StateFunction(f.data(), f.data() + f.size()), pi, p);
  };

  Rng rng(options.seed);
  std::vector<Vector> grid;
  if (d == 1) {
    grid.push_back(Vector::Ones(1));
  } else if (d == 2) {
    // the ratio is even in v, so half the circle suffices
    for (std::size_t j = 0; j < options.directions; ++j) {
      const double t = std::numbers::pi * static_cast<double>(j) / static_cast<double>(options.directions);
      Vector v(2);
      v << std::cos(t), std::sin(t);
      grid.push_back(v);
    }
  } else {
    for (std::size_t j = 0; j < options.directions; ++j) grid.push_back(random_unit(rng, d));
  }

  std::vector<double> values(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) values[j] = ratio(grid[j]);

  // Covering radius of the symmetric grid, estimated by random probes.
  double h = 0.0;
  if (d > 1) {
    for (int t = 0; t < 2000; ++t) {
      const Vector w = random_unit(rng, d);
      double best = kInf;
      for (const auto& u : grid) best = std::min(best, std::min((w - u).norm(), (w + u).norm()));
      h = std::max(h, best);
    }
  }

  double best = *std::max_element(values.begin(), values.end());
  if (d > 1) {
    std::vector<std::size_t> order(grid.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    const std::size_t top = std::min<std::size_t>(10, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(top), order.end(),
                      [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    std::vector<Vector> seeds;
    for (std::size_t i = 0; i < top; ++i) seeds.push_back(grid[order[i]]);
    double radius = std::max(h, 1e-3);
    for (int round = 0; round < options.refinement_rounds; ++round) {
      for (auto& centre : seeds) {
        double centre_val = ratio(centre);
        for (int t = 0; t < 50; ++t) {
          Vector cand = centre + radius * random_unit(rng, d);
          cand.normalize();
          const double val = ratio(cand);
          if (val > centre_val) {
            centre_val = val;
            centre = cand;
          }
        }
        best = std::max(best, centre_val);
      }
      radius *= 0.25;
    }
  }

  double bmax = 0.0;
  for (Eigen::Index x = 0; x < phi.rows(); ++x) bmax = std::max(bmax, phi.row(x).norm());
  double upper = best;
  for (std::size_t j = 0; j < grid.size() && d > 1; ++j) {
    const Vector f = phi * grid[j];
    const double num = psi(StateFunction(f.data(), f.data() + f.size()), pi, p) + h * bmax;
    const double den = l2(StateFunction(f.data(), f.data() + f.size()), pi) - h * std::sqrt(lmax);
    upper = den > 0.0 ? std::max(upper, num / den) : kInf;
    if (std::isinf(upper)) break;
  }

  ClassCertificate cert;
  cert.p = p;
  cert.eta = 1.0;
  cert.method = CertMethod::LinearExact;
  cert.lower_bound = best;
  cert.L = std::max(1.0, best);
  cert.upper_estimate = std::max(cert.L, upper);
  cert.directions = grid.size();
  return cert;
}

ClassCertificate certify_finite(const std::vector<StateFunction>& members, const Vector& pi,
                                double p) {
  if (members.empty()) throw ConfigError("nothing to certify");
  double best = 0.0;
  for (const auto& f : members) best = std::max(best, psi_l2_ratio(f, pi, p));
  ClassCertificate cert;
  cert.p = p;
  cert.eta = 1.0;
  cert.method = CertMethod::FiniteExact;
  cert.lower_bound = best;
  cert.L = std::max(1.0, best);
  cert.upper_estimate = cert.L;
  cert.directions = members.size();
  return cert;
}

ClassCertificate certify_sampled(const std::vector<StateFunction>& samples, const Vector& pi,
                                 double p) {
  if (samples.size() < 2) throw ConfigError("sampled fit needs at least two members");
  std::vector<double> lx, ly;
  for (const auto& f : samples) {
    const double n2 = l2(f, pi);
    if (!(n2 > 0.0)) throw ConfigError("certified member has zero L2 norm");
    lx.push_back(std::log(n2));
    ly.push_back(std::log(psi(f, pi, p)));
  }
  const double m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / m;
    my += ly[i] / m;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  double eta = sxx > 0.0 ? sxy / sxx : 1.0;
  eta = std::clamp(eta, 1e-3, 1.0);
  double log_l = -kInf;
  for (std::size_t i = 0; i < lx.size(); ++i) log_l = std::max(log_l, ly[i] - eta * lx[i]);

  ClassCertificate cert;
  cert.p = p;
  cert.eta = eta;
  cert.method = CertMethod::SampledFit;
  cert.L = std::max(1.0, std::exp(log_l));
  cert.lower_bound = cert.upper_estimate = cert.L;
  cert.directions = samples.size();
  return cert;
}

std::vector<StateFunction> star_difference_witnesses(const HypothesisClass& cls,
                                                     const PopulationQuantities& pop,
                                                     const Vector& pi) {
  if (cls.is_linear()) throw ConfigError("star-hull witnesses are built for finite classes");
  std::vector<StateFunction> dirs;
  for (const auto& f : cls.members()) {
    StateFunction g(f.size());
    for (std::size_t x = 0; x < f.size(); ++x) g[x] = f[x] - pop.f_star[x];
    if (l2(g, pi) > 0.0) dirs.push_back(std::move(g));
  }
  // The ratio is scale free, so a rho g_i - rho' g_j reduces to an angle.
  std::vector<StateFunction> out = dirs;
  const int grid = cls.star_grid();
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      if (i == j) continue;
      for (int t = 1; t < grid; ++t) {
        const double theta = 0.5 * std::numbers::pi * t / grid;
        StateFunction h(dirs[i].size());
        for (std::size_t x = 0; x < h.size(); ++x)
          h[x] = std::cos(theta) * dirs[i][x] - std::sin(theta) * dirs[j][x];
        if (l2(h, pi) > 1e-12) out.push_back(std::move(h));
      }
    }
  return out;
}

ClassCertificate certify_weak_subgaussian(const HypothesisClass& cls,
                                          const RegressionProblem& problem,
                                          const PopulationQuantities& pop, double p,
                                          CertMethod method, const CertifyOptions& options) {
  if (cls.is_linear()) {
    if (method != CertMethod::LinearExact)
      throw ConfigError("linear classes are certified with the linear-exact method");
    return certify_linear(problem, p, options);
  }
  const Vector& pi = problem.chain().stationary();
  const auto witnesses = star_difference_witnesses(cls, pop, pi);
  if (witnesses.empty()) {
    ClassCertificate cert;
    cert.p = p;
    cert.method = method;
    return cert;
  }
  switch (method) {
    case CertMethod::FiniteExact: return certify_finite(witnesses, pi, p);
    case CertMethod::SampledFit: return certify_sampled(witnesses, pi, p);
    case CertMethod::LinearExact: break;
  }
  throw ConfigError("finite classes are certified with finite-exact or sampled-fit");
}

bool certificate_holds(const ClassCertificate& cert, const std::vector<StateFunction>& members,
                       const Vector& pi, double tol) {
  for (const auto& f : members)
    if (psi(f, pi, cert.p) > cert.L * std::pow(l2(f, pi), cert.eta) + tol) return false;
  return true;
}

}  // namespace mixfree
