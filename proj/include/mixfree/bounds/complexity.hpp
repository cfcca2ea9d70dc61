#pragma once

// Covering numbers in L2(pi) and entropy-integral upper bounds
//   gamma_alpha <= c_alpha * int_0^r (log N(s))^{1/alpha} ds.

#include <functional>
#include <vector>

#include "mixfree/erm.hpp"

namespace mixfree {

struct CoveringCount {
  std::size_t count = 1;
  bool upper_bound = false;  // volumetric estimate rather than an explicit cover
};

/// Greedy cover of a point set: the first uncovered point becomes a centre
/// and absorbs everything within distance s.
CoveringCount covering_number_finite(const std::vector<StateFunction>& points, const Vector& pi,
                                     double s);

/// ceil((1 + 2r/s)^d), the volumetric bound for a d-dimensional ball.
CoveringCount covering_number_ball(int dim, double r, double s);

/// Class-local cover of F* intersected with the L2 sphere of radius r.
/// Linear classes use the volumetric bound on the r-ball; finite classes the
/// greedy cover of the normalised star-hull directions.
CoveringCount covering_number(const HypothesisClass& cls, const RegressionProblem& problem,
                              const PopulationQuantities& pop, double r, double s);

/// log N(s) on (0, r]. `breakpoints` lists the scales at which a step
/// profile jumps (empty for smooth profiles).
struct CoveringProfile {
  std::function<double(double)> log_n;
  std::vector<double> breakpoints;
  double radius = 1.0;
  bool parametric = false;
  bool step = false;  // piecewise constant between breakpoints
  double dim = 0.0;
};

/// log N(s) = d log(r/s) for s < r, 0 beyond.
CoveringProfile parametric_profile(double dim, double r);

/// Greedy-cover step profile of a finite point set.
CoveringProfile finite_profile(const std::vector<StateFunction>& points, const Vector& pi,
                               double r);

/// Directions r (f - f*)/||f - f*|| over members at distance >= r from f*.
std::vector<StateFunction> sphere_points(const HypothesisClass& cls,
                                         const RegressionProblem& problem,
                                         const PopulationQuantities& pop, double r);

/// c_alpha d^{1/alpha} r Gamma(1/alpha + 1).
double gamma_alpha_parametric(double dim, double r, double alpha, double c_alpha = 1.0);

/// Adaptive quadrature of the entropy integral (relative tolerance 1e-6),
/// split at the profile's breakpoints.
double gamma_alpha_quadrature(const CoveringProfile& profile, double alpha, double c_alpha = 1.0);

/// Closed form for parametric profiles, quadrature otherwise. alpha in (0, 2].
double gamma_alpha_upper(const CoveringProfile& profile, double alpha, double c_alpha = 1.0);

/// gamma_alpha(F* on the r-sphere) as a function of r, for the class. The
/// returned function refers to `problem`, which must outlive it.
std::function<double(double)> gamma_profile(const HypothesisClass& cls,
                                            const RegressionProblem& problem,
                                            const PopulationQuantities& pop, double alpha,
                                            double c_alpha = 1.0);

}  // namespace mixfree
