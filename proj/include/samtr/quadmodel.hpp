#pragma once

#include <functional>
#include <vector>

#include "samtr/problem.hpp"

namespace samtr {

// m(x) = bias + g'(x - c) + 0.5 (x - c)' H (x - c).  bias is the component
// value at the center, models always live in component space; how component
// values enter the objective (plain sum vs. sum of squares) is applied by the
// solver layer.
struct QuadraticModel {
  Vector center;
  double bias = 0.0;
  Vector gradient;
  Matrix hessian;
  // Active interpolation set of the most recent fit, center first.
  std::vector<Vector> interp_points;

  double eval(const Vector& x) const;
  Vector grad(const Vector& x) const;

  static QuadraticModel zero(const Vector& center);
};

// Quadratic q(x) = a(x) - b(x) rebased onto a's center; exact.
QuadraticModel model_difference(const QuadraticModel& a,
                                const QuadraticModel& b);

// Every (point, value) pair a component has ever been evaluated at.  Points
// are stored bit-exactly; duplicates are ignored.
struct InterpolationHistory {
  std::vector<Vector> points;
  std::vector<double> values;

  int find(const Vector& x) const;  // exact match, -1 when absent
  void add(const Vector& x, double value);
  std::size_t size() const { return points.size(); }
};

using Evaluator = std::function<double(const Vector&)>;

struct ModelUpdate {
  QuadraticModel model;
  int n_new_evals = 0;
};

// Recenter a component model at new_center, reusing history where the
// geometry allows and spending at most dim+1 fresh evaluations:
//   1. candidate points = history within 2 * trust_radius of the new center;
//   2. greedy column-pivoted orthogonalization of displacements scaled by
//      1/trust_radius accepts up to dim of them while the pivot magnitude
//      stays >= 1e-3;
//   3. fresh points at new_center + trust_radius * u for an orthonormal basis
//      u of the still-unspanned subspace (plus the center itself when its
//      value is unknown);
//   4. any other history point may join the set (up to (dim+1)(dim+2)/2
//      points total), swept nearest first and admitted while its residual in
//      the radius-scaled quadratic natural basis clears an absolute floor —
//      so a far point is taken exactly when it alone witnesses some
//      curvature direction;
//   5. minimum-Frobenius-norm quadratic interpolation via the standard KKT
//      system; points whose interpolation residual cannot be honored are
//      dropped from the active set (never the affine core).
// The evaluator is responsible for budget accounting; fresh evaluations are
// appended to the history.
ModelUpdate update_model(InterpolationHistory& history,
                         const Vector& new_center, double trust_radius,
                         const Evaluator& evaluate);

struct TrSolution {
  Vector step;
  double value = 0.0;  // g's + 0.5 s'Hs at the returned step
};

// Global minimizer of g's + 0.5 s'Hs over ||s|| <= radius via spectral
// decomposition and a safeguarded Newton solve of the secular equation,
// including the hard case.  Exact to floating-point accuracy at desk
// dimensions (intended for dim <= 20).
TrSolution solve_tr_subproblem(const Vector& g, const Matrix& H,
                               double radius);

// Ball + box variant (step bounds lo <= s <= hi, lo <= 0 <= hi): projected
// truncated conjugate gradients safeguarded by a projected Cauchy search.
// Accuracy downgrade vs. the ball-only solver: first-order optimality only.
TrSolution solve_tr_subproblem(const Vector& g, const Matrix& H, double radius,
                               const Vector& lo, const Vector& hi);

// Exact extrema of a quadratic over ||x - center|| <= radius.
struct BallExtrema {
  Vector arg_min, arg_max;
  double min_value = 0.0, max_value = 0.0;
};
BallExtrema quadratic_ball_extrema(const QuadraticModel& q,
                                   const Vector& center, double radius);

// max |q(x)| over ||x - center|| <= radius, exact: the maximum is attained at
// the ball minimizer of q or of -q, both solved exactly.
double max_abs_quadratic_on_ball(const QuadraticModel& q, const Vector& center,
                                 double radius);

// Largest |t(fresh(x)) - t(old(x))| over the ball around `center`, where t is
// the identity (Sum) or the square (SumOfSquares).  The Sum case is an exact
// quadratic maximization.  The SumOfSquares case is a quartic: it is bounded
// above by max|fresh-old| * max|fresh+old| (both factors solved exactly) and
// reported as the largest exact evaluation over the factor extremal points,
// the ball center, and a fixed 64-point boundary/interior pattern.
double model_discrepancy_ball(const QuadraticModel& fresh,
                              const QuadraticModel& old_model,
                              const Vector& center, double radius, HKind h);

// Same discrepancy restricted to an explicit point set (exact for both
// kinds).
double model_discrepancy_points(const QuadraticModel& fresh,
                                const QuadraticModel& old_model,
                                const std::vector<Vector>& pts, HKind h);

// Largest absolute eigenvalue of the (symmetrized) Hessian.
double hessian_spectral_bound(const Matrix& H);

}  // namespace samtr
