#include "samtr/quadmodel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "samtr/rng.hpp"

namespace samtr {

namespace {

constexpr double kPivotTol = 1e-3;  // scaled-displacement QR acceptance
constexpr double kInterpTol = 1e-10;

}  // namespace

double QuadraticModel::eval(const Vector& x) const {
  const Vector s = x - center;
  return bias + gradient.dot(s) + 0.5 * s.dot(hessian * s);
}

Vector QuadraticModel::grad(const Vector& x) const {
  return gradient + hessian * (x - center);
}

QuadraticModel QuadraticModel::zero(const Vector& center) {
  QuadraticModel m;
  m.center = center;
  m.bias = 0.0;
  m.gradient = Vector::Zero(center.size());
  m.hessian = Matrix::Zero(center.size(), center.size());
  return m;
}

QuadraticModel model_difference(const QuadraticModel& a,
                                const QuadraticModel& b) {
  QuadraticModel d;
  d.center = a.center;
  d.bias = a.bias - b.eval(a.center);
  d.gradient = a.gradient - b.grad(a.center);
  d.hessian = a.hessian - b.hessian;
  return d;
}

int InterpolationHistory::find(const Vector& x) const {
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].size() == x.size() && points[i] == x)
      return static_cast<int>(i);
  return -1;
}

void InterpolationHistory::add(const Vector& x, double value) {
  if (find(x) >= 0) return;
  points.push_back(x);
  values.push_back(value);
}

namespace {

// Minimum-Frobenius-norm quadratic through (0, 0) and (s_i, r_i): with
// H = sum_i mu_i s_i s_i' the interpolation + stationarity conditions are
//   [ A  S ] [mu]   [r]        A_ij = 0.5 (s_i's_j)^2,  S row i = s_i'
//   [ S' 0 ] [ g] = [0]
// The Gram block A goes rank-deficient once n exceeds dim(Sym(dim)), yet the
// system stays consistent; the minimum-norm solve handles both regimes, and
// any null-space play in mu leaves H itself unchanged.  Returns false only
// when the solve produces non-finite values or fails the consistency check.
bool fit_min_frobenius(const std::vector<Vector>& s, const Vector& r, int dim,
                       Vector* g, Matrix* H) {
  const int n = static_cast<int>(s.size());
  Matrix kkt = Matrix::Zero(n + dim, n + dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double dot = s[i].dot(s[j]);
      kkt(i, j) = 0.5 * dot * dot;
    }
  for (int i = 0; i < n; ++i) {
    kkt.block(i, n, 1, dim) = s[i].transpose();
    kkt.block(n, i, dim, 1) = s[i];
  }
  Vector rhs = Vector::Zero(n + dim);
  rhs.head(n) = r;

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(kkt);
  const Vector sol = cod.solve(rhs);
  if (!sol.allFinite()) return false;
  const double scale = std::max(1.0, rhs.norm());
  if ((kkt * sol - rhs).norm() > 1e-8 * scale) return false;

  *g = sol.tail(dim);
  *H = Matrix::Zero(dim, dim);
  for (int i = 0; i < n; ++i) *H += sol[i] * (s[i] * s[i].transpose());
  return true;
}

}  // namespace

ModelUpdate update_model(InterpolationHistory& history,
                         const Vector& new_center, double trust_radius,
                         const Evaluator& evaluate) {
  const int dim = static_cast<int>(new_center.size());
  require(trust_radius > 0.0, ErrorCode::invalid_argument,
          "trust radius must be positive");
  ModelUpdate out;

  int center_idx = history.find(new_center);
  if (center_idx < 0) {
    const double fc = evaluate(new_center);
    history.add(new_center, fc);
    center_idx = history.find(new_center);
    ++out.n_new_evals;
  }
  const double f_center = history.values[center_idx];

  // Reusable candidates: distinct history points within 2 * trust_radius.
  std::vector<int> candidates;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (static_cast<int>(i) == center_idx) continue;
    const double dist = (history.points[i] - new_center).norm();
    if (dist > 0.0 && dist <= 2.0 * trust_radius) candidates.push_back(i);
  }

  // Greedy pivoted orthogonalization of scaled displacements: at each round
  // take the candidate with the largest residual outside the span built so
  // far; stop when the best pivot drops below tolerance or dim points are in.
  std::vector<int> affine;          // accepted candidate history indices
  std::vector<Vector> basis;        // orthonormal span of accepted directions
  std::vector<char> used(candidates.size(), 0);
  auto residual = [&](const Vector& v) {
    Vector r = v;
    for (const Vector& q : basis) r -= q.dot(r) * q;
    return r;
  };
  while (static_cast<int>(affine.size()) < dim) {
    int best = -1;
    double best_norm = 0.0;
    Vector best_res;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (used[k]) continue;
      const Vector scaled =
          (history.points[candidates[k]] - new_center) / trust_radius;
      Vector res = residual(scaled);
      if (res.norm() > best_norm) {
        best_norm = res.norm();
        best = static_cast<int>(k);
        best_res = res;
      }
    }
    if (best < 0 || best_norm < kPivotTol) break;
    used[best] = 1;
    affine.push_back(candidates[best]);
    basis.push_back(best_res / best_norm);
  }

  // Fill the unspanned subspace with fresh points one trust radius out.
  std::vector<int> selected = affine;
  if (static_cast<int>(basis.size()) < dim) {
    for (int i = 0; i < dim && static_cast<int>(basis.size()) < dim; ++i) {
      Vector res = residual(Vector::Unit(dim, i));
      if (res.norm() < 1e-10) continue;
      const Vector dir = res / res.norm();
      const Vector fresh = new_center + trust_radius * dir;
      if (fresh == new_center)
        throw DegenerateGeometry(
            "trust radius too small to separate fresh geometry points");
      if (history.find(fresh) < 0) {
        const double fv = evaluate(fresh);
        history.add(fresh, fv);
        ++out.n_new_evals;
      }
      selected.push_back(history.find(fresh));
      basis.push_back(dir);
    }
    if (static_cast<int>(basis.size()) < dim)
      throw DegenerateGeometry("affine geometry is rank-deficient");
  }

  // Extra points sharpen the curvature estimate.  Any history point may
  // serve — restricting to a fixed multiple of the radius starves the fit of
  // curvature whenever the radius collapses below the point spread.
  // Candidates are swept nearest first, and one is admitted only when the
  // residual of its radius-scaled quadratic natural basis vector
  // phi(u) = [u; u_i u_j] against the span of everything already selected
  // clears an absolute floor.  Both halves of the rule earn their keep:
  //   - nearest-first keeps the set local, since gradient accuracy and fit
  //     conditioning both degrade with dynamic range, and greedier orderings
  //     (max residual first) hand every slot to far excursion points whose
  //     huge scaled displacements then poison the fit;
  //   - the absolute floor is what lets a lone far witness in: the span
  //     saturates after at most dim + dim(dim+1)/2 admissions, so near
  //     redundancy exhausts itself and the sweep still reaches a far point
  //     that alone carries some quadratic direction — and an unwitnessed
  //     stiff direction is precisely the one a trust-region step will
  //     hallucinate descent along.  A relative test fails here: dense
  //     near-coincident clusters (consecutive iterates, paired rho points)
  //     each look "new" against their own microscopic norm and fill the set
  //     with points that are numerically useless for curvature.
  // The tolerance, not the slot cap, is what ends the sweep; the drop loop
  // below sheds the weakest survivors if conditioning still spoils
  // interpolation.
  const int affine_count = static_cast<int>(selected.size());
  const std::size_t npmax = (dim + 1) * (dim + 2) / 2;
  auto phi = [&](int idx) {
    const Vector u = (history.points[idx] - new_center) / trust_radius;
    Vector v(dim + dim * (dim + 1) / 2);
    v.head(dim) = u;
    int at = dim;
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) v[at++] = u[i] * u[j];
    return v;
  };
  std::vector<Vector> phi_basis;
  auto phi_residual = [&](Vector v) {
    for (const Vector& q : phi_basis) v -= q.dot(v) * q;
    return v;
  };
  for (int idx : selected) {
    const Vector res = phi_residual(phi(idx));
    if (res.norm() > 0.0) phi_basis.push_back(res / res.norm());
  }
  std::vector<int> extras;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (static_cast<int>(i) == center_idx) continue;
    if (std::find(selected.begin(), selected.end(), static_cast<int>(i)) !=
        selected.end())
      continue;
    if ((history.points[i] - new_center).norm() > 0.0) extras.push_back(i);
  }
  std::sort(extras.begin(), extras.end(), [&](int a, int b) {
    return (history.points[a] - new_center).squaredNorm() <
           (history.points[b] - new_center).squaredNorm();
  });
  constexpr double kScreenTol = 1e-2;
  for (std::size_t i = 0;
       i < extras.size() && selected.size() + 1 < npmax; ++i) {
    const Vector res = phi_residual(phi(extras[i]));
    if (res.norm() < kScreenTol) continue;  // residuals only shrink: final
    selected.push_back(extras[i]);
    phi_basis.push_back(res / res.norm());
  }

  // Fit, dropping ill-conditioned extras until interpolation is honored.
  // Displacements are normalized by their RMS length rather than the trust
  // radius: the selected points may live on a very different scale (clusters
  // after rejections, far extras after a radius collapse) and the KKT system
  // conditions best when a typical scaled displacement has unit length.
  QuadraticModel model;
  model.center = new_center;
  model.bias = f_center;
  while (true) {
    const int n = static_cast<int>(selected.size());
    double sumsq = 0.0;
    for (int i = 0; i < n; ++i)
      sumsq += (history.points[selected[i]] - new_center).squaredNorm();
    const double fit_scale = std::sqrt(sumsq / std::max(1, n));
    std::vector<Vector> s(n);
    Vector r(n);
    for (int i = 0; i < n; ++i) {
      s[i] = (history.points[selected[i]] - new_center) / fit_scale;
      r[i] = history.values[selected[i]] - f_center;
    }
    Vector g_scaled;
    Matrix h_scaled;
    bool ok = fit_min_frobenius(s, r, dim, &g_scaled, &h_scaled);
    if (!ok && static_cast<int>(selected.size()) <= affine_count)
      throw DegenerateGeometry("interpolation system is singular");
    if (ok) {
      model.gradient = g_scaled / fit_scale;
      model.hessian = h_scaled / (fit_scale * fit_scale);
      double worst = 0.0;
      for (int i = 0; i < n; ++i) {
        const double val = model.eval(history.points[selected[i]]);
        const double ref = std::max(1.0, std::abs(history.values[selected[i]]));
        worst = std::max(worst,
                         std::abs(val - history.values[selected[i]]) / ref);
      }
      ok = worst <= 0.5 * kInterpTol;
    }
    if (ok || static_cast<int>(selected.size()) <= affine_count) break;
    selected.pop_back();  // least informative extra goes first
  }

  model.interp_points.push_back(new_center);
  for (int idx : selected) model.interp_points.push_back(history.points[idx]);
  out.model = std::move(model);
  return out;
}

namespace {

// Step for a given multiplier in the eigenbasis; infinite-norm flag when the
// multiplier pins a direction that still carries gradient.
Vector secular_step(const Vector& eval, const Vector& gbar, double sigma,
                    double pin_tol, bool* unbounded) {
  const int n = static_cast<int>(eval.size());
  Vector s(n);
  *unbounded = false;
  for (int i = 0; i < n; ++i) {
    const double denom = eval[i] + sigma;
    if (std::abs(denom) <= pin_tol) {
      s[i] = 0.0;
      if (std::abs(gbar[i]) > pin_tol) *unbounded = true;
    } else {
      s[i] = -gbar[i] / denom;
    }
  }
  return s;
}

}  // namespace

TrSolution solve_tr_subproblem(const Vector& g, const Matrix& H,
                               double radius) {
  const int dim = static_cast<int>(g.size());
  require(radius > 0.0, ErrorCode::invalid_argument, "radius must be positive");
  require(H.rows() == dim && H.cols() == dim, ErrorCode::invalid_argument,
          "Hessian shape mismatch");

  const Matrix Hs = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Hs);
  const Vector eval = eig.eigenvalues();
  const Matrix V = eig.eigenvectors();
  const Vector gbar = V.transpose() * g;

  const double scale =
      std::max({1.0, std::abs(eval[0]), std::abs(eval[dim - 1])});
  const double pin_tol = 1e-13 * scale;
  const double sigma0 = std::max(0.0, -eval[0]);

  auto finish = [&](const Vector& sbar) {
    TrSolution sol;
    sol.step = V * sbar;
    sol.value = g.dot(sol.step) + 0.5 * sol.step.dot(Hs * sol.step);
    return sol;
  };

  bool unbounded = false;
  const Vector s0 = secular_step(eval, gbar, sigma0, pin_tol, &unbounded);
  if (!unbounded && s0.norm() <= radius) {
    if (sigma0 == 0.0) return finish(s0);  // interior Newton point
    // Hard case: pad the pseudo-inverse step along the bottom eigenvector.
    const double tau = std::sqrt(std::max(0.0, radius * radius - s0.squaredNorm()));
    Vector sbar = s0;
    sbar[0] += tau;  // eigenbasis coordinate of the bottom eigenvector
    return finish(sbar);
  }

  // Boundary root of 1/||s(sigma)|| = 1/radius on (sigma0, sigma_hi];
  // safeguarded Newton, bisection fallback.
  double lo = sigma0;
  double hi = sigma0 + g.norm() / radius + 1.0;
  double sigma = 0.5 * (lo + hi);
  Vector s = s0;
  for (int it = 0; it < 200; ++it) {
    s = secular_step(eval, gbar, sigma, pin_tol, &unbounded);
    const double norm = unbounded ? std::numeric_limits<double>::infinity()
                                  : s.norm();
    if (std::abs(norm - radius) <= 1e-13 * radius) break;
    if (norm > radius)
      lo = sigma;
    else
      hi = sigma;
    double next = 0.0;
    if (std::isfinite(norm) && norm > 0.0) {
      // phi(sigma) = 1/norm - 1/radius, phi' = (sum g^2/(l+s)^3) / norm^3
      double d3 = 0.0;
      for (int i = 0; i < dim; ++i) {
        const double denom = eval[i] + sigma;
        if (std::abs(denom) > pin_tol)
          d3 += gbar[i] * gbar[i] / (denom * denom * denom);
      }
      const double phi = 1.0 / norm - 1.0 / radius;
      const double dphi = d3 / (norm * norm * norm);
      if (dphi > 0.0) next = sigma - phi / dphi;
    }
    sigma = (next > lo && next < hi) ? next : 0.5 * (lo + hi);
  }
  s = secular_step(eval, gbar, sigma, pin_tol, &unbounded);
  if (s.norm() > 0.0) s *= radius / s.norm();  // land exactly on the sphere
  return finish(s);
}

namespace {

// Largest alpha in [0, cap] keeping s + alpha*d inside the ball and box.
double max_feasible(const Vector& s, const Vector& d, double radius,
                    const Vector& lo, const Vector& hi, double cap) {
  double alpha = cap;
  const double dd = d.squaredNorm();
  if (dd > 0.0) {
    const double sd = s.dot(d);
    const double c = s.squaredNorm() - radius * radius;
    const double disc = sd * sd - dd * c;
    if (disc >= 0.0) alpha = std::min(alpha, (-sd + std::sqrt(disc)) / dd);
  }
  for (int i = 0; i < s.size(); ++i) {
    if (d[i] > 0.0) alpha = std::min(alpha, (hi[i] - s[i]) / d[i]);
    if (d[i] < 0.0) alpha = std::min(alpha, (lo[i] - s[i]) / d[i]);
  }
  return std::max(0.0, alpha);
}

}  // namespace

TrSolution solve_tr_subproblem(const Vector& g, const Matrix& H, double radius,
                               const Vector& lo, const Vector& hi) {
  const int dim = static_cast<int>(g.size());
  require(lo.size() == dim && hi.size() == dim, ErrorCode::invalid_argument,
          "bound shape mismatch");
  bool active = false;
  for (int i = 0; i < dim; ++i) {
    require(lo[i] <= 0.0 && hi[i] >= 0.0, ErrorCode::invalid_argument,
            "step bounds must bracket the origin");
    if (lo[i] > -radius || hi[i] < radius) active = true;
  }
  if (!active) return solve_tr_subproblem(g, H, radius);

  const Matrix Hs = 0.5 * (H + H.transpose());
  auto q = [&](const Vector& s) { return g.dot(s) + 0.5 * s.dot(Hs * s); };

  // Truncated CG from the origin, stopping at the first boundary contact.
  Vector s = Vector::Zero(dim);
  Vector r = -g;
  Vector p = r;
  double rr = r.squaredNorm();
  const double tol = 1e-10 * std::max(1.0, g.norm());
  for (int it = 0; it < 4 * dim && std::sqrt(rr) > tol; ++it) {
    const double kappa = p.dot(Hs * p);
    const double cap = max_feasible(s, p, radius, lo, hi, 1e300);
    if (kappa <= 0.0) {
      s += cap * p;
      break;
    }
    const double alpha = rr / kappa;
    if (alpha >= cap) {
      s += cap * p;
      break;
    }
    s += alpha * p;
    r -= alpha * (Hs * p);
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }

  // Projected Cauchy safeguard: backtrack along -g with box/ball clipping.
  Vector best = s;
  double best_q = q(s);
  double t = max_feasible(Vector::Zero(dim), -g, radius, lo, hi, 1e300);
  for (int k = 0; k < 40 && t > 0.0; ++k, t *= 0.5) {
    const Vector cand = -t * g;
    const double qc = q(cand);
    if (qc < best_q) {
      best_q = qc;
      best = cand;
    }
  }

  TrSolution sol;
  sol.step = best;
  sol.value = best_q;
  return sol;
}

BallExtrema quadratic_ball_extrema(const QuadraticModel& q,
                                   const Vector& center, double radius) {
  const double q0 = q.eval(center);
  const Vector g = q.grad(center);
  const TrSolution down = solve_tr_subproblem(g, q.hessian, radius);
  const TrSolution up = solve_tr_subproblem(-g, -q.hessian, radius);
  BallExtrema ext;
  ext.arg_min = center + down.step;
  ext.arg_max = center + up.step;
  ext.min_value = q0 + down.value;
  ext.max_value = q0 - up.value;
  return ext;
}

double max_abs_quadratic_on_ball(const QuadraticModel& q, const Vector& center,
                                 double radius) {
  const BallExtrema ext = quadratic_ball_extrema(q, center, radius);
  return std::max(std::abs(ext.min_value), std::abs(ext.max_value));
}

namespace {

QuadraticModel model_sum(const QuadraticModel& a, const QuadraticModel& b) {
  QuadraticModel s;
  s.center = a.center;
  s.bias = a.bias + b.eval(a.center);
  s.gradient = a.gradient + b.grad(a.center);
  s.hessian = a.hessian + b.hessian;
  return s;
}

}  // namespace

double model_discrepancy_ball(const QuadraticModel& fresh,
                              const QuadraticModel& old_model,
                              const Vector& center, double radius, HKind h) {
  const QuadraticModel diff = model_difference(fresh, old_model);
  if (h == HKind::Sum) return max_abs_quadratic_on_ball(diff, center, radius);

  // Quartic |fresh^2 - old^2| = |fresh - old| * |fresh + old|: factor extrema
  // give strong candidates, a fixed ball pattern covers the rest.
  const QuadraticModel sum = model_sum(fresh, old_model);
  const BallExtrema de = quadratic_ball_extrema(diff, center, radius);
  const BallExtrema se = quadratic_ball_extrema(sum, center, radius);

  std::vector<Vector> pts = {center, de.arg_min, de.arg_max, se.arg_min,
                             se.arg_max};
  const int dim = static_cast<int>(center.size());
  RngStream pattern(0x9b1f, "ball-pattern");
  for (int i = 0; i < 64; ++i) {
    Vector dir(dim);
    for (int d = 0; d < dim; ++d) dir[d] = pattern.normal();
    const double norm = dir.norm();
    if (norm == 0.0) continue;
    double r = radius;
    if (i >= 32) r *= std::pow(pattern.uniform(), 1.0 / dim);
    pts.push_back(center + (r / norm) * dir);
  }
  return model_discrepancy_points(fresh, old_model, pts, h);
}

double model_discrepancy_points(const QuadraticModel& fresh,
                                const QuadraticModel& old_model,
                                const std::vector<Vector>& pts, HKind h) {
  double best = 0.0;
  for (const Vector& pt : pts) {
    const double a = fresh.eval(pt);
    const double b = old_model.eval(pt);
    const double v = h == HKind::SumOfSquares ? std::abs(a * a - b * b)
                                              : std::abs(a - b);
    best = std::max(best, v);
  }
  return best;
}

double hessian_spectral_bound(const Matrix& H) {
  if (H.rows() == 0) return 0.0;
  const Matrix Hs = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Hs, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace samtr
