#pragma once
// Reference computations for the test suite.  Every helper reaches its answer
// through a different route than the library (exhaustive enumeration,
// bisection on the secular equation, convex decomposition, dense KKT solves),
// so agreement between the two is evidence, not tautology.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "samtr/quadmodel.hpp"

namespace oracle {

using samtr::Matrix;
using samtr::Vector;

// All size-b subsets of {0..p-1}, lexicographic.
inline std::vector<std::vector<int>> subsets(int p, int b) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) == b) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i <= p - (b - static_cast<int>(cur.size())); ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// Exact distribution of a conditional Poisson design with per-entry working
// probabilities q: P(S) proportional to prod_{j in S} q_j * prod_{j out} (1 -
// q_j) over size-b subsets.  Entries at 1 or 0 fall out naturally (subsets
// violating them get zero mass).
struct CpsDistribution {
  std::vector<std::vector<int>> sets;
  std::vector<double> prob;
  Vector inclusion;
};

inline CpsDistribution cps_enumerate(const Vector& q, int b) {
  const int p = static_cast<int>(q.size());
  CpsDistribution d;
  d.sets = subsets(p, b);
  d.prob.resize(d.sets.size());
  double total = 0.0;
  for (std::size_t s = 0; s < d.sets.size(); ++s) {
    double w = 1.0;
    std::size_t pos = 0;
    for (int j = 0; j < p; ++j) {
      const bool inside = pos < d.sets[s].size() && d.sets[s][pos] == j;
      if (inside) {
        w *= q[j];
        ++pos;
      } else {
        w *= 1.0 - q[j];
      }
    }
    d.prob[s] = w;
    total += w;
  }
  d.inclusion = Vector::Zero(p);
  for (std::size_t s = 0; s < d.sets.size(); ++s) {
    d.prob[s] /= total;
    for (int j : d.sets[s]) d.inclusion[j] += d.prob[s];
  }
  return d;
}

// Decompose an inclusion vector pi (entries in [0,1], sum b) into a finite
// mixture of size-b index sets whose weighted membership reproduces pi to
// machine precision.  Any mixture with those margins realizes the inclusion
// probabilities exactly, which makes it a design-free oracle for
// unbiasedness statements: no sampler calibration error can leak in.
struct SubsetMixture {
  std::vector<std::vector<int>> sets;
  std::vector<double> weight;
};

inline SubsetMixture decompose_inclusion(Vector pi, int b) {
  const int p = static_cast<int>(pi.size());
  SubsetMixture mix;
  double remaining = 1.0;
  for (int step = 0; step < 4 * p && remaining > 1e-15; ++step) {
    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int c) { return pi[a] > pi[c]; });
    std::vector<int> s(order.begin(), order.begin() + b);
    std::sort(s.begin(), s.end());
    // Largest weight that keeps every included coordinate nonnegative and
    // every excluded coordinate no larger than the mass still unassigned.
    double lam = remaining;
    for (int j : s) lam = std::min(lam, pi[j]);
    for (int i = b; i < p; ++i) lam = std::min(lam, remaining - pi[order[i]]);
    if (lam <= 0.0) break;
    for (int j : s) pi[j] -= lam;
    remaining -= lam;
    mix.sets.push_back(std::move(s));
    mix.weight.push_back(lam);
  }
  return mix;
}

// Trust-region reference: spectral decomposition plus bisection on the
// secular equation, with explicit interior and hard-case branches.
struct TrReference {
  Vector step;
  double value = 0.0;
};

inline TrReference tr_reference(const Vector& g, const Matrix& H,
                                double radius) {
  const int n = static_cast<int>(g.size());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (H + H.transpose()));
  const Vector lam = eig.eigenvalues();
  const Matrix v = eig.eigenvectors();
  const Vector gh = v.transpose() * g;
  const double lmin = lam[0];
  const double sigma_low = std::max(0.0, -lmin);

  auto norm_at = [&](double sigma) {
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double den = lam[i] + sigma;
      if (den > 0.0) s2 += (gh[i] / den) * (gh[i] / den);
    }
    return std::sqrt(s2);
  };
  auto assemble = [&](double sigma) {
    Vector sh = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      const double den = lam[i] + sigma;
      if (den > 0.0) sh[i] = -gh[i] / den;
    }
    return Vector(v * sh);
  };
  auto finish = [&](const Vector& s) {
    TrReference r;
    r.step = s;
    r.value = g.dot(s) + 0.5 * s.dot(H * s);
    return r;
  };

  // Interior branch: H positive semidefinite and the (pseudo)inverse step
  // already fits inside the ball.
  if (lmin >= 0.0) {
    bool compatible = true;  // g orthogonal to the null space
    for (int i = 0; i < n; ++i)
      if (lam[i] <= 0.0 && std::abs(gh[i]) > 1e-14 * (1.0 + g.norm()))
        compatible = false;
    if (compatible && norm_at(0.0) <= radius) return finish(assemble(0.0));
  }

  // Is the limit norm at sigma_low (dropping blown-up directions) already
  // below the radius?  Then no root exists: hard case.
  double limit_norm = 0.0;
  for (int i = 0; i < n; ++i) {
    const double den = lam[i] + sigma_low;
    if (den > 1e-12 * (std::abs(lmin) + 1.0))
      limit_norm += (gh[i] / den) * (gh[i] / den);
    else if (std::abs(gh[i]) > 1e-13 * (1.0 + g.norm()))
      limit_norm = std::numeric_limits<double>::infinity();
    if (std::isinf(limit_norm)) break;
  }
  if (!std::isinf(limit_norm)) limit_norm = std::sqrt(limit_norm);

  if (limit_norm < radius && sigma_low > 0.0) {
    // Hard case: pad the pseudo step along the bottom eigenvector.
    Vector base = assemble(sigma_low);
    const double tau =
        std::sqrt(std::max(0.0, radius * radius - base.squaredNorm()));
    const Vector cand1 = base + tau * v.col(0);
    const Vector cand2 = base - tau * v.col(0);
    const TrReference r1 = finish(cand1);
    const TrReference r2 = finish(cand2);
    return r1.value <= r2.value ? r1 : r2;
  }

  // Boundary root: bisection on the strictly decreasing norm profile.
  double lo = sigma_low;
  double hi = sigma_low + std::max(1.0, std::abs(lmin));
  while (norm_at(hi) > radius) hi = sigma_low + 2.0 * (hi - sigma_low);
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (norm_at(mid) > radius ? lo : hi) = mid;
  }
  return finish(assemble(hi));
}

// Minimum-Frobenius-norm interpolation reference: primal KKT system over
// (bias, gradient, upper-triangular Hessian entries) with the Frobenius
// quadratic form, solved densely.  pts are displacements from the center.
struct MinFrobFit {
  double bias = 0.0;
  Vector gradient;
  Matrix hessian;
};

inline MinFrobFit min_frobenius_reference(const std::vector<Vector>& pts,
                                          const Vector& vals, int dim) {
  const int nq = dim * (dim + 1) / 2;
  const int nz = 1 + dim + nq;
  const int n = static_cast<int>(pts.size());
  Matrix w = Matrix::Zero(nz, nz);
  {
    int k = 1 + dim;
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j, ++k) w(k, k) = (i == j) ? 1.0 : 2.0;
  }
  Matrix a(n, nz);
  for (int r = 0; r < n; ++r) {
    const Vector& s = pts[r];
    a(r, 0) = 1.0;
    a.block(r, 1, 1, dim) = s.transpose();
    int k = 1 + dim;
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j, ++k)
        a(r, k) = (i == j) ? 0.5 * s[i] * s[j] : s[i] * s[j];
  }
  Matrix kkt = Matrix::Zero(nz + n, nz + n);
  kkt.topLeftCorner(nz, nz) = w;
  kkt.topRightCorner(nz, n) = a.transpose();
  kkt.bottomLeftCorner(n, nz) = a;
  Vector rhs = Vector::Zero(nz + n);
  rhs.tail(n) = vals;
  const Vector sol = Eigen::FullPivLU<Matrix>(kkt).solve(rhs);

  MinFrobFit fit;
  fit.bias = sol[0];
  fit.gradient = sol.segment(1, dim);
  fit.hessian = Matrix::Zero(dim, dim);
  int k = 1 + dim;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j, ++k)
      fit.hessian(i, j) = fit.hessian(j, i) = sol[k];
  return fit;
}

// Random test fixtures, driven by the standard engine so the library's own
// stream implementation never feeds its own tests.
inline Vector random_vector(std::mt19937_64& eng, int n, double lo,
                            double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(eng);
  return v;
}

inline Matrix random_symmetric(std::mt19937_64& eng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = u(eng);
  return m;
}

inline samtr::QuadraticModel random_model(std::mt19937_64& eng, int dim,
                                          const Vector& center,
                                          double scale = 1.0) {
  samtr::QuadraticModel m;
  m.center = center;
  m.bias = random_vector(eng, 1, -scale, scale)[0];
  m.gradient = random_vector(eng, dim, -scale, scale);
  m.hessian = random_symmetric(eng, dim, scale);
  return m;
}

}  // namespace oracle
