#include "samtr/experts.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace samtr {

namespace {

class UniformExpert final : public Expert {
 public:
  std::string name() const override { return "uniform"; }
  ExpertAdvice advise(const ExpertContext& ctx) override {
    ExpertAdvice a;
    a.expert = name();
    a.e = Vector::Constant(ctx.problem->p,
                           double(ctx.b) / double(ctx.problem->p));
    return a;
  }
};

class LipschitzExpert final : public Expert {
 public:
  explicit LipschitzExpert(double ema) : ema_(ema) {}

  std::string name() const override { return "lipschitz"; }

  ExpertAdvice advise(const ExpertContext& ctx) override {
    const int p = ctx.problem->p;
    if (L_.size() != p) L_ = Vector::Zero(p);
    const double delta = ctx.trust_radius;
    Vector d(p);
    for (int j = 0; j < p; ++j) {
      const Vector& c = (*ctx.models)[j].center;
      if (ctx.mode == AdviceMode::Ball) {
        const double dist = (ctx.incumbent - c).norm();
        d[j] = 0.5 * L_[j] *
               (delta * delta + (dist + delta) * (dist + delta));
      } else {
        const double da = (ctx.incumbent - c).squaredNorm();
        const double db = (ctx.trial_point - c).squaredNorm();
        d[j] = 0.5 * L_[j] * std::max(da, db);
      }
    }
    ExpertAdvice a;
    a.expert = name();
    a.e = optimal_probabilities(d, ctx.b).pi;
    return a;
  }

  void observe(const Observation& obs) override {
    if (L_.size() != obs.problem->p) L_ = Vector::Zero(obs.problem->p);
    double fresh = 0.0;
    if (obs.taylor_mode && obs.problem->has_gradient()) {
      // Gradient secant between the new and old centers.
      const double dist = (obs.incumbent - obs.previous->center).norm();
      if (dist <= 0.0) return;
      const Vector ga = obs.problem->component_grad(obs.j, obs.incumbent);
      const Vector gb =
          obs.problem->component_grad(obs.j, obs.previous->center);
      fresh = (ga - gb).norm() / dist;
    } else {
      fresh = hessian_spectral_bound(obs.fresh->hessian);
    }
    L_[obs.j] = ema_ * L_[obs.j] + (1.0 - ema_) * fresh;
  }

 private:
  double ema_;
  Vector L_;
};

class SurrogateExpert final : public Expert {
 public:
  explicit SurrogateExpert(SurrogateSet s) : s_(std::move(s)) {
    require(static_cast<bool>(s_.value), ErrorCode::surrogate_unavailable,
            "surrogate expert needs value callbacks");
  }

  std::string name() const override { return "surrogate"; }

  ExpertAdvice advise(const ExpertContext& ctx) override {
    const int p = ctx.problem->p;
    const Vector& x = ctx.incumbent;
    const double delta = ctx.trust_radius;
    Vector d(p);
    for (int j = 0; j < p; ++j) {
      const QuadraticModel& old_model = (*ctx.models)[j];
      if (ctx.taylor_mode) {
        require(static_cast<bool>(s_.grad), ErrorCode::surrogate_unavailable,
                "taylor-mode surrogate advice needs surrogate gradients");
        const Vector gs = s_.grad(j, x);
        if (ctx.mode == AdviceMode::Ball) {
          d[j] = std::abs(s_.value(j, x) - s_.value(j, old_model.center)) +
                 delta * (gs - old_model.gradient).norm();
        } else {
          // Linear surrogate refresh evaluated at the two candidate points.
          QuadraticModel lin = QuadraticModel::zero(x);
          lin.bias = s_.value(j, x);
          lin.gradient = gs;
          d[j] = model_discrepancy_points(
              lin, old_model, {x, ctx.trial_point}, ctx.problem->h);
        }
      } else {
        // Dry-run the refresh against the surrogate on scratch history; the
        // evaluation ledger is never touched.
        InterpolationHistory scratch = (*ctx.histories)[j];
        ModelUpdate tentative =
            update_model(scratch, x, delta,
                         [&](const Vector& y) { return s_.value(j, y); });
        if (ctx.mode == AdviceMode::Ball) {
          d[j] = model_discrepancy_ball(tentative.model, old_model, x, delta,
                                        ctx.problem->h);
        } else {
          d[j] = model_discrepancy_points(
              tentative.model, old_model, {x, ctx.trial_point},
              ctx.problem->h);
        }
      }
    }
    ExpertAdvice a;
    a.expert = name();
    a.e = optimal_probabilities(d, ctx.b).pi;
    return a;
  }

 private:
  SurrogateSet s_;
};

}  // namespace

std::unique_ptr<Expert> make_uniform_expert() {
  return std::make_unique<UniformExpert>();
}

std::unique_ptr<Expert> make_lipschitz_expert(double ema) {
  return std::make_unique<LipschitzExpert>(ema);
}

std::unique_ptr<Expert> make_surrogate_expert(SurrogateSet surrogates) {
  return std::make_unique<SurrogateExpert>(std::move(surrogates));
}

Vector sanitize_external_advice(const std::vector<double>& raw, int p, int b) {
  Vector v = Vector::Zero(p);
  for (int j = 0; j < p && j < static_cast<int>(raw.size()); ++j)
    v[j] = std::isfinite(raw[j]) ? std::abs(raw[j]) : 0.0;
  if (v.sum() <= 0.0) return Vector::Constant(p, double(b) / double(p));

  // Waterfall rescale: scale the free entries to the remaining mass, pin
  // anything that hits 1, repeat.  At most p sweeps.
  std::vector<char> pinned(p, 0);
  int npin = 0;
  for (int sweep = 0; sweep < p; ++sweep) {
    const int remaining = b - npin;
    const int nfree = p - npin;
    if (remaining <= 0) {
      for (int j = 0; j < p; ++j)
        if (!pinned[j]) v[j] = 0.0;
      break;
    }
    if (remaining >= nfree) {
      for (int j = 0; j < p; ++j)
        if (!pinned[j]) v[j] = 1.0;
      break;
    }
    double free_sum = 0.0;
    for (int j = 0; j < p; ++j)
      if (!pinned[j]) free_sum += v[j];
    if (free_sum <= 0.0) {
      for (int j = 0; j < p; ++j)
        if (!pinned[j]) v[j] = double(remaining) / nfree;
      break;
    }
    const double scale = remaining / free_sum;
    bool clipped = false;
    for (int j = 0; j < p; ++j) {
      if (pinned[j]) continue;
      v[j] *= scale;
      if (v[j] >= 1.0) {
        v[j] = 1.0;
        pinned[j] = 1;
        ++npin;
        clipped = true;
      }
    }
    if (!clipped) break;
  }
  return v;
}

double RbfSurrogate::value(const Vector& x) const {
  double v = tail[0] + tail.tail(x.size()).dot(x);
  for (int i = 0; i < nodes.rows(); ++i) {
    const double r = (x - nodes.row(i).transpose()).norm();
    v += lambda[i] * r * r * r;
  }
  return v;
}

Vector RbfSurrogate::grad(const Vector& x) const {
  Vector g = tail.tail(x.size());
  for (int i = 0; i < nodes.rows(); ++i) {
    const Vector diff = x - nodes.row(i).transpose();
    g += lambda[i] * 3.0 * diff.norm() * diff;
  }
  return g;
}

RbfSurrogate fit_rbf(const Matrix& points, const Vector& values) {
  const int n = static_cast<int>(points.rows());
  const int dim = static_cast<int>(points.cols());
  require(n >= dim + 1, ErrorCode::invalid_argument,
          "cubic RBF needs at least dim+1 points for the linear tail");
  require(values.size() == n, ErrorCode::invalid_argument,
          "point/value count mismatch");

  const int m = n + dim + 1;
  Matrix kkt = Matrix::Zero(m, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double r = (points.row(i) - points.row(j)).norm();
      kkt(i, j) = r * r * r;
    }
  for (int i = 0; i < n; ++i) {
    kkt(i, n) = 1.0;
    kkt(n, i) = 1.0;
    kkt.block(i, n + 1, 1, dim) = points.row(i);
    kkt.block(n + 1, i, dim, 1) = points.row(i).transpose();
  }
  Vector rhs = Vector::Zero(m);
  rhs.head(n) = values;

  Eigen::FullPivLU<Matrix> lu(kkt);
  Vector sol;
  if (lu.isInvertible()) {
    sol = lu.solve(rhs);
  } else {
    const double scale = std::max(1.0, kkt.topLeftCorner(n, n).trace());
    Matrix ridged = kkt;
    ridged.topLeftCorner(n, n) += 1e-10 * scale * Matrix::Identity(n, n);
    Eigen::FullPivLU<Matrix> lu2(ridged);
    require(lu2.isInvertible(), ErrorCode::singular_system,
            "RBF system is singular (degenerate training set)");
    sol = lu2.solve(rhs);
  }

  RbfSurrogate s;
  s.nodes = points;
  s.lambda = sol.head(n);
  s.tail = sol.tail(dim + 1);
  return s;
}

Matrix lhs_sample(int n, const Vector& lo, const Vector& hi, RngStream& rng) {
  const int dim = static_cast<int>(lo.size());
  require(n >= 1, ErrorCode::invalid_argument, "need n >= 1 samples");
  require(hi.size() == dim, ErrorCode::invalid_argument,
          "bound length mismatch");
  for (int d = 0; d < dim; ++d)
    require(std::isfinite(lo[d]) && std::isfinite(hi[d]) && lo[d] < hi[d],
            ErrorCode::invalid_argument,
            "latin hypercube needs a finite box");

  Matrix out(n, dim);
  std::vector<int> perm(n);
  for (int d = 0; d < dim; ++d) {
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.below(i + 1)]);
    for (int i = 0; i < n; ++i) {
      const double u = (perm[i] + rng.uniform()) / n;
      out(i, d) = lo[d] + u * (hi[d] - lo[d]);
    }
  }
  return out;
}

}  // namespace samtr
