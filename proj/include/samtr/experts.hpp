#pragma once

#include <memory>
#include <string>

#include "samtr/bandit.hpp"
#include "samtr/quadmodel.hpp"

namespace samtr {

// What an expert is asked to predict: the largest model change over the whole
// trust ball (advice for the refresh draw) or over the incumbent/trial pair
// (advice for the objective-estimate draw).
enum class AdviceMode { Ball, TwoPoint };

struct ExpertContext {
  int round = 0;
  int b = 0;
  AdviceMode mode = AdviceMode::Ball;
  const ComponentProblem* problem = nullptr;
  Vector incumbent;
  double trust_radius = 0.0;
  Vector trial_point;  // TwoPoint mode only
  // Current per-component models (centers c_j) and full evaluation archives.
  const std::vector<QuadraticModel>* models = nullptr;
  const std::vector<InterpolationHistory>* histories = nullptr;
  // Most recent raw refresh rewards; NaN where never observed.
  Vector last_rewards;
  bool taylor_mode = false;
};

class Expert {
 public:
  virtual ~Expert() = default;
  virtual std::string name() const = 0;
  virtual ExpertAdvice advise(const ExpertContext& ctx) = 0;

  // Fired once per refreshed component so stateful experts can learn.
  struct Observation {
    int j = 0;
    const QuadraticModel* fresh = nullptr;
    const QuadraticModel* previous = nullptr;
    const ComponentProblem* problem = nullptr;
    Vector incumbent;
    bool taylor_mode = false;
  };
  virtual void observe(const Observation&) {}
};

// e_j = b / p regardless of context.
std::unique_ptr<Expert> make_uniform_expert();

// Tracks per-component curvature constants L_j (EMA, factor `ema`, zero
// start) and advises the variance-optimal probabilities for the bound
// d_j = L_j/2 * (Delta^2 + (||x - c_j|| + Delta)^2) (ball mode) or
// d_j = L_j/2 * max over the two points of ||point - c_j||^2 (two-point
// mode).  Fresh L estimates come from the refreshed model's Hessian spectral
// bound, or from a gradient secant when the run provides analytic gradients.
std::unique_ptr<Expert> make_lipschitz_expert(double ema = 0.8);

// Cheap side models sigma_j used in place of the true components when
// predicting rewards.  grad may be empty unless taylor_mode is used.
struct SurrogateSet {
  std::function<double(int, const Vector&)> value;
  std::function<Vector(int, const Vector&)> grad;
};

// Predicts rewards by re-running the model refresh against the surrogate on a
// scratch copy of the history (never touching the evaluation budget), or by
// the first-order bound |sigma(x)-sigma(c)| + Delta*||grad sigma(x) - g||
// when the run is in Taylor-model mode.
std::unique_ptr<Expert> make_surrogate_expert(SurrogateSet surrogates);

// Bridges advice requests to a child process speaking one JSON object per
// line on stdin/stdout.  Request: {"round", "p", "b", "dim", "incumbent",
// "trust_radius", "centers", "mode", "trial_point"?, "last_rewards"}.
// Response: {"array": [p numbers], "reasoning"?}.  The child is spawned once
// and reused; a timeout, a crash, or a malformed reply makes the expert fall
// open to uniform advice (never stalling the run) after reporting through
// `warn`.
std::unique_ptr<Expert> make_external_expert(
    const std::string& command, int timeout_ms = 30000,
    std::function<void(const std::string&)> warn = {});

// abs -> truncate/pad to length p -> rescale to sum b, repeatedly clipping at
// 1 and rescaling the rest so the result is a valid advice vector.  An
// all-zero input falls back to uniform.  Idempotent on valid advice.
Vector sanitize_external_advice(const std::vector<double>& raw, int p, int b);

// Cubic radial interpolant sum_i lambda_i ||x-x_i||^3 + c0 + c'x.
struct RbfSurrogate {
  Matrix nodes;   // one row per training point
  Vector lambda;  // kernel weights
  Vector tail;    // [c0, c]

  double value(const Vector& x) const;
  Vector grad(const Vector& x) const;
};

// Exact interpolation at the training points (ties are resolved by a tiny
// ridge; a still-singular system throws SingularSystem).
RbfSurrogate fit_rbf(const Matrix& points, const Vector& values);

// Latin hypercube: n points in [lo, hi], one per axis stratum per dimension.
Matrix lhs_sample(int n, const Vector& lo, const Vector& hi, RngStream& rng);

}  // namespace samtr
