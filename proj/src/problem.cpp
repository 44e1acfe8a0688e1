#include "samtr/problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "samtr/rng.hpp"

namespace samtr {

bool ComponentProblem::has_finite_bounds() const {
  if (lo.size() == 0 && hi.size() == 0) return false;
  const double inf = std::numeric_limits<double>::infinity();
  bool finite = false;
  for (int i = 0; i < lo.size(); ++i) finite = finite || lo[i] > -inf;
  for (int i = 0; i < hi.size(); ++i) finite = finite || hi[i] < inf;
  return finite;
}

std::int64_t EvalLedger::total() const {
  std::lock_guard<std::mutex> lock(*mu_);
  return total_;
}

bool EvalLedger::exhausted() const {
  std::lock_guard<std::mutex> lock(*mu_);
  return budget_ >= 0 && total_ >= budget_;
}

std::string EvalLedger::key(int j, const Vector& x) {
  // Bitwise coordinates: cache hits require exact coordinate equality.
  std::string k(sizeof(int) + sizeof(double) * x.size(), '\0');
  std::memcpy(k.data(), &j, sizeof(int));
  if (x.size() > 0)
    std::memcpy(k.data() + sizeof(int), x.data(), sizeof(double) * x.size());
  return k;
}

bool EvalLedger::lookup(int j, const Vector& x, double* value) const {
  std::lock_guard<std::mutex> lock(*mu_);
  auto it = cache_.find(key(j, x));
  if (it == cache_.end()) return false;
  if (value) *value = it->second;
  return true;
}

void EvalLedger::record(int j, const Vector& x, double value) {
  std::lock_guard<std::mutex> lock(*mu_);
  cache_.emplace(key(j, x), value);
}

void EvalLedger::charge(int j) {
  std::lock_guard<std::mutex> lock(*mu_);
  if (budget_ >= 0 && total_ >= budget_)
    throw BudgetExhausted("evaluation budget exhausted (component " +
                          std::to_string(j) + ")");
  ++total_;
}

double evaluate_component(const ComponentProblem& problem, EvalLedger& ledger,
                          int j, const Vector& x) {
  require(j >= 0 && j < problem.p, ErrorCode::index_out_of_range,
          "component index " + std::to_string(j) + " outside [0, " +
              std::to_string(problem.p) + ")");
  require(x.size() == problem.dim, ErrorCode::invalid_argument,
          "point dimension mismatch");
  double cached = 0.0;
  if (ledger.lookup(j, x, &cached)) return cached;
  ledger.charge(j);
  const double value = problem.component(j, x);
  ledger.record(j, x, value);
  return value;
}

double objective_value(const ComponentProblem& problem, const Vector& x) {
  double f = 0.0;
  for (int j = 0; j < problem.p; ++j) {
    const double v = problem.component(j, x);
    f += problem.h == HKind::SumOfSquares ? v * v : v;
  }
  return f;
}

namespace {

Vector unbounded(int dim, double sign) {
  return Vector::Constant(dim, sign * std::numeric_limits<double>::infinity());
}

void finish(ComponentProblem& prob, const BuiltinOptions& opts) {
  if (opts.x0.size() > 0) {
    require(opts.x0.size() == prob.dim, ErrorCode::invalid_argument,
            "x0 override has wrong dimension");
    prob.x0 = opts.x0;
  }
  prob.lo = unbounded(prob.dim, -1.0);
  prob.hi = unbounded(prob.dim, +1.0);
}

// Separable quartet of scaled one-dimensional parabolas: component j (counted
// from 1 here to keep the weights human-readable) is 10^j (x_j - j)^2, so the
// curvature spread across components spans three orders of magnitude.
ComponentProblem make_synthetic_quad(const BuiltinOptions& opts) {
  ComponentProblem prob;
  prob.name = "synthetic-quad";
  prob.dim = 4;
  prob.p = 4;
  prob.h = HKind::Sum;
  prob.x0 = Vector::Zero(4);
  prob.component = [](int j, const Vector& x) {
    const double w = std::pow(10.0, j + 1);
    const double r = x[j] - (j + 1);
    return w * r * r;
  };
  prob.component_grad = [](int j, const Vector& x) {
    Vector g = Vector::Zero(x.size());
    g[j] = 2.0 * std::pow(10.0, j + 1) * (x[j] - (j + 1));
    return g;
  };
  finish(prob, opts);
  return prob;
}

double oscillator_signal(double t, const Vector& x) {
  return x[0] * std::exp(-x[1] * t) * std::cos(x[2] * t + x[3]);
}

Vector oscillator_signal_grad(double t, const Vector& x) {
  const double e = std::exp(-x[1] * t);
  const double c = std::cos(x[2] * t + x[3]);
  const double s = std::sin(x[2] * t + x[3]);
  Vector g(4);
  g[0] = e * c;
  g[1] = -t * x[0] * e * c;
  g[2] = -t * x[0] * e * s;
  g[3] = -x[0] * e * s;
  return g;
}

// Damped-oscillation least squares: recover (amplitude, damping, frequency,
// phase) from observations on an equispaced time grid over [0, 10].  The
// observation noise is drawn once at construction from the problem seed, so a
// fixed seed defines a fixed deterministic instance.
ComponentProblem make_oscillator(std::uint64_t seed,
                                 const BuiltinOptions& opts) {
  ComponentProblem prob;
  prob.name = "oscillator";
  prob.dim = 4;
  prob.p = opts.p > 0 ? opts.p : 40;
  require(prob.p >= 2, ErrorCode::invalid_argument,
          "oscillator needs at least two observations");
  prob.h = HKind::SumOfSquares;

  Vector x_true(4);
  x_true << 1.5, 0.2, 2.0, 1.5707963267948966;
  prob.x0 = x_true.array() + 0.1;

  std::vector<double> t(prob.p), y_obs(prob.p);
  RngStream noise(seed, "problem-noise");
  const double noise_std = opts.noise ? std::sqrt(0.015) : 0.0;
  for (int j = 0; j < prob.p; ++j) {
    t[j] = 10.0 * j / (prob.p - 1);
    const double xi = opts.noise ? noise.normal(0.0, noise_std) : 0.0;
    y_obs[j] = oscillator_signal(t[j], x_true) + xi;
  }

  prob.component = [t, y_obs](int j, const Vector& x) {
    return oscillator_signal(t[j], x) - y_obs[j];
  };
  prob.component_grad = [t](int j, const Vector& x) {
    return oscillator_signal_grad(t[j], x);
  };
  finish(prob, opts);
  return prob;
}

ComponentProblem make_ext_rosenbrock(const BuiltinOptions& opts) {
  ComponentProblem prob;
  prob.name = "ext-rosenbrock";
  prob.dim = opts.dim > 0 ? opts.dim : 6;
  require(prob.dim % 2 == 0, ErrorCode::invalid_argument,
          "ext-rosenbrock dimension must be even");
  prob.p = prob.dim;
  prob.h = HKind::SumOfSquares;
  prob.x0 = Vector(prob.dim);
  for (int i = 0; i < prob.dim; i += 2) {
    prob.x0[i] = -1.2;
    prob.x0[i + 1] = 1.0;
  }
  prob.component = [](int j, const Vector& x) {
    const int i = j / 2 * 2;
    if (j % 2 == 0) return 10.0 * (x[i + 1] - x[i] * x[i]);
    return 1.0 - x[i];
  };
  prob.component_grad = [](int j, const Vector& x) {
    Vector g = Vector::Zero(x.size());
    const int i = j / 2 * 2;
    if (j % 2 == 0) {
      g[i] = -20.0 * x[i];
      g[i + 1] = 10.0;
    } else {
      g[i] = -1.0;
    }
    return g;
  };
  finish(prob, opts);
  return prob;
}

ComponentProblem make_powell_singular(const BuiltinOptions& opts) {
  ComponentProblem prob;
  prob.name = "powell-singular";
  prob.dim = 4;
  prob.p = 4;
  prob.h = HKind::SumOfSquares;
  prob.x0 = Vector(4);
  prob.x0 << 3.0, -1.0, 0.0, 1.0;
  prob.component = [](int j, const Vector& x) {
    switch (j) {
      case 0: return x[0] + 10.0 * x[1];
      case 1: return std::sqrt(5.0) * (x[2] - x[3]);
      case 2: return (x[1] - 2.0 * x[2]) * (x[1] - 2.0 * x[2]);
      default: return std::sqrt(10.0) * (x[0] - x[3]) * (x[0] - x[3]);
    }
  };
  prob.component_grad = [](int j, const Vector& x) {
    Vector g = Vector::Zero(4);
    switch (j) {
      case 0:
        g[0] = 1.0;
        g[1] = 10.0;
        break;
      case 1:
        g[2] = std::sqrt(5.0);
        g[3] = -std::sqrt(5.0);
        break;
      case 2:
        g[1] = 2.0 * (x[1] - 2.0 * x[2]);
        g[2] = -4.0 * (x[1] - 2.0 * x[2]);
        break;
      default:
        g[0] = 2.0 * std::sqrt(10.0) * (x[0] - x[3]);
        g[3] = -2.0 * std::sqrt(10.0) * (x[0] - x[3]);
    }
    return g;
  };
  finish(prob, opts);
  return prob;
}

ComponentProblem make_trigonometric(const BuiltinOptions& opts) {
  ComponentProblem prob;
  prob.name = "trigonometric";
  prob.dim = opts.dim > 0 ? opts.dim : 5;
  prob.p = prob.dim;
  prob.h = HKind::SumOfSquares;
  const int n = prob.dim;
  prob.x0 = Vector::Constant(n, 1.0 / n);
  prob.component = [n](int j, const Vector& x) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::cos(x[i]);
    return n - s + (j + 1) * (1.0 - std::cos(x[j])) - std::sin(x[j]);
  };
  prob.component_grad = [n](int j, const Vector& x) {
    Vector g(n);
    for (int i = 0; i < n; ++i) g[i] = std::sin(x[i]);
    g[j] += (j + 1) * std::sin(x[j]) - std::cos(x[j]);
    return g;
  };
  finish(prob, opts);
  return prob;
}

ComponentProblem make_brown_almost_linear(const BuiltinOptions& opts) {
  ComponentProblem prob;
  prob.name = "brown-almost-linear";
  prob.dim = opts.dim > 0 ? opts.dim : 5;
  prob.p = prob.dim;
  prob.h = HKind::SumOfSquares;
  const int n = prob.dim;
  prob.x0 = Vector::Constant(n, 0.5);
  prob.component = [n](int j, const Vector& x) {
    if (j + 1 < n) return x[j] + x.sum() - (n + 1.0);
    return x.prod() - 1.0;
  };
  prob.component_grad = [n](int j, const Vector& x) {
    Vector g(n);
    if (j + 1 < n) {
      g.setOnes();
      g[j] += 1.0;
    } else {
      for (int i = 0; i < n; ++i) {
        double prod = 1.0;
        for (int k = 0; k < n; ++k)
          if (k != i) prod *= x[k];
        g[i] = prod;
      }
    }
    return g;
  };
  finish(prob, opts);
  return prob;
}

}  // namespace

ComponentProblem builtin_problem(BuiltinKind kind, std::uint64_t seed,
                                 const BuiltinOptions& opts) {
  switch (kind) {
    case BuiltinKind::SyntheticQuad: return make_synthetic_quad(opts);
    case BuiltinKind::Oscillator: return make_oscillator(seed, opts);
    case BuiltinKind::ExtRosenbrock: return make_ext_rosenbrock(opts);
    case BuiltinKind::PowellSingular: return make_powell_singular(opts);
    case BuiltinKind::Trigonometric: return make_trigonometric(opts);
    case BuiltinKind::BrownAlmostLinear: return make_brown_almost_linear(opts);
  }
  throw Error(ErrorCode::unknown_spec, "unhandled builtin kind");
}

BuiltinKind builtin_kind_from_name(const std::string& name) {
  if (name == "synthetic-quad") return BuiltinKind::SyntheticQuad;
  if (name == "oscillator") return BuiltinKind::Oscillator;
  if (name == "ext-rosenbrock") return BuiltinKind::ExtRosenbrock;
  if (name == "powell-singular") return BuiltinKind::PowellSingular;
  if (name == "trigonometric") return BuiltinKind::Trigonometric;
  if (name == "brown-almost-linear") return BuiltinKind::BrownAlmostLinear;
  throw Error(ErrorCode::unknown_spec, "unknown problem name: " + name);
}

const char* builtin_name(BuiltinKind kind) {
  switch (kind) {
    case BuiltinKind::SyntheticQuad: return "synthetic-quad";
    case BuiltinKind::Oscillator: return "oscillator";
    case BuiltinKind::ExtRosenbrock: return "ext-rosenbrock";
    case BuiltinKind::PowellSingular: return "powell-singular";
    case BuiltinKind::Trigonometric: return "trigonometric";
    case BuiltinKind::BrownAlmostLinear: return "brown-almost-linear";
  }
  return "unknown";
}

}  // namespace samtr
