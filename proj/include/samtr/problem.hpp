#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "samtr/errors.hpp"

namespace samtr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// How component values combine into the scalar objective.
enum class HKind { Sum, SumOfSquares };

// A finite-sum objective f(x) = sum_j F_j(x) (or sum_j F_j(x)^2) whose
// components are individually expensive to evaluate.  The raw oracles are
// never called directly by solver code; everything goes through
// evaluate_component so caching and budget accounting stay consistent.
struct ComponentProblem {
  std::string name;
  int dim = 0;
  int p = 0;  // number of components
  HKind h = HKind::Sum;
  Vector x0;
  Vector lo, hi;  // elementwise bounds, +-inf when absent

  // component(j, x) with j in [0, p).  Builtin factories fill these in.
  std::function<double(int, const Vector&)> component;
  // Optional analytic gradient of F_j; empty when unavailable.
  std::function<Vector(int, const Vector&)> component_grad;

  bool has_gradient() const { return static_cast<bool>(component_grad); }
  bool has_finite_bounds() const;
};

// Cache + budget meter.  One evaluation of any single component costs one
// budget unit; re-evaluating a component at bit-identical coordinates is free.
class EvalLedger {
 public:
  explicit EvalLedger(std::int64_t budget = -1) : budget_(budget) {}

  std::int64_t budget() const { return budget_; }
  void set_budget(std::int64_t b) { budget_ = b; }
  std::int64_t total() const;
  bool exhausted() const;

  bool lookup(int j, const Vector& x, double* value) const;
  void record(int j, const Vector& x, double value);

  // Charges one unit; throws BudgetExhausted when no budget remains.
  void charge(int j);

 private:
  static std::string key(int j, const Vector& x);

  std::int64_t budget_;
  std::int64_t total_ = 0;
  std::unordered_map<std::string, double> cache_;
  // Behind a pointer so the ledger (and anything holding one) stays movable.
  mutable std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

// Cached, budget-metered component evaluation.  Throws IndexOutOfRange for a
// bad j and BudgetExhausted when an uncached evaluation would exceed budget.
double evaluate_component(const ComponentProblem& problem, EvalLedger& ledger,
                          int j, const Vector& x);

// Direct h(F(x)) without touching any ledger: the reporting/shadow oracle.
double objective_value(const ComponentProblem& problem, const Vector& x);

enum class BuiltinKind {
  SyntheticQuad,
  Oscillator,
  ExtRosenbrock,
  PowellSingular,
  Trigonometric,
  BrownAlmostLinear,
};

struct BuiltinOptions {
  int dim = 0;        // 0 = builtin default; scalable families only
  int p = 0;          // 0 = builtin default
  bool noise = true;  // Oscillator only
  Vector x0;          // size 0 = builtin default
};

ComponentProblem builtin_problem(BuiltinKind kind, std::uint64_t seed,
                                 const BuiltinOptions& opts = {});

// Name <-> kind mapping used by configs and the C API ("synthetic-quad",
// "oscillator", "ext-rosenbrock", "powell-singular", "trigonometric",
// "brown-almost-linear").  Throws UnknownSpec for anything else.
BuiltinKind builtin_kind_from_name(const std::string& name);
const char* builtin_name(BuiltinKind kind);

}  // namespace samtr
