#pragma once

#include <limits>
#include <optional>

#include "samtr/experts.hpp"

namespace samtr {

// How the acceptance ratio's numerator f(x) - f(x + s) is obtained: by
// evaluating every component at both points, or by an importance-weighted
// correction of the model sum over a second sampled subset.
enum class RhoMode { ExactF, EstimatedJ };

struct SamConfig {
  double delta0 = 0.0;      // <= 0: 0.1 * max(1, ||x0||_inf)
  double delta_max = 0.0;   // <= 0: 1e3 * delta0
  double gamma_inc = 2.0;   // radius growth / shrink factor
  double eta1 = 0.1;        // acceptance threshold on rho
  double eta2 = 10.0;       // radius-vs-gradient acceptance guard
  int b = 1;                // refresh batch size
  // Component evaluations allowed; < 0 is unlimited, 0 permits nothing (a
  // zero-budget run returns x0 untouched).
  std::int64_t budget = -1;
  RhoMode rho_mode = RhoMode::EstimatedJ;
  // First-order models from analytic gradients instead of interpolation.
  bool taylor_mode = false;
  // b = p, all probabilities one, no bandits: the classical baseline.
  bool deterministic = false;
  // When false, sampling probabilities are the single expert's advice taken
  // verbatim: no exploration mixing, no weight updates.  Fixed-policy
  // baselines (pure uniform, pure Lipschitz estimation) run this way.
  bool use_bandit = true;
  double scale_ema = 0.8;       // reward-scale EMA for both bandits
  double gamma_override = 0.0;  // <= 0: tune from p, N, b, budget
  std::uint64_t seed = 0;
  std::int64_t max_rounds = 100000;  // safety stop, never binding at desk scale
};

// The round's corrected model: the sum of the retained component models plus
// importance-weighted refresh corrections on the drawn subset.  Holds spans
// into the caller's storage; all evaluations are closed-form.
struct AmelioratedModel {
  const std::vector<QuadraticModel>* previous = nullptr;   // centers c^{k-1}
  const std::vector<QuadraticModel>* refreshed = nullptr;  // fresh on I
  const std::vector<int>* I = nullptr;
  const Vector* pi = nullptr;
  HKind h = HKind::Sum;

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  // Exact Hessian of the (possibly quartic) corrected model at x; for the
  // square kind this is the structured 2(gg' + v H) combination per model.
  Matrix hessian(const Vector& x) const;
};

// Raw refresh rewards: largest h-consistent model change over the trust ball,
// for each refreshed component (zero elsewhere).
Vector compute_rewards(const std::vector<QuadraticModel>& previous,
                       const std::vector<QuadraticModel>& refreshed,
                       const std::vector<int>& I, const Vector& center,
                       double radius, HKind h);

struct FPairEstimate {
  double fa = 0.0, fb = 0.0;
  // Realized two-point model discrepancies for the drawn components (the
  // second bandit's rewards); zero off the draw.
  Vector rewards;
};

// Unbiased objective estimates at two points from the model sum plus
// importance-weighted corrections on J; component evaluations go through the
// ledger (cache hits are free).
FPairEstimate estimate_f_pair(const ComponentProblem& problem,
                              EvalLedger& ledger,
                              const std::vector<QuadraticModel>& models,
                              const std::vector<int>& J, const Vector& pi_j,
                              const Vector& xa, const Vector& xb, HKind h);

struct IterationRecord {
  int k = 0;
  // Objective at the round-end incumbent: exact when every component was
  // cached there, otherwise the round's estimate (f_estimated) or a
  // reporting-only shadow recomputation (f_shadow).
  double f = std::numeric_limits<double>::quiet_NaN();
  bool f_estimated = false;
  bool f_shadow = false;
  double delta = 0.0;  // radius used this round
  Vector pi;
  std::vector<int> I;
  std::vector<std::pair<std::string, Vector>> advice;
  // Expert annotations (external reasoning lines), verbatim.
  std::vector<std::pair<std::string, std::string>> notes;
  Vector weights;  // mixer weights used this round (bandit I)
  Vector rewards;  // raw refresh rewards, zero off I
  Vector pi_J;     // empty when the round never reached the J stage
  std::vector<int> J;
  double rho = std::numeric_limits<double>::quiet_NaN();
  double pred_decrease = 0.0;
  double model_grad_norm = 0.0;
  bool accepted = false;
  bool truncated = false;  // budget ran out inside this round
  std::int64_t evals_round = 0;
  std::int64_t evals_total = 0;
  Vector x_end;  // round-end incumbent (not serialized)
};

struct SamState {
  ComponentProblem problem;
  SamConfig config;
  EvalLedger ledger;
  std::vector<std::unique_ptr<Expert>> roster;
  Exp4State bandit_I, bandit_J;
  RngStream rng_I, rng_J;
  Vector x;
  double delta = 0.0;
  int k = 1;
  std::vector<QuadraticModel> models;
  std::vector<InterpolationHistory> histories;
  Vector last_rewards;  // NaN until a component first gets refreshed
  bool done = false;

  SamState(ComponentProblem prob, SamConfig cfg)
      : problem(std::move(prob)),
        config(cfg),
        ledger(cfg.budget),
        rng_I(cfg.seed, "I-draws"),
        rng_J(cfg.seed, "J-draws") {}
};

// Validates the configuration, builds the initial models at x0 (spending
// budget) and primes both bandits.  An empty roster gets a uniform expert.
// Throws BudgetExhausted when even initialization does not fit.
SamState init_sam(ComponentProblem problem, SamConfig config,
                  std::vector<std::unique_ptr<Expert>> roster);

// One full round.  Returns false when the state is already finished; emits a
// truncated record (and finishes the state) when the budget dies mid-round.
bool sam_step(SamState& state, IterationRecord* out);

struct RunResult {
  std::vector<IterationRecord> records;
  Vector final_x;
  double final_f = std::numeric_limits<double>::quiet_NaN();
  bool final_f_estimated = false;
  std::int64_t total_evals = 0;
};

// Full driver: init + rounds until the budget (or the safety cap) stops it.
// `shadow` is an optional reporting-only oracle used to replace estimated f
// values in the records; it never touches the ledger.
RunResult run_sam(ComponentProblem problem, SamConfig config,
                  std::vector<std::unique_ptr<Expert>> roster,
                  const std::function<double(const Vector&)>& shadow = {});

}  // namespace samtr
