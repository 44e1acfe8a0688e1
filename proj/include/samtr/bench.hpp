#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "samtr/sam.hpp"

namespace samtr {

// ---------------------------------------------------------------------------
// Solver grid
// ---------------------------------------------------------------------------

// How one roster slot of a solver variant is built.
struct ExpertSpec {
  std::string kind;  // "uniform" | "lipschitz" | "surrogate" | "external"
  // external only:
  std::string command;
  int timeout_ms = 30000;
  // surrogate only: offline RBF training-set size, and the half-width of the
  // sampling box around x0 used when the problem has no finite bounds.
  int training_points = 500;
  double box_halfwidth = 2.0;
};

// One named solver configuration within an experiment.
struct SolverVariant {
  std::string name;
  std::vector<ExpertSpec> experts;
  int b = 1;
  RhoMode rho_mode = RhoMode::EstimatedJ;
  bool deterministic = false;  // b = p, pi = 1: the classical baseline
  bool taylor_mode = false;
  bool bandit = true;  // false: single expert's advice used verbatim
};

struct ProblemSpec {
  std::string name;  // builtin name, see builtin_kind_from_name
  BuiltinOptions opts;
};

struct ExperimentConfig {
  std::string name;
  std::vector<ProblemSpec> problems;
  std::vector<SolverVariant> variants;
  std::vector<std::uint64_t> seeds;
  std::int64_t budget = 0;  // absolute per-run component-eval budget
  int budget_factor = 0;    // > 0: budget = factor * dim * p per problem
  std::vector<double> taus = {1e-1, 1e-3, 1e-5, 1e-7};  // profiles to emit
  SamConfig base;  // shared knobs; b/rho_mode/... come from the variant
  int jobs = 1;    // grid cells run on this many threads
};

// Parses the JSON config format (see README / preset_config output).
ExperimentConfig parse_experiment_config(const std::string& json_text);

// Canonical configs, as JSON text: "failure-repro", "oscillator", "regret".
// Throws UnknownSpec for anything else.
std::string preset_config(const std::string& name);

// One variant object ({"name", "experts", "b", "rho_mode", "deterministic",
// "taylor_mode"}), for callers driving a single run instead of a grid.
SolverVariant parse_variant_json(const std::string& json_text);

// {"dim", "p", "noise", "x0"} for builtin_problem.
BuiltinOptions parse_builtin_options_json(const std::string& json_text);

// Instantiates a variant's roster for one run.  Surrogate slots train their
// RBFs here (offline, no ledger); external slots report through `warn`.
std::vector<std::unique_ptr<Expert>> build_roster(
    const SolverVariant& variant, const ComponentProblem& problem,
    std::uint64_t seed, double ema,
    const std::function<void(const std::string&)>& warn);

// ---------------------------------------------------------------------------
// Performance profiles
// ---------------------------------------------------------------------------

// One completed run reduced to what a profile needs.  `problem` keys the
// instance (builtin name + seed), so every solver run on the same instance
// shares its f0 and competes for the same f_best.
struct RunTrace {
  std::string solver;
  std::string problem;
  std::uint64_t seed = 0;
  double f0 = 0.0;
  std::vector<std::int64_t> evals;  // cumulative component evals per record
  std::vector<double> f;            // objective after each round
};

// Smallest cumulative evaluation count at which
// f <= f_best + tau * (f0 - f_best); 0 when f0 already qualifies, nullopt
// when the trace never does.
std::optional<std::int64_t> solved_at(const RunTrace& trace, double f_best,
                                      double tau);

// A solver's empirical CDF over per-instance performance ratios.
struct ProfileCurve {
  std::string solver;
  std::vector<double> ratios;     // sorted, >= 1
  std::vector<double> fractions;  // nondecreasing, in [0, 1]
};

// f_best per instance = min over every trace on it; ratio = own solved cost
// over the instance's best solved cost (cost floored at one evaluation).
// Unsolved instances contribute no curve point, so curves plateau below 1.
std::vector<ProfileCurve> performance_profile(const std::vector<RunTrace>& runs,
                                              double tau);

// Columns: solver, ratio, fraction.
void write_profile_csv(const std::vector<ProfileCurve>& curves,
                       std::ostream& os);

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

struct CellFailure {
  std::string cell;
  std::string reason;
};

struct ExperimentResult {
  std::vector<RunTrace> traces;  // sorted by (problem, solver, seed)
  std::vector<CellFailure> failures;
  std::filesystem::path out_dir;
};

// Runs problems x variants x seeds (cfg.jobs at a time), writing per-cell
// JSONL run logs, profile CSVs per tau, summary.json and summary.txt into
// out_dir.  A failing cell is reported and skipped, never fatal.  Output is
// byte-deterministic for a fixed config.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir,
                                std::ostream* progress = nullptr);

// One run-log line (shared by the driver and its tests).
std::string iteration_record_json(const IterationRecord& rec);

// Reads every *.jsonl run log in a directory back into traces, so profiles
// can be recomputed without rerunning the experiment.
std::vector<RunTrace> load_run_logs(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Regret lab
// ---------------------------------------------------------------------------

// Bandit-only harness: N fixed block-specialist experts, a deterministic
// reward table with known bound D, frozen reward scale and no clipping, and
// the horizon-tuned mixing coefficient.
struct RegretLabConfig {
  int p = 5;
  int b = 1;
  int n_experts = 2;
  std::int64_t horizon = 5000;  // rounds per seed
  int seeds = 50;
  // "phased" (built-in generator) or a CSV path: one row per round, p reward
  // columns.
  std::string table = "phased";
  std::vector<std::int64_t> checkpoints;  // default {horizon/10, horizon}
};

struct RegretCheckpoint {
  std::int64_t k = 0;
  double mean_gain = 0.0;    // player cumulative reward, mean over seeds
  double best_cum = 0.0;     // best expert's cumulative expected reward
  int best_expert = 0;
  double mean_regret = 0.0;  // best_cum - mean_gain
  double bound = 0.0;        // theoretical guarantee at this k
};

struct RegretReport {
  RegretLabConfig cfg;
  double gamma = 0.0;
  double reward_bound = 0.0;                       // D
  std::vector<std::vector<double>> per_seed_gain;  // [checkpoint][seed]
  std::vector<std::vector<double>> expert_cum;     // [checkpoint][expert]
  std::vector<RegretCheckpoint> checkpoints;
};

RegretReport regret_lab(const RegretLabConfig& cfg);

// Columns: p,b,n_experts,k,record,index,gain,best_cum,regret,bound with one
// "seed" row per seed, one "expert" row per expert and a closing "mean" row,
// per checkpoint.
void write_regret_csv(const RegretReport& rep, std::ostream& os);

// ---------------------------------------------------------------------------
// Sampler spot check
// ---------------------------------------------------------------------------

struct SampleCheckRow {
  int j = 0;
  double target = 0.0;  // requested inclusion probability
  double exact = 0.0;   // sampler's exact inclusion probability
  double freq = 0.0;    // observed over the trials
  double z = 0.0;       // (freq - target) / sqrt(target(1-target)/trials)
};

struct SampleCheckReport {
  int p = 0;
  int b = 0;
  std::int64_t trials = 0;
  std::vector<SampleCheckRow> rows;
  double max_exact_err = 0.0;
  double max_abs_z = 0.0;
};

// Draws `trials` subsets from a randomly generated target (seeded) and
// compares target, exact, and empirical inclusion probabilities.
SampleCheckReport sample_check(int p, int b, std::int64_t trials,
                               std::uint64_t seed);

// Columns: j,target,exact,exact_err,freq,z.
void write_sample_check_csv(const SampleCheckReport& rep, std::ostream& os);

}  // namespace samtr
