#include "samtr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace samtr {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

std::optional<std::int64_t> solved_at(const RunTrace& trace, double f_best,
                                      double tau) {
  require(tau > 0.0 && tau <= 1.0, ErrorCode::invalid_argument,
          "tau outside (0, 1]");
  const double threshold = f_best + tau * (trace.f0 - f_best);
  if (trace.f0 <= threshold) return 0;
  for (std::size_t i = 0; i < trace.f.size(); ++i)
    if (trace.f[i] <= threshold) return trace.evals[i];
  return std::nullopt;
}

std::vector<ProfileCurve> performance_profile(const std::vector<RunTrace>& runs,
                                              double tau) {
  // The instance's best objective: every trace on it competes, start included.
  std::map<std::string, double> f_best;
  for (const RunTrace& t : runs) {
    double best = t.f0;
    for (double v : t.f) best = std::min(best, v);
    auto it = f_best.find(t.problem);
    if (it == f_best.end())
      f_best.emplace(t.problem, best);
    else
      it->second = std::min(it->second, best);
  }

  // Solved cost per trace (floored at one evaluation so ratios stay finite),
  // then the instance-best cost.
  std::vector<std::optional<std::int64_t>> cost(runs.size());
  std::map<std::string, std::int64_t> best_cost;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto s = solved_at(runs[i], f_best.at(runs[i].problem), tau);
    if (!s) continue;
    cost[i] = std::max<std::int64_t>(1, *s);
    auto it = best_cost.find(runs[i].problem);
    if (it == best_cost.end())
      best_cost.emplace(runs[i].problem, *cost[i]);
    else
      it->second = std::min(it->second, *cost[i]);
  }

  // Solver order: first appearance.
  std::vector<std::string> solvers;
  std::map<std::string, std::size_t> index;
  for (const RunTrace& t : runs)
    if (index.emplace(t.solver, solvers.size()).second)
      solvers.push_back(t.solver);

  std::vector<std::vector<double>> ratios(solvers.size());
  std::vector<int> total(solvers.size(), 0);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::size_t s = index.at(runs[i].solver);
    total[s] += 1;
    if (cost[i])
      ratios[s].push_back(static_cast<double>(*cost[i]) /
                          static_cast<double>(best_cost.at(runs[i].problem)));
  }

  std::vector<ProfileCurve> curves;
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    ProfileCurve c;
    c.solver = solvers[s];
    std::sort(ratios[s].begin(), ratios[s].end());
    c.ratios = std::move(ratios[s]);
    c.fractions.reserve(c.ratios.size());
    for (std::size_t i = 0; i < c.ratios.size(); ++i)
      c.fractions.push_back(static_cast<double>(i + 1) /
                            static_cast<double>(total[s]));
    curves.push_back(std::move(c));
  }
  return curves;
}

void write_profile_csv(const std::vector<ProfileCurve>& curves,
                       std::ostream& os) {
  os << "solver,ratio,fraction\n";
  for (const ProfileCurve& c : curves)
    for (std::size_t i = 0; i < c.ratios.size(); ++i)
      os << c.solver << ',' << fmt_double(c.ratios[i]) << ','
         << fmt_double(c.fractions[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Config parsing and presets
// ---------------------------------------------------------------------------

namespace {

ExpertSpec parse_expert_spec(const ordered_json& e) {
  ExpertSpec spec;
  if (e.is_string()) {
    spec.kind = e.get<std::string>();
    return spec;
  }
  require(e.is_object(), ErrorCode::parse_error,
          "expert entry must be a string or an object");
  spec.kind = e.at("kind").get<std::string>();
  if (e.contains("command")) spec.command = e["command"].get<std::string>();
  if (e.contains("timeout_ms")) spec.timeout_ms = e["timeout_ms"].get<int>();
  if (e.contains("training_points"))
    spec.training_points = e["training_points"].get<int>();
  if (e.contains("box_halfwidth"))
    spec.box_halfwidth = e["box_halfwidth"].get<double>();
  return spec;
}

RhoMode parse_rho_mode(const std::string& s) {
  if (s == "exact") return RhoMode::ExactF;
  if (s == "estimated") return RhoMode::EstimatedJ;
  throw Error(ErrorCode::parse_error, "rho_mode must be exact or estimated");
}

const char* rho_mode_name(RhoMode m) {
  return m == RhoMode::ExactF ? "exact" : "estimated";
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& ex) {
    throw Error(ErrorCode::parse_error,
                std::string("config is not valid JSON: ") + ex.what());
  }
  try {
    ExperimentConfig cfg;
    if (j.contains("name")) cfg.name = j["name"].get<std::string>();

    for (const auto& pj : j.at("problems")) {
      ProblemSpec ps;
      ps.name = pj.at("name").get<std::string>();
      builtin_kind_from_name(ps.name);  // validate early
      if (pj.contains("dim")) ps.opts.dim = pj["dim"].get<int>();
      if (pj.contains("p")) ps.opts.p = pj["p"].get<int>();
      if (pj.contains("noise")) ps.opts.noise = pj["noise"].get<bool>();
      if (pj.contains("x0")) {
        const auto x0 = pj["x0"].get<std::vector<double>>();
        ps.opts.x0 = Eigen::Map<const Vector>(x0.data(), x0.size());
      }
      cfg.problems.push_back(std::move(ps));
    }

    std::set<std::string> names;
    for (const auto& vj : j.at("variants")) {
      SolverVariant v;
      v.name = vj.at("name").get<std::string>();
      require(names.insert(v.name).second, ErrorCode::parse_error,
              "duplicate variant name: " + v.name);
      if (vj.contains("experts"))
        for (const auto& e : vj["experts"])
          v.experts.push_back(parse_expert_spec(e));
      if (vj.contains("b")) v.b = vj["b"].get<int>();
      if (vj.contains("rho_mode"))
        v.rho_mode = parse_rho_mode(vj["rho_mode"].get<std::string>());
      if (vj.contains("deterministic"))
        v.deterministic = vj["deterministic"].get<bool>();
      if (vj.contains("taylor_mode"))
        v.taylor_mode = vj["taylor_mode"].get<bool>();
      if (vj.contains("bandit")) v.bandit = vj["bandit"].get<bool>();
      cfg.variants.push_back(std::move(v));
    }

    if (j.contains("seeds")) {
      cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    } else if (j.contains("n_seeds")) {
      const int n = j["n_seeds"].get<int>();
      for (int s = 1; s <= n; ++s) cfg.seeds.push_back(s);
    }
    if (j.contains("budget")) cfg.budget = j["budget"].get<std::int64_t>();
    if (j.contains("budget_factor"))
      cfg.budget_factor = j["budget_factor"].get<int>();
    if (j.contains("taus")) cfg.taus = j["taus"].get<std::vector<double>>();
    if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();

    if (j.contains("config")) {
      const auto& cj = j["config"];
      if (cj.contains("delta0")) cfg.base.delta0 = cj["delta0"].get<double>();
      if (cj.contains("delta_max"))
        cfg.base.delta_max = cj["delta_max"].get<double>();
      if (cj.contains("gamma_inc"))
        cfg.base.gamma_inc = cj["gamma_inc"].get<double>();
      if (cj.contains("eta1")) cfg.base.eta1 = cj["eta1"].get<double>();
      if (cj.contains("eta2")) cfg.base.eta2 = cj["eta2"].get<double>();
      if (cj.contains("scale_ema"))
        cfg.base.scale_ema = cj["scale_ema"].get<double>();
      if (cj.contains("gamma_override"))
        cfg.base.gamma_override = cj["gamma_override"].get<double>();
      if (cj.contains("max_rounds"))
        cfg.base.max_rounds = cj["max_rounds"].get<std::int64_t>();
    }

    require(!cfg.problems.empty(), ErrorCode::parse_error,
            "config needs at least one problem");
    require(!cfg.variants.empty(), ErrorCode::parse_error,
            "config needs at least one variant");
    require(!cfg.seeds.empty(), ErrorCode::parse_error,
            "config needs at least one seed");
    require(cfg.budget > 0 || cfg.budget_factor > 0, ErrorCode::parse_error,
            "config needs budget or budget_factor");
    require(cfg.jobs >= 1, ErrorCode::parse_error, "jobs must be >= 1");
    for (double t : cfg.taus)
      require(t > 0.0 && t <= 1.0, ErrorCode::parse_error,
              "tau outside (0, 1]");
    return cfg;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& ex) {
    throw Error(ErrorCode::parse_error,
                std::string("bad experiment config: ") + ex.what());
  }
}

std::string preset_config(const std::string& name) {
  if (name == "failure-repro") {
    return R"({
  "name": "failure-repro",
  "problems": [{"name": "synthetic-quad"}],
  "variants": [
    {"name": "lipschitz-only", "experts": ["lipschitz"], "b": 1, "bandit": false},
    {"name": "uniform", "experts": ["uniform"], "b": 1, "bandit": false},
    {"name": "exp4-mix", "experts": ["uniform", "lipschitz"], "b": 1},
    {"name": "deterministic", "experts": ["uniform"], "deterministic": true, "rho_mode": "exact"}
  ],
  "n_seeds": 10,
  "budget": 2000,
  "config": {"delta_max": 1.0},
  "taus": [0.1, 0.001, 1e-05, 1e-07]
})";
  }
  if (name == "oscillator") {
    return R"({
  "name": "oscillator",
  "problems": [{"name": "oscillator", "p": 40}],
  "variants": [
    {"name": "lipschitz", "experts": ["lipschitz"], "b": 4},
    {"name": "uniform", "experts": ["uniform"], "b": 4},
    {"name": "deterministic", "experts": ["uniform"], "deterministic": true, "rho_mode": "exact"}
  ],
  "n_seeds": 10,
  "budget_factor": 50,
  "taus": [0.1, 0.001, 1e-05]
})";
  }
  if (name == "regret") {
    return R"({
  "name": "regret",
  "regret": {"p": 5, "b": 1, "n_experts": 2, "horizon": 5000, "seeds": 50, "table": "phased"}
})";
  }
  throw Error(ErrorCode::unknown_spec, "unknown preset: " + name);
}

SolverVariant parse_variant_json(const std::string& json_text) {
  try {
    const ordered_json vj = ordered_json::parse(json_text);
    SolverVariant v;
    if (vj.contains("name")) v.name = vj["name"].get<std::string>();
    if (vj.contains("experts"))
      for (const auto& e : vj["experts"]) v.experts.push_back(parse_expert_spec(e));
    if (vj.contains("b")) v.b = vj["b"].get<int>();
    if (vj.contains("rho_mode"))
      v.rho_mode = parse_rho_mode(vj["rho_mode"].get<std::string>());
    if (vj.contains("deterministic"))
      v.deterministic = vj["deterministic"].get<bool>();
    if (vj.contains("taylor_mode")) v.taylor_mode = vj["taylor_mode"].get<bool>();
    if (vj.contains("bandit")) v.bandit = vj["bandit"].get<bool>();
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& ex) {
    throw Error(ErrorCode::parse_error,
                std::string("bad variant: ") + ex.what());
  }
}

BuiltinOptions parse_builtin_options_json(const std::string& json_text) {
  try {
    const ordered_json oj = ordered_json::parse(json_text);
    BuiltinOptions opts;
    if (oj.contains("dim")) opts.dim = oj["dim"].get<int>();
    if (oj.contains("p")) opts.p = oj["p"].get<int>();
    if (oj.contains("noise")) opts.noise = oj["noise"].get<bool>();
    if (oj.contains("x0")) {
      const auto x0 = oj["x0"].get<std::vector<double>>();
      opts.x0 = Eigen::Map<const Vector>(x0.data(), x0.size());
    }
    return opts;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& ex) {
    throw Error(ErrorCode::parse_error,
                std::string("bad problem options: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Run-log serialization
// ---------------------------------------------------------------------------

std::string iteration_record_json(const IterationRecord& rec) {
  ordered_json j;
  j["k"] = rec.k;
  j["f"] = rec.f;
  j["f_estimated"] = rec.f_estimated;
  j["f_shadow"] = rec.f_shadow;
  j["delta"] = rec.delta;
  j["pi"] = to_std(rec.pi);
  j["I"] = rec.I;
  ordered_json advice = ordered_json::array();
  for (const auto& [expert, e] : rec.advice)
    advice.push_back(ordered_json{{"expert", expert}, {"e", to_std(e)}});
  j["advice"] = std::move(advice);
  if (!rec.notes.empty()) {
    ordered_json notes = ordered_json::array();
    for (const auto& [expert, note] : rec.notes)
      notes.push_back(ordered_json{{"expert", expert}, {"note", note}});
    j["notes"] = std::move(notes);
  }
  j["weights"] = to_std(rec.weights);
  j["rewards"] = to_std(rec.rewards);
  j["pi_J"] = to_std(rec.pi_J);
  j["J"] = rec.J;
  j["rho"] = rec.rho;  // NaN serializes as null
  j["pred_decrease"] = rec.pred_decrease;
  j["model_grad_norm"] = rec.model_grad_norm;
  j["accepted"] = rec.accepted;
  j["truncated"] = rec.truncated;
  j["evals_round"] = rec.evals_round;
  j["evals_total"] = rec.evals_total;
  return j.dump();
}

std::vector<RunTrace> load_run_logs(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  require(fs::is_directory(dir), ErrorCode::io_error,
          "not a run-log directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<RunTrace> traces;
  for (const fs::path& file : files) {
    std::ifstream is(file);
    require(is.good(), ErrorCode::io_error, "cannot read " + file.string());
    RunTrace trace;
    bool saw_summary = false;
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      ordered_json j;
      try {
        j = ordered_json::parse(line);
      } catch (const std::exception& ex) {
        throw Error(ErrorCode::parse_error,
                    file.string() + ": bad log line: " + ex.what());
      }
      if (j.contains("summary")) {
        trace.problem = j.at("problem").get<std::string>();
        trace.solver = j.at("config").at("variant").get<std::string>();
        trace.seed = j.at("config").at("seed").get<std::uint64_t>();
        trace.f0 = j.at("f0").get<double>();
        saw_summary = true;
      } else {
        trace.evals.push_back(j.at("evals_total").get<std::int64_t>());
        // A null f (NaN in the run) never satisfies a solve test; store NaN.
        trace.f.push_back(j.at("f").is_null()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : j.at("f").get<double>());
      }
    }
    require(saw_summary, ErrorCode::parse_error,
            file.string() + ": missing summary line");
    traces.push_back(std::move(trace));
  }
  return traces;
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

namespace {

// Offline RBF surrogates: one interpolant per component, trained on a shared
// Latin hypercube sample of the true components.  Training happens before the
// run and never touches the run's ledger.
std::unique_ptr<Expert> make_trained_surrogate(const ComponentProblem& problem,
                                               const ExpertSpec& spec,
                                               std::uint64_t seed) {
  Vector lo = problem.lo, hi = problem.hi;
  if (!problem.has_finite_bounds()) {
    lo = problem.x0.array() - spec.box_halfwidth;
    hi = problem.x0.array() + spec.box_halfwidth;
  }
  RngStream rng(seed, "surrogate-train");
  const int n = std::max(spec.training_points, problem.dim + 2);
  const Matrix X = lhs_sample(n, lo, hi, rng);
  auto rbfs = std::make_shared<std::vector<RbfSurrogate>>();
  rbfs->reserve(problem.p);
  for (int j = 0; j < problem.p; ++j) {
    Vector vals(n);
    for (int i = 0; i < n; ++i) vals[i] = problem.component(j, X.row(i));
    rbfs->push_back(fit_rbf(X, vals));
  }
  SurrogateSet set;
  set.value = [rbfs](int j, const Vector& x) { return (*rbfs)[j].value(x); };
  set.grad = [rbfs](int j, const Vector& x) { return (*rbfs)[j].grad(x); };
  return make_surrogate_expert(std::move(set));
}

}  // namespace

std::vector<std::unique_ptr<Expert>> build_roster(
    const SolverVariant& variant, const ComponentProblem& problem,
    std::uint64_t seed, double ema,
    const std::function<void(const std::string&)>& warn) {
  std::vector<std::unique_ptr<Expert>> roster;
  for (const ExpertSpec& spec : variant.experts) {
    if (spec.kind == "uniform") {
      roster.push_back(make_uniform_expert());
    } else if (spec.kind == "lipschitz") {
      roster.push_back(make_lipschitz_expert(ema));
    } else if (spec.kind == "surrogate") {
      roster.push_back(make_trained_surrogate(problem, spec, seed));
    } else if (spec.kind == "external") {
      require(!spec.command.empty(), ErrorCode::parse_error,
              "external expert needs a command");
      roster.push_back(
          make_external_expert(spec.command, spec.timeout_ms, warn));
    } else {
      throw Error(ErrorCode::unknown_spec, "unknown expert kind: " + spec.kind);
    }
  }
  return roster;
}

namespace {

struct Cell {
  std::size_t problem_index = 0;
  std::size_t variant_index = 0;
  std::uint64_t seed = 0;
  std::string instance;  // problem key shared by all variants on this seed
  std::string name;      // unique cell key, also the log file stem
};

struct CellOutcome {
  RunTrace trace;
  ordered_json summary;
  bool failed = false;
  std::string reason;
};

ordered_json config_echo(const ExperimentConfig& cfg,
                         const SolverVariant& variant, std::int64_t budget,
                         std::uint64_t seed) {
  ordered_json e;
  e["variant"] = variant.name;
  e["b"] = variant.b;
  e["rho_mode"] = rho_mode_name(variant.rho_mode);
  e["deterministic"] = variant.deterministic;
  e["taylor_mode"] = variant.taylor_mode;
  e["bandit"] = variant.bandit;
  e["budget"] = budget;
  e["seed"] = seed;
  e["delta0"] = cfg.base.delta0;
  e["delta_max"] = cfg.base.delta_max;
  e["gamma_inc"] = cfg.base.gamma_inc;
  e["eta1"] = cfg.base.eta1;
  e["eta2"] = cfg.base.eta2;
  e["scale_ema"] = cfg.base.scale_ema;
  e["gamma_override"] = cfg.base.gamma_override;
  e["max_rounds"] = cfg.base.max_rounds;
  return e;
}

CellOutcome run_cell(const ExperimentConfig& cfg, const Cell& cell,
                     const std::filesystem::path& log_path) {
  const ProblemSpec& ps = cfg.problems[cell.problem_index];
  const SolverVariant& variant = cfg.variants[cell.variant_index];

  CellOutcome out;
  out.trace.solver = variant.name;
  out.trace.problem = cell.instance;
  out.trace.seed = cell.seed;

  ComponentProblem problem =
      builtin_problem(builtin_kind_from_name(ps.name), cell.seed, ps.opts);
  const std::int64_t budget =
      cfg.budget_factor > 0
          ? static_cast<std::int64_t>(cfg.budget_factor) * problem.dim *
                problem.p
          : cfg.budget;

  SamConfig c = cfg.base;
  c.b = variant.b;
  c.rho_mode = variant.rho_mode;
  c.deterministic = variant.deterministic;
  c.taylor_mode = variant.taylor_mode;
  c.use_bandit = variant.bandit;
  c.seed = cell.seed;
  c.budget = budget;

  std::vector<std::string> warnings;
  auto warn = [&warnings](const std::string& w) { warnings.push_back(w); };
  auto roster = build_roster(variant, problem, cell.seed, c.scale_ema, warn);

  const ComponentProblem shadow_problem = problem;
  auto shadow = [&shadow_problem](const Vector& x) {
    return objective_value(shadow_problem, x);
  };
  out.trace.f0 = shadow(problem.x0);

  const RunResult rr = run_sam(std::move(problem), c, std::move(roster), shadow);

  std::string log;
  for (const IterationRecord& rec : rr.records) {
    log += iteration_record_json(rec);
    log += '\n';
    out.trace.evals.push_back(rec.evals_total);
    out.trace.f.push_back(rec.f);
  }
  ordered_json summary;
  summary["summary"] = true;
  summary["cell"] = cell.name;
  summary["problem"] = cell.instance;
  summary["f0"] = out.trace.f0;
  summary["final_x"] = to_std(rr.final_x);
  summary["final_f"] = rr.final_f;
  summary["final_f_estimated"] = rr.final_f_estimated;
  summary["total_evals"] = rr.total_evals;
  summary["rounds"] = rr.records.size();
  summary["config"] = config_echo(cfg, variant, budget, cell.seed);
  if (!warnings.empty()) summary["warnings"] = warnings;
  log += summary.dump();
  log += '\n';

  std::ofstream os(log_path, std::ios::binary | std::ios::trunc);
  require(os.good(), ErrorCode::io_error,
          "cannot write run log: " + log_path.string());
  os << log;
  os.close();

  summary["log"] = log_path.filename().string();
  out.summary = std::move(summary);
  return out;
}

std::string instance_key(const ProblemSpec& ps, std::uint64_t seed) {
  std::string key = ps.name;
  if (ps.opts.dim > 0) key += "-d" + std::to_string(ps.opts.dim);
  if (ps.opts.p > 0) key += "-p" + std::to_string(ps.opts.p);
  key += "-s" + std::to_string(seed);
  return key;
}

std::string tau_tag(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", tau);
  return buf;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir,
                                std::ostream* progress) {
  namespace fs = std::filesystem;
  ExperimentResult result;
  result.out_dir = out_dir;
  fs::create_directories(out_dir / "logs");

  std::vector<Cell> cells;
  for (std::size_t pi = 0; pi < cfg.problems.size(); ++pi)
    for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi)
      for (std::uint64_t seed : cfg.seeds) {
        Cell cell;
        cell.problem_index = pi;
        cell.variant_index = vi;
        cell.seed = seed;
        cell.instance = instance_key(cfg.problems[pi], seed);
        cell.name = cell.instance + "--" + cfg.variants[vi].name;
        cells.push_back(std::move(cell));
      }

  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mu;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        outcomes[i] = run_cell(cfg, cells[i], out_dir / "logs" /
                                                  (cells[i].name + ".jsonl"));
      } catch (const std::exception& ex) {
        outcomes[i].failed = true;
        outcomes[i].reason = ex.what();
      } catch (...) {
        outcomes[i].failed = true;
        outcomes[i].reason = "unknown error";
      }
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mu);
        if (outcomes[i].failed)
          *progress << cells[i].name << "  FAILED: " << outcomes[i].reason
                    << '\n';
        else
          *progress << cells[i].name << "  f="
                    << fmt_double(
                           outcomes[i].summary["final_f"].get<double>())
                    << "  evals="
                    << outcomes[i].summary["total_evals"].get<std::int64_t>()
                    << '\n';
      }
    }
  };
  const std::size_t jobs =
      std::min<std::size_t>(std::max(1, cfg.jobs), cells.size());
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Deterministic assembly regardless of scheduling: cells were generated in
  // a fixed order and outcomes land at their cell's index.
  ordered_json summary;
  summary["name"] = cfg.name;
  ordered_json jcells = ordered_json::array();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (outcomes[i].failed) {
      result.failures.push_back({cells[i].name, outcomes[i].reason});
    } else {
      result.traces.push_back(std::move(outcomes[i].trace));
      jcells.push_back(std::move(outcomes[i].summary));
    }
  }
  summary["cells"] = std::move(jcells);
  ordered_json jfail = ordered_json::array();
  for (const CellFailure& f : result.failures)
    jfail.push_back(ordered_json{{"cell", f.cell}, {"reason", f.reason}});
  summary["failures"] = std::move(jfail);

  std::sort(result.traces.begin(), result.traces.end(),
            [](const RunTrace& a, const RunTrace& b) {
              return std::tie(a.problem, a.solver, a.seed) <
                     std::tie(b.problem, b.solver, b.seed);
            });

  for (double tau : cfg.taus) {
    const auto curves = performance_profile(result.traces, tau);
    std::ofstream os(out_dir / ("profile-tau" + tau_tag(tau) + ".csv"),
                     std::ios::binary | std::ios::trunc);
    write_profile_csv(curves, os);
  }

  {
    std::ofstream os(out_dir / "summary.json",
                     std::ios::binary | std::ios::trunc);
    os << summary.dump(2) << '\n';
  }

  // Plain-text digest: per problem x variant, median final f and mean evals.
  {
    std::map<std::pair<std::string, std::string>, std::vector<double>> finals;
    std::map<std::pair<std::string, std::string>, std::vector<double>> evals;
    for (const auto& cj : summary["cells"]) {
      // Fold seeds together: strip the "-s<seed>" suffix off the instance.
      std::string base = cj["problem"].get<std::string>();
      base = base.substr(0, base.rfind("-s"));
      const auto key =
          std::make_pair(base, cj["config"]["variant"].get<std::string>());
      finals[key].push_back(cj["final_f"].get<double>());
      evals[key].push_back(
          static_cast<double>(cj["total_evals"].get<std::int64_t>()));
    }
    std::ofstream os(out_dir / "summary.txt",
                     std::ios::binary | std::ios::trunc);
    os << "experiment: " << cfg.name << "\n";
    for (const auto& [key, fs_] : finals) {
      std::vector<double> sorted = fs_;
      std::sort(sorted.begin(), sorted.end());
      const double median = sorted[sorted.size() / 2];
      double mean_evals = 0.0;
      for (double e : evals[key]) mean_evals += e;
      mean_evals /= static_cast<double>(evals[key].size());
      os << key.first << "  " << key.second << "  runs=" << sorted.size()
         << "  median_final_f=" << fmt_double(median)
         << "  mean_evals=" << fmt_double(mean_evals) << "\n";
    }
    if (!result.failures.empty()) {
      os << "failed cells:\n";
      for (const CellFailure& f : result.failures)
        os << "  " << f.cell << ": " << f.reason << "\n";
    }
  }

  return result;
}

// ---------------------------------------------------------------------------
// Regret lab
// ---------------------------------------------------------------------------

namespace {

double frac(double v) { return v - std::floor(v); }

// Deterministic phased table: rewards in [0, 1], one block of components hot
// per phase, block 0 hot in a clear majority of phases so a single best
// expert exists.  Ten phases over the horizon.
Matrix phased_table(std::int64_t horizon, int p, int n_experts) {
  Matrix d(horizon, p);
  const std::int64_t plen = (horizon + 9) / 10;
  constexpr double kGolden = 0.6180339887498949;
  constexpr double kPlastic = 0.7548776662466927;
  for (std::int64_t k = 0; k < horizon; ++k) {
    const int phase = static_cast<int>(std::min<std::int64_t>(9, k / plen));
    const int hot = (phase % 5 < 3) ? 0 : (phase % n_experts);
    const double warm = 0.7 + 0.3 * frac(static_cast<double>(k + 1) * kGolden);
    const double cold =
        0.05 + 0.1 * frac(static_cast<double>(k + 1) * kPlastic);
    for (int j = 0; j < p; ++j)
      d(k, j) = (j % n_experts == hot) ? warm : cold;
  }
  return d;
}

Matrix load_table_csv(const std::string& path, int p) {
  std::ifstream is(path);
  require(is.good(), ErrorCode::io_error, "cannot read reward table: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string fieldtext;
    while (std::getline(ss, fieldtext, ',')) row.push_back(std::stod(fieldtext));
    require(static_cast<int>(row.size()) == p, ErrorCode::parse_error,
            "reward-table row width != p");
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorCode::parse_error, "empty reward table");
  Matrix d(rows.size(), p);
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (int j = 0; j < p; ++j) {
      require(rows[k][j] >= 0.0, ErrorCode::parse_error,
              "reward table entries must be nonnegative");
      d(k, j) = rows[k][j];
    }
  return d;
}

}  // namespace

RegretReport regret_lab(const RegretLabConfig& cfg_in) {
  RegretLabConfig cfg = cfg_in;
  require(cfg.p >= 2 && cfg.b >= 1 && cfg.b < cfg.p, ErrorCode::invalid_batch,
          "regret lab needs 1 <= b < p");
  require(cfg.n_experts >= 1 && cfg.horizon >= 1 && cfg.seeds >= 1,
          ErrorCode::invalid_argument, "bad regret-lab shape");
  if (cfg.checkpoints.empty())
    cfg.checkpoints = {std::max<std::int64_t>(1, cfg.horizon / 10),
                       cfg.horizon};
  std::sort(cfg.checkpoints.begin(), cfg.checkpoints.end());
  require(cfg.checkpoints.back() <= cfg.horizon, ErrorCode::invalid_argument,
          "checkpoint beyond horizon");

  Matrix table;
  double D = 1.0;
  if (cfg.table == "phased") {
    table = phased_table(cfg.horizon, cfg.p, cfg.n_experts);
  } else {
    table = load_table_csv(cfg.table, cfg.p);
    require(table.rows() >= cfg.horizon, ErrorCode::invalid_argument,
            "reward table shorter than horizon");
    D = std::max(1e-12, table.maxCoeff());
  }

  // Fixed block-specialist advice; the mixing floor keeps exploration alive.
  std::vector<ExpertAdvice> advice(cfg.n_experts);
  for (int n = 0; n < cfg.n_experts; ++n) {
    std::vector<double> raw(cfg.p);
    for (int j = 0; j < cfg.p; ++j)
      raw[j] = (j % cfg.n_experts == n) ? 1.0 : 0.02;
    advice[n].expert = "specialist-" + std::to_string(n);
    advice[n].e = sanitize_external_advice(raw, cfg.p, cfg.b);
  }

  // Horizon-tuned mixing coefficient: with max cumulative reward bDK, both
  // bound terms match at this value.
  const double e_minus_2 = 0.71828182845904523536;
  const double bD = static_cast<double>(cfg.b) * D;
  const double gamma = std::min(
      1.0, std::sqrt(cfg.p * std::log(std::max(2, cfg.n_experts)) /
                     ((e_minus_2 * bD + 1.0) * bD *
                      static_cast<double>(cfg.horizon))));

  RegretReport rep;
  rep.cfg = cfg;
  rep.gamma = gamma;
  rep.reward_bound = D;

  // Expert comparators are deterministic: C^{k,n} = sum over rounds of the
  // advice-weighted reward row.
  const std::size_t ncp = cfg.checkpoints.size();
  rep.expert_cum.assign(ncp, std::vector<double>(cfg.n_experts, 0.0));
  {
    std::vector<double> cum(cfg.n_experts, 0.0);
    std::size_t ci = 0;
    for (std::int64_t k = 1; k <= cfg.horizon && ci < ncp; ++k) {
      for (int n = 0; n < cfg.n_experts; ++n)
        cum[n] += advice[n].e.dot(table.row(k - 1));
      while (ci < ncp && cfg.checkpoints[ci] == k) rep.expert_cum[ci++] = cum;
    }
  }

  rep.per_seed_gain.assign(ncp, std::vector<double>(cfg.seeds, 0.0));
  for (int s = 0; s < cfg.seeds; ++s) {
    Exp4State st = Exp4State::init(cfg.p, cfg.b, cfg.n_experts, gamma);
    st.scale_frozen = true;
    st.reward_scale = D;
    st.clip_scaled = false;
    RngStream rng(static_cast<std::uint64_t>(s + 1), "regret-draws");
    double gain = 0.0;
    std::size_t ci = 0;
    for (std::int64_t k = 1; k <= cfg.horizon && ci < ncp; ++k) {
      const ProbabilityVector pv = mix_advice(st, advice);
      const SampleDraw draw = CpsSampler(pv).draw(rng);
      const Vector rewards = table.row(k - 1);
      for (int j : draw.indices) gain += rewards[j];
      update_weights(st, advice, pv, draw, rewards);
      while (ci < ncp && cfg.checkpoints[ci] == k)
        rep.per_seed_gain[ci++][s] = gain;
    }
  }

  for (std::size_t ci = 0; ci < ncp; ++ci) {
    RegretCheckpoint cp;
    cp.k = cfg.checkpoints[ci];
    double mean = 0.0;
    for (double g : rep.per_seed_gain[ci]) mean += g;
    cp.mean_gain = mean / cfg.seeds;
    cp.best_expert = 0;
    cp.best_cum = rep.expert_cum[ci][0];
    for (int n = 1; n < cfg.n_experts; ++n)
      if (rep.expert_cum[ci][n] > cp.best_cum) {
        cp.best_cum = rep.expert_cum[ci][n];
        cp.best_expert = n;
      }
    cp.mean_regret = cp.best_cum - cp.mean_gain;
    cp.bound = theoretical_regret_bound(cp.k, cfg.p, cfg.n_experts, cfg.b, D,
                                        gamma, cp.best_cum);
    rep.checkpoints.push_back(cp);
  }
  return rep;
}

void write_regret_csv(const RegretReport& rep, std::ostream& os) {
  os << "p,b,n_experts,k,record,index,gain,best_cum,regret,bound\n";
  const auto& cfg = rep.cfg;
  for (std::size_t ci = 0; ci < rep.checkpoints.size(); ++ci) {
    const RegretCheckpoint& cp = rep.checkpoints[ci];
    const std::string prefix = std::to_string(cfg.p) + ',' +
                               std::to_string(cfg.b) + ',' +
                               std::to_string(cfg.n_experts) + ',' +
                               std::to_string(cp.k) + ',';
    for (int n = 0; n < cfg.n_experts; ++n)
      os << prefix << "expert," << n << ','
         << fmt_double(rep.expert_cum[ci][n]) << ",,,\n";
    for (int s = 0; s < cfg.seeds; ++s) {
      const double gain = rep.per_seed_gain[ci][s];
      os << prefix << "seed," << (s + 1) << ',' << fmt_double(gain) << ','
         << fmt_double(cp.best_cum) << ',' << fmt_double(cp.best_cum - gain)
         << ',' << fmt_double(cp.bound) << '\n';
    }
    os << prefix << "mean,-1," << fmt_double(cp.mean_gain) << ','
       << fmt_double(cp.best_cum) << ',' << fmt_double(cp.mean_regret) << ','
       << fmt_double(cp.bound) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Sampler spot check
// ---------------------------------------------------------------------------

SampleCheckReport sample_check(int p, int b, std::int64_t trials,
                               std::uint64_t seed) {
  require(p >= 2 && b >= 1 && b < p, ErrorCode::invalid_batch,
          "sample check needs 1 <= b < p");
  require(trials >= 1, ErrorCode::invalid_argument, "trials must be positive");

  RngStream target_rng(seed, "check-targets");
  std::vector<double> raw(p);
  for (int j = 0; j < p; ++j) raw[j] = target_rng.uniform(0.05, 1.0);
  ProbabilityVector pv;
  pv.pi = sanitize_external_advice(raw, p, b);
  pv.b = b;

  const CpsSampler sampler(pv);
  const Vector exact = inclusion_probabilities_exact(sampler.working(), b);

  RngStream draw_rng(seed, "check-draws");
  std::vector<std::int64_t> counts(p, 0);
  for (std::int64_t t = 0; t < trials; ++t) {
    const SampleDraw d = sampler.draw(draw_rng);
    for (int j : d.indices) counts[j] += 1;
  }

  SampleCheckReport rep;
  rep.p = p;
  rep.b = b;
  rep.trials = trials;
  for (int j = 0; j < p; ++j) {
    SampleCheckRow row;
    row.j = j;
    row.target = pv.pi[j];
    row.exact = exact[j];
    row.freq =
        static_cast<double>(counts[j]) / static_cast<double>(trials);
    const double var = row.target * (1.0 - row.target) /
                       static_cast<double>(trials);
    row.z = var > 0.0 ? (row.freq - row.target) / std::sqrt(var) : 0.0;
    rep.rows.push_back(row);
    rep.max_exact_err =
        std::max(rep.max_exact_err, std::abs(row.exact - row.target));
    rep.max_abs_z = std::max(rep.max_abs_z, std::abs(row.z));
  }
  return rep;
}

void write_sample_check_csv(const SampleCheckReport& rep, std::ostream& os) {
  os << "j,target,exact,exact_err,freq,z\n";
  for (const SampleCheckRow& r : rep.rows)
    os << r.j << ',' << fmt_double(r.target) << ',' << fmt_double(r.exact)
       << ',' << fmt_double(std::abs(r.exact - r.target)) << ','
       << fmt_double(r.freq) << ',' << fmt_double(r.z) << '\n';
}

}  // namespace samtr
