#include "samtr.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "samtr/bench.hpp"

using namespace samtr;

namespace {

thread_local std::string g_last_error;

samtr_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return SAMTR_ERR_INVALID_ARGUMENT;
    case ErrorCode::unknown_spec: return SAMTR_ERR_UNKNOWN_SPEC;
    case ErrorCode::index_out_of_range: return SAMTR_ERR_INDEX_OUT_OF_RANGE;
    case ErrorCode::budget_exhausted: return SAMTR_ERR_BUDGET_EXHAUSTED;
    case ErrorCode::calibration_failure: return SAMTR_ERR_CALIBRATION_FAILURE;
    case ErrorCode::degenerate_geometry: return SAMTR_ERR_DEGENERATE_GEOMETRY;
    case ErrorCode::singular_system: return SAMTR_ERR_SINGULAR_SYSTEM;
    case ErrorCode::invalid_batch: return SAMTR_ERR_INVALID_BATCH;
    case ErrorCode::empty_advice: return SAMTR_ERR_EMPTY_ADVICE;
    case ErrorCode::missing_reward: return SAMTR_ERR_MISSING_REWARD;
    case ErrorCode::surrogate_unavailable:
      return SAMTR_ERR_SURROGATE_UNAVAILABLE;
    case ErrorCode::parse_error: return SAMTR_ERR_PARSE;
    case ErrorCode::io_error: return SAMTR_ERR_IO;
    case ErrorCode::internal: return SAMTR_ERR_INTERNAL;
  }
  return SAMTR_ERR_INTERNAL;
}

// Runs `fn`, translating exceptions into status codes + the thread-local
// message.  Keeps every C entry point down to one line of plumbing.
template <typename Fn>
samtr_status guarded(Fn&& fn) {
  try {
    fn();
    return SAMTR_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SAMTR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SAMTR_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct samtr_problem {
  ComponentProblem problem;
};

struct samtr_result {
  RunResult run;
  int dim = 0;
};

extern "C" {

const char* samtr_version(void) { return "1.0.0"; }

const char* samtr_last_error(void) { return g_last_error.c_str(); }

void samtr_string_free(char* s) { std::free(s); }

samtr_status samtr_problem_builtin(const char* name, uint64_t seed,
                                   const char* options_json,
                                   samtr_problem** out) {
  return guarded([&] {
    require(name && out, ErrorCode::invalid_argument,
            "name and out must be non-null");
    BuiltinOptions opts;
    if (options_json && *options_json)
      opts = parse_builtin_options_json(options_json);
    auto* handle = new samtr_problem{
        builtin_problem(builtin_kind_from_name(name), seed, opts)};
    *out = handle;
  });
}

void samtr_problem_free(samtr_problem* prob) { delete prob; }

int samtr_problem_dim(const samtr_problem* prob) {
  return prob ? prob->problem.dim : -1;
}

int samtr_problem_num_components(const samtr_problem* prob) {
  return prob ? prob->problem.p : -1;
}

samtr_status samtr_problem_start_point(const samtr_problem* prob,
                                       double* out) {
  return guarded([&] {
    require(prob && out, ErrorCode::invalid_argument,
            "prob and out must be non-null");
    Eigen::Map<Vector>(out, prob->problem.dim) = prob->problem.x0;
  });
}

samtr_status samtr_problem_component(const samtr_problem* prob, int j,
                                     const double* x, double* out) {
  return guarded([&] {
    require(prob && x && out, ErrorCode::invalid_argument,
            "prob, x and out must be non-null");
    require(j >= 0 && j < prob->problem.p, ErrorCode::index_out_of_range,
            "component index out of range");
    const Vector xv = Eigen::Map<const Vector>(x, prob->problem.dim);
    *out = prob->problem.component(j, xv);
  });
}

samtr_status samtr_problem_objective(const samtr_problem* prob,
                                     const double* x, double* out) {
  return guarded([&] {
    require(prob && x && out, ErrorCode::invalid_argument,
            "prob, x and out must be non-null");
    const Vector xv = Eigen::Map<const Vector>(x, prob->problem.dim);
    *out = objective_value(prob->problem, xv);
  });
}

samtr_status samtr_solve(const samtr_problem* prob, const char* config_json,
                         samtr_result** out) {
  return guarded([&] {
    require(prob && config_json && out, ErrorCode::invalid_argument,
            "prob, config_json and out must be non-null");

    nlohmann::json cj;
    try {
      cj = nlohmann::json::parse(config_json);
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::parse_error,
                  std::string("config is not valid JSON: ") + ex.what());
    }
    const SolverVariant variant = parse_variant_json(config_json);

    SamConfig config;
    config.b = variant.b;
    config.rho_mode = variant.rho_mode;
    config.deterministic = variant.deterministic;
    config.taylor_mode = variant.taylor_mode;
    try {
      if (cj.contains("budget")) config.budget = cj["budget"].get<int64_t>();
      if (cj.contains("seed")) config.seed = cj["seed"].get<uint64_t>();
      if (cj.contains("delta0")) config.delta0 = cj["delta0"].get<double>();
      if (cj.contains("delta_max"))
        config.delta_max = cj["delta_max"].get<double>();
      if (cj.contains("gamma_inc"))
        config.gamma_inc = cj["gamma_inc"].get<double>();
      if (cj.contains("eta1")) config.eta1 = cj["eta1"].get<double>();
      if (cj.contains("eta2")) config.eta2 = cj["eta2"].get<double>();
      if (cj.contains("scale_ema"))
        config.scale_ema = cj["scale_ema"].get<double>();
      if (cj.contains("gamma_override"))
        config.gamma_override = cj["gamma_override"].get<double>();
      if (cj.contains("max_rounds"))
        config.max_rounds = cj["max_rounds"].get<int64_t>();
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::parse_error,
                  std::string("bad solver config: ") + ex.what());
    }

    ComponentProblem problem = prob->problem;
    auto roster = build_roster(variant, problem, config.seed,
                               config.scale_ema, /*warn=*/{});
    const ComponentProblem shadow_problem = prob->problem;
    auto shadow = [shadow_problem](const Vector& x) {
      return objective_value(shadow_problem, x);
    };

    auto* handle = new samtr_result{
        run_sam(std::move(problem), config, std::move(roster), shadow),
        prob->problem.dim};
    *out = handle;
  });
}

void samtr_result_free(samtr_result* result) { delete result; }

int samtr_result_dim(const samtr_result* result) {
  return result ? result->dim : -1;
}

int64_t samtr_result_num_rounds(const samtr_result* result) {
  return result ? static_cast<int64_t>(result->run.records.size()) : -1;
}

int64_t samtr_result_total_evals(const samtr_result* result) {
  return result ? result->run.total_evals : -1;
}

double samtr_result_final_value(const samtr_result* result) {
  return result ? result->run.final_f
                : std::numeric_limits<double>::quiet_NaN();
}

samtr_status samtr_result_final_point(const samtr_result* result,
                                      double* out) {
  return guarded([&] {
    require(result && out, ErrorCode::invalid_argument,
            "result and out must be non-null");
    Eigen::Map<Vector>(out, result->run.final_x.size()) = result->run.final_x;
  });
}

samtr_status samtr_result_record_json(const samtr_result* result, int64_t k,
                                      char** out) {
  return guarded([&] {
    require(result && out, ErrorCode::invalid_argument,
            "result and out must be non-null");
    require(k >= 0 && k < static_cast<int64_t>(result->run.records.size()),
            ErrorCode::index_out_of_range, "record index out of range");
    *out = dup_string(iteration_record_json(result->run.records[k]));
  });
}

samtr_status samtr_result_summary_json(const samtr_result* result,
                                       char** out) {
  return guarded([&] {
    require(result && out, ErrorCode::invalid_argument,
            "result and out must be non-null");
    nlohmann::ordered_json j;
    j["final_x"] = std::vector<double>(
        result->run.final_x.data(),
        result->run.final_x.data() + result->run.final_x.size());
    j["final_f"] = result->run.final_f;
    j["final_f_estimated"] = result->run.final_f_estimated;
    j["total_evals"] = result->run.total_evals;
    j["rounds"] = result->run.records.size();
    *out = dup_string(j.dump());
  });
}

samtr_status samtr_experiment_run(const char* config_json, const char* out_dir,
                                  char** summary_json) {
  return guarded([&] {
    require(config_json && out_dir, ErrorCode::invalid_argument,
            "config_json and out_dir must be non-null");

    nlohmann::json cj;
    try {
      cj = nlohmann::json::parse(config_json);
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::parse_error,
                  std::string("config is not valid JSON: ") + ex.what());
    }

    if (cj.contains("regret")) {
      // Delegation cell: run the bandit regret lab instead of a solver grid.
      const auto& rj = cj["regret"];
      RegretLabConfig cfg;
      if (rj.contains("p")) cfg.p = rj["p"].get<int>();
      if (rj.contains("b")) cfg.b = rj["b"].get<int>();
      if (rj.contains("n_experts")) cfg.n_experts = rj["n_experts"].get<int>();
      if (rj.contains("horizon")) cfg.horizon = rj["horizon"].get<int64_t>();
      if (rj.contains("seeds")) cfg.seeds = rj["seeds"].get<int>();
      if (rj.contains("table")) cfg.table = rj["table"].get<std::string>();
      if (rj.contains("checkpoints"))
        cfg.checkpoints = rj["checkpoints"].get<std::vector<int64_t>>();
      const RegretReport rep = regret_lab(cfg);
      std::filesystem::create_directories(out_dir);
      std::ofstream os(std::filesystem::path(out_dir) / "regret.csv",
                       std::ios::binary | std::ios::trunc);
      write_regret_csv(rep, os);

      nlohmann::ordered_json j;
      j["gamma"] = rep.gamma;
      j["reward_bound"] = rep.reward_bound;
      nlohmann::ordered_json cps = nlohmann::ordered_json::array();
      for (const RegretCheckpoint& cp : rep.checkpoints)
        cps.push_back({{"k", cp.k},
                       {"mean_gain", cp.mean_gain},
                       {"best_expert", cp.best_expert},
                       {"best_cum", cp.best_cum},
                       {"mean_regret", cp.mean_regret},
                       {"bound", cp.bound}});
      j["checkpoints"] = std::move(cps);
      if (summary_json) *summary_json = dup_string(j.dump());
      return;
    }

    const ExperimentConfig cfg = parse_experiment_config(config_json);
    run_experiment(cfg, out_dir, nullptr);
    if (summary_json) {
      std::ifstream is(std::filesystem::path(out_dir) / "summary.json",
                       std::ios::binary);
      std::ostringstream ss;
      ss << is.rdbuf();
      *summary_json = dup_string(ss.str());
    }
  });
}

samtr_status samtr_preset_config(const char* name, char** out_json) {
  return guarded([&] {
    require(name && out_json, ErrorCode::invalid_argument,
            "name and out_json must be non-null");
    *out_json = dup_string(preset_config(name));
  });
}

samtr_status samtr_profile_runs(const char* runs_dir, double tau,
                                char** out_csv) {
  return guarded([&] {
    require(runs_dir && out_csv, ErrorCode::invalid_argument,
            "runs_dir and out_csv must be non-null");
    const auto traces = load_run_logs(runs_dir);
    const auto curves = performance_profile(traces, tau);
    std::ostringstream ss;
    write_profile_csv(curves, ss);
    *out_csv = dup_string(ss.str());
  });
}

samtr_status samtr_regret_lab(const char* config_json, char** out_csv) {
  return guarded([&] {
    require(out_csv, ErrorCode::invalid_argument, "out_csv must be non-null");
    RegretLabConfig cfg;
    if (config_json && *config_json) {
      nlohmann::json rj;
      try {
        rj = nlohmann::json::parse(config_json);
      } catch (const std::exception& ex) {
        throw Error(ErrorCode::parse_error,
                    std::string("config is not valid JSON: ") + ex.what());
      }
      if (rj.contains("p")) cfg.p = rj["p"].get<int>();
      if (rj.contains("b")) cfg.b = rj["b"].get<int>();
      if (rj.contains("n_experts")) cfg.n_experts = rj["n_experts"].get<int>();
      if (rj.contains("horizon")) cfg.horizon = rj["horizon"].get<int64_t>();
      if (rj.contains("seeds")) cfg.seeds = rj["seeds"].get<int>();
      if (rj.contains("table")) cfg.table = rj["table"].get<std::string>();
      if (rj.contains("checkpoints"))
        cfg.checkpoints = rj["checkpoints"].get<std::vector<int64_t>>();
    }
    const RegretReport rep = regret_lab(cfg);
    std::ostringstream ss;
    write_regret_csv(rep, ss);
    *out_csv = dup_string(ss.str());
  });
}

samtr_status samtr_sample_check(int p, int b, int64_t trials, uint64_t seed,
                                char** out_csv) {
  return guarded([&] {
    require(out_csv, ErrorCode::invalid_argument, "out_csv must be non-null");
    const SampleCheckReport rep = sample_check(p, b, trials, seed);
    std::ostringstream ss;
    write_sample_check_csv(rep, ss);
    *out_csv = dup_string(ss.str());
  });
}

}  // extern "C"
