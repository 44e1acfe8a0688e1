// Command-line front end.  Everything goes through the C API in samtr.h; the
// C++ core is an implementation detail of the shared library.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "samtr.h"

namespace {

int fail(const char* verb) {
  std::cerr << "samtr: " << verb << ": " << samtr_last_error() << "\n";
  return 1;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is.good()) throw CLI::ValidationError("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Claims ownership of a C-API string and frees it on scope exit.
struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { samtr_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

int emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream os(out_path, std::ios::binary | std::ios::trunc);
  if (!os.good()) {
    std::cerr << "samtr: cannot write " << out_path << "\n";
    return 1;
  }
  os << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic average-model trust-region toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(samtr_version()));

  // ---- run ----------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run an experiment grid");
  std::string run_config, run_preset, run_out = "runs";
  int run_jobs = 0;
  auto* config_opt =
      run->add_option("--config", run_config, "experiment config JSON file");
  run->add_option("--preset", run_preset,
                  "built-in config: failure-repro, oscillator, regret")
      ->excludes(config_opt);
  run->add_option("--out", run_out, "output directory")->capture_default_str();
  run->add_option("--jobs", run_jobs, "grid cells to run concurrently");

  // ---- profile ------------------------------------------------------------
  auto* profile =
      app.add_subcommand("profile", "performance profiles from run logs");
  std::string profile_runs, profile_out;
  double profile_tau = 1e-3;
  profile->add_option("--runs", profile_runs, "logs directory of an experiment")
      ->required();
  profile->add_option("--tau", profile_tau, "solve tolerance in (0, 1]")
      ->capture_default_str();
  profile->add_option("--out", profile_out, "CSV path (default: stdout)");

  // ---- regret -------------------------------------------------------------
  auto* regret = app.add_subcommand("regret", "bandit regret lab");
  int regret_p = 5, regret_b = 1, regret_n = 2, regret_seeds = 50;
  std::int64_t regret_k = 5000;
  std::string regret_table = "phased", regret_out;
  regret->add_option("--p", regret_p, "components")->capture_default_str();
  regret->add_option("--b", regret_b, "batch size")->capture_default_str();
  regret->add_option("--N", regret_n, "experts")->capture_default_str();
  regret->add_option("--K", regret_k, "horizon (rounds)")
      ->capture_default_str();
  regret->add_option("--seeds", regret_seeds, "seeds to average over")
      ->capture_default_str();
  regret->add_option("--reward-table", regret_table,
                     "\"phased\" or a CSV file (one row per round)")
      ->capture_default_str();
  regret->add_option("--out", regret_out, "CSV path (default: stdout)");

  // ---- sample-check -------------------------------------------------------
  auto* check =
      app.add_subcommand("sample-check", "conditional Poisson sampler check");
  int check_p = 8, check_b = 3;
  std::int64_t check_trials = 100000;
  std::uint64_t check_seed = 1;
  std::string check_out;
  check->add_option("--p", check_p, "components")->capture_default_str();
  check->add_option("--b", check_b, "batch size")->capture_default_str();
  check->add_option("--trials", check_trials, "draws")->capture_default_str();
  check->add_option("--seed", check_seed, "seed")->capture_default_str();
  check->add_option("--out", check_out, "CSV path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    std::string config;
    if (!run_config.empty()) {
      config = slurp(run_config);
    } else if (!run_preset.empty()) {
      OwnedString preset;
      if (samtr_preset_config(run_preset.c_str(), &preset.s) != SAMTR_OK)
        return fail("preset");
      config = preset.str();
    } else {
      std::cerr << "samtr: run needs --config or --preset\n";
      return 1;
    }
    if (run_jobs > 0) {
      auto j = nlohmann::ordered_json::parse(config, nullptr, false);
      if (j.is_discarded()) {
        std::cerr << "samtr: config is not valid JSON\n";
        return 1;
      }
      j["jobs"] = run_jobs;
      config = j.dump();
    }
    OwnedString summary;
    if (samtr_experiment_run(config.c_str(), run_out.c_str(), &summary.s) !=
        SAMTR_OK)
      return fail("run");
    std::ifstream digest(run_out + "/summary.txt");
    if (digest.good())
      std::cout << digest.rdbuf();
    else
      std::cout << summary.str() << "\n";
    std::cout << "artifacts written to " << run_out << "\n";
    return 0;
  }

  if (profile->parsed()) {
    OwnedString csv;
    if (samtr_profile_runs(profile_runs.c_str(), profile_tau, &csv.s) !=
        SAMTR_OK)
      return fail("profile");
    return emit(csv.str(), profile_out);
  }

  if (regret->parsed()) {
    nlohmann::ordered_json cfg;
    cfg["p"] = regret_p;
    cfg["b"] = regret_b;
    cfg["n_experts"] = regret_n;
    cfg["horizon"] = regret_k;
    cfg["seeds"] = regret_seeds;
    cfg["table"] = regret_table;
    OwnedString csv;
    if (samtr_regret_lab(cfg.dump().c_str(), &csv.s) != SAMTR_OK)
      return fail("regret");
    return emit(csv.str(), regret_out);
  }

  if (check->parsed()) {
    OwnedString csv;
    if (samtr_sample_check(check_p, check_b, check_trials, check_seed,
                           &csv.s) != SAMTR_OK)
      return fail("sample-check");
    return emit(csv.str(), check_out);
  }

  return 0;
}
