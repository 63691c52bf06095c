#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "evsched/baselines.hpp"
#include "evsched/data.hpp"
#include "evsched/env.hpp"
#include "evsched/sac.hpp"

namespace evsched::cli {

/// proposed | fleet_profit | fleet_jpr
std::shared_ptr<const sac::ActionAdapter> make_adapter(const std::string& name);

/// How an experiment obtains its scenario: load a serialized bundle, or
/// synthesize one from a (partially specified) config. The price factor is
/// applied after either path.
struct ScenarioSpec {
  std::string bundle_path;  // empty = synthesize
  ScenarioConfig config;    // defaults: table-1 types, one day of 5-min slots
  data::SynthParams synth;
  std::uint64_t scenario_seed = 2024;
  double capacity_per_port = 5.6;  // U = 5.6 * N unless a bundle is loaded
  double price_factor = 1.0;

  data::ScenarioBundle resolve() const;
};

struct ExperimentConfig {
  ScenarioSpec scenario;
  std::string agent = "proposed";
  sac::SacConfig sac;
  int episodes = 100;
  int eval_episodes = 20;
  std::uint64_t eval_seed = 9999;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out_dir = "runs/experiment";
  int jobs = 1;  // training seeds run as independent instances

  void validate() const;  // throws with the offending field path
};

ScenarioSpec scenario_spec_from_json(const nlohmann::json& j);
nlohmann::json scenario_spec_to_json(const ScenarioSpec& s);
ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::string& path);

/// Per-agent evaluation summary; one report per trained seed.
struct EvalReport {
  std::string agent;
  int n_ports = 0;
  double price_factor = 1.0;
  std::uint64_t train_seed = 0;
  std::string scenario_fingerprint;
  int episodes = 0;
  std::uint64_t eval_seed = 0;
  std::vector<double> jpr_per_episode;
  double jpr_mean = 0.0;
  double payment_mean = 0.0;
  double energy_cost_mean = 0.0;
  double up_penalty_mean = 0.0;
  double down_penalty_mean = 0.0;
};

nlohmann::json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

/// Deterministic-policy rollouts; the single evaluator every agent is
/// scored by. `first_trace` receives episode 0's slot trace when non-null.
EvalReport evaluate_checkpoint(const nlohmann::json& checkpoint,
                               const data::ScenarioBundle& bundle, int episodes,
                               std::uint64_t eval_seed,
                               std::vector<SlotTrace>* first_trace = nullptr);

/// Trains every seed in the config; returns the run directory. Layout:
/// <out_dir>/seed_<s>/{config.json, scenario.json, train_log.csv, checkpoint.json}.
std::filesystem::path cmd_train(const ExperimentConfig& config);

/// Evaluates a checkpoint against a scenario bundle; writes report.json,
/// report.csv and trace.csv under out_dir when non-empty. `price_factor`
/// is a label recorded in the report for later grouping.
EvalReport cmd_eval(const std::string& checkpoint_path, const std::string& scenario_path,
                    int episodes, std::uint64_t eval_seed, const std::string& out_dir,
                    double price_factor = 1.0);

/// Aggregates eval reports into a comparison table (grouped by ports and
/// price factor) with relative gains versus each baseline agent.
nlohmann::json cmd_compare(const std::vector<std::string>& report_paths,
                           const std::string& out_dir);

void write_train_log_csv(const std::string& path,
                         const std::vector<sac::EpisodeLog>& log);
void write_trace_csv(const std::string& path, const std::vector<SlotTrace>& trace,
                     int n_ports);

std::string bundle_fingerprint(const data::ScenarioBundle& bundle);

}  // namespace evsched::cli
