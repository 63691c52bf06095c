// Experiment harness: train agents, evaluate checkpoints, compare reports.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evsched/experiments.hpp"

namespace {

void print_error(const std::string& command, const std::exception& e) {
  nlohmann::json err;
  err["error"] = e.what();
  err["command"] = command;
  std::cerr << err.dump() << std::endl;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::string cur;
  for (char ch : csv + ",") {
    if (ch == ',') {
      if (!cur.empty()) seeds.push_back(std::stoull(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EV charging-station pricing and scheduling experiments"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train an agent per the config file");
  std::string train_config;
  std::string train_seeds;
  int train_ports = 0;
  double train_price_factor = 0.0;
  std::string train_out;
  train->add_option("--config", train_config, "experiment config JSON")->required();
  train->add_option("--seed", train_seeds, "comma-separated training seeds (overrides config)");
  train->add_option("--ports", train_ports, "override the number of charging ports");
  train->add_option("--price-factor", train_price_factor,
                    "override the electricity price control factor");
  train->add_option("--out", train_out, "override the output directory");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint with the deterministic policy");
  std::string eval_ckpt, eval_scenario, eval_out;
  int eval_episodes = 20;
  std::uint64_t eval_seed = 9999;
  double eval_price_factor = 1.0;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint JSON")->required();
  eval->add_option("--scenario", eval_scenario, "scenario bundle JSON")->required();
  eval->add_option("--episodes", eval_episodes, "evaluation episodes");
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_option("--price-factor", eval_price_factor,
                   "price factor label recorded in the report");
  eval->add_option("--out", eval_out, "output directory for report + trace");

  // compare
  auto* compare = app.add_subcommand("compare", "Build a comparison table from eval reports");
  std::vector<std::string> report_paths;
  std::string compare_out;
  compare->add_option("reports", report_paths, "report.json files")->required();
  compare->add_option("--out", compare_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      evsched::cli::ExperimentConfig cfg =
          evsched::cli::load_experiment_config(train_config);
      if (!train_seeds.empty()) cfg.seeds = parse_seed_list(train_seeds);
      if (train_ports > 0) cfg.scenario.config.n_ports = train_ports;
      if (train_price_factor > 0.0) cfg.scenario.price_factor = train_price_factor;
      if (!train_out.empty()) cfg.out_dir = train_out;
      cfg.validate();
      auto dir = evsched::cli::cmd_train(cfg);
      std::cout << dir.string() << std::endl;
    } else if (*eval) {
      evsched::cli::EvalReport report =
          evsched::cli::cmd_eval(eval_ckpt, eval_scenario, eval_episodes, eval_seed,
                                 eval_out, eval_price_factor);
      std::cout << evsched::cli::report_to_json(report).dump(2) << std::endl;
    } else if (*compare) {
      nlohmann::json table = evsched::cli::cmd_compare(report_paths, compare_out);
      std::cout << table.dump(2) << std::endl;
    }
  } catch (const std::exception& e) {
    print_error(app.get_subcommands().front()->get_name(), e);
    return 1;
  }
  return 0;
}
