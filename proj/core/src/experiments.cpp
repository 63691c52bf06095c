#include "evsched/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "evsched/csv.hpp"

namespace evsched::cli {

namespace fs = std::filesystem;

std::shared_ptr<const sac::ActionAdapter> make_adapter(const std::string& name) {
  if (name == "proposed") return std::make_shared<sac::ProposedAdapter>();
  if (name == "fleet_profit")
    return std::make_shared<baselines::FleetAdapter>(baselines::FleetMode::Profit);
  if (name == "fleet_jpr")
    return std::make_shared<baselines::FleetAdapter>(baselines::FleetMode::Jpr);
  throw std::invalid_argument("unknown agent '" + name +
                              "' (expected proposed|fleet_profit|fleet_jpr)");
}

static ScenarioConfig default_scenario_config() {
  ScenarioConfig c;
  c.n_ports = 5;
  c.horizon_slots = 288;
  c.x_max = 7.0;
  c.capacity = 5.6 * 5;
  c.history_len = 5;
  c.user_types = table1_user_types();
  c.lambda_up = 1.0610;
  c.lambda_down = -0.2979;
  c.slot_minutes = 5;
  c.r_max = 2.0;
  return c;
}

data::ScenarioBundle ScenarioSpec::resolve() const {
  data::ScenarioBundle bundle;
  if (!bundle_path.empty()) {
    bundle = data::load_bundle(bundle_path);
  } else {
    ScenarioConfig c = config;
    c.capacity = capacity_per_port * c.n_ports;
    bundle = data::synthesize(c, scenario_seed, synth);
  }
  if (price_factor != 1.0) {
    bundle.prices = data::scale_prices(bundle.prices, price_factor);
    bundle.config.price_norm = std::max(1e-9, bundle.prices.max_price());
  }
  bundle.config.validate();
  return bundle;
}

void ExperimentConfig::validate() const {
  try {
    make_adapter(agent);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("experiment.agent: ") + e.what());
  }
  if (episodes < 0) throw std::invalid_argument("experiment.episodes: must be >= 0");
  if (eval_episodes < 1)
    throw std::invalid_argument("experiment.eval_episodes: must be >= 1");
  if (seeds.empty())
    throw std::invalid_argument("experiment.seeds: need at least one seed");
  if (out_dir.empty()) throw std::invalid_argument("experiment.out_dir: empty");
  if (jobs < 0) throw std::invalid_argument("experiment.jobs: must be >= 0");
  try {
    sac.validate();
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("experiment.sac: ") + e.what());
  }
}

ScenarioSpec scenario_spec_from_json(const nlohmann::json& j) {
  ScenarioSpec s;
  s.config = default_scenario_config();
  s.bundle_path = j.value("bundle_path", std::string{});
  if (j.contains("config")) {
    const auto& jc = j.at("config");
    s.config.n_ports = jc.value("n_ports", s.config.n_ports);
    s.config.horizon_slots = jc.value("horizon_slots", s.config.horizon_slots);
    s.config.x_max = jc.value("x_max", s.config.x_max);
    s.config.history_len = jc.value("history_len", s.config.history_len);
    if (jc.contains("user_types"))
      s.config.user_types = jc.at("user_types").get<std::vector<UserType>>();
    if (jc.contains("type_mix"))
      s.config.type_mix = jc.at("type_mix").get<std::vector<double>>();
    s.config.lambda_up = jc.value("lambda_up", s.config.lambda_up);
    s.config.lambda_down = jc.value("lambda_down", s.config.lambda_down);
    s.config.slot_minutes = jc.value("slot_minutes", s.config.slot_minutes);
    s.config.r_max = jc.value("r_max", s.config.r_max);
  }
  if (j.contains("synth")) s.synth = j.at("synth").get<data::SynthParams>();
  s.scenario_seed = j.value("scenario_seed", s.scenario_seed);
  s.capacity_per_port = j.value("capacity_per_port", s.capacity_per_port);
  s.price_factor = j.value("price_factor", s.price_factor);
  return s;
}

nlohmann::json scenario_spec_to_json(const ScenarioSpec& s) {
  nlohmann::json j;
  if (!s.bundle_path.empty()) j["bundle_path"] = s.bundle_path;
  j["config"] = s.config;
  j["synth"] = s.synth;
  j["scenario_seed"] = s.scenario_seed;
  j["capacity_per_port"] = s.capacity_per_port;
  j["price_factor"] = s.price_factor;
  return j;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.scenario.config = default_scenario_config();
  if (j.contains("scenario")) c.scenario = scenario_spec_from_json(j.at("scenario"));
  c.agent = j.value("agent", c.agent);
  if (j.contains("sac")) c.sac = j.at("sac").get<sac::SacConfig>();
  c.episodes = j.value("episodes", c.episodes);
  c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
  c.eval_seed = j.value("eval_seed", c.eval_seed);
  c.seeds = j.value("seeds", c.seeds);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.jobs = j.value("jobs", c.jobs);
  return c;
}

nlohmann::json experiment_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["scenario"] = scenario_spec_to_json(c.scenario);
  j["agent"] = c.agent;
  j["sac"] = c.sac;
  j["episodes"] = c.episodes;
  j["eval_episodes"] = c.eval_episodes;
  j["eval_seed"] = c.eval_seed;
  j["seeds"] = c.seeds;
  j["out_dir"] = c.out_dir;
  j["jobs"] = c.jobs;
  return j;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  ExperimentConfig c = experiment_from_json(j);
  c.validate();
  return c;
}

std::string bundle_fingerprint(const data::ScenarioBundle& bundle) {
  const std::string dump = data::bundle_to_json(bundle).dump();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json report_to_json(const EvalReport& r) {
  return nlohmann::json{{"format_version", 1},
                        {"agent", r.agent},
                        {"n_ports", r.n_ports},
                        {"price_factor", r.price_factor},
                        {"train_seed", r.train_seed},
                        {"scenario_fingerprint", r.scenario_fingerprint},
                        {"episodes", r.episodes},
                        {"eval_seed", r.eval_seed},
                        {"jpr_per_episode", r.jpr_per_episode},
                        {"jpr_mean", r.jpr_mean},
                        {"payment_mean", r.payment_mean},
                        {"energy_cost_mean", r.energy_cost_mean},
                        {"up_penalty_mean", r.up_penalty_mean},
                        {"down_penalty_mean", r.down_penalty_mean}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.agent = j.at("agent").get<std::string>();
  r.n_ports = j.at("n_ports").get<int>();
  r.price_factor = j.at("price_factor").get<double>();
  r.train_seed = j.value("train_seed", std::uint64_t{0});
  r.scenario_fingerprint = j.value("scenario_fingerprint", std::string{});
  r.episodes = j.at("episodes").get<int>();
  r.eval_seed = j.value("eval_seed", std::uint64_t{0});
  r.jpr_per_episode = j.at("jpr_per_episode").get<std::vector<double>>();
  r.jpr_mean = j.at("jpr_mean").get<double>();
  r.payment_mean = j.value("payment_mean", 0.0);
  r.energy_cost_mean = j.value("energy_cost_mean", 0.0);
  r.up_penalty_mean = j.value("up_penalty_mean", 0.0);
  r.down_penalty_mean = j.value("down_penalty_mean", 0.0);
  return r;
}

EvalReport evaluate_checkpoint(const nlohmann::json& checkpoint,
                               const data::ScenarioBundle& bundle, int episodes,
                               std::uint64_t eval_seed,
                               std::vector<SlotTrace>* first_trace) {
  const std::string agent_name = checkpoint.at("agent").get<std::string>();
  ScenarioConfig ckpt_scen = checkpoint.at("scenario").get<ScenarioConfig>();
  if (ckpt_scen.n_ports != bundle.config.n_ports ||
      ckpt_scen.history_len != bundle.config.history_len ||
      ckpt_scen.n_types() != bundle.config.n_types()) {
    std::ostringstream oss;
    oss << "checkpoint/scenario dimension mismatch: checkpoint (N=" << ckpt_scen.n_ports
        << ", h=" << ckpt_scen.history_len << ", types=" << ckpt_scen.n_types()
        << ") vs scenario (N=" << bundle.config.n_ports
        << ", h=" << bundle.config.history_len
        << ", types=" << bundle.config.n_types() << ")";
    throw std::invalid_argument(oss.str());
  }

  auto adapter = make_adapter(agent_name);
  sac::SacAgent agent = sac::SacAgent::from_checkpoint(checkpoint, adapter);

  StationEnv env(bundle.config);
  EvalReport report;
  report.agent = agent_name;
  report.n_ports = bundle.config.n_ports;
  report.scenario_fingerprint = bundle_fingerprint(bundle);
  report.episodes = episodes;
  report.eval_seed = eval_seed;

  double payment = 0, cost = 0, up = 0, down = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    std::vector<double> obs_v =
        env.reset(bundle, sac::SacAgent::episode_seed(eval_seed, ep));
    sac::Vector obs = Eigen::Map<const sac::Vector>(obs_v.data(), obs_v.size());
    bool done = false;
    while (!done) {
      sac::Vector raw = agent.deterministic_raw(obs);
      Action act = agent.adapter().to_env_action(raw, env);
      StepResult res = env.step(act);
      obs = Eigen::Map<const sac::Vector>(res.observation.data(),
                                          res.observation.size());
      done = res.done;
    }
    double jpr = 0;
    for (const auto& row : env.trace()) {
      jpr += row.reward.total;
      payment += row.reward.payment;
      cost += row.reward.energy_cost;
      up += row.reward.up_penalty;
      down += row.reward.down_penalty;
    }
    report.jpr_per_episode.push_back(jpr);
    if (ep == 0 && first_trace) *first_trace = env.trace();
  }

  const double n = std::max(1, episodes);
  double jpr_sum = 0;
  for (double v : report.jpr_per_episode) jpr_sum += v;
  report.jpr_mean = jpr_sum / n;
  report.payment_mean = payment / n;
  report.energy_cost_mean = cost / n;
  report.up_penalty_mean = up / n;
  report.down_penalty_mean = down / n;
  return report;
}

void write_train_log_csv(const std::string& path,
                         const std::vector<sac::EpisodeLog>& log) {
  csv::Writer w(path);
  w.header({"episode", "jpr", "payment", "energy_cost", "up_penalty", "down_penalty",
            "actor_loss", "critic_loss", "alpha"});
  for (const auto& e : log) {
    w.row({std::to_string(e.episode), csv::format_double(e.jpr),
           csv::format_double(e.payment), csv::format_double(e.energy_cost),
           csv::format_double(e.up_penalty), csv::format_double(e.down_penalty),
           csv::format_double(e.actor_loss), csv::format_double(e.critic_loss),
           csv::format_double(e.alpha)});
  }
}

void write_trace_csv(const std::string& path, const std::vector<SlotTrace>& trace,
                     int n_ports) {
  csv::Writer w(path);
  std::vector<std::string> cols = {"t",           "c",          "r",
                                   "arrivals",    "admitted",   "admitted_kwh",
                                   "payment",     "energy_cost", "up_penalty",
                                   "down_penalty", "reward"};
  for (int i = 0; i < n_ports; ++i) cols.push_back("x_" + std::to_string(i));
  w.header(cols);
  for (const auto& row : trace) {
    std::vector<std::string> cells = {
        std::to_string(row.t),
        csv::format_double(row.elec_price),
        csv::format_double(row.price),
        std::to_string(row.arrivals),
        std::to_string(row.admitted),
        csv::format_double(row.admitted_kwh),
        csv::format_double(row.reward.payment),
        csv::format_double(row.reward.energy_cost),
        csv::format_double(row.reward.up_penalty),
        csv::format_double(row.reward.down_penalty),
        csv::format_double(row.reward.total)};
    for (int i = 0; i < n_ports; ++i) cells.push_back(csv::format_double(row.delivered[i]));
    w.row(cells);
  }
}

static void run_one_seed(const ExperimentConfig& cfg, const data::ScenarioBundle& bundle,
                         std::uint64_t seed) {
  fs::path dir = fs::path(cfg.out_dir) / ("seed_" + std::to_string(seed));
  fs::create_directories(dir);

  // Echo a config that reproduces exactly this sub-run.
  ExperimentConfig echo = cfg;
  echo.seeds = {seed};
  std::ofstream cfg_out(dir / "config.json", std::ios::binary);
  cfg_out << experiment_to_json(echo).dump(2) << '\n';
  cfg_out.close();
  data::save_bundle((dir / "scenario.json").string(), bundle);

  auto adapter = make_adapter(cfg.agent);
  sac::SacAgent agent(bundle.config, cfg.sac, adapter, seed);
  StationEnv env(bundle.config);

  auto hook = [&](int episode, const sac::SacAgent& a) {
    if (cfg.sac.checkpoint_every > 0 && (episode + 1) % cfg.sac.checkpoint_every == 0) {
      std::ofstream out(dir / ("checkpoint_ep" + std::to_string(episode + 1) + ".json"),
                        std::ios::binary);
      out << a.checkpoint().dump() << '\n';
    }
  };

  sac::TrainResult result = agent.train(env, bundle, cfg.episodes, hook);
  write_train_log_csv((dir / "train_log.csv").string(), result.episodes);
  std::ofstream ckpt(dir / "checkpoint.json", std::ios::binary);
  ckpt << agent.checkpoint().dump() << '\n';
}

std::filesystem::path cmd_train(const ExperimentConfig& config) {
  config.validate();
  data::ScenarioBundle bundle = config.scenario.resolve();
  fs::create_directories(config.out_dir);

  unsigned jobs = config.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                   : static_cast<unsigned>(config.jobs);
  jobs = std::min<unsigned>(jobs, config.seeds.size());

  if (jobs <= 1) {
    for (std::uint64_t seed : config.seeds) run_one_seed(config, bundle, seed);
  } else {
    // Seeds are independent instances; run them on a small thread pool.
    std::vector<std::thread> workers;
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    std::atomic<size_t> next{0};
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          size_t i = next.fetch_add(1);
          if (i >= config.seeds.size()) return;
          try {
            run_one_seed(config, bundle, config.seeds[i]);
          } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  return fs::path(config.out_dir);
}

EvalReport cmd_eval(const std::string& checkpoint_path, const std::string& scenario_path,
                    int episodes, std::uint64_t eval_seed, const std::string& out_dir,
                    double price_factor) {
  std::ifstream in(checkpoint_path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + checkpoint_path);
  nlohmann::json ckpt;
  in >> ckpt;
  data::ScenarioBundle bundle = data::load_bundle(scenario_path);

  std::vector<SlotTrace> trace;
  EvalReport report = evaluate_checkpoint(ckpt, bundle, episodes, eval_seed, &trace);
  report.price_factor = price_factor;

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "report.json", std::ios::binary);
    out << report_to_json(report).dump(2) << '\n';
    csv::Writer w((fs::path(out_dir) / "report.csv").string());
    w.header({"episode", "jpr"});
    for (size_t i = 0; i < report.jpr_per_episode.size(); ++i)
      w.row({std::to_string(i), csv::format_double(report.jpr_per_episode[i])});
    write_trace_csv((fs::path(out_dir) / "trace.csv").string(), trace,
                    bundle.config.n_ports);
  }
  return report;
}

namespace {

struct CellStats {
  std::vector<double> seed_means;
  double payment = 0, cost = 0, up = 0, down = 0;

  double mean() const {
    double s = 0;
    for (double v : seed_means) s += v;
    return seed_means.empty() ? 0.0 : s / seed_means.size();
  }
  double stderr_mean() const {
    if (seed_means.size() < 2) return 0.0;
    double m = mean(), sq = 0;
    for (double v : seed_means) sq += (v - m) * (v - m);
    return std::sqrt(sq / (seed_means.size() - 1)) / std::sqrt(double(seed_means.size()));
  }
};

}  // namespace

nlohmann::json cmd_compare(const std::vector<std::string>& report_paths,
                           const std::string& out_dir) {
  if (report_paths.size() < 2)
    throw std::invalid_argument("compare: need at least two reports");

  std::vector<EvalReport> reports;
  for (const auto& p : report_paths) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open report: " + p);
    nlohmann::json j;
    in >> j;
    reports.push_back(report_from_json(j));
  }

  // cell = (ports, price factor); rows = agents within each cell
  using CellKey = std::pair<int, double>;
  std::map<CellKey, std::map<std::string, CellStats>> cells;
  std::map<CellKey, std::map<std::string, std::string>> fingerprints;
  std::vector<std::string> mismatches;
  for (const auto& r : reports) {
    CellKey key{r.n_ports, r.price_factor};
    auto& cell = cells[key];
    auto& st = cell[r.agent];
    st.seed_means.push_back(r.jpr_mean);
    st.payment += r.payment_mean;
    st.cost += r.energy_cost_mean;
    st.up += r.up_penalty_mean;
    st.down += r.down_penalty_mean;
    auto& fp = fingerprints[key];
    for (const auto& [agent, print] : fp) {
      if (print != r.scenario_fingerprint) {
        std::ostringstream oss;
        oss << "scenario mismatch in cell (ports=" << key.first
            << ", factor=" << key.second << "): " << agent << " vs " << r.agent;
        mismatches.push_back(oss.str());
      }
    }
    fp[r.agent] = r.scenario_fingerprint;
  }

  nlohmann::json table = nlohmann::json::array();
  for (const auto& [key, cell] : cells) {
    for (const auto& [agent, st] : cell) {
      nlohmann::json row;
      row["n_ports"] = key.first;
      row["price_factor"] = key.second;
      row["agent"] = agent;
      row["runs"] = st.seed_means.size();
      row["jpr_mean"] = st.mean();
      row["jpr_se"] = st.stderr_mean();
      row["jpr_per_run"] = st.seed_means;
      const double nr = std::max<size_t>(1, st.seed_means.size());
      row["payment_mean"] = st.payment / nr;
      row["energy_cost_mean"] = st.cost / nr;
      row["up_penalty_mean"] = st.up / nr;
      row["down_penalty_mean"] = st.down / nr;
      nlohmann::json gains;
      for (const auto& [other, ost] : cell) {
        if (other == agent) continue;
        double b = ost.mean();
        double gain = b == 0.0 ? 0.0 : (st.mean() - b) / std::abs(b) * 100.0;
        gains["vs_" + other + "_pct"] = gain;
      }
      row["gains"] = gains;
      table.push_back(row);
    }
  }

  nlohmann::json out;
  out["format_version"] = 1;
  out["table"] = table;
  out["scenario_mismatches"] = mismatches;

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream jf(fs::path(out_dir) / "comparison.json", std::ios::binary);
    jf << out.dump(2) << '\n';
    csv::Writer w((fs::path(out_dir) / "comparison.csv").string());
    w.header({"n_ports", "price_factor", "agent", "runs", "jpr_mean", "jpr_se",
              "payment_mean", "energy_cost_mean", "up_penalty_mean",
              "down_penalty_mean"});
    for (const auto& row : table) {
      w.row({std::to_string(row["n_ports"].get<int>()),
             csv::format_double(row["price_factor"].get<double>()),
             row["agent"].get<std::string>(),
             std::to_string(row["runs"].get<size_t>()),
             csv::format_double(row["jpr_mean"].get<double>()),
             csv::format_double(row["jpr_se"].get<double>()),
             csv::format_double(row["payment_mean"].get<double>()),
             csv::format_double(row["energy_cost_mean"].get<double>()),
             csv::format_double(row["up_penalty_mean"].get<double>()),
             csv::format_double(row["down_penalty_mean"].get<double>())});
    }
  }
  return out;
}

}  // namespace evsched::cli
