#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evsched/env.hpp"
#include "evsched/nn.hpp"

namespace evsched::sac {

using nn::Matrix;
using nn::Vector;

enum class TemperatureMode { Fixed, TargetEntropy, Paper };

std::string to_string(TemperatureMode mode);
TemperatureMode temperature_mode_from_string(const std::string& s);

struct SacConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double alpha_init = 0.2;
  TemperatureMode temperature_mode = TemperatureMode::TargetEntropy;
  double actor_lr = 1e-4;   // per the experimental setup
  double critic_lr = 1e-3;
  double alpha_lr = 3e-4;
  int batch_size = 64;
  std::size_t buffer_capacity = 100000;
  double r_max = 2.0;  // service-price squash ceiling, CNY/kWh
  std::vector<int> hidden = {256, 256};
  int warmup_transitions = 1000;
  double reward_scale = 1.0;  // scales rewards inside critic targets only
  double logstd_min = -20.0;
  double logstd_max = 2.0;
  double alpha_min = 1e-4;
  double alpha_max = 10.0;
  int checkpoint_every = 0;  // episodes between checkpoints; 0 = final only
  bool paper_init = false;   // literal N(0,1) parameter init instead of fan-in scaled

  void validate() const;
};

void to_json(nlohmann::json& j, const SacConfig& c);
void from_json(const nlohmann::json& j, SacConfig& c);

/// (observation, action, reward, next observation) record. Keeps both the
/// raw squashed action the networks train on and the executed safe action.
struct Transition {
  Vector obs;
  Vector raw_action;
  Action safe_action;
  double reward = 0.0;
  Vector next_obs;
  bool done = false;
};

/// FIFO ring buffer with seeded uniform sampling (without replacement
/// inside one batch).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return storage_[i]; }
  std::vector<const Transition*> sample(int batch, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> storage_;
};

struct BoxBounds {
  Vector lo;
  Vector hi;
};

/// Squashed-Gaussian policy: the net emits per-dimension mean and log-std,
/// actions are tanh-squashed into [lo, hi]. log_prob carries the squash
/// correction term.
class GaussianActor {
 public:
  GaussianActor(int obs_dim, BoxBounds bounds, const std::vector<int>& hidden,
                double logstd_min, double logstd_max, std::mt19937_64& rng,
                nn::InitMode init_mode);
  GaussianActor(nn::DenseNet net, BoxBounds bounds, double logstd_min,
                double logstd_max);

  int action_dim() const { return static_cast<int>(bounds_.lo.size()); }
  int obs_dim() const { return net_.input_size(); }

  struct Sample {
    Vector action;
    double log_prob = 0.0;
    Vector pre_squash;  // u = mean + std * eps
    Vector mean;
    Vector logstd;  // after clamping
    Vector eps;
  };

  Sample sample(const Vector& obs, std::mt19937_64& rng) const;
  /// Reparameterized sample with caller-provided noise; `noise_scale`
  /// multiplies the exploration noise (used by the paper-mode temperature
  /// objective, where the scale is the temperature itself).
  Sample sample_with_eps(const Vector& obs, const Vector& eps,
                         double noise_scale = 1.0) const;
  Vector deterministic_action(const Vector& obs) const;

  nn::DenseNet& net() { return net_; }
  const nn::DenseNet& net() const { return net_; }
  const BoxBounds& bounds() const { return bounds_; }
  double logstd_min() const { return logstd_min_; }
  double logstd_max() const { return logstd_max_; }

 private:
  nn::DenseNet net_;
  BoxBounds bounds_;
  double logstd_min_;
  double logstd_max_;
};

/// Q(s, a) surface the actor and temperature updates differentiate
/// through. Tests may inject analytic critics.
class QFunction {
 public:
  virtual ~QFunction() = default;
  virtual Vector values(const Matrix& obs, const Matrix& act) const = 0;
  virtual Matrix action_grads(const Matrix& obs, const Matrix& act) const = 0;
};

/// Critic backed by a DenseNet over concatenated (observation, action).
class NetCritic : public QFunction {
 public:
  NetCritic(int obs_dim, int act_dim, const std::vector<int>& hidden,
            std::mt19937_64& rng, nn::InitMode init_mode);
  explicit NetCritic(nn::DenseNet net, int obs_dim, int act_dim);

  Vector values(const Matrix& obs, const Matrix& act) const override;
  Matrix action_grads(const Matrix& obs, const Matrix& act) const override;

  nn::DenseNet& net() { return net_; }
  const nn::DenseNet& net() const { return net_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

 private:
  nn::DenseNet net_;
  int obs_dim_;
  int act_dim_;
};

/// Fixes how a raw squashed action vector becomes an executable env action,
/// and which reward component the agent trains on.
class ActionAdapter {
 public:
  virtual ~ActionAdapter() = default;
  virtual std::string name() const = 0;
  virtual int action_dim(const ScenarioConfig& cfg) const = 0;
  virtual BoxBounds bounds(const ScenarioConfig& cfg) const = 0;
  virtual Action to_env_action(const Vector& raw, const StationEnv& env) const = 0;
  virtual double training_reward(const RewardBreakdown& r) const { return r.total; }
};

/// Maps a raw (price, rates...) vector onto the feasible set: price is kept,
/// rates of occupied ports are L1-projected onto the deadline/budget
/// polytope, free ports are forced to zero.
Action safe_act(const Vector& raw, const StationEnv& env);

/// Port-wise control with the exact safe layer (the proposed agent).
class ProposedAdapter final : public ActionAdapter {
 public:
  std::string name() const override { return "proposed"; }
  int action_dim(const ScenarioConfig& cfg) const override { return 1 + cfg.n_ports; }
  BoxBounds bounds(const ScenarioConfig& cfg) const override;
  Action to_env_action(const Vector& raw, const StationEnv& env) const override;
};

struct EpisodeLog {
  int episode = 0;
  double jpr = 0.0;  // full objective, independent of the training reward
  double payment = 0.0;
  double energy_cost = 0.0;
  double up_penalty = 0.0;
  double down_penalty = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double alpha = 0.0;
};

struct TrainResult {
  std::vector<EpisodeLog> episodes;
  long rejected_critic_steps = 0;
  long rejected_actor_steps = 0;
};

class SacAgent {
 public:
  SacAgent(const ScenarioConfig& scenario, SacConfig config,
           std::shared_ptr<const ActionAdapter> adapter, std::uint64_t seed);

  /// One soft-Bellman-residual step on the critic; returns the loss.
  double critic_update(const std::vector<const Transition*>& batch);
  /// One step on E[alpha log pi - Q]; returns the loss.
  double actor_update(const std::vector<const Transition*>& batch);
  /// Entropy-temperature step per the configured mode; returns new alpha.
  double temperature_update(const std::vector<const Transition*>& batch);
  /// Polyak update of the target critic.
  void target_sync();
  static void target_sync(const nn::DenseNet& critic, nn::DenseNet& target, double tau);

  Vector sample_raw(const Vector& obs);
  Vector deterministic_raw(const Vector& obs) const;
  Vector uniform_raw();

  TrainResult train(StationEnv& env, const data::ScenarioBundle& bundle, int episodes,
                    const std::function<void(int, const SacAgent&)>& episode_hook = {});

  double alpha() const { return alpha_; }
  void set_alpha(double a) { alpha_ = a; }
  GaussianActor& actor() { return actor_; }
  const GaussianActor& actor() const { return actor_; }
  NetCritic& critic() { return critic_; }
  const NetCritic& critic() const { return critic_; }
  NetCritic& target_critic() { return target_; }
  ReplayBuffer& buffer() { return buffer_; }
  const SacConfig& config() const { return cfg_; }
  const ActionAdapter& adapter() const { return *adapter_; }
  std::mt19937_64& rng() { return rng_; }

  /// Swaps the critic surface used by actor/temperature updates
  /// (tests inject analytic critics). Pass nullptr to restore the net critic.
  void override_q_surface(const QFunction* q) { q_override_ = q; }

  nlohmann::json checkpoint() const;
  static SacAgent from_checkpoint(const nlohmann::json& j,
                                  std::shared_ptr<const ActionAdapter> adapter,
                                  std::uint64_t seed = 0);

  static std::uint64_t episode_seed(std::uint64_t master, long episode);

 private:
  const QFunction& q_surface() const;
  struct PolicyBatch;  // batched reparameterized sampling + log-probs
  PolicyBatch policy_batch(const Matrix& obs, double noise_scale);

  ScenarioConfig scenario_;
  SacConfig cfg_;
  std::shared_ptr<const ActionAdapter> adapter_;
  std::mt19937_64 rng_;
  GaussianActor actor_;
  NetCritic critic_;
  NetCritic target_;
  nn::Adam actor_opt_;
  nn::Adam critic_opt_;
  ReplayBuffer buffer_;
  double alpha_;
  const QFunction* q_override_ = nullptr;
};

}  // namespace evsched::sac
