#include "evsched/sac.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "evsched/safelayer.hpp"

namespace evsched::sac {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// splitmix64; used to derive per-episode seeds from the master seed
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// log(1 - tanh(u)^2), stable for large |u|
double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::log(2.0) - u - softplus(-2.0 * u));
}

}  // namespace

std::string to_string(TemperatureMode mode) {
  switch (mode) {
    case TemperatureMode::Fixed: return "fixed";
    case TemperatureMode::TargetEntropy: return "target_entropy";
    case TemperatureMode::Paper: return "paper";
  }
  return "?";
}

TemperatureMode temperature_mode_from_string(const std::string& s) {
  if (s == "fixed") return TemperatureMode::Fixed;
  if (s == "target_entropy") return TemperatureMode::TargetEntropy;
  if (s == "paper") return TemperatureMode::Paper;
  throw std::invalid_argument("unknown temperature mode: " + s);
}

void SacConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("sac: gamma must be in (0, 1)");
  if (!(tau > 0.0 && tau <= 1.0))
    throw std::invalid_argument("sac: tau must be in (0, 1]");
  if (alpha_init < 0.0) throw std::invalid_argument("sac: alpha_init must be >= 0");
  if (batch_size <= 0) throw std::invalid_argument("sac: batch_size must be >= 1");
  if (buffer_capacity == 0) throw std::invalid_argument("sac: buffer_capacity must be >= 1");
  if (r_max <= 0.0) throw std::invalid_argument("sac: r_max must be > 0");
  if (hidden.empty()) throw std::invalid_argument("sac: hidden layers required");
  if (warmup_transitions < batch_size)
    throw std::invalid_argument("sac: warmup_transitions must cover one batch");
  if (reward_scale <= 0.0) throw std::invalid_argument("sac: reward_scale must be > 0");
  if (logstd_min >= logstd_max)
    throw std::invalid_argument("sac: logstd_min must be < logstd_max");
  if (!(alpha_min > 0.0 && alpha_min <= alpha_max))
    throw std::invalid_argument("sac: need 0 < alpha_min <= alpha_max");
}

void to_json(nlohmann::json& j, const SacConfig& c) {
  j = nlohmann::json{{"gamma", c.gamma},
                     {"tau", c.tau},
                     {"alpha_init", c.alpha_init},
                     {"temperature_mode", to_string(c.temperature_mode)},
                     {"actor_lr", c.actor_lr},
                     {"critic_lr", c.critic_lr},
                     {"alpha_lr", c.alpha_lr},
                     {"batch_size", c.batch_size},
                     {"buffer_capacity", c.buffer_capacity},
                     {"r_max", c.r_max},
                     {"hidden", c.hidden},
                     {"warmup_transitions", c.warmup_transitions},
                     {"reward_scale", c.reward_scale},
                     {"logstd_min", c.logstd_min},
                     {"logstd_max", c.logstd_max},
                     {"alpha_min", c.alpha_min},
                     {"alpha_max", c.alpha_max},
                     {"checkpoint_every", c.checkpoint_every},
                     {"paper_init", c.paper_init}};
}

void from_json(const nlohmann::json& j, SacConfig& c) {
  SacConfig d;
  c.gamma = j.value("gamma", d.gamma);
  c.tau = j.value("tau", d.tau);
  c.alpha_init = j.value("alpha_init", d.alpha_init);
  c.temperature_mode = temperature_mode_from_string(
      j.value("temperature_mode", to_string(d.temperature_mode)));
  c.actor_lr = j.value("actor_lr", d.actor_lr);
  c.critic_lr = j.value("critic_lr", d.critic_lr);
  c.alpha_lr = j.value("alpha_lr", d.alpha_lr);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.buffer_capacity = j.value("buffer_capacity", d.buffer_capacity);
  c.r_max = j.value("r_max", d.r_max);
  c.hidden = j.value("hidden", d.hidden);
  c.warmup_transitions = j.value("warmup_transitions", d.warmup_transitions);
  c.reward_scale = j.value("reward_scale", d.reward_scale);
  c.logstd_min = j.value("logstd_min", d.logstd_min);
  c.logstd_max = j.value("logstd_max", d.logstd_max);
  c.alpha_min = j.value("alpha_min", d.alpha_min);
  c.alpha_max = j.value("alpha_max", d.alpha_max);
  c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
  c.paper_init = j.value("paper_init", d.paper_init);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
  storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[next_] = std::move(t);
    next_ = (next_ + 1) % capacity_;
  }
}

std::vector<const Transition*> ReplayBuffer::sample(int batch,
                                                    std::mt19937_64& rng) const {
  if (batch <= 0 || static_cast<std::size_t>(batch) > storage_.size())
    throw std::invalid_argument("ReplayBuffer: batch larger than stored transitions");
  std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
  std::unordered_set<std::size_t> seen;
  std::vector<const Transition*> out;
  out.reserve(batch);
  while (out.size() < static_cast<std::size_t>(batch)) {
    std::size_t i = pick(rng);
    if (seen.insert(i).second) out.push_back(&storage_[i]);
  }
  return out;
}

GaussianActor::GaussianActor(int obs_dim, BoxBounds bounds,
                             const std::vector<int>& hidden, double logstd_min,
                             double logstd_max, std::mt19937_64& rng,
                             nn::InitMode init_mode)
    : net_([&] {
        std::vector<int> sizes;
        sizes.push_back(obs_dim);
        sizes.insert(sizes.end(), hidden.begin(), hidden.end());
        sizes.push_back(2 * static_cast<int>(bounds.lo.size()));
        return nn::DenseNet(sizes, rng, init_mode);
      }()),
      bounds_(std::move(bounds)),
      logstd_min_(logstd_min),
      logstd_max_(logstd_max) {
  if (bounds_.lo.size() != bounds_.hi.size())
    throw std::invalid_argument("GaussianActor: bounds size mismatch");
  for (Eigen::Index i = 0; i < bounds_.lo.size(); ++i)
    if (!(bounds_.lo(i) < bounds_.hi(i)))
      throw std::invalid_argument("GaussianActor: lo must be < hi per dimension");
}

GaussianActor::GaussianActor(nn::DenseNet net, BoxBounds bounds, double logstd_min,
                             double logstd_max)
    : net_(std::move(net)),
      bounds_(std::move(bounds)),
      logstd_min_(logstd_min),
      logstd_max_(logstd_max) {
  if (net_.output_size() != 2 * static_cast<int>(bounds_.lo.size()))
    throw std::invalid_argument("GaussianActor: net output must be 2 * action_dim");
}

GaussianActor::Sample GaussianActor::sample(const Vector& obs,
                                            std::mt19937_64& rng) const {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector eps(action_dim());
  for (int d = 0; d < action_dim(); ++d) eps(d) = gauss(rng);
  return sample_with_eps(obs, eps);
}

GaussianActor::Sample GaussianActor::sample_with_eps(const Vector& obs,
                                                     const Vector& eps,
                                                     double noise_scale) const {
  const int a = action_dim();
  Vector out = net_.forward(obs);
  if (!out.allFinite()) {
    std::ostringstream oss;
    oss << "GaussianActor: non-finite network output (|obs|=" << obs.norm() << ")";
    throw std::runtime_error(oss.str());
  }
  Sample s;
  s.eps = eps;
  s.mean = out.head(a);
  s.logstd = out.tail(a).cwiseMax(logstd_min_).cwiseMin(logstd_max_);
  Vector std = s.logstd.array().exp().matrix();
  s.pre_squash = s.mean + noise_scale * std.cwiseProduct(eps);
  s.action.resize(a);
  s.log_prob = 0.0;
  for (int d = 0; d < a; ++d) {
    const double u = s.pre_squash(d);
    const double th = std::tanh(u);
    const double half = 0.5 * (bounds_.hi(d) - bounds_.lo(d));
    s.action(d) = bounds_.lo(d) + half * (th + 1.0);
    s.log_prob += -0.5 * eps(d) * eps(d) - s.logstd(d) - 0.5 * kLog2Pi -
                  std::log(half) - log_one_minus_tanh_sq(u);
  }
  return s;
}

Vector GaussianActor::deterministic_action(const Vector& obs) const {
  return sample_with_eps(obs, Vector::Zero(action_dim())).action;
}

NetCritic::NetCritic(int obs_dim, int act_dim, const std::vector<int>& hidden,
                     std::mt19937_64& rng, nn::InitMode init_mode)
    : net_([&] {
        std::vector<int> sizes;
        sizes.push_back(obs_dim + act_dim);
        sizes.insert(sizes.end(), hidden.begin(), hidden.end());
        sizes.push_back(1);
        return nn::DenseNet(sizes, rng, init_mode);
      }()),
      obs_dim_(obs_dim),
      act_dim_(act_dim) {}

NetCritic::NetCritic(nn::DenseNet net, int obs_dim, int act_dim)
    : net_(std::move(net)), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (net_.input_size() != obs_dim + act_dim || net_.output_size() != 1)
    throw std::invalid_argument("NetCritic: net shape mismatch");
}

static Matrix concat_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

Vector NetCritic::values(const Matrix& obs, const Matrix& act) const {
  return net_.forward(concat_rows(obs, act)).row(0).transpose();
}

Matrix NetCritic::action_grads(const Matrix& obs, const Matrix& act) const {
  nn::DenseNet::Tape tape;
  net_.forward(concat_rows(obs, act), tape);
  nn::Gradients scratch = net_.zero_grads();
  Matrix ones = Matrix::Ones(1, obs.cols());
  Matrix in_grad = net_.backward(tape, ones, scratch);
  return in_grad.bottomRows(act_dim_);
}

BoxBounds ProposedAdapter::bounds(const ScenarioConfig& cfg) const {
  const int a = 1 + cfg.n_ports;
  BoxBounds b;
  b.lo = Vector::Zero(a);
  b.hi = Vector::Constant(a, cfg.x_max);
  b.hi(0) = cfg.r_max;
  return b;
}

Action safe_act(const Vector& raw, const StationEnv& env) {
  const ScenarioConfig& cfg = env.config();
  if (raw.size() != 1 + cfg.n_ports)
    throw std::invalid_argument("safe_act: raw action must have 1 + n_ports entries");
  Action a;
  a.price = raw(0);
  a.rates.assign(cfg.n_ports, 0.0);

  const auto& ports = env.ports();
  std::vector<int> occupied;
  safelayer::ProjectionInstance inst;
  for (int i = 0; i < cfg.n_ports; ++i) {
    if (!ports[i].has_demand()) continue;
    occupied.push_back(i);
    inst.proposal.push_back(raw(1 + i));
    inst.lower.push_back(safelayer::deadline_lower_bound(ports[i], cfg.x_max));
  }
  if (occupied.empty()) return a;
  inst.upper = cfg.x_max;
  inst.budget = cfg.capacity;
  safelayer::ProjectionResult res = safelayer::project(inst);
  for (size_t k = 0; k < occupied.size(); ++k) a.rates[occupied[k]] = res.rates[k];
  return a;
}

Action ProposedAdapter::to_env_action(const Vector& raw, const StationEnv& env) const {
  return safe_act(raw, env);
}

SacAgent::SacAgent(const ScenarioConfig& scenario, SacConfig config,
                   std::shared_ptr<const ActionAdapter> adapter, std::uint64_t seed)
    : scenario_([&] {
        scenario.validate();
        return scenario;
      }()),
      cfg_([&] {
        config.validate();
        return std::move(config);
      }()),
      adapter_(std::move(adapter)),
      rng_(seed),
      actor_(scenario.observation_size(), adapter_->bounds(scenario), cfg_.hidden,
             cfg_.logstd_min, cfg_.logstd_max, rng_,
             cfg_.paper_init ? nn::InitMode::StandardNormal
                             : nn::InitMode::FanInScaledNormal),
      critic_(scenario.observation_size(), adapter_->action_dim(scenario), cfg_.hidden,
              rng_,
              cfg_.paper_init ? nn::InitMode::StandardNormal
                              : nn::InitMode::FanInScaledNormal),
      target_(critic_),
      actor_opt_(actor_.net(), {cfg_.actor_lr}),
      critic_opt_(critic_.net(), {cfg_.critic_lr}),
      buffer_(cfg_.buffer_capacity),
      alpha_(cfg_.alpha_init) {}

const QFunction& SacAgent::q_surface() const {
  return q_override_ ? *q_override_ : critic_;
}

struct SacAgent::PolicyBatch {
  Matrix actions;   // act_dim x B
  Vector log_prob;  // B
  Matrix mean, logstd, eps, tanh_u, std;
  Matrix clamp_mask;  // 1 where logstd was inside [min, max]
  nn::DenseNet::Tape tape;
};

SacAgent::PolicyBatch SacAgent::policy_batch(const Matrix& obs, double noise_scale) {
  const int a = actor_.action_dim();
  const int B = static_cast<int>(obs.cols());
  const BoxBounds& box = actor_.bounds();

  PolicyBatch pb;
  Matrix out = actor_.net().forward(obs, pb.tape);
  if (!out.allFinite())
    throw std::runtime_error("actor produced non-finite outputs during update");
  pb.mean = out.topRows(a);
  Matrix raw_logstd = out.bottomRows(a);
  pb.logstd = raw_logstd.cwiseMax(cfg_.logstd_min).cwiseMin(cfg_.logstd_max);
  pb.clamp_mask = ((raw_logstd.array() > cfg_.logstd_min) &&
                   (raw_logstd.array() < cfg_.logstd_max))
                      .cast<double>()
                      .matrix();
  pb.std = pb.logstd.array().exp().matrix();

  std::normal_distribution<double> gauss(0.0, 1.0);
  pb.eps.resize(a, B);
  for (int b = 0; b < B; ++b)
    for (int d = 0; d < a; ++d) pb.eps(d, b) = gauss(rng_);

  Matrix u = pb.mean + noise_scale * pb.std.cwiseProduct(pb.eps);
  pb.tanh_u = u.array().tanh().matrix();
  pb.actions.resize(a, B);
  pb.log_prob = Vector::Zero(B);
  for (int b = 0; b < B; ++b) {
    double lp = 0.0;
    for (int d = 0; d < a; ++d) {
      const double half = 0.5 * (box.hi(d) - box.lo(d));
      pb.actions(d, b) = box.lo(d) + half * (pb.tanh_u(d, b) + 1.0);
      lp += -0.5 * pb.eps(d, b) * pb.eps(d, b) - pb.logstd(d, b) - 0.5 * kLog2Pi -
            std::log(half) - log_one_minus_tanh_sq(u(d, b));
    }
    pb.log_prob(b) = lp;
  }
  return pb;
}

double SacAgent::critic_update(const std::vector<const Transition*>& batch) {
  if (batch.empty()) throw std::invalid_argument("critic_update: empty batch");
  const int B = static_cast<int>(batch.size());
  const int od = scenario_.observation_size();
  const int ad = actor_.action_dim();

  Matrix obs(od, B), act(ad, B), next_obs(od, B);
  Vector reward(B), not_done(B);
  for (int b = 0; b < B; ++b) {
    obs.col(b) = batch[b]->obs;
    act.col(b) = batch[b]->raw_action;
    next_obs.col(b) = batch[b]->next_obs;
    reward(b) = batch[b]->reward;
    not_done(b) = batch[b]->done ? 0.0 : 1.0;
  }

  // fresh next actions from the current policy
  PolicyBatch next_pb = policy_batch(next_obs, 1.0);
  Vector next_q = target_.values(next_obs, next_pb.actions);
  Vector target = cfg_.reward_scale * reward +
                  cfg_.gamma * not_done.cwiseProduct(next_q - alpha_ * next_pb.log_prob);

  nn::DenseNet::Tape tape;
  Matrix inputs = concat_rows(obs, act);
  Matrix q = critic_.net().forward(inputs, tape);
  Vector diff = q.row(0).transpose() - target;
  double loss = 0.5 * diff.squaredNorm() / B;
  if (!std::isfinite(loss)) return loss;  // step rejected by Adam below anyway

  Matrix out_grad = (diff / double(B)).transpose();
  nn::Gradients grads = critic_.net().zero_grads();
  critic_.net().backward(tape, out_grad, grads);
  critic_opt_.step(critic_.net(), grads);
  return loss;
}

double SacAgent::actor_update(const std::vector<const Transition*>& batch) {
  if (batch.empty()) throw std::invalid_argument("actor_update: empty batch");
  const int B = static_cast<int>(batch.size());
  const int od = scenario_.observation_size();
  const int ad = actor_.action_dim();
  const BoxBounds& box = actor_.bounds();

  Matrix obs(od, B);
  for (int b = 0; b < B; ++b) obs.col(b) = batch[b]->obs;

  PolicyBatch pb = policy_batch(obs, 1.0);
  const QFunction& qf = q_surface();
  Vector q = qf.values(obs, pb.actions);
  Matrix dq = qf.action_grads(obs, pb.actions);

  double loss = (alpha_ * pb.log_prob - q).mean();

  Matrix out_grad(2 * ad, B);
  for (int b = 0; b < B; ++b) {
    for (int d = 0; d < ad; ++d) {
      const double half = 0.5 * (box.hi(d) - box.lo(d));
      const double th = pb.tanh_u(d, b);
      const double sech2 = 1.0 - th * th;
      const double da_du = half * sech2;
      const double dlogp_du = 2.0 * th;
      const double du_dlogstd = pb.std(d, b) * pb.eps(d, b);
      // d/dmean [alpha*logp - Q]
      double gm = alpha_ * dlogp_du - dq(d, b) * da_du;
      // d/dlogstd: direct -alpha plus the path through u
      double gl = alpha_ * (-1.0 + dlogp_du * du_dlogstd) - dq(d, b) * da_du * du_dlogstd;
      gl *= pb.clamp_mask(d, b);
      out_grad(d, b) = gm / B;
      out_grad(ad + d, b) = gl / B;
    }
  }

  nn::Gradients grads = actor_.net().zero_grads();
  actor_.net().backward(pb.tape, out_grad, grads);
  actor_opt_.step(actor_.net(), grads);
  return loss;
}

double SacAgent::temperature_update(const std::vector<const Transition*>& batch) {
  if (cfg_.temperature_mode == TemperatureMode::Fixed) return alpha_;
  if (batch.empty()) throw std::invalid_argument("temperature_update: empty batch");
  const int B = static_cast<int>(batch.size());
  const int od = scenario_.observation_size();
  Matrix obs(od, B);
  for (int b = 0; b < B; ++b) obs.col(b) = batch[b]->obs;

  if (cfg_.temperature_mode == TemperatureMode::TargetEntropy) {
    PolicyBatch pb = policy_batch(obs, 1.0);
    const double target_entropy = -double(actor_.action_dim());
    double grad_step = pb.log_prob.mean() + target_entropy;
    if (!std::isfinite(grad_step)) return alpha_;
    alpha_ = std::clamp(alpha_ + cfg_.alpha_lr * grad_step, cfg_.alpha_min,
                        cfg_.alpha_max);
    return alpha_;
  }

  // Paper mode: L(alpha) = E[-Q(s, a(alpha))] with the temperature acting as
  // the exploration-noise scale, a(alpha) = squash(mean + alpha * std * eps).
  PolicyBatch pb = policy_batch(obs, alpha_);
  const QFunction& qf = q_surface();
  Matrix dq = qf.action_grads(obs, pb.actions);
  const BoxBounds& box = actor_.bounds();
  double grad = 0.0;
  for (int b = 0; b < B; ++b) {
    for (int d = 0; d < actor_.action_dim(); ++d) {
      const double half = 0.5 * (box.hi(d) - box.lo(d));
      const double th = pb.tanh_u(d, b);
      const double da_dalpha = half * (1.0 - th * th) * pb.std(d, b) * pb.eps(d, b);
      grad += -dq(d, b) * da_dalpha;
    }
  }
  grad /= B;
  if (!std::isfinite(grad)) return alpha_;
  alpha_ = std::clamp(alpha_ - cfg_.alpha_lr * grad, cfg_.alpha_min, cfg_.alpha_max);
  return alpha_;
}

void SacAgent::target_sync(const nn::DenseNet& critic, nn::DenseNet& target,
                           double tau) {
  for (size_t l = 0; l < critic.layer_count(); ++l) {
    target.weights()[l] = (1.0 - tau) * target.weights()[l] + tau * critic.weights()[l];
    target.biases()[l] = (1.0 - tau) * target.biases()[l] + tau * critic.biases()[l];
  }
}

void SacAgent::target_sync() { target_sync(critic_.net(), target_.net(), cfg_.tau); }

Vector SacAgent::sample_raw(const Vector& obs) {
  return actor_.sample(obs, rng_).action;
}

Vector SacAgent::deterministic_raw(const Vector& obs) const {
  return actor_.deterministic_action(obs);
}

Vector SacAgent::uniform_raw() {
  const BoxBounds& box = actor_.bounds();
  Vector a(actor_.action_dim());
  for (int d = 0; d < actor_.action_dim(); ++d) {
    std::uniform_real_distribution<double> uni(box.lo(d), box.hi(d));
    a(d) = uni(rng_);
  }
  return a;
}

std::uint64_t SacAgent::episode_seed(std::uint64_t master, long episode) {
  return mix64(master ^ mix64(static_cast<std::uint64_t>(episode) + 1));
}

TrainResult SacAgent::train(StationEnv& env, const data::ScenarioBundle& bundle,
                            int episodes,
                            const std::function<void(int, const SacAgent&)>& episode_hook) {
  if (episodes < 0) throw std::invalid_argument("train: episodes must be >= 0");
  TrainResult result;
  const std::uint64_t master = rng_();

  for (int ep = 0; ep < episodes; ++ep) {
    std::vector<double> obs_v = env.reset(bundle, episode_seed(master, ep));
    Vector obs = Eigen::Map<const Vector>(obs_v.data(), obs_v.size());

    double critic_loss_sum = 0.0, actor_loss_sum = 0.0;
    long updates = 0;
    bool done = false;
    while (!done) {
      Vector raw = (buffer_.size() < static_cast<std::size_t>(cfg_.warmup_transitions))
                       ? uniform_raw()
                       : sample_raw(obs);
      Action env_action = adapter_->to_env_action(raw, env);
      StepResult res = env.step(env_action);
      Vector next_obs =
          Eigen::Map<const Vector>(res.observation.data(), res.observation.size());

      Transition tr;
      tr.obs = obs;
      tr.raw_action = raw;
      tr.safe_action = env_action;
      tr.reward = adapter_->training_reward(res.reward);
      tr.next_obs = next_obs;
      tr.done = res.done;
      buffer_.push(std::move(tr));

      if (buffer_.size() >= static_cast<std::size_t>(cfg_.warmup_transitions)) {
        auto batch = buffer_.sample(cfg_.batch_size, rng_);
        critic_loss_sum += critic_update(batch);
        actor_loss_sum += actor_update(batch);
        temperature_update(batch);
        target_sync();
        ++updates;
      }
      obs = next_obs;
      done = res.done;
    }

    EpisodeLog log;
    log.episode = ep;
    for (const auto& row : env.trace()) {
      log.jpr += row.reward.total;
      log.payment += row.reward.payment;
      log.energy_cost += row.reward.energy_cost;
      log.up_penalty += row.reward.up_penalty;
      log.down_penalty += row.reward.down_penalty;
    }
    log.actor_loss = updates ? actor_loss_sum / updates : 0.0;
    log.critic_loss = updates ? critic_loss_sum / updates : 0.0;
    log.alpha = alpha_;
    result.episodes.push_back(log);
    if (episode_hook) episode_hook(ep, *this);
  }
  result.rejected_critic_steps = critic_opt_.rejected_count();
  result.rejected_actor_steps = actor_opt_.rejected_count();
  return result;
}

nlohmann::json SacAgent::checkpoint() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["agent"] = adapter_->name();
  j["scenario"] = scenario_;
  j["sac"] = cfg_;
  j["alpha"] = alpha_;
  j["actor"] = actor_.net().to_json();
  j["critic"] = critic_.net().to_json();
  j["target_critic"] = target_.net().to_json();
  return j;
}

SacAgent SacAgent::from_checkpoint(const nlohmann::json& j,
                                   std::shared_ptr<const ActionAdapter> adapter,
                                   std::uint64_t seed) {
  if (j.value("format_version", 0) != 1)
    throw std::runtime_error("checkpoint: unsupported format_version");
  const std::string agent_name = j.at("agent").get<std::string>();
  if (adapter->name() != agent_name)
    throw std::runtime_error("checkpoint: trained for agent '" + agent_name +
                             "', requested '" + adapter->name() + "'");
  ScenarioConfig scen = j.at("scenario").get<ScenarioConfig>();
  SacConfig cfg = j.at("sac").get<SacConfig>();
  SacAgent agent(scen, cfg, std::move(adapter), seed);
  agent.actor_ = GaussianActor(nn::DenseNet::from_json(j.at("actor")),
                               agent.actor_.bounds(), cfg.logstd_min, cfg.logstd_max);
  agent.critic_ = NetCritic(nn::DenseNet::from_json(j.at("critic")),
                            scen.observation_size(),
                            agent.adapter_->action_dim(scen));
  agent.target_ = NetCritic(nn::DenseNet::from_json(j.at("target_critic")),
                            scen.observation_size(),
                            agent.adapter_->action_dim(scen));
  agent.alpha_ = j.at("alpha").get<double>();
  return agent;
}

}  // namespace evsched::sac
