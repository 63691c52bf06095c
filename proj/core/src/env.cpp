#include "evsched/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace evsched {

namespace {
constexpr double kTol = 1e-9;
}

double demand_response(const UserType& type, double price_cny_per_kwh) {
  if (!(price_cny_per_kwh >= 0.0))
    throw std::invalid_argument("demand_response: price must be >= 0");
  return 5.0 * std::max(0.0, type.beta2 - type.beta1 * price_cny_per_kwh);
}

RewardBreakdown make_reward(double payment, double energy_cost,
                            double up_penalty, double down_penalty) {
  RewardBreakdown r;
  r.payment = payment;
  r.energy_cost = energy_cost;
  r.up_penalty = up_penalty;
  r.down_penalty = down_penalty;
  r.total = payment - energy_cost - up_penalty - down_penalty;
  return r;
}

int ScenarioConfig::max_deadline_slots() const {
  int m = 1;
  for (const auto& t : user_types) m = std::max(m, t.deadline_slots);
  return m;
}

void ScenarioConfig::validate() const {
  if (n_ports <= 0) throw std::invalid_argument("scenario: n_ports must be >= 1");
  if (horizon_slots < 1) throw std::invalid_argument("scenario: horizon_slots must be >= 1");
  if (x_max <= 0.0) throw std::invalid_argument("scenario: x_max must be > 0");
  if (capacity <= 0.0) throw std::invalid_argument("scenario: capacity must be > 0");
  if (capacity > n_ports * x_max + kTol)
    throw std::invalid_argument("scenario: capacity must be <= n_ports * x_max");
  if (history_len < 1) throw std::invalid_argument("scenario: history_len must be >= 1");
  if (user_types.empty()) throw std::invalid_argument("scenario: user_types empty");
  for (const auto& t : user_types) {
    if (t.beta1 <= 0.0 || t.beta2 <= 0.0)
      throw std::invalid_argument("scenario: user type " + t.name +
                                  " needs positive beta1/beta2");
    if (t.deadline_slots < 1)
      throw std::invalid_argument("scenario: user type " + t.name +
                                  " needs deadline_slots >= 1");
  }
  if (!type_mix.empty()) {
    if (type_mix.size() != user_types.size())
      throw std::invalid_argument("scenario: type_mix size must match user_types");
    double sum = 0.0;
    for (double w : type_mix) {
      if (w < 0.0) throw std::invalid_argument("scenario: type_mix weights must be >= 0");
      sum += w;
    }
    if (sum <= 0.0) throw std::invalid_argument("scenario: type_mix sums to zero");
  }
  if (slot_minutes <= 0 || 60 % slot_minutes != 0)
    throw std::invalid_argument("scenario: slot_minutes must divide 60");
  if (price_norm <= 0.0) throw std::invalid_argument("scenario: price_norm must be > 0");
  if (r_max <= 0.0) throw std::invalid_argument("scenario: r_max must be > 0");
}

std::vector<UserType> table1_user_types() {
  return {
      {"emergent", 2.0, 4.0, 3},
      {"normal", 10.0, 12.0, 6},
      {"residential", 24.0, 32.0, 12},
  };
}

void to_json(nlohmann::json& j, const UserType& t) {
  j = nlohmann::json{{"name", t.name},
                     {"beta1", t.beta1},
                     {"beta2", t.beta2},
                     {"deadline_slots", t.deadline_slots}};
}

void from_json(const nlohmann::json& j, UserType& t) {
  t.name = j.at("name").get<std::string>();
  t.beta1 = j.at("beta1").get<double>();
  t.beta2 = j.at("beta2").get<double>();
  t.deadline_slots = j.at("deadline_slots").get<int>();
}

void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  j = nlohmann::json{{"n_ports", c.n_ports},
                     {"horizon_slots", c.horizon_slots},
                     {"x_max", c.x_max},
                     {"capacity", c.capacity},
                     {"history_len", c.history_len},
                     {"user_types", c.user_types},
                     {"type_mix", c.type_mix},
                     {"lambda_up", c.lambda_up},
                     {"lambda_down", c.lambda_down},
                     {"slot_minutes", c.slot_minutes},
                     {"price_norm", c.price_norm},
                     {"r_max", c.r_max}};
}

void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  c.n_ports = j.at("n_ports").get<int>();
  c.horizon_slots = j.at("horizon_slots").get<int>();
  c.x_max = j.at("x_max").get<double>();
  c.capacity = j.at("capacity").get<double>();
  c.history_len = j.at("history_len").get<int>();
  c.user_types = j.at("user_types").get<std::vector<UserType>>();
  c.type_mix = j.value("type_mix", std::vector<double>{});
  c.lambda_up = j.at("lambda_up").get<double>();
  c.lambda_down = j.at("lambda_down").get<double>();
  c.slot_minutes = j.value("slot_minutes", 5);
  c.price_norm = j.value("price_norm", 1.0);
  c.r_max = j.value("r_max", 2.0);
}

RewardBreakdown reward_breakdown(double price, double admitted_kwh,
                                 double elec_price, double delivered_kwh,
                                 std::optional<double> last_price,
                                 double lambda_up, double lambda_down) {
  double up = 0.0, down = 0.0;
  if (last_price.has_value()) {
    up = lambda_up * std::max(0.0, price - *last_price);
    down = lambda_down * std::max(0.0, *last_price - price);
  }
  return make_reward(price * admitted_kwh, elec_price * delivered_kwh, up, down);
}

StationEnv::StationEnv(ScenarioConfig config) : cfg_(std::move(config)) {
  cfg_.validate();
  sessions_.assign(cfg_.n_ports, std::nullopt);
  port_states_.assign(cfg_.n_ports, PortState{});
}

void StationEnv::require_series() const {
  if (!has_series_) throw std::logic_error("StationEnv: reset() before step()");
}

std::vector<double> StationEnv::reset(const data::PriceSeries& prices,
                                      const data::ArrivalSeries& arrivals,
                                      std::uint64_t seed) {
  if (prices.size() < static_cast<size_t>(cfg_.horizon_slots))
    throw std::invalid_argument("reset: price series shorter than horizon");
  if (arrivals.size() < static_cast<size_t>(cfg_.horizon_slots))
    throw std::invalid_argument("reset: arrival series shorter than horizon");
  if (arrivals.has_types()) {
    for (size_t s = 0; s < arrivals.typed.size(); ++s) {
      if (arrivals.typed[s].size() != static_cast<size_t>(cfg_.n_types()))
        throw std::invalid_argument("reset: typed arrivals width mismatch");
      int sum = 0;
      for (int v : arrivals.typed[s]) sum += v;
      if (sum != arrivals.counts[s])
        throw std::invalid_argument("reset: typed arrivals do not sum to counts");
    }
  }

  prices_ = prices;
  arrivals_ = arrivals;
  has_series_ = true;
  rng_.seed(seed);
  sessions_.assign(cfg_.n_ports, std::nullopt);
  port_states_.assign(cfg_.n_ports, PortState{});
  price_history_.assign(cfg_.history_len, prices_.per_slot[0]);
  arrival_history_.assign(cfg_.history_len, std::vector<int>(cfg_.n_types(), 0));
  last_price_.reset();
  slot_ = 0;
  next_id_ = 0;
  trace_.clear();
  stats_ = EpisodeStats{};
  departed_.clear();
  return encode_observation();
}

std::vector<double> StationEnv::reset(const data::ScenarioBundle& bundle,
                                      std::uint64_t seed) {
  return reset(bundle.prices, bundle.arrivals, seed);
}

double StationEnv::current_elec_price() const {
  require_series();
  return prices_.per_slot[std::min(slot_, cfg_.horizon_slots - 1)];
}

int StationEnv::occupied_count() const {
  int n = 0;
  for (const auto& p : port_states_)
    if (p.has_demand()) ++n;
  return n;
}

double StationEnv::admissible_demand(int parking_slots) const {
  const double m = cfg_.x_max;
  const int p = parking_slots;
  // Per-slot headroom left after every parked vehicle charges as late as
  // its deadline allows. Admitting within this headroom keeps the set of
  // deadline-forced rates within the aggregate capacity under any actions
  // the controller can later take.
  double cap = static_cast<double>(p) * m;
  for (int o = 0; o < p; ++o) {
    double committed = 0.0;
    for (const auto& s : sessions_) {
      if (!s || s->residual_demand_kwh <= 0.0 || o >= s->residual_slots) continue;
      double lazy = s->residual_demand_kwh -
                    m * static_cast<double>(s->residual_slots - 1 - o);
      committed += std::clamp(lazy, 0.0, m);
    }
    double slack = cfg_.capacity - committed;
    if (slack < -kTol) slack = 0.0;  // never happens in normal operation
    slack = std::max(0.0, slack);
    if (slack < m - kTol)
      cap = std::min(cap, slack + m * static_cast<double>(p - 1 - o));
  }
  return std::max(0.0, cap);
}

void StationEnv::admit_arrivals(double price, double& admitted_kwh, int& arrivals,
                                int& admitted, std::vector<int>& type_counts) {
  const int next_slot = slot_ + 1;
  const int count = arrivals_.counts[next_slot];
  arrivals = count;
  stats_.arrivals += count;

  // Realized user types: from the series when present, otherwise drawn
  // from the configured mix.
  std::vector<int> order;
  order.reserve(count);
  if (arrivals_.has_types()) {
    for (int ty = 0; ty < cfg_.n_types(); ++ty)
      for (int k = 0; k < arrivals_.typed[next_slot][ty]; ++k) order.push_back(ty);
  } else {
    std::vector<double> mix = cfg_.type_mix;
    if (mix.empty()) mix.assign(cfg_.n_types(), 1.0);
    std::discrete_distribution<int> draw(mix.begin(), mix.end());
    for (int k = 0; k < count; ++k) order.push_back(draw(rng_));
  }

  for (int ty : order) {
    ++type_counts[ty];
    const UserType& type = cfg_.user_types[ty];

    int port = -1;
    for (int i = 0; i < cfg_.n_ports; ++i) {
      if (port_states_[i].free()) {
        port = i;
        break;
      }
    }
    if (port < 0) {
      ++stats_.rejected_full;
      continue;
    }

    double requested = demand_response(type, price);
    double cap = std::min(type.deadline_slots * cfg_.x_max,
                          admissible_demand(type.deadline_slots));
    double granted = std::min(requested, cap);
    if (granted < requested - 1e-12) ++stats_.demand_capped;
    if (granted <= kTol) {
      ++stats_.balked;
      continue;
    }

    EvSession s;
    s.id = next_id_++;
    s.arrival_slot = next_slot;
    s.parking_slots = type.deadline_slots;
    s.demand_kwh = granted;
    s.residual_demand_kwh = granted;
    s.residual_slots = type.deadline_slots;
    s.port = port;
    s.type_index = ty;
    sessions_[port] = s;
    port_states_[port] = PortState{granted, type.deadline_slots};

    ++admitted;
    ++stats_.admitted;
    admitted_kwh += granted;
    stats_.admitted_kwh += granted;
  }
}

StepResult StationEnv::step(const Action& action) {
  require_series();
  if (done()) throw std::logic_error("step: episode already finished");
  if (!std::isfinite(action.price) || action.price < 0.0)
    throw std::invalid_argument("step: price must be finite and >= 0");
  if (action.rates.size() != static_cast<size_t>(cfg_.n_ports))
    throw std::invalid_argument("step: rates length must equal n_ports");
  double rate_sum = 0.0;
  for (double r : action.rates) {
    if (!std::isfinite(r) || r < -kTol || r > cfg_.x_max + kTol) {
      std::ostringstream oss;
      oss << "step: rate " << r << " outside [0, " << cfg_.x_max << "]";
      throw std::invalid_argument(oss.str());
    }
    rate_sum += r;
  }
  if (rate_sum > cfg_.capacity + kTol) {
    std::ostringstream oss;
    oss << "step: total rate " << rate_sum << " exceeds capacity " << cfg_.capacity;
    throw std::invalid_argument(oss.str());
  }

  const int t = slot_;
  const double c_t = prices_.per_slot[t];

  // (a) charge
  std::vector<double> delivered(cfg_.n_ports, 0.0);
  double delivered_sum = 0.0;
  for (int i = 0; i < cfg_.n_ports; ++i) {
    auto& s = sessions_[i];
    if (!s || s->residual_demand_kwh <= 0.0) continue;
    double d = std::min(std::max(0.0, action.rates[i]), s->residual_demand_kwh);
    s->residual_demand_kwh -= d;
    if (s->residual_demand_kwh < kTol) s->residual_demand_kwh = 0.0;
    port_states_[i].residual_demand_kwh = s->residual_demand_kwh;
    delivered[i] = d;
    delivered_sum += d;
  }
  stats_.delivered_kwh += delivered_sum;

  // (b) advance clocks, depart finished stays
  for (int i = 0; i < cfg_.n_ports; ++i) {
    auto& s = sessions_[i];
    if (!s) continue;
    s->residual_slots -= 1;
    port_states_[i].residual_slots = s->residual_slots;
    if (s->residual_slots <= 0) {
      if (s->residual_demand_kwh > kTol) {
        stats_.infeasible = true;
        ++stats_.infeasible_departures;
      }
      departed_.push_back(*s);
      sessions_[i].reset();
      port_states_[i] = PortState{};
    }
  }

  // (c) admit the next slot's arrivals at the current price
  double admitted_kwh = 0.0;
  int arrivals = 0, admitted = 0;
  std::vector<int> type_counts(cfg_.n_types(), 0);
  const bool last_step = (t + 1 >= cfg_.horizon_slots);
  if (!last_step) admit_arrivals(action.price, admitted_kwh, arrivals, admitted, type_counts);

  // (d) reward for the current slot
  RewardBreakdown reward =
      reward_breakdown(action.price, admitted_kwh, c_t, delivered_sum, last_price_,
                       cfg_.lambda_up, cfg_.lambda_down);

  // histories advance to the beginning of slot t+1
  price_history_.erase(price_history_.begin());
  price_history_.push_back(prices_.per_slot[last_step ? t : t + 1]);
  arrival_history_.erase(arrival_history_.begin());
  arrival_history_.push_back(type_counts);
  last_price_ = action.price;
  slot_ = t + 1;

  SlotTrace row;
  row.t = t;
  row.elec_price = c_t;
  row.price = action.price;
  row.arrivals = arrivals;
  row.admitted = admitted;
  row.admitted_kwh = admitted_kwh;
  row.reward = reward;
  row.delivered = delivered;
  trace_.push_back(std::move(row));

  StepResult out;
  out.reward = reward;
  out.observation = encode_observation();
  out.done = done();
  return out;
}

std::vector<double> StationEnv::encode_observation() const {
  const double demand_norm = cfg_.x_max * cfg_.max_deadline_slots();
  const double slots_norm = cfg_.max_deadline_slots();
  const double count_norm = cfg_.n_ports;

  std::vector<double> obs;
  obs.reserve(cfg_.observation_size());
  for (const auto& p : port_states_) {
    obs.push_back(p.residual_demand_kwh / demand_norm);
    obs.push_back(p.residual_slots / slots_norm);
  }
  for (double c : price_history_) obs.push_back(c / cfg_.price_norm);
  for (const auto& counts : arrival_history_)
    for (int v : counts) obs.push_back(v / count_norm);
  obs.push_back((last_price_ ? *last_price_ : 0.0) / cfg_.r_max);
  obs.push_back(occupied_count() / count_norm);
  return obs;
}

}  // namespace evsched
