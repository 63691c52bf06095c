#include "evsched/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evsched/safelayer.hpp"

namespace evsched::baselines {

int laxity(const PortState& port, double x_max) {
  if (!port.has_demand()) return port.residual_slots;
  int slots_needed =
      static_cast<int>(std::ceil(port.residual_demand_kwh / x_max - 1e-12));
  return port.residual_slots - slots_needed;
}

std::vector<double> llf_dispatch(double total_rate,
                                 const std::vector<PortState>& ports,
                                 double x_max) {
  const size_t n = ports.size();
  std::vector<double> rates(n, 0.0);

  std::vector<size_t> occupied;
  double lower_sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (!ports[i].has_demand()) continue;
    occupied.push_back(i);
    double lb = safelayer::deadline_lower_bound(ports[i], x_max);
    rates[i] = lb;  // deadline-critical service comes first
    lower_sum += lb;
  }
  if (occupied.empty()) return rates;

  double budget = std::max(total_rate, lower_sum) - lower_sum;

  std::sort(occupied.begin(), occupied.end(), [&](size_t a, size_t b) {
    int la = laxity(ports[a], x_max);
    int lb = laxity(ports[b], x_max);
    if (la != lb) return la < lb;
    return a < b;
  });

  for (size_t i : occupied) {
    if (budget <= 0.0) break;
    double ceiling = std::min(x_max, ports[i].residual_demand_kwh);
    double headroom = ceiling - rates[i];
    if (headroom <= 0.0) continue;
    double grant = std::min(headroom, budget);
    rates[i] += grant;
    budget -= grant;
  }
  return rates;
}

FleetStepOutcome fleet_step(FleetMode mode, StationEnv& env, const FleetAction& action) {
  Action a;
  a.price = action.price;
  a.rates = llf_dispatch(action.total_rate, env.ports(), env.config().x_max);

  FleetStepOutcome outcome;
  outcome.step = env.step(a);
  const RewardBreakdown& r = outcome.step.reward;
  outcome.training_reward =
      mode == FleetMode::Profit ? r.payment - r.energy_cost : r.total;
  return outcome;
}

std::string to_string(FleetMode mode) {
  return mode == FleetMode::Profit ? "profit" : "jpr";
}

sac::BoxBounds FleetAdapter::bounds(const ScenarioConfig& cfg) const {
  sac::BoxBounds b;
  b.lo = sac::Vector::Zero(2);
  b.hi = sac::Vector(2);
  b.hi << cfg.r_max, cfg.capacity;
  return b;
}

Action FleetAdapter::to_env_action(const sac::Vector& raw, const StationEnv& env) const {
  if (raw.size() != 2)
    throw std::invalid_argument("FleetAdapter: raw action must have 2 entries");
  Action a;
  a.price = raw(0);
  a.rates = llf_dispatch(raw(1), env.ports(), env.config().x_max);
  return a;
}

double FleetAdapter::training_reward(const RewardBreakdown& r) const {
  return mode_ == FleetMode::Profit ? r.payment - r.energy_cost : r.total;
}

}  // namespace evsched::baselines
