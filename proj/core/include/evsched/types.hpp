#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace evsched {

/// One demand class from the user-type table. beta1/beta2 are in units of
/// 5 kWh (per CNY for beta1); deadline_slots is the parking duration in slots.
struct UserType {
  std::string name;
  double beta1 = 0.0;
  double beta2 = 0.0;
  int deadline_slots = 1;
};

/// kWh requested at a posted price: 5 * max(0, beta2 - beta1 * price).
/// Non-increasing in price, clamped at the zero crossing.
double demand_response(const UserType& type, double price_cny_per_kwh);

/// One vehicle's charging job while it occupies a port.
struct EvSession {
  long id = -1;
  int arrival_slot = 0;
  int parking_slots = 0;
  double demand_kwh = 0.0;
  double residual_demand_kwh = 0.0;
  int residual_slots = 0;
  int port = -1;
  int type_index = -1;
};

/// Residual demand / residual parking time of the vehicle at one port.
/// A port with both fields zero is free.
struct PortState {
  double residual_demand_kwh = 0.0;
  int residual_slots = 0;

  bool free() const { return residual_demand_kwh <= 0.0 && residual_slots <= 0; }
  bool has_demand() const { return residual_demand_kwh > 0.0; }
};

/// Service price plus the per-port charging-rate profile for one slot.
struct Action {
  double price = 0.0;                // CNY per kWh, >= 0
  std::vector<double> rates;         // kWh per slot, length n_ports
};

/// Per-slot reward components. `total` is always the signed sum
/// payment - energy_cost - up_penalty - down_penalty.
struct RewardBreakdown {
  double payment = 0.0;
  double energy_cost = 0.0;
  double up_penalty = 0.0;
  double down_penalty = 0.0;
  double total = 0.0;
};

RewardBreakdown make_reward(double payment, double energy_cost,
                            double up_penalty, double down_penalty);

/// Station-level scenario parameters. Observation normalizers are carried
/// here so every consumer of encode_observation scales identically.
struct ScenarioConfig {
  int n_ports = 5;
  int horizon_slots = 288;
  double x_max = 7.0;        // per-port cap, kWh per slot
  double capacity = 28.0;    // aggregate cap U, kWh per slot
  int history_len = 5;
  std::vector<UserType> user_types;
  std::vector<double> type_mix;  // admission-draw probabilities; empty = uniform
  double lambda_up = 1.0610;
  double lambda_down = -0.2979;
  int slot_minutes = 5;

  double price_norm = 1.0;   // divisor for electricity-price features
  double r_max = 2.0;        // service-price ceiling, also its normalizer

  int n_types() const { return static_cast<int>(user_types.size()); }
  int max_deadline_slots() const;
  int observation_size() const {
    return 2 * n_ports + history_len * (1 + n_types()) + 2;
  }
  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// Default emergent / normal / residential demand classes.
std::vector<UserType> table1_user_types();

void to_json(nlohmann::json& j, const UserType& t);
void from_json(const nlohmann::json& j, UserType& t);
void to_json(nlohmann::json& j, const ScenarioConfig& c);
void from_json(const nlohmann::json& j, ScenarioConfig& c);

}  // namespace evsched
