#pragma once

#include <optional>
#include <random>
#include <vector>

#include "evsched/data.hpp"
#include "evsched/types.hpp"

namespace evsched {

/// One exported trace row per slot; enough to recompute the objective
/// independently (payment = price * admitted_kwh, cost = elec_price * sum
/// of delivered, penalties from consecutive prices).
struct SlotTrace {
  int t = 0;
  double elec_price = 0.0;  // c_t
  double price = 0.0;       // r_t
  int arrivals = 0;
  int admitted = 0;
  double admitted_kwh = 0.0;
  RewardBreakdown reward;
  std::vector<double> delivered;  // per port, kWh actually transferred
};

struct EpisodeStats {
  bool infeasible = false;       // an EV departed with unmet demand
  int infeasible_departures = 0;
  long arrivals = 0;
  long admitted = 0;
  long rejected_full = 0;        // no free port
  long balked = 0;               // zero granted demand at the posted price
  long demand_capped = 0;        // admission cap reduced the requested energy
  double admitted_kwh = 0.0;
  double delivered_kwh = 0.0;
};

struct StepResult {
  RewardBreakdown reward;
  std::vector<double> observation;
  bool done = false;
};

/// Pure per-slot reward: payment - energy cost - price-fluctuation
/// penalties. `last_price` empty means the first slot of an episode, which
/// carries no fluctuation penalty.
RewardBreakdown reward_breakdown(double price, double admitted_kwh,
                                 double elec_price, double delivered_kwh,
                                 std::optional<double> last_price,
                                 double lambda_up, double lambda_down);

/// Discrete-time charging-station MDP.
///
/// step(action) at slot t: (a) applies the rate profile to occupied ports,
/// (b) advances parking clocks and departs finished stays, (c) admits the
/// next slot's arrivals — demands priced at the action's price and capped so
/// the station stays jointly schedulable — and (d) returns the slot reward.
class StationEnv {
 public:
  explicit StationEnv(ScenarioConfig config);

  std::vector<double> reset(const data::PriceSeries& prices,
                            const data::ArrivalSeries& arrivals,
                            std::uint64_t seed);
  std::vector<double> reset(const data::ScenarioBundle& bundle, std::uint64_t seed);

  StepResult step(const Action& action);

  std::vector<double> encode_observation() const;

  const ScenarioConfig& config() const { return cfg_; }
  const std::vector<PortState>& ports() const { return port_states_; }
  const std::vector<std::optional<EvSession>>& sessions() const { return sessions_; }
  int slot() const { return slot_; }
  bool done() const { return slot_ >= cfg_.horizon_slots; }
  double current_elec_price() const;
  std::optional<double> last_service_price() const { return last_price_; }
  int occupied_count() const;

  const std::vector<SlotTrace>& trace() const { return trace_; }
  const EpisodeStats& stats() const { return stats_; }
  const std::vector<EvSession>& departed() const { return departed_; }

  /// Largest extra demand a new stay of `parking_slots` slots could be
  /// granted right now without breaking joint schedulability, assuming every
  /// parked vehicle may procrastinate to its deadline-forced schedule.
  double admissible_demand(int parking_slots) const;

 private:
  void require_series() const;
  void admit_arrivals(double price, double& admitted_kwh, int& arrivals,
                      int& admitted, std::vector<int>& type_counts);

  ScenarioConfig cfg_;
  data::PriceSeries prices_;
  data::ArrivalSeries arrivals_;
  bool has_series_ = false;

  std::mt19937_64 rng_;
  std::vector<std::optional<EvSession>> sessions_;
  std::vector<PortState> port_states_;
  std::vector<double> price_history_;            // oldest first, length h
  std::vector<std::vector<int>> arrival_history_;  // oldest first, length h
  std::optional<double> last_price_;
  int slot_ = 0;
  long next_id_ = 0;
  std::vector<SlotTrace> trace_;
  EpisodeStats stats_;
  std::vector<EvSession> departed_;
};

}  // namespace evsched
