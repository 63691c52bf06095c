#pragma once

#include <string>
#include <vector>

#include "evsched/env.hpp"
#include "evsched/sac.hpp"

namespace evsched::baselines {

/// Fleet-level action: one service price plus the station's total rate.
struct FleetAction {
  double price = 0.0;
  double total_rate = 0.0;  // kWh per slot, in [0, U]
};

/// Splits a total station rate across ports by least laxity first.
/// laxity = residual_slots - ceil(residual_demand / x_max). Deadline-forced
/// minimum rates are served before any discretionary budget, and the total
/// is floored to their sum so no deadline can be missed.
std::vector<double> llf_dispatch(double total_rate,
                                 const std::vector<PortState>& ports,
                                 double x_max);

int laxity(const PortState& port, double x_max);

enum class FleetMode { Profit, Jpr };

std::string to_string(FleetMode mode);

struct FleetStepOutcome {
  StepResult step;
  double training_reward = 0.0;
};

/// Dispatches the fleet action and advances the environment one slot.
/// The training reward is profit-only or full objective depending on the
/// mode; evaluation metrics always use the full objective.
FleetStepOutcome fleet_step(FleetMode mode, StationEnv& env, const FleetAction& action);

/// 2-dimensional SAC action space (price, total rate) with LLF dispatch.
class FleetAdapter final : public sac::ActionAdapter {
 public:
  explicit FleetAdapter(FleetMode mode) : mode_(mode) {}

  std::string name() const override {
    return mode_ == FleetMode::Profit ? "fleet_profit" : "fleet_jpr";
  }
  int action_dim(const ScenarioConfig&) const override { return 2; }
  sac::BoxBounds bounds(const ScenarioConfig& cfg) const override;
  Action to_env_action(const sac::Vector& raw, const StationEnv& env) const override;
  double training_reward(const RewardBreakdown& r) const override;
  FleetMode mode() const { return mode_; }

 private:
  FleetMode mode_;
};

}  // namespace evsched::baselines
