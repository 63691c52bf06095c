#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "evsched/types.hpp"

namespace evsched::safelayer {

/// Raised when an instance admits no feasible point (sum of lower bounds
/// exceeds the budget, or a lower bound exceeds the per-port cap).
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// One projection problem: find rates x minimizing ||x - proposal||_1
/// subject to lower <= x <= upper (elementwise) and sum(x) <= budget.
struct ProjectionInstance {
  std::vector<double> proposal;
  std::vector<double> lower;
  double upper = 0.0;
  double budget = 0.0;
};

struct ProjectionResult {
  std::vector<double> rates;
  double l1_cost = 0.0;
  bool clipped = false;  // budget constraint was binding
};

/// Deadline-induced minimum rate for one port:
/// max(0, residual_demand - (residual_slots - 1) * x_max).
/// Throws InfeasibleError when residual demand cannot fit in the
/// remaining slots even at full rate.
double deadline_lower_bound(const PortState& port, double x_max);

/// Lower bounds for every port with residual demand, in ascending port
/// order. Ports without demand are excluded.
std::vector<double> lower_bounds(const std::vector<PortState>& ports, double x_max);

/// Greedy exact L1 projection: clamp into [lower, upper], then if the sum
/// exceeds the budget reduce ports in descending slack order (ties by lower
/// port index) until the sum equals the budget.
ProjectionResult project(const ProjectionInstance& instance);

/// Reference optimum via a dense-simplex LP on the split formulation
/// x = proposal + p - n. Intended for tests and cross-checks.
ProjectionResult lp_oracle(const ProjectionInstance& instance);

/// True iff the sum of deadline lower bounds fits in the budget. Never
/// throws; a port in an impossible state just makes the answer false.
bool check_feasible(const std::vector<PortState>& ports, double x_max, double budget);

}  // namespace evsched::safelayer
