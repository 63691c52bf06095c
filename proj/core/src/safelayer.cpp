#include "evsched/safelayer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "evsched/simplex.hpp"

namespace evsched::safelayer {

namespace {
constexpr double kTol = 1e-9;

void validate_instance(const ProjectionInstance& inst) {
  if (inst.proposal.size() != inst.lower.size())
    throw std::invalid_argument("projection: proposal/lower size mismatch");
  if (inst.budget <= 0.0 && !inst.proposal.empty())
    throw InfeasibleError("projection: non-positive budget");
  double lower_sum = 0.0;
  for (size_t i = 0; i < inst.lower.size(); ++i) {
    if (inst.lower[i] < -kTol || inst.lower[i] > inst.upper + kTol) {
      std::ostringstream oss;
      oss << "projection: lower[" << i << "]=" << inst.lower[i]
          << " outside [0, " << inst.upper << "]";
      throw InfeasibleError(oss.str());
    }
    lower_sum += inst.lower[i];
  }
  if (lower_sum > inst.budget + kTol) {
    std::ostringstream oss;
    oss << "projection: sum of lower bounds " << lower_sum
        << " exceeds budget " << inst.budget << " (ports=" << inst.lower.size() << ")";
    throw InfeasibleError(oss.str());
  }
}
}  // namespace

double deadline_lower_bound(const PortState& port, double x_max) {
  if (!port.has_demand()) return 0.0;
  double room = static_cast<double>(port.residual_slots) * x_max;
  if (port.residual_demand_kwh > room + kTol) {
    std::ostringstream oss;
    oss << "port state infeasible: residual demand " << port.residual_demand_kwh
        << " kWh > " << port.residual_slots << " slots * " << x_max << " kWh";
    throw InfeasibleError(oss.str());
  }
  double lb = port.residual_demand_kwh -
              static_cast<double>(port.residual_slots - 1) * x_max;
  return std::max(0.0, lb);
}

std::vector<double> lower_bounds(const std::vector<PortState>& ports, double x_max) {
  std::vector<double> out;
  out.reserve(ports.size());
  for (const auto& p : ports)
    if (p.has_demand()) out.push_back(deadline_lower_bound(p, x_max));
  return out;
}

ProjectionResult project(const ProjectionInstance& inst) {
  validate_instance(inst);
  const size_t n = inst.proposal.size();
  ProjectionResult res;
  res.rates.resize(n);

  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    res.rates[i] = std::clamp(inst.proposal[i], inst.lower[i], inst.upper);
    sum += res.rates[i];
  }

  if (sum > inst.budget + kTol) {
    res.clipped = true;
    // Reduce ports with the largest slack above their lower bound first;
    // any reduction pattern within the slacks has identical L1 cost, the
    // ordering just fixes a deterministic representative.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      double sa = res.rates[a] - inst.lower[a];
      double sb = res.rates[b] - inst.lower[b];
      if (sa != sb) return sa > sb;
      return a < b;
    });
    double excess = sum - inst.budget;
    for (size_t idx : order) {
      if (excess <= 0.0) break;
      double slack = res.rates[idx] - inst.lower[idx];
      double cut = std::min(slack, excess);
      res.rates[idx] -= cut;
      excess -= cut;
    }
  }

  double cost = 0.0;
  for (size_t i = 0; i < n; ++i) cost += std::abs(res.rates[i] - inst.proposal[i]);
  res.l1_cost = cost;
  return res;
}

ProjectionResult lp_oracle(const ProjectionInstance& inst) {
  validate_instance(inst);
  const size_t n = inst.proposal.size();
  if (n == 0) return ProjectionResult{{}, 0.0, false};

  // Variables p_i, n_i >= 0 with x_i = proposal_i + p_i - n_i.
  // maximize -(sum p + sum n)
  //   proposal + p - n <= upper       ->  p_i - n_i <= upper - proposal_i
  //   proposal + p - n >= lower       -> -p_i + n_i <= proposal_i - lower_i
  //   sum(proposal + p - n) <= budget ->  sum p - sum n <= budget - sum proposal
  const size_t nv = 2 * n;
  std::vector<std::vector<double>> A(2 * n + 1, std::vector<double>(nv, 0.0));
  std::vector<double> b(2 * n + 1, 0.0);
  std::vector<double> c(nv, -1.0);
  double proposal_sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    A[i][i] = 1.0;
    A[i][n + i] = -1.0;
    b[i] = inst.upper - inst.proposal[i];
    A[n + i][i] = -1.0;
    A[n + i][n + i] = 1.0;
    b[n + i] = inst.proposal[i] - inst.lower[i];
    A[2 * n][i] = 1.0;
    A[2 * n][n + i] = -1.0;
    proposal_sum += inst.proposal[i];
  }
  b[2 * n] = inst.budget - proposal_sum;

  std::vector<double> v;
  double value = 0.0;
  LpStatus status = solve_lp(A, b, c, v, value);
  if (status == LpStatus::Infeasible)
    throw InfeasibleError("lp_oracle: instance infeasible");
  if (status == LpStatus::Unbounded)
    throw std::logic_error("lp_oracle: unbounded (cannot happen for this LP)");

  ProjectionResult res;
  res.rates.resize(n);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    res.rates[i] = inst.proposal[i] + v[i] - v[n + i];
    sum += res.rates[i];
  }
  res.l1_cost = -value;
  res.clipped = sum >= inst.budget - kTol;
  return res;
}

bool check_feasible(const std::vector<PortState>& ports, double x_max, double budget) {
  double sum = 0.0;
  for (const auto& p : ports) {
    if (!p.has_demand()) continue;
    double room = static_cast<double>(p.residual_slots) * x_max;
    if (p.residual_demand_kwh > room + kTol) return false;
    sum += std::max(0.0, p.residual_demand_kwh -
                             static_cast<double>(p.residual_slots - 1) * x_max);
  }
  return sum <= budget + kTol;
}

}  // namespace evsched::safelayer
