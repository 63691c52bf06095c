#pragma once

#include <vector>

namespace evsched {

enum class LpStatus { Optimal, Infeasible, Unbounded };

/// Dense two-phase simplex for small problems:
///   maximize c^T x  subject to  A x <= b,  x >= 0.
/// On Optimal, `x` holds a vertex solution and `value` the objective.
LpStatus solve_lp(const std::vector<std::vector<double>>& A,
                  const std::vector<double>& b,
                  const std::vector<double>& c,
                  std::vector<double>& x,
                  double& value);

}  // namespace evsched
