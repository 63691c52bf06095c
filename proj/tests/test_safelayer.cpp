#include <doctest.h>

#include <numeric>
#include <random>

#include "evsched/safelayer.hpp"

using namespace evsched;
using namespace evsched::safelayer;

namespace {

ProjectionInstance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(1, 7);
  const int n = nd(rng);
  ProjectionInstance inst;
  inst.upper = 7.0;
  inst.budget = 5.6 * n;
  std::uniform_real_distribution<double> prop(-2.0, 10.0);
  for (int i = 0; i < n; ++i) inst.proposal.push_back(prop(rng));
  // feasible lower bounds: scale random draws so their sum stays in budget
  std::uniform_real_distribution<double> low(0.0, 7.0);
  std::vector<double> l(n);
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    l[i] = low(rng);
    sum += l[i];
  }
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  double target = frac(rng) * inst.budget;
  if (sum > target)
    for (double& v : l) v *= target / sum;
  inst.lower = l;
  return inst;
}

double sum(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

TEST_SUITE_BEGIN("safelayer");

TEST_CASE("lower_bounds from residual state") {
  CHECK(deadline_lower_bound({10.0, 2}, 7.0) == doctest::Approx(3.0));
  CHECK(deadline_lower_bound({5.0, 3}, 7.0) == doctest::Approx(0.0));
  CHECK(deadline_lower_bound({7.0, 1}, 7.0) == doctest::Approx(7.0));
  CHECK_THROWS_AS(deadline_lower_bound({15.0, 2}, 7.0), InfeasibleError);

  std::vector<PortState> ports = {{10.0, 2}, {0.0, 0}, {5.0, 3}, {0.0, 4}, {7.0, 1}};
  auto l = lower_bounds(ports, 7.0);
  REQUIRE(l.size() == 3);  // only ports with residual demand
  CHECK(l[0] == doctest::Approx(3.0));
  CHECK(l[1] == doctest::Approx(0.0));
  CHECK(l[2] == doctest::Approx(7.0));
}

TEST_CASE("project keeps feasible proposals untouched") {
  ProjectionInstance inst{{5, 5, 5}, {0, 0, 0}, 7.0, 16.8};
  auto res = project(inst);
  CHECK(res.l1_cost == doctest::Approx(0.0));
  CHECK_FALSE(res.clipped);
  for (int i = 0; i < 3; ++i) CHECK(res.rates[i] == doctest::Approx(5.0));
}

TEST_CASE("project reduces to the budget with minimal L1 cost") {
  ProjectionInstance inst{{7, 7, 7}, {0, 0, 0}, 7.0, 16.8};
  auto res = project(inst);
  CHECK(res.clipped);
  CHECK(sum(res.rates) == doctest::Approx(16.8).epsilon(1e-12));
  CHECK(res.l1_cost == doctest::Approx(21.0 - 16.8));
  auto lp = lp_oracle(inst);
  CHECK(lp.l1_cost == doctest::Approx(res.l1_cost).epsilon(1e-9));
}

TEST_CASE("project clamps into the box") {
  ProjectionInstance inst{{-1, 9}, {0, 3}, 7.0, 14.0};
  auto res = project(inst);
  CHECK(res.rates[0] == doctest::Approx(0.0));
  CHECK(res.rates[1] == doctest::Approx(7.0));
  auto lp = lp_oracle(inst);
  CHECK(lp.l1_cost == doctest::Approx(res.l1_cost).epsilon(1e-9));
}

TEST_CASE("infeasible instance raises") {
  ProjectionInstance inst{{1, 1}, {7, 7}, 7.0, 11.2};
  CHECK_THROWS_AS(project(inst), InfeasibleError);
  CHECK_THROWS_AS(lp_oracle(inst), InfeasibleError);
}

TEST_CASE("lp_oracle box-only cases") {
  // one port, proposal over the cap
  ProjectionInstance one{{10.0}, {0.0}, 7.0, 28.0};
  auto r1 = lp_oracle(one);
  CHECK(r1.rates[0] == doctest::Approx(7.0));
  CHECK(r1.l1_cost == doctest::Approx(3.0));

  // budget beyond sum of caps: identity on clamp
  ProjectionInstance big{{3.0, 9.0, -1.0}, {0.0, 0.0, 0.0}, 7.0, 100.0};
  auto r2 = lp_oracle(big);
  CHECK(r2.rates[0] == doctest::Approx(3.0));
  CHECK(r2.rates[1] == doctest::Approx(7.0));
  CHECK(r2.rates[2] == doctest::Approx(0.0));
}

TEST_CASE("check_feasible") {
  CHECK(check_feasible({}, 7.0, 28.0));
  std::vector<PortState> forced = {{7.0, 1}, {7.0, 1}};
  CHECK_FALSE(check_feasible(forced, 7.0, 11.2));
  std::vector<PortState> boundary = {{7.0, 1}, {4.2, 1}};
  CHECK(check_feasible(boundary, 7.0, 11.2));
  // broken state answers false instead of throwing
  std::vector<PortState> broken = {{20.0, 1}};
  CHECK_FALSE(check_feasible(broken, 7.0, 28.0));
}

TEST_CASE("greedy matches the LP oracle on random instances") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    ProjectionInstance inst = random_instance(rng);
    auto greedy = project(inst);
    auto lp = lp_oracle(inst);
    CHECK(greedy.l1_cost == doctest::Approx(lp.l1_cost).epsilon(1e-6));
    // constraints hold exactly
    double s = 0;
    for (size_t i = 0; i < greedy.rates.size(); ++i) {
      CHECK(greedy.rates[i] >= inst.lower[i] - 1e-9);
      CHECK(greedy.rates[i] <= inst.upper + 1e-9);
      s += greedy.rates[i];
    }
    CHECK(s <= inst.budget + 1e-9);
  }
}

TEST_CASE("projection is idempotent and identity on feasible points") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    ProjectionInstance inst = random_instance(rng);
    auto once = project(inst);
    ProjectionInstance again = inst;
    again.proposal = once.rates;
    auto twice = project(again);
    CHECK(twice.l1_cost == doctest::Approx(0.0).epsilon(1e-9));
    for (size_t i = 0; i < once.rates.size(); ++i)
      CHECK(twice.rates[i] == doctest::Approx(once.rates[i]).epsilon(1e-12));
  }
}

TEST_SUITE_END();
