#include <doctest.h>

#include <random>

#include "evsched/simplex.hpp"

using evsched::LpStatus;
using evsched::solve_lp;

TEST_SUITE_BEGIN("simplex");

TEST_CASE("two-variable textbook problem") {
  // max x + y s.t. x + 2y <= 4, 3x + y <= 6
  std::vector<std::vector<double>> A = {{1, 2}, {3, 1}};
  std::vector<double> b = {4, 6};
  std::vector<double> c = {1, 1};
  std::vector<double> x;
  double value = 0;
  REQUIRE(solve_lp(A, b, c, x, value) == LpStatus::Optimal);
  CHECK(value == doctest::Approx(2.8).epsilon(1e-9));  // x = 1.6, y = 1.2
  CHECK(x[0] == doctest::Approx(1.6));
  CHECK(x[1] == doctest::Approx(1.2));
}

TEST_CASE("infeasible system detected") {
  // x <= -1 with x >= 0
  std::vector<std::vector<double>> A = {{1}};
  std::vector<double> b = {-1};
  std::vector<double> c = {1};
  std::vector<double> x;
  double value = 0;
  CHECK(solve_lp(A, b, c, x, value) == LpStatus::Infeasible);
}

TEST_CASE("unbounded detected") {
  std::vector<std::vector<double>> A = {{-1}};
  std::vector<double> b = {0};
  std::vector<double> c = {1};
  std::vector<double> x;
  double value = 0;
  CHECK(solve_lp(A, b, c, x, value) == LpStatus::Unbounded);
}

TEST_CASE("random box LPs match the box optimum") {
  // max c^T x s.t. x <= u, x >= 0: optimum picks u where c > 0.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  std::uniform_real_distribution<double> ub(0.5, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + int(rng() % 6);
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    std::vector<double> b(n), c(n);
    double expect = 0.0;
    for (int i = 0; i < n; ++i) {
      A[i][i] = 1.0;
      b[i] = ub(rng);
      c[i] = coeff(rng);
      if (c[i] > 0) expect += c[i] * b[i];
    }
    std::vector<double> x;
    double value = 0;
    REQUIRE(solve_lp(A, b, c, x, value) == LpStatus::Optimal);
    CHECK(value == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_SUITE_END();
