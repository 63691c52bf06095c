#include "evsched/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace evsched {

namespace {

// Pivoting scheme after the classic KACTL formulation: a dense tableau with
// Bland-ish tie-breaking on variable ids, which is enough for the tiny
// instances this project solves (tens of variables at most).
struct Tableau {
  static constexpr double kEps = 1e-10;
  int m, n;
  std::vector<int> N, B;
  std::vector<std::vector<double>> D;

  Tableau(const std::vector<std::vector<double>>& A,
          const std::vector<double>& b,
          const std::vector<double>& c)
      : m(static_cast<int>(b.size())),
        n(static_cast<int>(c.size())),
        N(n + 1),
        B(m),
        D(m + 2, std::vector<double>(n + 2)) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) D[i][j] = A[i][j];
    for (int i = 0; i < m; ++i) {
      B[i] = n + i;
      D[i][n] = -1;
      D[i][n + 1] = b[i];
    }
    for (int j = 0; j < n; ++j) {
      N[j] = j;
      D[m][j] = -c[j];
    }
    N[n] = -1;
    D[m + 1][n] = 1;
  }

  void pivot(int r, int s) {
    double* a = D[r].data();
    double inv = 1 / a[s];
    for (int i = 0; i < m + 2; ++i) {
      if (i != r && std::abs(D[i][s]) > kEps) {
        double* bset = D[i].data();
        double inv2 = bset[s] * inv;
        for (int j = 0; j < n + 2; ++j) bset[j] -= a[j] * inv2;
        bset[s] = a[s] * inv2;
      }
    }
    for (int j = 0; j < n + 2; ++j)
      if (j != s) D[r][j] *= inv;
    for (int i = 0; i < m + 2; ++i)
      if (i != r) D[i][s] *= -inv;
    D[r][s] = inv;
    std::swap(B[r], N[s]);
  }

  bool simplex(int phase) {
    int x = m + phase - 1;
    for (;;) {
      int s = -1;
      for (int j = 0; j <= n; ++j) {
        if (phase == 2 && N[j] == -1) continue;
        if (s == -1 || std::pair(D[x][j], N[j]) < std::pair(D[x][s], N[s])) s = j;
      }
      if (D[x][s] >= -kEps) return true;
      int r = -1;
      for (int i = 0; i < m; ++i) {
        if (D[i][s] <= kEps) continue;
        if (r == -1 ||
            std::pair(D[i][n + 1] / D[i][s], B[i]) <
                std::pair(D[r][n + 1] / D[r][s], B[r]))
          r = i;
      }
      if (r == -1) return false;  // unbounded
      pivot(r, s);
    }
  }
};

}  // namespace

LpStatus solve_lp(const std::vector<std::vector<double>>& A,
                  const std::vector<double>& b,
                  const std::vector<double>& c,
                  std::vector<double>& x,
                  double& value) {
  if (A.size() != b.size())
    throw std::invalid_argument("solve_lp: A rows must match b size");
  for (const auto& row : A)
    if (row.size() != c.size())
      throw std::invalid_argument("solve_lp: A columns must match c size");

  Tableau t(A, b, c);
  int m = t.m, n = t.n;

  int r = 0;
  for (int i = 1; i < m; ++i)
    if (t.D[i][n + 1] < t.D[r][n + 1]) r = i;
  if (m > 0 && t.D[r][n + 1] < -Tableau::kEps) {
    t.pivot(r, n);
    if (!t.simplex(2) || t.D[m + 1][n + 1] < -Tableau::kEps)
      return LpStatus::Infeasible;
    for (int i = 0; i < m; ++i) {
      if (t.B[i] == -1) {
        int s = 0;
        for (int j = 1; j <= n; ++j)
          if (std::pair(t.D[i][j], t.N[j]) < std::pair(t.D[i][s], t.N[s])) s = j;
        t.pivot(i, s);
      }
    }
  }
  bool ok = t.simplex(1);
  x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (t.B[i] < n) x[t.B[i]] = t.D[i][n + 1];
  value = t.D[m][n + 1];
  return ok ? LpStatus::Optimal : LpStatus::Unbounded;
}

}  // namespace evsched
