#include "watersir/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace watersir {
namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;

struct Tableau {
  int rows = 0;
  int cols = 0;  // structural + slack + artificial, excluding rhs
  std::vector<std::vector<double>> t;  // rows x (cols + 1), last col = rhs
  std::vector<int> basis;              // basic column per row

  double value(int row, int col) const { return t[row][col]; }
  double rhs(int row) const { return t[row][cols]; }

  void pivot(int row, int col) {
    double p = t[row][col];
    for (double& v : t[row]) v /= p;
    for (int i = 0; i < rows; ++i) {
      if (i == row || t[i][col] == 0.0) continue;
      double factor = t[i][col];
      for (int j = 0; j <= cols; ++j) t[i][j] -= factor * t[row][j];
    }
    basis[row] = col;
  }
};

// Maximizes cost over the tableau with Bland's rule. `allowed` masks the
// columns eligible to enter the basis. Returns false when unbounded.
bool run_simplex(Tableau& tab, const std::vector<double>& cost,
                 const std::vector<char>& allowed) {
  for (int iter = 0; iter < 100000; ++iter) {
    // Reduced costs priced against the current basis.
    std::vector<double> y(tab.rows);
    for (int i = 0; i < tab.rows; ++i) y[i] = cost[tab.basis[i]];
    int entering = -1;
    for (int j = 0; j < tab.cols; ++j) {
      if (!allowed[j]) continue;
      double r = cost[j];
      for (int i = 0; i < tab.rows; ++i) r -= y[i] * tab.value(i, j);
      if (r > kPivotTol) {
        entering = j;  // Bland: first improving index
        break;
      }
    }
    if (entering < 0) return true;

    int leaving = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < tab.rows; ++i) {
      double a = tab.value(i, entering);
      if (a <= kPivotTol) continue;
      double ratio = tab.rhs(i) / a;
      if (ratio < best_ratio - kPivotTol ||
          (std::abs(ratio - best_ratio) <= kPivotTol &&
           (leaving < 0 || tab.basis[i] < tab.basis[leaving]))) {
        best_ratio = ratio;
        leaving = i;
      }
    }
    if (leaving < 0) return false;  // unbounded along entering column
    tab.pivot(leaving, entering);
  }
  throw std::runtime_error("simplex failed to terminate");
}

}  // namespace

LpResult solve_lp(const LinearProgram& lp) {
  int n = lp.num_vars;
  int m = static_cast<int>(lp.rows.size());
  if (static_cast<int>(lp.c.size()) != n ||
      static_cast<int>(lp.rhs.size()) != m)
    throw std::invalid_argument("inconsistent LP dimensions");

  int artificials = 0;
  for (double b : lp.rhs)
    if (b < 0) ++artificials;

  Tableau tab;
  tab.rows = m;
  tab.cols = n + m + artificials;
  tab.t.assign(m, std::vector<double>(tab.cols + 1, 0.0));
  tab.basis.assign(m, -1);

  int next_artificial = n + m;
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(lp.rows[i].size()) != n)
      throw std::invalid_argument("inconsistent LP row length");
    double sign = lp.rhs[i] < 0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) tab.t[i][j] = sign * lp.rows[i][j];
    tab.t[i][n + i] = sign;  // slack
    tab.t[i][tab.cols] = sign * lp.rhs[i];
    if (sign < 0) {
      tab.t[i][next_artificial] = 1.0;
      tab.basis[i] = next_artificial++;
    } else {
      tab.basis[i] = n + i;
    }
  }

  std::vector<char> allowed(tab.cols, 1);
  if (artificials > 0) {
    std::vector<double> phase1(tab.cols, 0.0);
    for (int j = n + m; j < tab.cols; ++j) phase1[j] = -1.0;
    if (!run_simplex(tab, phase1, allowed))
      throw std::runtime_error("phase-1 LP unbounded");
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
      if (tab.basis[i] >= n + m) infeas += tab.rhs(i);
    if (infeas > kFeasTol) return {LpStatus::infeasible, 0.0, {}};
    // Pivot lingering zero-level artificials out of the basis when possible.
    for (int i = 0; i < m; ++i) {
      if (tab.basis[i] < n + m) continue;
      for (int j = 0; j < n + m; ++j) {
        if (std::abs(tab.value(i, j)) > kPivotTol) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }
  for (int j = n + m; j < tab.cols; ++j) allowed[j] = 0;

  std::vector<double> phase2(tab.cols, 0.0);
  for (int j = 0; j < n; ++j) phase2[j] = lp.c[j];
  if (!run_simplex(tab, phase2, allowed)) return {LpStatus::unbounded, 0.0, {}};

  LpResult result;
  result.status = LpStatus::optimal;
  result.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (tab.basis[i] < n) result.x[tab.basis[i]] = tab.rhs(i);
  result.objective = 0.0;
  for (int j = 0; j < n; ++j) result.objective += lp.c[j] * result.x[j];
  return result;
}

}  // namespace watersir
