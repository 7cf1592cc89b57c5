#ifndef WATERSIR_SIMPLEX_HPP
#define WATERSIR_SIMPLEX_HPP

#include <vector>

// Small dense LP solver: maximize c.x subject to A x <= b, x >= 0.
// Two-phase tableau simplex with Bland's rule, adequate for the
// few-variable subproblems produced by the support maximizer.

namespace watersir {

struct LinearProgram {
  int num_vars = 0;
  std::vector<double> c;                  // length num_vars
  std::vector<std::vector<double>> rows;  // each length num_vars
  std::vector<double> rhs;                // may be negative
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

LpResult solve_lp(const LinearProgram& lp);

}  // namespace watersir

#endif
