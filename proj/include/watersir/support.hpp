#ifndef WATERSIR_SUPPORT_HPP
#define WATERSIR_SUPPORT_HPP

#include <string>
#include <vector>

#include "watersir/hydraulics.hpp"
#include "watersir/network.hpp"
#include "watersir/scheduler.hpp"

// Support-function maximization over the secure-demand region: given the
// frozen operating regime (pump statuses and flow directions), maximize a
// linear functional of the variable demands subject to the hydraulic
// constraints. Because flows are affine in demands on a tree, the head
// constraints are the only nonlinear (quadratic) part; the solver ascends
// by successive linearization with a trust region, starting from the
// feasible nominal point.

namespace watersir {

struct SIRProblem {
  Network net;
  std::vector<char> pump_on;      // frozen statuses, per edge
  std::vector<int> sign_pattern;  // frozen directions, per edge
  std::vector<int> variable_nodes;     // node indices, dimension N_d
  std::vector<double> fixed_demands;   // per node, m^3/s; 0 at variable/source
  std::vector<double> nominal_values;  // per variable, m^3/s (feasible point)
  std::vector<double> box_lo;          // per variable, m^3/s
  std::vector<double> box_hi;

  std::size_t dimension() const { return variable_nodes.size(); }
  double box_diagonal() const;
};

// Variable nodes are the non-source nodes whose demand box has positive
// width; everything else keeps its fixed demand. Throws when no node
// qualifies.
SIRProblem make_sir_problem(const Network& net, const OpsSolution& ops);

// Same, but the caller picks the variable nodes (and their axis order).
// Each id must name a non-source node with a positive-width demand box.
SIRProblem make_sir_problem(const Network& net, const OpsSolution& ops,
                            const std::vector<std::string>& variable_ids);

// Full |N|-length demand vector: fixed demands, with the given values at
// the variable nodes.
std::vector<double> embed_demands(const SIRProblem& prob,
                                  const std::vector<double>& variable_values);

struct SupportResult {
  std::vector<double> vertex;  // variable demands, m^3/s, length N_d
  double objective = 0.0;      // direction . vertex
  bool converged = false;
  int iterations = 0;
};

// Maximizes direction . d over the feasible variable demands. The returned
// vertex passes check_feasibility when embedded. Non-convergence within
// 200 iterations is reported through the converged flag, not an exception.
SupportResult maximize_support(const SIRProblem& prob,
                               const std::vector<double>& direction);

}  // namespace watersir

#endif
