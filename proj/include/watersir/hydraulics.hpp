#ifndef WATERSIR_HYDRAULICS_HPP
#define WATERSIR_HYDRAULICS_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "watersir/network.hpp"

// Steady-state hydraulics on a tree. Flows are uniquely determined by the
// demands (leaf-to-root accumulation); heads follow from one anchor head per
// source. Feasibility against the box constraints reduces to an interval
// computation per source subtree because heads are affine in the free
// variables (source head, pump gains), each of which enters the grade of a
// node through at most one path edge.

namespace watersir {

// Demand node cut off from every source, or a component holding more than
// one source (flow split would not be unique).
class StructuralInfeasibility : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Feasibility tolerance on normalized residuals. Box residuals are divided
// by the bound's range, head-interval gaps by 1 m.
inline constexpr double kFeasibilityTol = 1e-6;

// Flow/injection bounds at or beyond this magnitude mean "unbounded".
inline constexpr double kUnboundedFlow = 1e8;

// Active-subgraph structure for a fixed pump status vector. Off pumps are
// removed; every remaining component is rooted at its source (or at an
// arbitrary node when it has none).
struct RootedForest {
  std::vector<int> parent_node;   // per node; -1 at roots
  std::vector<int> parent_edge;   // per node; -1 at roots
  std::vector<int> component;     // per node
  std::vector<int> comp_root;     // per component: root node index
  std::vector<char> comp_has_source;
  std::vector<int> order;         // root-first traversal order
  std::vector<char> edge_active;  // per edge
  // +1 if the declared from->to direction points away from the root.
  std::vector<int> edge_dir;      // 0 for inactive edges
  std::vector<int> edge_child;    // child-side node of an active edge, -1 off
};

// pump_on is indexed by edge; entries on pipe edges are ignored.
RootedForest build_forest(const Network& net, const std::vector<char>& pump_on);

struct FlowSolution {
  std::vector<double> flows;       // per edge, m^3/s, signed w.r.t. from->to
  std::vector<double> injections;  // per node, m^3/s, nonzero only at sources
};

// Unique flows satisfying A^T f = F^G - d on each source's subtree.
// Throws StructuralInfeasibility when a node with nonzero demand sits in a
// component without a source.
FlowSolution solve_tree_flows(const Network& net,
                              const std::vector<double>& demands,
                              const std::vector<char>& pump_on);

// Heads assigned root-to-leaf from the given source heads (pressure head y
// per source node). Gains of on pumps come from their curve unless
// overridden; a curve-less on pump must have an override.
std::vector<double> propagate_heads(
    const Network& net, const std::vector<double>& flows,
    const std::vector<char>& pump_on,
    const std::vector<std::optional<double>>& source_head_y,
    const std::vector<std::optional<double>>& gain_override = {});

struct HydraulicState {
  std::vector<double> flows;       // per edge, m^3/s
  std::vector<double> heads;       // per node, m (pressure head y)
  std::vector<double> pump_gains;  // per edge, m; 0 for pipes and off pumps
  std::vector<char> pump_on;       // per edge; pipes set to 1
  std::vector<double> source_injections;  // per node, m^3/s
  std::vector<int> sign_pattern;   // per edge, in {-1, 0, +1}
};

std::vector<int> derive_sign_pattern(const std::vector<double>& flows,
                                     double deadband = 1e-12);

struct FeasibilityVerdict {
  bool feasible = false;
  double worst_residual = 0.0;   // normalized; see kFeasibilityTol
  std::string worst_constraint;  // offending bound or head equation
};

// Existential feasibility: do source heads (within their bounds) and free
// pump gains exist so that every box bound, flow-direction constraint, pump
// curve, and head-loss relation holds simultaneously? Demands and statuses
// are given. sign_pattern entries of 0 leave the edge direction free.
FeasibilityVerdict check_feasibility(const Network& net,
                                     const std::vector<double>& demands,
                                     const std::vector<char>& pump_on,
                                     const std::vector<int>& sign_pattern,
                                     double tol = kFeasibilityTol);

// As check_feasibility, but additionally materializes a witness operating
// point (concrete source heads and gains at interval midpoints).
// Throws std::runtime_error when infeasible.
HydraulicState nominal_state(const Network& net,
                             const std::vector<double>& demands,
                             const std::vector<char>& pump_on,
                             const std::vector<int>& sign_pattern);

struct StateAudit {
  double mass_residual_rel = 0.0;   // worst nodal conservation residual
  double head_residual_m = 0.0;     // worst per-edge head-equation residual
};

// Re-derives conservation and the pipe/pump head equations from a state.
StateAudit audit_state(const Network& net, const HydraulicState& state,
                       const std::vector<double>& demands);

std::vector<char> all_pumps_on(const Network& net);
std::vector<char> all_pumps_off(const Network& net);

}  // namespace watersir

#endif
