#include "watersir/hydraulics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace watersir {
namespace {


double signed_loss(double coeff, double flow) {
  return coeff * flow * std::abs(flow);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Grade offset of the child node relative to its parent across one active
// edge: grade_child = grade_parent + s for s in [lo, hi]. The width comes
// from a free pump gain; pipes and curve pumps give a degenerate interval.
Interval grade_shift(const Edge& e, int dir, double flow) {
  double loss = signed_loss(e.headloss_coeff, flow);
  double glo = 0.0, ghi = 0.0;
  if (e.kind == EdgeKind::pump) {
    if (e.has_curve()) {
      glo = ghi = *e.pump_a1 * flow + *e.pump_a0;
    } else {
      glo = e.pump_gain_min_m;
      ghi = e.pump_gain_max_m;
    }
  }
  // Declared from->to: grade_from - grade_to + gain = loss.
  if (dir > 0) return {glo - loss, ghi - loss};  // child is the to-node
  return {loss - ghi, loss - glo};               // child is the from-node
}

// Bottom-up attainable-grade intervals per node. I[v] is the set of grades
// at v for which v's subtree (heads, free gains) can be completed
// feasibly. Empty intersections are reported through `consider` as a gap in
// meters and replaced by their midpoint so the sweep can continue.
std::vector<Interval> grade_intervals(
    const Network& net, const RootedForest& forest,
    const std::vector<double>& flows,
    const std::function<void(double, const std::string&)>& consider) {
  std::vector<Interval> iv(net.node_count());
  for (std::size_t v = 0; v < net.node_count(); ++v) {
    const Node& n = net.node(v);
    iv[v] = {n.elevation_m + n.head_min_m, n.elevation_m + n.head_max_m};
  }
  for (auto it = forest.order.rbegin(); it != forest.order.rend(); ++it) {
    int c = *it;
    int e = forest.parent_edge[c];
    if (e < 0) continue;
    int p = forest.parent_node[c];
    Interval s = grade_shift(net.edge(e), forest.edge_dir[e], flows[e]);
    // grade_p + s must be able to land in iv[c].
    double lo = std::max(iv[p].lo, iv[c].lo - s.hi);
    double hi = std::min(iv[p].hi, iv[c].hi - s.lo);
    if (lo > hi) {
      if (consider)
        consider(lo - hi, "head coupling at node " + net.node(p).id +
                              " via edge " + net.edge(e).id);
      double mid = 0.5 * (lo + hi);
      lo = hi = mid;
    }
    iv[p] = {lo, hi};
  }
  return iv;
}

}  // namespace

RootedForest build_forest(const Network& net,
                          const std::vector<char>& pump_on) {
  if (pump_on.size() != net.edge_count())
    throw std::invalid_argument("pump status vector has wrong length");
  std::size_t n = net.node_count();
  RootedForest f;
  f.parent_node.assign(n, -1);
  f.parent_edge.assign(n, -1);
  f.component.assign(n, -1);
  f.edge_active.assign(net.edge_count(), 0);
  f.edge_dir.assign(net.edge_count(), 0);
  f.edge_child.assign(net.edge_count(), -1);
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    f.edge_active[e] =
        net.edge(e).kind == EdgeKind::pipe || pump_on[e] ? 1 : 0;

  auto grow = [&](int root, int comp) {
    f.component[root] = comp;
    f.order.push_back(root);
    std::deque<int> queue{root};
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      for (int e : net.edges_at(v)) {
        if (!f.edge_active[e]) continue;
        const Edge& edge = net.edge(e);
        int w = net.node_index(edge.from) == v ? net.node_index(edge.to)
                                               : net.node_index(edge.from);
        if (f.component[w] >= 0) {
          if (e == f.parent_edge[v]) continue;  // traversal edge itself
          throw StructuralInfeasibility(
              "active subnetwork is not a forest near edge " + edge.id);
        }
        if (net.node(w).kind == NodeKind::source &&
            f.comp_has_source[comp]) {
          throw StructuralInfeasibility(
              "sources " + net.node(f.comp_root[comp]).id + " and " +
              net.node(w).id +
              " share a connected component; flow split is not unique");
        }
        f.component[w] = comp;
        f.parent_node[w] = v;
        f.parent_edge[w] = e;
        f.edge_dir[e] = net.node_index(edge.from) == v ? 1 : -1;
        f.edge_child[e] = w;
        f.order.push_back(w);
        queue.push_back(w);
      }
    }
  };

  for (std::size_t v = 0; v < n; ++v) {
    if (net.node(v).kind != NodeKind::source || f.component[v] >= 0) continue;
    f.comp_root.push_back(static_cast<int>(v));
    f.comp_has_source.push_back(1);
    grow(static_cast<int>(v), static_cast<int>(f.comp_root.size()) - 1);
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (f.component[v] >= 0) continue;
    f.comp_root.push_back(static_cast<int>(v));
    f.comp_has_source.push_back(0);
    grow(static_cast<int>(v), static_cast<int>(f.comp_root.size()) - 1);
  }
  return f;
}

FlowSolution solve_tree_flows(const Network& net,
                              const std::vector<double>& demands,
                              const std::vector<char>& pump_on) {
  if (demands.size() != net.node_count())
    throw std::invalid_argument("demand vector has wrong length");
  RootedForest forest = build_forest(net, pump_on);
  for (std::size_t v = 0; v < net.node_count(); ++v) {
    if (!forest.comp_has_source[forest.component[v]] && demands[v] != 0.0)
      throw StructuralInfeasibility("demand at node " + net.node(v).id +
                                    " is cut off from every source");
  }
  FlowSolution sol;
  sol.flows.assign(net.edge_count(), 0.0);
  sol.injections.assign(net.node_count(), 0.0);
  std::vector<double> subtree(demands);
  for (auto it = forest.order.rbegin(); it != forest.order.rend(); ++it) {
    int v = *it;
    int e = forest.parent_edge[v];
    if (e < 0) continue;  // component root
    sol.flows[e] = forest.edge_dir[e] * subtree[v];
    subtree[forest.parent_node[v]] += subtree[v];
  }
  for (std::size_t c = 0; c < forest.comp_root.size(); ++c) {
    if (forest.comp_has_source[c])
      sol.injections[forest.comp_root[c]] = subtree[forest.comp_root[c]];
  }
  return sol;
}

std::vector<double> propagate_heads(
    const Network& net, const std::vector<double>& flows,
    const std::vector<char>& pump_on,
    const std::vector<std::optional<double>>& source_head_y,
    const std::vector<std::optional<double>>& gain_override) {
  if (flows.size() != net.edge_count())
    throw std::invalid_argument("flow vector has wrong length");
  if (source_head_y.size() != net.node_count())
    throw std::invalid_argument("source head vector has wrong length");
  RootedForest forest = build_forest(net, pump_on);
  std::vector<double> grade(net.node_count(),
                            std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < forest.comp_root.size(); ++c) {
    int r = forest.comp_root[c];
    if (!forest.comp_has_source[c] || !source_head_y[r])
      throw std::invalid_argument("no anchored head for the component of " +
                                  net.node(r).id);
    grade[r] = net.node(r).elevation_m + *source_head_y[r];
  }
  for (int v : forest.order) {
    int e = forest.parent_edge[v];
    if (e < 0) continue;
    const Edge& edge = net.edge(e);
    double gain = 0.0;
    if (edge.kind == EdgeKind::pump) {
      if (!gain_override.empty() && gain_override[e])
        gain = *gain_override[e];
      else if (edge.has_curve())
        gain = *edge.pump_a1 * flows[e] + *edge.pump_a0;
      else
        throw std::invalid_argument("pump " + edge.id +
                                    " has no curve; pass an explicit gain");
    }
    double loss = signed_loss(edge.headloss_coeff, flows[e]);
    double p = grade[forest.parent_node[v]];
    grade[v] = forest.edge_dir[e] > 0 ? p + gain - loss : p + loss - gain;
  }
  std::vector<double> heads(net.node_count());
  for (std::size_t v = 0; v < net.node_count(); ++v)
    heads[v] = grade[v] - net.node(v).elevation_m;
  return heads;
}

std::vector<int> derive_sign_pattern(const std::vector<double>& flows,
                                     double deadband) {
  std::vector<int> pattern(flows.size(), 0);
  for (std::size_t e = 0; e < flows.size(); ++e) {
    if (flows[e] > deadband)
      pattern[e] = 1;
    else if (flows[e] < -deadband)
      pattern[e] = -1;
  }
  return pattern;
}

FeasibilityVerdict check_feasibility(const Network& net,
                                     const std::vector<double>& demands,
                                     const std::vector<char>& pump_on,
                                     const std::vector<int>& sign_pattern,
                                     double tol) {
  if (sign_pattern.size() != net.edge_count())
    throw std::invalid_argument("sign pattern has wrong length");
  RootedForest forest = build_forest(net, pump_on);
  FlowSolution sol = solve_tree_flows(net, demands, pump_on);

  FeasibilityVerdict verdict;
  auto consider = [&](double residual, const std::string& constraint) {
    if (residual > verdict.worst_residual) {
      verdict.worst_residual = residual;
      verdict.worst_constraint = constraint;
    }
  };

  for (std::size_t v = 0; v < net.node_count(); ++v) {
    const Node& node = net.node(v);
    double range = node.demand_max - node.demand_min;
    double norm = range > 0 ? range : std::max(1.0, std::abs(node.demand_max));
    double out = std::max(node.demand_min - demands[v],
                          demands[v] - node.demand_max);
    consider(out / norm, "demand bound at node " + node.id);
    if (node.kind == NodeKind::source) {
      bool ilo = node.inject_min > -kUnboundedFlow;
      bool ihi = node.inject_max < kUnboundedFlow;
      double inorm = ilo && ihi && node.inject_max > node.inject_min
                         ? node.inject_max - node.inject_min
                         : 1.0;
      if (ilo || ihi) {
        double iout =
            std::max(ilo ? node.inject_min - sol.injections[v] : -1.0,
                     ihi ? sol.injections[v] - node.inject_max : -1.0);
        consider(iout / inorm, "injection bound at source " + node.id);
      }
    }
  }

  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    if (!forest.edge_active[e]) continue;
    const Edge& edge = net.edge(e);
    double f = sol.flows[e];
    bool lo_set = edge.flow_min > -kUnboundedFlow;
    bool hi_set = edge.flow_max < kUnboundedFlow;
    double fnorm = lo_set && hi_set && edge.flow_max > edge.flow_min
                       ? edge.flow_max - edge.flow_min
                       : 1.0;
    if (lo_set || hi_set) {
      double out = std::max(lo_set ? edge.flow_min - f : -1.0,
                            hi_set ? f - edge.flow_max : -1.0);
      consider(out / fnorm, "flow bound on edge " + edge.id);
    }
    if (sign_pattern[e] != 0)
      consider(-sign_pattern[e] * f / fnorm,
               "flow direction on edge " + edge.id);
    if (edge.kind == EdgeKind::pump && edge.has_curve()) {
      double gain = *edge.pump_a1 * f + *edge.pump_a0;
      double grange = edge.pump_gain_max_m - edge.pump_gain_min_m;
      double gnorm =
          grange > 0 ? grange : std::max(1.0, std::abs(edge.pump_gain_max_m));
      double gout = std::max(edge.pump_gain_min_m - gain,
                             gain - edge.pump_gain_max_m);
      consider(gout / gnorm, "gain bound on pump " + edge.id);
    }
  }

  grade_intervals(net, forest, sol.flows, consider);

  verdict.feasible = verdict.worst_residual <= tol;
  if (verdict.feasible && verdict.worst_constraint.empty())
    verdict.worst_constraint = "none";
  return verdict;
}

HydraulicState nominal_state(const Network& net,
                             const std::vector<double>& demands,
                             const std::vector<char>& pump_on,
                             const std::vector<int>& sign_pattern) {
  FeasibilityVerdict verdict =
      check_feasibility(net, demands, pump_on, sign_pattern);
  if (!verdict.feasible)
    throw std::runtime_error("state is infeasible; worst constraint: " +
                             verdict.worst_constraint);

  RootedForest forest = build_forest(net, pump_on);
  FlowSolution sol = solve_tree_flows(net, demands, pump_on);
  std::vector<Interval> iv = grade_intervals(net, forest, sol.flows, nullptr);

  HydraulicState state;
  state.flows = sol.flows;
  state.source_injections = sol.injections;
  state.pump_on = pump_on;
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    if (net.edge(e).kind == EdgeKind::pipe) state.pump_on[e] = 1;
  state.pump_gains.assign(net.edge_count(), 0.0);
  state.sign_pattern = derive_sign_pattern(sol.flows);

  std::vector<double> grade(net.node_count(), 0.0);
  for (int v : forest.order) {
    int e = forest.parent_edge[v];
    if (e < 0) {
      grade[v] = 0.5 * (iv[v].lo + iv[v].hi);
      continue;
    }
    const Edge& edge = net.edge(e);
    double p = grade[forest.parent_node[v]];
    double loss = signed_loss(edge.headloss_coeff, sol.flows[e]);
    if (edge.kind == EdgeKind::pump && !edge.has_curve()) {
      // Free gain: pick the midpoint of the gains that keep the child's
      // grade inside its attainable interval.
      double glo, ghi;
      if (forest.edge_dir[e] > 0) {  // grade_child = p + g - loss
        glo = std::max(edge.pump_gain_min_m, iv[v].lo - p + loss);
        ghi = std::min(edge.pump_gain_max_m, iv[v].hi - p + loss);
      } else {  // grade_child = p + loss - g
        glo = std::max(edge.pump_gain_min_m, p + loss - iv[v].hi);
        ghi = std::min(edge.pump_gain_max_m, p + loss - iv[v].lo);
      }
      double g = 0.5 * (glo + ghi);
      state.pump_gains[e] = g;
      grade[v] = forest.edge_dir[e] > 0 ? p + g - loss : p + loss - g;
    } else {
      double gain = edge.kind == EdgeKind::pump
                        ? *edge.pump_a1 * sol.flows[e] + *edge.pump_a0
                        : 0.0;
      if (edge.kind == EdgeKind::pump) state.pump_gains[e] = gain;
      grade[v] = forest.edge_dir[e] > 0 ? p + gain - loss : p + loss - gain;
    }
  }
  state.heads.resize(net.node_count());
  for (std::size_t v = 0; v < net.node_count(); ++v)
    state.heads[v] = grade[v] - net.node(v).elevation_m;
  return state;
}

StateAudit audit_state(const Network& net, const HydraulicState& state,
                       const std::vector<double>& demands) {
  StateAudit audit;
  for (std::size_t v = 0; v < net.node_count(); ++v) {
    double balance = state.source_injections[v] - demands[v];
    double scale = std::abs(state.source_injections[v]) + std::abs(demands[v]);
    for (int e : net.edges_at(v)) {
      balance -= net.incidence()[e][v] * state.flows[e];
      scale += std::abs(state.flows[e]);
    }
    double rel = std::abs(balance) / std::max(scale, 1e-12);
    audit.mass_residual_rel = std::max(audit.mass_residual_rel, rel);
  }
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const Edge& edge = net.edge(e);
    if (edge.kind == EdgeKind::pump && !state.pump_on[e]) continue;
    int i = net.node_index(edge.from);
    int j = net.node_index(edge.to);
    double gi = state.heads[i] + net.node(i).elevation_m;
    double gj = state.heads[j] + net.node(j).elevation_m;
    double gain = edge.kind == EdgeKind::pump ? state.pump_gains[e] : 0.0;
    double res =
        gi - gj + gain - signed_loss(edge.headloss_coeff, state.flows[e]);
    audit.head_residual_m = std::max(audit.head_residual_m, std::abs(res));
  }
  return audit;
}

std::vector<char> all_pumps_on(const Network& net) {
  return std::vector<char>(net.edge_count(), 1);
}

std::vector<char> all_pumps_off(const Network& net) {
  std::vector<char> status(net.edge_count(), 1);
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    if (net.edge(e).kind == EdgeKind::pump) status[e] = 0;
  return status;
}

}  // namespace watersir
