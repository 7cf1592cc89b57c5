#include "watersir/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace watersir {

double pump_energy_cost(double flow, double gain_m, double efficiency,
                        double tariff, double gravity) {
  if (!(efficiency > 0.0 && efficiency <= 1.0))
    throw std::invalid_argument("pump efficiency must lie in (0, 1]");
  return tariff * 1000.0 * gravity * flow * gain_m / efficiency;
}

namespace {

std::string describe_status(const Network& net,
                            const std::vector<char>& pump_on) {
  std::ostringstream out;
  bool first = true;
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    if (net.edge(e).kind != EdgeKind::pump) continue;
    out << (first ? "" : ", ") << net.edge(e).id << "="
        << (pump_on[e] ? "on" : "off");
    first = false;
  }
  if (first) out << "no pumps";
  return out.str();
}

}  // namespace

OpsSolution solve_ops(const Network& net,
                      const std::vector<double>& forecast_demands,
                      double efficiency, double tariff) {
  std::vector<int> pumps;
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    if (net.edge(e).kind == EdgeKind::pump) pumps.push_back(static_cast<int>(e));
  if (pumps.size() > 20)
    throw std::invalid_argument("status enumeration limited to 20 pumps");

  bool found = false;
  OpsSolution best;
  int best_on_count = 0;
  std::vector<char> best_status;

  double least_violation = std::numeric_limits<double>::infinity();
  std::string least_violated_combo = "none";

  std::uint64_t combos = std::uint64_t{1} << pumps.size();
  for (std::uint64_t mask = 0; mask < combos; ++mask) {
    std::vector<char> pump_on(net.edge_count(), 1);
    int on_count = 0;
    for (std::size_t b = 0; b < pumps.size(); ++b) {
      bool on = mask & (std::uint64_t{1} << b);
      pump_on[pumps[b]] = on ? 1 : 0;
      on_count += on ? 1 : 0;
    }

    FeasibilityVerdict verdict;
    try {
      FlowSolution sol = solve_tree_flows(net, forecast_demands, pump_on);
      std::vector<int> pattern = derive_sign_pattern(sol.flows);
      verdict = check_feasibility(net, forecast_demands, pump_on, pattern);
    } catch (const StructuralInfeasibility& err) {
      verdict.feasible = false;
      verdict.worst_residual = std::numeric_limits<double>::infinity();
      verdict.worst_constraint = err.what();
    }
    if (!verdict.feasible) {
      if (verdict.worst_residual < least_violation) {
        least_violation = verdict.worst_residual;
        least_violated_combo = describe_status(net, pump_on) + " (" +
                               verdict.worst_constraint + ")";
      }
      continue;
    }

    HydraulicState state = nominal_state(
        net, forecast_demands, pump_on,
        std::vector<int>(net.edge_count(), 0));
    double cost = 0.0;
    for (int e : pumps) {
      if (!pump_on[e]) continue;
      cost += pump_energy_cost(state.flows[e], state.pump_gains[e],
                               efficiency, tariff, net.gravity());
    }

    // Minimum cost; ties go to fewer pumps on, then to the status vector
    // that sorts first with off before on.
    std::vector<char> status;
    for (int e : pumps) status.push_back(pump_on[e]);
    bool better = false;
    if (!found) {
      better = true;
    } else if (cost != best.energy_cost) {
      better = cost < best.energy_cost;
    } else if (on_count != best_on_count) {
      better = on_count < best_on_count;
    } else {
      better = status < best_status;
    }
    if (better) {
      found = true;
      best.pump_on = pump_on;
      best.sign_pattern = derive_sign_pattern(state.flows);
      best.nominal_state = std::move(state);
      best.energy_cost = cost;
      best_on_count = on_count;
      best_status = status;
    }
  }

  if (!found)
    throw OpsInfeasible("no pump status combination is feasible; least "
                        "violated: " +
                        least_violated_combo);
  return best;
}

std::vector<double> forecast_demands(const Network& net) {
  std::vector<double> d(net.node_count(), 0.0);
  for (std::size_t v = 0; v < net.node_count(); ++v) {
    const Node& node = net.node(v);
    if (node.kind == NodeKind::source) continue;
    d[v] = node.fixed_demand
               ? std::clamp(*node.fixed_demand, node.demand_min,
                            node.demand_max)
               : node.demand_min;
  }
  return d;
}

}  // namespace watersir
