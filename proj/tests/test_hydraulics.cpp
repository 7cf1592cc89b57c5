// Tests for tree flow solving, head propagation, state audits, and the
// interval feasibility check.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "watersir/hydraulics.hpp"
#include "watersir/netfile.hpp"
#include "watersir/network.hpp"

using namespace watersir;

namespace {

Node source(const std::string& id, double elev, double ymin, double ymax) {
  Node n;
  n.id = id;
  n.kind = NodeKind::source;
  n.elevation_m = elev;
  n.head_min_m = ymin;
  n.head_max_m = ymax;
  n.inject_min = -kUnboundedFlow * 10;
  n.inject_max = kUnboundedFlow * 10;
  return n;
}

Node junction(const std::string& id, double elev, double demand) {
  Node n;
  n.id = id;
  n.elevation_m = elev;
  n.head_min_m = 0.0;
  n.head_max_m = 100.0;
  n.fixed_demand = demand;
  n.demand_min = demand;
  n.demand_max = demand;
  return n;
}

Edge pipe(const std::string& id, const std::string& from,
          const std::string& to, double length, double diameter) {
  Edge e;
  e.id = id;
  e.from = from;
  e.to = to;
  e.length_m = length;
  e.diameter_m = diameter;
  e.friction_factor = 0.02;
  e.headloss_coeff = headloss_coefficient(length, diameter, 0.02);
  return e;
}

Network load_example(const std::string& name) {
  return parse_network(read_file(std::string(WATERSIR_DATA_DIR) + "/" + name))
      .net;
}

// Independent flow oracle: the flow through an edge of a tree equals the
// total demand of the nodes on its child side. Computed here by deleting
// the edge and summing demand over the child component via DFS.
double subtree_demand(const Network& net, int drop_edge, int child_node,
                      const std::vector<double>& demands,
                      const std::vector<char>& active) {
  std::vector<char> seen(net.node_count(), 0);
  std::vector<int> stack{child_node};
  seen[child_node] = 1;
  double total = 0.0;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    total += demands[v];
    for (int e : net.edges_at(v)) {
      if (e == drop_edge || !active[e]) continue;
      const Edge& ed = net.edge(e);
      int other = net.node_index(ed.from) == v ? net.node_index(ed.to)
                                               : net.node_index(ed.from);
      if (!seen[other]) {
        seen[other] = 1;
        stack.push_back(other);
      }
    }
  }
  return total;
}

}  // namespace

TEST_CASE("single-edge line carries exactly the leaf demand") {
  Network net({source("s", 10, 0, 20), junction("a", 0, 0.004)},
              {pipe("e", "s", "a", 500, 0.1)});
  auto sol = solve_tree_flows(net, {0.0, 0.004}, all_pumps_on(net));
  CHECK(sol.flows[0] == doctest::Approx(0.004).epsilon(1e-15));
  CHECK(sol.injections[0] == doctest::Approx(0.004).epsilon(1e-15));
  CHECK(sol.injections[1] == 0.0);
}

TEST_CASE("zero demand everywhere gives zero flow everywhere") {
  Network net = load_example("system1.wds");
  std::vector<double> demands(net.node_count(), 0.0);
  auto sol = solve_tree_flows(net, demands, all_pumps_off(net));
  for (double f : sol.flows) CHECK(f == 0.0);
  for (double q : sol.injections) CHECK(q == 0.0);
}

TEST_CASE("flows equal child-side demand sums on the bundled systems") {
  for (const std::string name : {"system1.wds", "system2.wds"}) {
    CAPTURE(name);
    Network net = load_example(name);
    // Nominal demands: fixed where declared, box minimum otherwise.
    std::vector<double> demands(net.node_count(), 0.0);
    for (std::size_t i = 0; i < net.node_count(); ++i) {
      const Node& n = net.node(i);
      if (n.kind == NodeKind::source) continue;
      demands[i] = n.fixed_demand ? *n.fixed_demand : n.demand_max * 0.37;
    }
    // Operating statuses: system1 runs by gravity (its well pump would put
    // two sources in one component), system2 needs its pump stage on.
    auto pump_on =
        name == "system2.wds" ? all_pumps_on(net) : all_pumps_off(net);
    auto forest = build_forest(net, pump_on);
    auto sol = solve_tree_flows(net, demands, pump_on);
    for (std::size_t e = 0; e < net.edge_count(); ++e) {
      if (!forest.edge_active[e]) continue;
      int child = forest.edge_child[e];
      double expect =
          subtree_demand(net, static_cast<int>(e), child, demands,
                         forest.edge_active) *
          forest.edge_dir[e];
      CHECK(sol.flows[e] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("system1 root main carries the total fixed demand") {
  Network net = load_example("system1.wds");
  std::vector<double> demands(net.node_count(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    const Node& n = net.node(i);
    if (n.kind == NodeKind::source || !n.fixed_demand) continue;
    demands[i] = *n.fixed_demand;
    total += *n.fixed_demand;
  }
  CHECK(total == doctest::Approx(0.02275).epsilon(1e-12));  // 22.75 L/s
  auto sol = solve_tree_flows(net, demands, all_pumps_off(net));
  int e = net.edge_index("p1");
  REQUIRE(e >= 0);
  CHECK(sol.flows[e] == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("demand in a sourceless component is structurally infeasible") {
  // Pump off severs the only source from the demand node.
  Node s = source("s", 10, 0, 20);
  Node a = junction("a", 0, 0.004);
  Edge pump;
  pump.id = "pm";
  pump.from = "s";
  pump.to = "a";
  pump.kind = EdgeKind::pump;
  pump.pump_gain_min_m = 0;
  pump.pump_gain_max_m = 50;
  Network net({s, a}, {pump});
  CHECK_THROWS_AS(solve_tree_flows(net, {0.0, 0.004}, all_pumps_off(net)),
                  StructuralInfeasibility);
  // With zero demand the severed component is harmless.
  auto sol = solve_tree_flows(net, {0.0, 0.0}, all_pumps_off(net));
  CHECK(sol.flows[0] == 0.0);
}

TEST_CASE("two sources in one component are structurally infeasible") {
  Network net({source("s1", 10, 0, 20), source("s2", 10, 0, 20),
               junction("a", 0, 0.004)},
              {pipe("e1", "s1", "a", 500, 0.1), pipe("e2", "s2", "a", 500, 0.1)});
  CHECK_THROWS_AS(solve_tree_flows(net, {0, 0, 0.004}, all_pumps_on(net)),
                  StructuralInfeasibility);
}

TEST_CASE("head propagation applies the pipe equation downstream") {
  Network net({source("s", 10, 0, 20), junction("a", 2, 0.004)},
              {pipe("e", "s", "a", 500, 0.1)});
  auto pump_on = all_pumps_on(net);
  auto sol = solve_tree_flows(net, {0.0, 0.004}, pump_on);
  std::vector<std::optional<double>> src_head(net.node_count());
  src_head[0] = 5.0;  // y at the source
  auto heads = propagate_heads(net, sol.flows, pump_on, src_head);
  const double r = net.edge(0).headloss_coeff;
  // grade(a) = grade(s) - R f |f|; y(a) = grade(a) - elev(a)
  double expect = (10.0 + 5.0) - r * 0.004 * 0.004 - 2.0;
  CHECK(heads[1] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(heads[0] == 5.0);
}

TEST_CASE("nominal state passes the conservation and head audits") {
  for (const char* name : {"system1.wds", "system2.wds"}) {
    CAPTURE(name);
    Network net = load_example(name);
    std::vector<double> demands(net.node_count(), 0.0);
    for (std::size_t i = 0; i < net.node_count(); ++i) {
      const Node& n = net.node(i);
      if (n.kind == NodeKind::source) continue;
      demands[i] = n.fixed_demand ? *n.fixed_demand : 0.0;
    }
    // system1 runs with its pump off; system2 needs its pump on.
    bool on = std::string(name) == "system2.wds";
    std::vector<char> pump_on(net.edge_count(), 1);
    for (std::size_t e = 0; e < net.edge_count(); ++e) {
      if (net.edge(e).kind == EdgeKind::pump) pump_on[e] = on ? 1 : 0;
    }
    std::vector<int> free_signs(net.edge_count(), 0);
    auto state = nominal_state(net, demands, pump_on, free_signs);
    auto audit = audit_state(net, state, demands);
    CHECK(audit.mass_residual_rel <= 1e-12);
    CHECK(audit.head_residual_m <= 1e-10);
  }
}

TEST_CASE("feasibility accepts a generous single pipe and reports tiny residual") {
  Network net({source("s", 10, 0, 20), junction("a", 0, 0.004)},
              {pipe("e", "s", "a", 500, 0.1)});
  std::vector<int> free_signs(1, 0);
  auto verdict =
      check_feasibility(net, {0.0, 0.004}, all_pumps_on(net), free_signs);
  CHECK(verdict.feasible);
  CHECK(verdict.worst_residual <= kFeasibilityTol);
}

TEST_CASE("feasibility rejects a head shortfall by the exact margin") {
  // Head loss R f^2 with f = 0.01 m^3/s over L=1000, D=0.1:
  // R = 8*0.02*1000/(pi^2*9.81*1e-5) = 165225.9...; loss = 16.52 m.
  // Source grade tops out at 10 + 5; junction needs >= 0 + y_min.
  // Set y_min so the deficit is exactly 1 m.
  const double r = headloss_coefficient(1000, 0.1, 0.02);
  const double loss = r * 0.01 * 0.01;
  Node s = source("s", 10, 0, 5);
  Node a = junction("a", 0, 0.01);
  // Best reachable grade is 15 - loss; demanding 1 m more forces a deficit.
  a.head_min_m = (10.0 + 5.0) - loss + 1.0;
  a.head_max_m = 100.0;
  Network net({s, a}, {pipe("e", "s", "a", 1000, 0.1)});
  std::vector<int> free_signs(1, 0);
  auto verdict = check_feasibility(net, {0.0, 0.01}, all_pumps_on(net),
                                   free_signs);
  CHECK_FALSE(verdict.feasible);
  // Head gaps are normalized by 1 m, so the residual is the meter deficit.
  CHECK(verdict.worst_residual == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("feasibility honors flow-direction constraints") {
  Network net({source("s", 10, 0, 20), junction("a", 0, 0.004)},
              {pipe("e", "s", "a", 500, 0.1)});
  // Flow must run s->a to serve the demand; forcing the reverse sign fails.
  auto ok = check_feasibility(net, {0.0, 0.004}, all_pumps_on(net), {+1});
  CHECK(ok.feasible);
  auto bad = check_feasibility(net, {0.0, 0.004}, all_pumps_on(net), {-1});
  CHECK_FALSE(bad.feasible);
}

TEST_CASE("feasibility catches structural problems as infeasible flows") {
  Node s = source("s", 10, 0, 20);
  Node a = junction("a", 0, 0.004);
  Edge pump;
  pump.id = "pm";
  pump.from = "s";
  pump.to = "a";
  pump.kind = EdgeKind::pump;
  pump.pump_gain_max_m = 50;
  Network net({s, a}, {pump});
  CHECK_THROWS_AS(
      check_feasibility(net, {0.0, 0.004}, all_pumps_off(net), {0}),
      StructuralInfeasibility);
}

TEST_CASE("widening the source head bound can only help feasibility") {
  // Sweep y_max upward; the worst residual must be nonincreasing.
  double last = 1e300;
  for (double ymax : {2.0, 5.0, 8.0, 12.0, 20.0}) {
    Node s = source("s", 0, 0, ymax);
    Node a = junction("a", 0, 0.01);
    a.head_min_m = 10.0;
    a.head_max_m = 50.0;
    Network net({s, a}, {pipe("e", "s", "a", 1000, 0.1)});
    auto verdict =
        check_feasibility(net, {0.0, 0.01}, all_pumps_on(net), {0});
    CHECK(verdict.worst_residual <= last + 1e-12);
    last = verdict.worst_residual;
  }
}

TEST_CASE("pump gain band closes an otherwise impossible lift") {
  // Junction needs 30 m of grade the source cannot supply without the pump.
  Node s = source("s", 0, 0, 5);
  Node a = junction("a", 0, 0.004);
  a.head_min_m = 30.0;
  a.head_max_m = 60.0;
  Edge pump;
  pump.id = "pm";
  pump.from = "s";
  pump.to = "a";
  pump.kind = EdgeKind::pump;
  pump.flow_min = 0.0;
  pump.pump_gain_min_m = 0.0;
  pump.pump_gain_max_m = 40.0;
  Network net({s, a}, {pump});
  auto on = check_feasibility(net, {0.0, 0.004}, all_pumps_on(net), {0});
  CHECK(on.feasible);
  // Clamp the gain band below the required lift and it fails again.
  Edge weak = pump;
  weak.pump_gain_max_m = 20.0;
  Network net2({s, a}, {weak});
  auto v = check_feasibility(net2, {0.0, 0.004}, all_pumps_on(net2), {0});
  CHECK_FALSE(v.feasible);
}

TEST_CASE("sign pattern derivation uses a deadband around zero") {
  auto signs = derive_sign_pattern({1.5, -2.0, 0.0, 1e-15});
  CHECK(signs == std::vector<int>{1, -1, 0, 0});
}
