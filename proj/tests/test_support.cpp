// Tests for the support-function maximizer over the secure-demand region.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "watersir/netfile.hpp"
#include "watersir/scheduler.hpp"
#include "watersir/support.hpp"

using namespace watersir;

namespace {

ParsedNetwork load_example(const std::string& name) {
  return parse_network(read_file(std::string(WATERSIR_DATA_DIR) + "/" + name));
}

// Single pipe from a source to one variable-demand node. The largest
// feasible demand solves y_s_max + elev_s - R d^2 = y_min + elev_a, i.e.
// d* = sqrt((grade_max_source - grade_min_node) / R).
struct SinglePipe {
  Network net;
  double analytic;
};

SinglePipe make_single_pipe() {
  Node s;
  s.id = "s";
  s.kind = NodeKind::source;
  s.elevation_m = 0.0;
  s.head_min_m = 90.0;
  s.head_max_m = 100.0;
  s.inject_min = 0.0;
  s.inject_max = 1.0;

  Node a;
  a.id = "a";
  a.elevation_m = 0.0;
  a.head_min_m = 60.0;
  a.head_max_m = 100.0;
  a.demand_min = 0.0;
  a.demand_max = 0.05;

  Edge e;
  e.id = "e";
  e.from = "s";
  e.to = "a";
  e.length_m = 1000.0;
  e.diameter_m = 0.1;
  e.friction_factor = 0.02;
  e.headloss_coeff = headloss_coefficient(1000.0, 0.1, 0.02);

  SinglePipe sp{Network({s, a}, {e}), 0.0};
  sp.analytic = std::sqrt((100.0 - 60.0) / e.headloss_coeff);
  return sp;
}

}  // namespace

TEST_CASE("single-pipe support maximum matches the closed form") {
  SinglePipe sp = make_single_pipe();
  auto ops = solve_ops(sp.net, forecast_demands(sp.net));
  auto prob = make_sir_problem(sp.net, ops);
  REQUIRE(prob.dimension() == 1);
  auto res = maximize_support(prob, {1.0});
  CHECK(res.converged);
  // d* = sqrt(40 / R); R = 165225.97... -> d* = 0.015559 m^3/s.
  CHECK(res.vertex[0] ==
        doctest::Approx(sp.analytic).epsilon(1e-6));
}

TEST_CASE("a negative direction lands on the box lower corner") {
  SinglePipe sp = make_single_pipe();
  auto ops = solve_ops(sp.net, forecast_demands(sp.net));
  auto prob = make_sir_problem(sp.net, ops);
  auto res = maximize_support(prob, {-1.0});
  CHECK(res.converged);
  CHECK(res.vertex[0] == doctest::Approx(prob.box_lo[0]).scale(1.0).epsilon(1e-9));
}

TEST_CASE("scaling the direction does not move the maximizer") {
  Network net = load_example("system1.wds").net;
  auto ops = solve_ops(net, forecast_demands(net));
  auto prob = make_sir_problem(net, ops);
  std::vector<double> dir{1.0, 0.7, 0.3};
  REQUIRE(prob.dimension() == dir.size());
  auto a = maximize_support(prob, dir);
  std::vector<double> scaled;
  for (double v : dir) scaled.push_back(17.0 * v);
  auto b = maximize_support(prob, scaled);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  for (std::size_t i = 0; i < dir.size(); ++i)
    CHECK(a.vertex[i] == doctest::Approx(b.vertex[i]).scale(1e-3).epsilon(1e-6));
  CHECK(b.objective == doctest::Approx(17.0 * a.objective).epsilon(1e-9));
}

TEST_CASE("returned vertices are feasible under the exact check") {
  for (const char* name : {"system1.wds", "system2.wds"}) {
    CAPTURE(name);
    Network net = load_example(name).net;
    auto ops = solve_ops(net, forecast_demands(net));
    auto prob = make_sir_problem(net, ops);
    std::vector<std::vector<double>> dirs;
    std::size_t d = prob.dimension();
    for (std::size_t i = 0; i < d; ++i) {
      std::vector<double> e(d, 0.0);
      e[i] = 1.0;
      dirs.push_back(e);
    }
    dirs.push_back(std::vector<double>(d, 1.0));
    dirs.push_back({1.0, -0.5, 0.25});
    for (const auto& dir : dirs) {
      auto res = maximize_support(prob, dir);
      CHECK(res.converged);
      auto verdict = check_feasibility(prob.net, embed_demands(prob, res.vertex),
                                       prob.pump_on, prob.sign_pattern);
      CHECK(verdict.feasible);
      CHECK(verdict.worst_residual <= kFeasibilityTol);
    }
  }
}

TEST_CASE("axis maxima dominate interior grid feasible points") {
  // Support value in direction e_i bounds every feasible point's i-th
  // coordinate; cross-check against a coarse feasible grid scan.
  Network net = load_example("system1.wds").net;
  auto ops = solve_ops(net, forecast_demands(net));
  auto prob = make_sir_problem(net, ops);
  std::size_t d = prob.dimension();
  std::vector<double> axis_max(d);
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> e(d, 0.0);
    e[i] = 1.0;
    auto res = maximize_support(prob, e);
    REQUIRE(res.converged);
    axis_max[i] = res.objective;
  }
  // 5-point grid per axis over the demand box.
  std::vector<double> pt(d, 0.0);
  int checked = 0;
  std::function<void(std::size_t)> walk = [&](std::size_t axis) {
    if (axis == d) {
      auto verdict = check_feasibility(prob.net, embed_demands(prob, pt),
                                       prob.pump_on, prob.sign_pattern);
      if (!verdict.feasible) return;
      ++checked;
      for (std::size_t i = 0; i < d; ++i)
        CHECK(pt[i] <= axis_max[i] + 1e-9);
      return;
    }
    for (int k = 0; k < 5; ++k) {
      pt[axis] = prob.box_lo[axis] +
                 (prob.box_hi[axis] - prob.box_lo[axis]) * k / 4.0;
      walk(axis + 1);
    }
  };
  walk(0);
  CHECK(checked > 0);
}

TEST_CASE("embedding places variable values and keeps fixed demands") {
  Network net = load_example("system1.wds").net;
  auto ops = solve_ops(net, forecast_demands(net));
  auto prob = make_sir_problem(net, ops);
  std::vector<double> vals(prob.dimension(), 0.001);
  auto full = embed_demands(prob, vals);
  REQUIRE(full.size() == net.node_count());
  for (std::size_t i = 0; i < prob.dimension(); ++i)
    CHECK(full[prob.variable_nodes[i]] == 0.001);
  for (std::size_t v = 0; v < net.node_count(); ++v) {
    bool is_var = false;
    for (int w : prob.variable_nodes) is_var |= (w == static_cast<int>(v));
    if (!is_var) CHECK(full[v] == prob.fixed_demands[v]);
  }
  CHECK_THROWS_AS(embed_demands(prob, std::vector<double>(prob.dimension() + 1)),
                  std::invalid_argument);
}

TEST_CASE("problem construction validates the variable node choice") {
  Network net = load_example("system1.wds").net;
  auto ops = solve_ops(net, forecast_demands(net));

  // Default choice picks exactly the positive-width demand boxes.
  auto prob = make_sir_problem(net, ops);
  std::vector<std::string> names;
  for (int v : prob.variable_nodes) names.push_back(net.node(v).id);
  CHECK(names == std::vector<std::string>{"3", "5", "9"});

  // Explicit choice follows the caller's order.
  auto prob2 = make_sir_problem(net, ops, {"9", "3"});
  CHECK(net.node(prob2.variable_nodes[0]).id == "9");
  CHECK(net.node(prob2.variable_nodes[1]).id == "3");

  CHECK_THROWS_AS(make_sir_problem(net, ops, {"nope"}), std::invalid_argument);
  CHECK_THROWS_AS(make_sir_problem(net, ops, {"1"}), std::invalid_argument);
  CHECK_THROWS_AS(make_sir_problem(net, ops, {"2"}), std::invalid_argument);
}

TEST_CASE("an infeasible nominal point is rejected up front") {
  // Start from a network whose nominal forecast is feasible, then shift the
  // junction's head floor above anything reachable and rebuild the problem
  // by hand; maximize_support must refuse the unusable starting point.
  SinglePipe sp = make_single_pipe();
  auto ops = solve_ops(sp.net, forecast_demands(sp.net));
  auto prob = make_sir_problem(sp.net, ops);
  Node a = sp.net.node(1);
  a.head_min_m = 500.0;
  SIRProblem broken = prob;
  broken.net = Network({sp.net.node(0), a}, {sp.net.edge(0)});
  CHECK_THROWS_AS(maximize_support(broken, {1.0}), std::invalid_argument);
}
