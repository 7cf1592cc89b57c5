#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "watersir/hydraulics.hpp"
#include "watersir/inp.hpp"
#include "watersir/netfile.hpp"
#include "watersir/network.hpp"
#include "watersir/oracle.hpp"
#include "watersir/polytope.hpp"
#include "watersir/scheduler.hpp"
#include "watersir/support.hpp"

namespace py = pybind11;

namespace {

using namespace watersir;

struct Loaded {
  ParsedNetwork parsed;
  OpsSolution ops;
  SIRProblem prob;
};

// Mirrors the command-line pipeline: parse + validate, schedule the pumps
// at the forecast demands, then freeze the regime into a support problem
// honoring any explicit variable-node order from the sir block.
Loaded load_problem(const std::string& text) {
  Loaded l{parse_network(text), {}, {}};
  const Network& net = l.parsed.net;
  l.ops = solve_ops(net, forecast_demands(net), l.parsed.settings.efficiency,
                    l.parsed.settings.tariff);
  l.prob = l.parsed.settings.variable_nodes.empty()
               ? make_sir_problem(net, l.ops)
               : make_sir_problem(net, l.ops,
                                  l.parsed.settings.variable_nodes);
  return l;
}

py::list variable_ids(const Loaded& l) {
  py::list ids;
  for (int v : l.prob.variable_nodes) ids.append(l.parsed.net.node(v).id);
  return ids;
}

py::dict verdict_dict(const FeasibilityVerdict& v) {
  py::dict d;
  d["feasible"] = v.feasible;
  d["worst_residual"] = v.worst_residual;
  d["worst_constraint"] = v.worst_constraint;
  return d;
}

py::dict polytope_dict(const Polytope& p) {
  py::dict d;
  d["dimension"] = p.dimension;
  d["vertices"] = p.vertices;
  py::list facets;
  for (const Facet& f : p.facets) {
    py::dict fd;
    fd["normal"] = f.normal;
    fd["offset"] = f.offset;
    facets.append(fd);
  }
  d["facets"] = facets;
  return d;
}

std::string canonical(const std::string& text) {
  ParsedNetwork parsed = parse_network(text);
  return serialize_network(parsed.net, parsed.settings);
}

py::dict from_inp(const std::string& text, double friction_factor,
                  std::optional<double> pump_gain_min,
                  std::optional<double> pump_gain_max,
                  double junction_head_min, double junction_head_max) {
  InpOptions options;
  options.friction_factor = friction_factor;
  options.pump_gain_min_m = pump_gain_min;
  options.pump_gain_max_m = pump_gain_max;
  options.junction_head_min_m = junction_head_min;
  options.junction_head_max_m = junction_head_max;
  InpImport imported = parse_inp_subset(text, options);
  py::dict d;
  d["text"] = serialize_network(imported.net, FileSettings{});
  d["warnings"] = imported.warnings;
  return d;
}

py::list validate_text(const std::string& text) {
  ParsedNetwork parsed = parse_network(text, /*run_validate=*/false);
  py::list out;
  for (const Violation& v : validate(parsed.net)) {
    py::dict d;
    d["element"] = v.element;
    d["rule"] = v.rule;
    out.append(d);
  }
  return out;
}

py::dict ops_text(const std::string& text) {
  Loaded l = load_problem(text);
  const Network& net = l.parsed.net;
  py::dict pumps, signs, flows, heads;
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const Edge& edge = net.edge(e);
    if (edge.kind == EdgeKind::pump)
      pumps[py::str(edge.id)] = static_cast<bool>(l.ops.pump_on[e]);
    signs[py::str(edge.id)] = l.ops.sign_pattern[e];
    flows[py::str(edge.id)] = l.ops.nominal_state.flows[e];
  }
  for (std::size_t v = 0; v < net.node_count(); ++v)
    heads[py::str(net.node(v).id)] = l.ops.nominal_state.heads[v];
  py::dict d;
  d["pumps"] = pumps;
  d["sign_pattern"] = signs;
  d["flows"] = flows;
  d["heads"] = heads;
  d["energy_cost"] = l.ops.energy_cost;
  d["variable_nodes"] = variable_ids(l);
  return d;
}

py::dict check_text(const std::string& text,
                    const std::vector<double>& demands) {
  Loaded l = load_problem(text);
  FeasibilityVerdict verdict =
      check_feasibility(l.parsed.net, embed_demands(l.prob, demands),
                        l.ops.pump_on, l.ops.sign_pattern);
  return verdict_dict(verdict);
}

py::dict support_text(const std::string& text,
                      const std::vector<double>& direction) {
  Loaded l = load_problem(text);
  SupportResult res = maximize_support(l.prob, direction);
  py::dict d;
  d["vertex"] = res.vertex;
  d["objective"] = res.objective;
  d["converged"] = res.converged;
  d["iterations"] = res.iterations;
  return d;
}

py::dict sir_text(const std::string& text, int rounds) {
  Loaded l = load_problem(text);
  PolytopeSequence seq = build_sequence(l.prob, rounds);
  py::dict d;
  d["variable_nodes"] = variable_ids(l);
  d["volumes"] = seq.volumes;
  d["relative_volumes"] = relative_volumes(seq);
  py::list polys;
  for (const Polytope& p : seq.polytopes) polys.append(polytope_dict(p));
  d["polytopes"] = polys;
  py::list steps;
  for (const ExpansionStep& s : seq.steps) {
    py::dict sd;
    sd["facets_attempted"] = s.facets_attempted;
    sd["vertices_added"] = s.vertices_added;
    sd["max_gain"] = s.max_gain;
    steps.append(sd);
  }
  d["steps"] = steps;
  return d;
}

py::dict grid_text(const std::string& text, int k) {
  Loaded l = load_problem(text);
  GridScreen screen = grid_screen(l.prob, k);
  py::dict d;
  d["variable_nodes"] = variable_ids(l);
  d["axes"] = screen.axes;
  d["feasible_count"] = screen.feasible_count;
  d["infeasible_count"] = screen.infeasible_count;
  py::list points, feasible;
  for (std::size_t i = 0; i < screen.total(); ++i) {
    points.append(screen.point(i));
    feasible.append(screen.verdicts[i].feasible);
  }
  d["points"] = points;
  d["feasible"] = feasible;
  return d;
}

py::dict coverage_text(const std::string& text, int rounds, int k) {
  Loaded l = load_problem(text);
  PolytopeSequence seq = build_sequence(l.prob, rounds);
  GridScreen screen = grid_screen(l.prob, k);
  AgreementReport report = agreement(seq, screen);
  py::list coverage, false_positives;
  for (const auto& per : report.per_polytope) {
    coverage.append(per.coverage);
    false_positives.append(per.false_positives);
  }
  py::dict d;
  d["coverage"] = coverage;
  d["false_positives"] = false_positives;
  d["feasible_count"] = screen.feasible_count;
  return d;
}

py::dict probe_text(const std::string& text, int trials,
                    std::uint64_t seed) {
  Loaded l = load_problem(text);
  ConvexityReport report = convexity_probe(l.prob, trials, seed);
  py::dict d;
  d["pairs_tested"] = report.pairs_tested;
  d["segment_checks"] = report.segment_checks;
  d["violations"] = report.violations;
  d["worst_residual"] = report.worst_residual;
  d["seed"] = report.seed;
  d["worst_case"] = report.worst_case;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Security injection regions of tree-structured water networks: "
      "hydraulic feasibility, pump scheduling, support maximization and "
      "inner polytope sequences. All functions take network file text; "
      "demands and flows are in cubic meters per second.";

  m.def("canonical", &canonical, py::arg("text"),
        "Parse network text and re-serialize it in canonical form.");
  m.def("from_inp", &from_inp, py::arg("text"),
        py::arg("friction_factor") = 0.02,
        py::arg("pump_gain_min") = std::nullopt,
        py::arg("pump_gain_max") = std::nullopt,
        py::arg("junction_head_min") = 0.0,
        py::arg("junction_head_max") = 1000.0,
        "Import an INP subset; returns canonical network text and the "
        "import warnings.");
  m.def("validate", &validate_text, py::arg("text"),
        "Structural and field violations as a list of {element, rule}.");
  m.def("ops", &ops_text, py::arg("text"),
        "Minimum-cost pump schedule at the forecast demands, with the "
        "nominal witness state.");
  m.def("check", &check_text, py::arg("text"), py::arg("demands"),
        "Feasibility of the given variable-node demands under the "
        "scheduled regime.");
  m.def("support", &support_text, py::arg("text"), py::arg("direction"),
        "Maximize direction . d over the secure region of the variable "
        "demands.");
  m.def("sir", &sir_text, py::arg("text"), py::arg("rounds") = 3,
        "Monotone inner polytope sequence after the given number of "
        "expansion rounds.");
  m.def("grid", &grid_text, py::arg("text"), py::arg("k") = 9,
        "Dense feasibility screen with k points per variable axis.");
  m.def("coverage", &coverage_text, py::arg("text"), py::arg("rounds") = 3,
        py::arg("k") = 9,
        "Agreement between the polytope sequence and the grid screen.");
  m.def("probe", &probe_text, py::arg("text"), py::arg("trials"),
        py::arg("seed"),
        "Convexity spot-check on segments between random feasible points.");
}
