// Acceptance gate: one self-contained check per shipped guarantee, each
// printed as a single PASS/FAIL line. Exits nonzero when anything fails.
//
//  1  flows interpolate linearly between feasible demand vectors
//  2  every materialized hydraulic state passes conservation/head audits
//  3  polytope vertices and interior samples are feasible; no grid point
//     inside any polytope is infeasible (zero false positives at k = 9)
//  4  three expansion rounds give four nested polytopes with nondecreasing
//     volume; relative volumes end exactly at 1.0 and start inside (0, 1)
//  5  support objectives dominate every feasible grid point per direction
//  6  the single-pipe support maximum matches its closed form
//  7  the pump schedule reproduces the expected statuses and an
//     independent exhaustive scan
//  8  final-polytope coverage of feasible grid points is at least 0.90
//     and nondecreasing along the sequence
//  9  the command-line `sir --rounds 3` finishes under 5 s and a k = 9
//     grid screen under 2 s per system
// 10  500 random feasible pairs yield no infeasible convex combinations

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "watersir/hydraulics.hpp"
#include "watersir/netfile.hpp"
#include "watersir/oracle.hpp"
#include "watersir/polytope.hpp"
#include "watersir/scheduler.hpp"
#include "watersir/support.hpp"

using namespace watersir;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct SystemData {
  std::string name;
  ParsedNetwork parsed;
  OpsSolution ops;
  SIRProblem prob;
  PolytopeSequence seq;     // 3 rounds
  GridScreen screen;        // k = 9 over the default ranges
  double sequence_seconds = 0.0;
  double screen_seconds = 0.0;
};

SystemData load_system(const std::string& name) {
  SystemData sys;
  sys.name = name;
  sys.parsed =
      parse_network(read_file(std::string(WATERSIR_DATA_DIR) + "/" + name));
  sys.ops = solve_ops(sys.parsed.net, forecast_demands(sys.parsed.net),
                      sys.parsed.settings.efficiency,
                      sys.parsed.settings.tariff);
  sys.prob = sys.parsed.settings.variable_nodes.empty()
                 ? make_sir_problem(sys.parsed.net, sys.ops)
                 : make_sir_problem(sys.parsed.net, sys.ops,
                                    sys.parsed.settings.variable_nodes);
  Clock::time_point t0 = Clock::now();
  sys.seq = build_sequence(sys.prob, 3);
  sys.sequence_seconds = seconds_since(t0);
  t0 = Clock::now();
  sys.screen = grid_screen(sys.prob, 9);
  sys.screen_seconds = seconds_since(t0);
  return sys;
}

// Worst audit residuals across every hydraulic state the gate materializes.
struct AuditLedger {
  double worst_mass = 0.0;
  double worst_head = 0.0;
  int states = 0;

  void record(const Network& net, const HydraulicState& state,
              const std::vector<double>& demands) {
    StateAudit audit = audit_state(net, state, demands);
    worst_mass = std::max(worst_mass, audit.mass_residual_rel);
    worst_head = std::max(worst_head, audit.head_residual_m);
    ++states;
  }
};

// Draws a demand vector uniformly from the variable box, accepting only
// vectors that pass the feasibility check under the frozen regime.
class FeasibleSampler {
 public:
  FeasibleSampler(const SIRProblem& prob, std::uint64_t seed)
      : prob_(prob), rng_(seed) {}

  std::vector<double> draw() {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < 100000; ++attempt) {
      std::vector<double> values(prob_.dimension());
      for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = prob_.box_lo[i] +
                    (prob_.box_hi[i] - prob_.box_lo[i]) * unit(rng_);
      try {
        if (check_feasibility(prob_.net, embed_demands(prob_, values),
                              prob_.pump_on, prob_.sign_pattern)
                .feasible)
          return values;
      } catch (const StructuralInfeasibility&) {
      }
    }
    throw std::runtime_error("feasible sampling failed");
  }

 private:
  const SIRProblem& prob_;
  std::mt19937_64 rng_;
};

struct Gate {
  int failures = 0;
  std::vector<std::string> lines = std::vector<std::string>(11);

  void report(int index, const std::string& what, bool pass,
              const std::string& detail) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s %2d. %s (%s)", pass ? "PASS" : "FAIL",
                  index, what.c_str(), detail.c_str());
    lines[index] = buf;
    if (!pass) ++failures;
  }

  void print() const {
    for (const std::string& line : lines)
      if (!line.empty()) std::printf("%s\n", line.c_str());
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

int main() {
  Gate gate;
  AuditLedger audits;

  std::vector<SystemData> systems;
  systems.push_back(load_system("system1.wds"));
  systems.push_back(load_system("system2.wds"));

  // ---- 1. flow interpolation --------------------------------------------
  {
    Clock::time_point t0 = Clock::now();
    double worst = 0.0;
    for (SystemData& sys : systems) {
      FeasibleSampler sampler(sys.prob, 0xF10F);
      for (int pair = 0; pair < 200; ++pair) {
        std::vector<double> da = sampler.draw();
        std::vector<double> db = sampler.draw();
        FlowSolution fa = solve_tree_flows(
            sys.prob.net, embed_demands(sys.prob, da), sys.prob.pump_on);
        FlowSolution fb = solve_tree_flows(
            sys.prob.net, embed_demands(sys.prob, db), sys.prob.pump_on);
        for (double mu : {0.25, 0.5, 0.75}) {
          std::vector<double> mix(da.size());
          for (std::size_t i = 0; i < da.size(); ++i)
            mix[i] = mu * da[i] + (1.0 - mu) * db[i];
          FlowSolution fm = solve_tree_flows(
              sys.prob.net, embed_demands(sys.prob, mix), sys.prob.pump_on);
          double scale = 0.0;
          for (double f : fm.flows) scale = std::max(scale, std::fabs(f));
          scale = std::max(scale, 1e-30);
          for (std::size_t e = 0; e < fm.flows.size(); ++e) {
            double combo = mu * fa.flows[e] + (1.0 - mu) * fb.flows[e];
            worst = std::max(worst, std::fabs(fm.flows[e] - combo) / scale);
          }
        }
      }
    }
    double elapsed = seconds_since(t0);
    gate.report(1, "flow interpolation over 200 feasible pairs per system",
                worst <= 1e-12 && elapsed < 5.0,
                "worst rel err " + fmt(worst) + ", " + fmt(elapsed) + " s");
  }

  // ---- 3 + 5 + 8 share the sequences and screens; 2 collects audits ------
  // Feasibility of every vertex and of 1000 interior samples of the final
  // polytope; zero false positives across all polytopes at k = 9.
  {
    Clock::time_point t0 = Clock::now();
    bool feasible_ok = true;
    bool fp_ok = true;
    double worst_residual = 0.0;
    for (SystemData& sys : systems) {
      const Polytope& last = sys.seq.polytopes.back();
      // Vertices of every polytope in the sequence.
      for (const Polytope& poly : sys.seq.polytopes) {
        for (const std::vector<double>& v : poly.vertices) {
          std::vector<double> demands = embed_demands(sys.prob, v);
          FeasibilityVerdict verdict =
              check_feasibility(sys.prob.net, demands, sys.prob.pump_on,
                                sys.prob.sign_pattern);
          worst_residual = std::max(worst_residual, verdict.worst_residual);
          if (!verdict.feasible || verdict.worst_residual > 1e-6)
            feasible_ok = false;
        }
      }
      // Interior samples: random convex combinations of the final
      // polytope's vertices (Dirichlet weights), feasible by convexity
      // if the approximation is sound.
      std::mt19937_64 rng(0x5EED5 + (sys.name == "system2.wds"));
      std::exponential_distribution<double> expo(1.0);
      for (int s = 0; s < 1000; ++s) {
        std::vector<double> w(last.vertices.size());
        double total = 0.0;
        for (double& x : w) {
          x = expo(rng);
          total += x;
        }
        std::vector<double> point(sys.prob.dimension(), 0.0);
        for (std::size_t v = 0; v < last.vertices.size(); ++v)
          for (std::size_t i = 0; i < point.size(); ++i)
            point[i] += (w[v] / total) * last.vertices[v][i];
        FeasibilityVerdict verdict = check_feasibility(
            sys.prob.net, embed_demands(sys.prob, point), sys.prob.pump_on,
            sys.prob.sign_pattern);
        worst_residual = std::max(worst_residual, verdict.worst_residual);
        if (!verdict.feasible || verdict.worst_residual > 1e-6)
          feasible_ok = false;
      }
      // Grid agreement: zero false positives for every polytope.
      AgreementReport report = agreement(sys.seq, sys.screen);
      for (const auto& pp : report.per_polytope)
        if (pp.false_positives != 0) fp_ok = false;
    }
    double elapsed = seconds_since(t0);
    std::ostringstream detail;
    detail << "worst residual " << fmt(worst_residual) << ", " << fmt(elapsed)
           << " s";
    gate.report(3,
                "inner approximation sound: vertices + 1000 interior samples "
                "feasible, zero grid false positives at k=9",
                feasible_ok && fp_ok && elapsed < 30.0, detail.str());
  }

  // ---- 4. monotone sequence ----------------------------------------------
  {
    bool ok = true;
    std::ostringstream detail;
    for (SystemData& sys : systems) {
      if (sys.seq.polytopes.size() != 4) ok = false;
      for (std::size_t j = 0; j + 1 < sys.seq.volumes.size(); ++j) {
        if (!(sys.seq.volumes[j + 1] >= sys.seq.volumes[j])) ok = false;
        for (const std::vector<double>& v : sys.seq.polytopes[j].vertices)
          if (!contains(sys.seq.polytopes[j + 1], v, 1e-9)) ok = false;
      }
      std::vector<double> rel = relative_volumes(sys.seq);
      if (rel.back() != 1.0) ok = false;
      if (!(rel.front() > 0.0 && rel.front() < 1.0)) ok = false;
      detail << sys.name << " rel0=" << fmt(rel.front()) << " polys="
             << sys.seq.polytopes.size() << "  ";
    }
    gate.report(4,
                "three rounds give four nested polytopes, volumes "
                "nondecreasing, relative volumes end at exactly 1",
                ok, detail.str());
  }

  // ---- 5. support dominance ----------------------------------------------
  {
    bool ok = true;
    double worst_gap = 0.0;
    for (SystemData& sys : systems) {
      // Directions exercised by a run: the coordinate axes (starting
      // polytope) plus every expanded facet normal of each intermediate
      // polytope (the lower-bound box facets are never maximized).
      std::vector<std::vector<double>> directions;
      std::size_t d = sys.prob.dimension();
      for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> axis(d, 0.0);
        axis[i] = 1.0;
        directions.push_back(axis);
      }
      for (std::size_t j = 0; j + 1 < sys.seq.polytopes.size(); ++j) {
        for (const Facet& facet : sys.seq.polytopes[j].facets) {
          bool lower = false;
          for (std::size_t i = 0; i < d; ++i)
            if (facet.normal[i] < -(1.0 - 1e-9)) lower = true;
          if (!lower) directions.push_back(facet.normal);
        }
      }
      const double eps_obj = 1e-6 * sys.prob.box_diagonal();
      for (const std::vector<double>& n : directions) {
        SupportResult res = maximize_support(sys.prob, n);
        for (std::size_t idx = 0; idx < sys.screen.total(); ++idx) {
          if (!sys.screen.verdicts[idx].feasible) continue;
          std::vector<double> g = sys.screen.point(idx);
          double value = 0.0;
          for (std::size_t i = 0; i < d; ++i) value += n[i] * g[i];
          double gap = value - res.objective;
          worst_gap = std::max(worst_gap, gap);
          if (gap > eps_obj) ok = false;
        }
      }
    }
    gate.report(5,
                "support objective dominates every feasible grid point in "
                "every direction used",
                ok, "worst exceedance " + fmt(worst_gap) + " m^3/s");
  }

  // ---- 6. single-pipe closed form ----------------------------------------
  {
    Node s;
    s.id = "s";
    s.kind = NodeKind::source;
    s.head_min_m = 90.0;
    s.head_max_m = 100.0;
    s.inject_min = 0.0;
    s.inject_max = 1.0;
    Node a;
    a.id = "a";
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
    Network net({s, a}, {e});

    OpsSolution ops = solve_ops(net, forecast_demands(net));
    audits.record(net, ops.nominal_state, forecast_demands(net));
    SIRProblem prob = make_sir_problem(net, ops);
    SupportResult res = maximize_support(prob, {1.0});
    double analytic = std::sqrt((100.0 - 60.0) / e.headloss_coeff);
    double rel = std::fabs(res.vertex[0] - analytic) / analytic;
    gate.report(6, "single-pipe axis maximum matches sqrt(dh/R)",
                res.converged && rel <= 1e-6,
                "got " + fmt(res.vertex[0]) + " want " + fmt(analytic) +
                    ", rel err " + fmt(rel));
  }

  // ---- 7. pump schedule reproduction --------------------------------------
  {
    bool ok = true;
    std::ostringstream detail;
    for (SystemData& sys : systems) {
      const Network& net = sys.parsed.net;
      int pump = net.edge_index("pump1");
      if (pump < 0) {
        ok = false;
        continue;
      }
      bool want_on = sys.name == "system2.wds";
      if ((sys.ops.pump_on[pump] != 0) != want_on) ok = false;
      detail << sys.name << " pump "
             << (sys.ops.pump_on[pump] ? "on" : "off") << "  ";

      // Independent exhaustive scan over all status combinations.
      std::vector<double> fd = forecast_demands(net);
      std::vector<int> pumps;
      for (std::size_t e2 = 0; e2 < net.edge_count(); ++e2)
        if (net.edge(e2).kind == EdgeKind::pump)
          pumps.push_back(static_cast<int>(e2));
      double best = std::numeric_limits<double>::infinity();
      for (int mask = 0; mask < (1 << pumps.size()); ++mask) {
        std::vector<char> pump_on(net.edge_count(), 1);
        for (std::size_t k = 0; k < pumps.size(); ++k)
          pump_on[pumps[k]] = (mask >> k) & 1;
        try {
          HydraulicState st = nominal_state(
              net, fd, pump_on, std::vector<int>(net.edge_count(), 0));
          audits.record(net, st, fd);
          double cost = 0.0;
          for (int p : pumps)
            if (pump_on[p])
              cost += pump_energy_cost(st.flows[p], st.pump_gains[p],
                                       sys.parsed.settings.efficiency,
                                       sys.parsed.settings.tariff,
                                       net.gravity());
          best = std::min(best, cost);
        } catch (const std::exception&) {
        }
      }
      if (!(std::fabs(best - sys.ops.energy_cost) <=
            1e-9 * std::max(1.0, best)))
        ok = false;
    }
    gate.report(7,
                "pump schedule: system1 off / system2 on, matching the "
                "exhaustive scan",
                ok, detail.str());
  }

  // ---- 8. coverage ---------------------------------------------------------
  {
    bool ok = true;
    std::ostringstream detail;
    for (SystemData& sys : systems) {
      AgreementReport report = agreement(sys.seq, sys.screen);
      double last = -1.0;
      for (const auto& pp : report.per_polytope) {
        if (pp.coverage < last - 1e-12) ok = false;
        last = pp.coverage;
      }
      double final_coverage = report.per_polytope.back().coverage;
      if (!(final_coverage >= 0.90)) ok = false;
      detail << sys.name << " coverage " << fmt(final_coverage) << "  ";
    }
    gate.report(8, "final coverage of feasible grid points >= 0.90 at k=9",
                ok, detail.str());
  }

  // ---- 2. audits (after the other criteria have materialized states) ------
  {
    for (SystemData& sys : systems) {
      std::vector<double> fd = forecast_demands(sys.parsed.net);
      audits.record(sys.parsed.net, sys.ops.nominal_state, fd);
      // States at every final-polytope vertex.
      for (const std::vector<double>& v : sys.seq.polytopes.back().vertices) {
        std::vector<double> demands = embed_demands(sys.prob, v);
        HydraulicState st =
            nominal_state(sys.prob.net, demands, sys.prob.pump_on,
                          sys.prob.sign_pattern);
        audits.record(sys.prob.net, st, demands);
      }
    }
    bool ok = audits.worst_mass <= 1e-12 && audits.worst_head <= 1e-10;
    std::ostringstream detail;
    detail << audits.states << " states, worst mass " << fmt(audits.worst_mass)
           << ", worst head " << fmt(audits.worst_head) << " m";
    gate.report(2,
                "all materialized states: mass residual <= 1e-12, head "
                "residual <= 1e-10 m",
                ok, detail.str());
  }

  // ---- 9. performance ------------------------------------------------------
  {
    bool ok = true;
    std::ostringstream detail;
#ifdef WATERSIR_CLI_PATH
    for (SystemData& sys : systems) {
      std::string cmd = std::string(WATERSIR_CLI_PATH) + " sir " +
                        std::string(WATERSIR_DATA_DIR) + "/" + sys.name +
                        " --rounds 3 --no-timing > /dev/null 2>&1";
      Clock::time_point t0 = Clock::now();
      int status = std::system(cmd.c_str());
      double elapsed = seconds_since(t0);
      if (status != 0 || elapsed >= 5.0) ok = false;
      detail << sys.name << " sir " << fmt(elapsed) << " s, grid "
             << fmt(sys.screen_seconds) << " s  ";
      if (sys.screen_seconds >= 2.0) ok = false;
    }
#else
    for (SystemData& sys : systems) {
      if (sys.sequence_seconds >= 5.0 || sys.screen_seconds >= 2.0) ok = false;
      detail << sys.name << " sequence " << fmt(sys.sequence_seconds)
             << " s, grid " << fmt(sys.screen_seconds) << " s  ";
    }
#endif
    gate.report(9, "sir --rounds 3 under 5 s and grid k=9 under 2 s", ok,
                detail.str());
  }

  // ---- 10. convexity probe --------------------------------------------------
  {
    bool ok = true;
    std::ostringstream detail;
    for (SystemData& sys : systems) {
      ConvexityReport report = convexity_probe(sys.prob, 500, 0xC0117EC7);
      if (report.violations != 0) ok = false;
      detail << sys.name << " " << report.segment_checks << " checks, "
             << report.violations << " violations  ";
    }
    gate.report(10,
                "500 feasible pairs per system: no infeasible convex "
                "combinations",
                ok, detail.str());
  }

  gate.print();
  if (gate.failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", gate.failures);
  return 1;
}
