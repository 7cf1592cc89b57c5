#include "watersir/cli.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "watersir/exports.hpp"
#include "watersir/inp.hpp"
#include "watersir/netfile.hpp"
#include "watersir/oracle.hpp"
#include "watersir/polytope.hpp"
#include "watersir/scheduler.hpp"
#include "watersir/support.hpp"

namespace watersir {
namespace {

using nlohmann::json;

constexpr double kM3sToLps = 1000.0;

// Thrown for bad argv content discovered after CLI11 parsing (malformed
// --demand lists, unknown artifact names, ...). Maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool color_allowed() {
  return isatty(fileno(stderr)) && std::getenv("NO_COLOR") == nullptr;
}

void report_error(const std::string& message) {
  if (color_allowed())
    std::cerr << "\x1b[31merror:\x1b[0m " << message << "\n";
  else
    std::cerr << "error: " << message << "\n";
}

void report_warning(const std::string& message) {
  if (color_allowed())
    std::cerr << "\x1b[33mwarning:\x1b[0m " << message << "\n";
  else
    std::cerr << "warning: " << message << "\n";
}

std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string sci3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct Loaded {
  Network net;
  FileSettings settings;
};

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Native files are parsed strictly and validated; .inp files go through
// the importer (and are validated by the caller where appropriate).
Loaded load_network(const std::string& path, bool run_validate,
                    const InpOptions& inp_options) {
  std::string text = read_file(path);
  if (has_suffix(path, ".inp")) {
    InpImport imported = parse_inp_subset(text, inp_options);
    for (const std::string& w : imported.warnings) report_warning(w);
    if (run_validate) {
      std::vector<Violation> violations = validate(imported.net);
      if (!violations.empty())
        throw std::runtime_error(violations.front().element + ": " +
                                 violations.front().rule);
    }
    return Loaded{std::move(imported.net), FileSettings{}};
  }
  ParsedNetwork parsed = parse_network(text, run_validate);
  return Loaded{std::move(parsed.net), std::move(parsed.settings)};
}

SIRProblem problem_from(const Loaded& loaded, const OpsSolution& ops) {
  if (!loaded.settings.variable_nodes.empty())
    return make_sir_problem(loaded.net, ops, loaded.settings.variable_nodes);
  return make_sir_problem(loaded.net, ops);
}

json ops_to_json(const Network& net, const OpsSolution& ops) {
  json pumps = json::object(), signs = json::object();
  json flows = json::object(), gains = json::object();
  json heads = json::object(), inj = json::object();
  const HydraulicState& st = ops.nominal_state;
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const Edge& edge = net.edge(e);
    if (edge.kind == EdgeKind::pump) {
      pumps[edge.id] = static_cast<bool>(ops.pump_on[e]);
      gains[edge.id] = st.pump_gains[e];
    }
    signs[edge.id] = ops.sign_pattern[e];
    flows[edge.id] = st.flows[e] * kM3sToLps;
  }
  for (std::size_t v = 0; v < net.node_count(); ++v) {
    const Node& node = net.node(v);
    heads[node.id] = st.heads[v];
    if (node.kind == NodeKind::source)
      inj[node.id] = st.source_injections[v] * kM3sToLps;
  }
  return json{{"schema", "watersir/ops/1"}, {"pump_on", pumps},
              {"sign_pattern", signs},      {"flows_lps", flows},
              {"pump_gains_m", gains},      {"heads_m", heads},
              {"injections_lps", inj},      {"energy_cost", ops.energy_cost}};
}

void print_ops(const Network& net, const OpsSolution& ops) {
  const HydraulicState& st = ops.nominal_state;
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    if (net.edge(e).kind == EdgeKind::pump)
      std::cout << "pump " << net.edge(e).id << ": "
                << (ops.pump_on[e] ? "on" : "off") << "\n";
  std::cout << "sign pattern:";
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    std::cout << " " << net.edge(e).id << ":"
              << (ops.sign_pattern[e] > 0   ? "+"
                  : ops.sign_pattern[e] < 0 ? "-"
                                            : "0");
  std::cout << "\nedge flows (L/s):\n";
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    std::cout << "  " << net.edge(e).id << " "
              << fixed6(st.flows[e] * kM3sToLps) << "\n";
  std::cout << "node heads (m):\n";
  for (std::size_t v = 0; v < net.node_count(); ++v)
    std::cout << "  " << net.node(v).id << " " << fixed6(st.heads[v]) << "\n";
  std::cout << "source injections (L/s):\n";
  for (std::size_t v = 0; v < net.node_count(); ++v)
    if (net.node(v).kind == NodeKind::source)
      std::cout << "  " << net.node(v).id << " "
                << fixed6(st.source_injections[v] * kM3sToLps) << "\n";
  std::cout << "energy cost: " << fixed6(ops.energy_cost) << "\n";
}

std::vector<double> parse_demand_list(const std::string& csv) {
  std::vector<double> values;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    const char* begin = item.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (item.empty() || end != begin + item.size())
      throw UsageError("--demand expects comma-separated numbers, got '" +
                       item + "'");
    values.push_back(v);
  }
  if (values.empty()) throw UsageError("--demand list is empty");
  return values;
}

int cmd_validate(const std::string& path, bool as_json,
                 const InpOptions& inp_options) {
  Loaded loaded = load_network(path, /*run_validate=*/false, inp_options);
  std::vector<Violation> violations = validate(loaded.net);
  if (as_json) {
    json out{{"schema", "watersir/validate/1"},
             {"nodes", loaded.net.node_count()},
             {"edges", loaded.net.edge_count()},
             {"violations", json::array()}};
    for (const Violation& v : violations)
      out["violations"].push_back({{"element", v.element}, {"rule", v.rule}});
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "nodes: " << loaded.net.node_count()
              << ", edges: " << loaded.net.edge_count() << "\n";
    for (const Violation& v : violations)
      std::cout << v.element << ": " << v.rule << "\n";
    std::cout << (violations.empty() ? "valid\n" : "invalid\n");
  }
  return violations.empty() ? 0 : 1;
}

int cmd_ops(const std::string& path, bool as_json) {
  Loaded loaded = load_network(path, true, {});
  OpsSolution ops =
      solve_ops(loaded.net, forecast_demands(loaded.net),
                loaded.settings.efficiency, loaded.settings.tariff);
  if (as_json)
    std::cout << ops_to_json(loaded.net, ops).dump(2) << "\n";
  else
    print_ops(loaded.net, ops);
  return 0;
}

int cmd_sir(const std::string& path, int rounds_flag, const std::string& out,
            bool as_json, bool no_timing) {
  std::string text = read_file(path);
  ParsedNetwork parsed = parse_network(text);
  Loaded loaded{std::move(parsed.net), std::move(parsed.settings)};
  int rounds = rounds_flag >= 0 ? rounds_flag : loaded.settings.rounds;

  TimingReport timing;
  auto t0 = std::chrono::steady_clock::now();
  OpsSolution ops =
      solve_ops(loaded.net, forecast_demands(loaded.net),
                loaded.settings.efficiency, loaded.settings.tariff);
  timing.stages.push_back({"ops", seconds_since(t0)});

  SIRProblem prob = problem_from(loaded, ops);

  PolytopeSequence seq;
  t0 = std::chrono::steady_clock::now();
  seq.polytopes.push_back(starting_polytope(prob));
  seq.volumes.push_back(volume(seq.polytopes.back()));
  timing.stages.push_back({"C0", seconds_since(t0)});
  for (int round = 0; round < rounds; ++round) {
    t0 = std::chrono::steady_clock::now();
    auto [poly, step] = expand_once(prob, seq.polytopes.back());
    if (step.vertices_added == 0) break;
    seq.polytopes.push_back(std::move(poly));
    seq.steps.push_back(std::move(step));
    seq.volumes.push_back(volume(seq.polytopes.back()));
    timing.stages.push_back(
        {"C" + std::to_string(round + 1), seconds_since(t0)});
  }

  for (const ExpansionStep& step : seq.steps)
    for (const std::string& note : step.notes) report_warning(note);

  std::vector<double> rel = relative_volumes(seq);
  if (as_json) {
    json out_doc{{"schema", "watersir/run/1"},
                 {"ops", ops_to_json(loaded.net, ops)},
                 {"variable_nodes", json::array()},
                 {"rounds_requested", rounds},
                 {"sequence", to_json(seq)}};
    for (int v : prob.variable_nodes)
      out_doc["variable_nodes"].push_back(loaded.net.node(v).id);
    if (!no_timing) out_doc["timing"] = to_json(timing);
    std::cout << out_doc.dump(2) << "\n";
  } else {
    std::cout << "variable nodes:";
    for (int v : prob.variable_nodes)
      std::cout << " " << loaded.net.node(v).id;
    std::cout << "\n";
    for (std::size_t i = 0; i < seq.polytopes.size(); ++i)
      std::cout << "C" << i << ": " << seq.polytopes[i].vertices.size()
                << " vertices, " << seq.polytopes[i].facets.size()
                << " facets, volume " << sci3(seq.volumes[i]) << " (relative "
                << fixed6(rel[i]) << ")\n";
    if (!no_timing)
      for (const auto& stage : timing.stages)
        std::cout << "time " << stage.name << ": " << fixed6(stage.seconds)
                  << " s\n";
  }

  if (!out.empty()) {
    write_run_dir(out, text, loaded.settings, rounds, seq, timing);
    std::cerr << "wrote run directory " << out << "\n";
  }
  return 0;
}

int cmd_check(const std::string& path, const std::string& demand_csv,
              bool as_json) {
  std::vector<double> values_lps = parse_demand_list(demand_csv);
  Loaded loaded = load_network(path, true, {});
  OpsSolution ops =
      solve_ops(loaded.net, forecast_demands(loaded.net),
                loaded.settings.efficiency, loaded.settings.tariff);
  SIRProblem prob = problem_from(loaded, ops);
  if (values_lps.size() != prob.dimension())
    throw UsageError("--demand needs " + std::to_string(prob.dimension()) +
                     " values for this network, got " +
                     std::to_string(values_lps.size()));

  std::vector<double> point(values_lps);
  for (double& v : point) v /= kM3sToLps;
  FeasibilityVerdict verdict = check_feasibility(
      loaded.net, embed_demands(prob, point), prob.pump_on, prob.sign_pattern);

  PolytopeSequence seq = build_sequence(prob, loaded.settings.rounds);
  int member_from = -1;
  for (std::size_t j = 0; j < seq.polytopes.size(); ++j)
    if (contains(seq.polytopes[j], point)) {
      member_from = static_cast<int>(j);
      break;
    }

  if (as_json) {
    json out{{"schema", "watersir/check/1"},
             {"demand_lps", values_lps},
             {"feasible", verdict.feasible},
             {"worst_residual", verdict.worst_residual},
             {"worst_constraint", verdict.worst_constraint},
             {"member_from_polytope", member_from}};
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "demand (L/s):";
    for (double v : values_lps) std::cout << " " << fixed6(v);
    std::cout << "\nfeasible: " << (verdict.feasible ? "yes" : "no")
              << " (worst residual " << sci3(verdict.worst_residual) << ", "
              << verdict.worst_constraint << ")\n";
    if (member_from >= 0)
      std::cout << "membership: inside C" << member_from << " onward\n";
    else
      std::cout << "membership: outside every polytope\n";
  }
  return verdict.feasible ? 0 : 1;
}

int cmd_grid(const std::string& path, int k_flag, const std::string& out,
             bool as_json) {
  Loaded loaded = load_network(path, true, {});
  OpsSolution ops =
      solve_ops(loaded.net, forecast_demands(loaded.net),
                loaded.settings.efficiency, loaded.settings.tariff);
  SIRProblem prob = problem_from(loaded, ops);
  int k = k_flag >= 2 ? k_flag : loaded.settings.grid_points;
  GridScreen screen = grid_screen(prob, k);

  if (as_json) {
    std::cout << to_json(screen).dump(2) << "\n";
  } else {
    for (std::size_t i = 0; i < screen.axes.size(); ++i)
      std::cout << "axis " << loaded.net.node(prob.variable_nodes[i]).id
                << " (L/s): [" << fixed6(screen.axes[i].front() * kM3sToLps)
                << ", " << fixed6(screen.axes[i].back() * kM3sToLps) << "] x "
                << screen.axes[i].size() << "\n";
    std::cout << "points: " << screen.total()
              << ", feasible: " << screen.feasible_count
              << ", infeasible: " << screen.infeasible_count << "\n";
  }
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    write_file_atomic((std::filesystem::path(out) / "grid.json").string(),
                      to_json(screen).dump(2) + "\n");
    std::cerr << "wrote " << out << "/grid.json\n";
  }
  return 0;
}

int cmd_probe(const std::string& path, int trials, std::uint64_t seed,
              bool as_json) {
  Loaded loaded = load_network(path, true, {});
  OpsSolution ops =
      solve_ops(loaded.net, forecast_demands(loaded.net),
                loaded.settings.efficiency, loaded.settings.tariff);
  SIRProblem prob = problem_from(loaded, ops);
  ConvexityReport report = convexity_probe(prob, trials, seed);

  if (as_json) {
    json out{{"schema", "watersir/probe/1"},
             {"pairs_tested", report.pairs_tested},
             {"segment_checks", report.segment_checks},
             {"violations", report.violations},
             {"worst_residual", report.worst_residual},
             {"worst_case", report.worst_case},
             {"seed", report.seed}};
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "pairs tested: " << report.pairs_tested << " (seed "
              << report.seed << ")\n"
              << "segment checks: " << report.segment_checks << "\n"
              << "violations: " << report.violations << "\n"
              << "worst residual: " << sci3(report.worst_residual);
    if (!report.worst_case.empty()) std::cout << " at " << report.worst_case;
    std::cout << "\n";
  }
  return report.violations == 0 ? 0 : 1;
}

int cmd_export(const std::string& dir, const std::string& what_name,
               const std::string& format_name) {
  Artifact what;
  ExportFormat format;
  try {
    what = artifact_from_name(what_name);
    format = format_from_name(format_name);
  } catch (const std::invalid_argument& err) {
    throw UsageError(err.what());
  }
  if (!export_supported(what, format))
    throw UsageError("unsupported artifact/format pair '" + what_name + "/" +
                     format_name + "'");

  namespace fs = std::filesystem;
  auto load_json = [&](const char* name) {
    return json::parse(read_file((fs::path(dir) / name).string()));
  };

  ExportBundle bundle;
  PolytopeSequence seq;
  Polytope poly;
  GridScreen grid;
  TimingReport timing;
  switch (what) {
    case Artifact::polytope:
    case Artifact::sequence:
      seq = sequence_from_json(load_json("sequence.json"));
      if (seq.polytopes.empty()) throw std::runtime_error("nothing to export");
      poly = seq.polytopes.back();
      bundle.sequence = &seq;
      bundle.polytope = &poly;
      break;
    case Artifact::grid:
      grid = grid_from_json(load_json("grid.json"));
      bundle.grid = &grid;
      break;
    case Artifact::timing:
      timing = timing_from_json(load_json("timing.json"));
      bundle.timing = &timing;
      break;
  }
  try {
    std::cout << export_artifact(bundle, what, format);
  } catch (const std::invalid_argument& err) {
    throw UsageError(err.what());
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"security injection regions of tree water networks"};
  app.require_subcommand(1);

  std::string path, out_dir, demand_csv, what_name, format_name;
  bool as_json = false, no_timing = false;
  int rounds = -1, grid_k = 0, trials = 500;
  std::uint64_t seed = 2025;
  InpOptions inp_options;
  double inp_gain_min = 0.0, inp_gain_max = 0.0;

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "check a network file for violations");
  validate_cmd->add_option("file", path, "network file (.wds or .inp)")
      ->required();
  validate_cmd->add_flag("--json", as_json, "machine-readable output");
  CLI::Option* gmin = validate_cmd->add_option(
      "--pump-gain-min", inp_gain_min, "pump gain lower bound for .inp (m)");
  CLI::Option* gmax = validate_cmd->add_option(
      "--pump-gain-max", inp_gain_max, "pump gain upper bound for .inp (m)");

  CLI::App* ops_cmd =
      app.add_subcommand("ops", "solve the pump schedule at forecast demands");
  ops_cmd->add_option("file", path, "network file")->required();
  ops_cmd->add_flag("--json", as_json, "machine-readable output");

  CLI::App* sir_cmd = app.add_subcommand(
      "sir", "build the monotone polytope sequence of the secure region");
  sir_cmd->add_option("file", path, "network file")->required();
  sir_cmd->add_option("--rounds", rounds, "expansion rounds");
  sir_cmd->add_option("--out", out_dir, "write a run directory");
  sir_cmd->add_flag("--json", as_json, "machine-readable output");
  sir_cmd->add_flag("--no-timing", no_timing, "omit timing output");

  CLI::App* check_cmd = app.add_subcommand(
      "check", "feasibility and polytope membership of one demand vector");
  check_cmd->add_option("file", path, "network file")->required();
  check_cmd
      ->add_option("--demand", demand_csv,
                   "variable demands in L/s, comma-separated")
      ->required();
  check_cmd->add_flag("--json", as_json, "machine-readable output");

  CLI::App* grid_cmd = app.add_subcommand(
      "grid", "brute-force feasibility screen on a demand grid");
  grid_cmd->add_option("file", path, "network file")->required();
  grid_cmd->add_option("--k", grid_k, "points per axis");
  grid_cmd->add_option("--out", out_dir, "directory for grid.json");
  grid_cmd->add_flag("--json", as_json, "machine-readable output");

  CLI::App* probe_cmd = app.add_subcommand(
      "probe", "sample convex combinations of feasible points");
  probe_cmd->add_option("file", path, "network file")->required();
  probe_cmd->add_option("--trials", trials, "number of feasible pairs");
  probe_cmd->add_option("--seed", seed, "random seed");
  probe_cmd->add_flag("--json", as_json, "machine-readable output");

  CLI::App* export_cmd = app.add_subcommand(
      "export", "re-render artifacts from a run directory to stdout");
  export_cmd->add_option("run-dir", path, "directory written by sir/grid")
      ->required();
  export_cmd
      ->add_option("--what", what_name, "polytope | sequence | grid | timing")
      ->required();
  export_cmd->add_option("--format", format_name, "json | csv | off | svg")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gmin) inp_options.pump_gain_min_m = inp_gain_min;
    if (*gmax) inp_options.pump_gain_max_m = inp_gain_max;
    if (validate_cmd->parsed())
      return cmd_validate(path, as_json, inp_options);
    if (ops_cmd->parsed()) return cmd_ops(path, as_json);
    if (sir_cmd->parsed())
      return cmd_sir(path, rounds, out_dir, as_json, no_timing);
    if (check_cmd->parsed()) return cmd_check(path, demand_csv, as_json);
    if (grid_cmd->parsed()) return cmd_grid(path, grid_k, out_dir, as_json);
    if (probe_cmd->parsed()) return cmd_probe(path, trials, seed, as_json);
    if (export_cmd->parsed()) return cmd_export(path, what_name, format_name);
  } catch (const UsageError& err) {
    report_error(err.what());
    return 2;
  } catch (const std::exception& err) {
    report_error(err.what());
    return 1;
  }
  return 2;  // unreachable with require_subcommand(1)
}

}  // namespace watersir
