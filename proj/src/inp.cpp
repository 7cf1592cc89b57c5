#include "watersir/inp.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace watersir {
namespace {

constexpr double kLpsToM3s = 1e-3;
constexpr double kMmToM = 1e-3;

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double to_number(const std::string& tok, int line, const std::string& what) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + tok.size() || tok.empty())
    throw ParseError(line, 1, what + ": expected a number, got '" + tok + "'");
  return v;
}

}  // namespace

InpImport parse_inp_subset(const std::string& text,
                           const InpOptions& options) {
  static const std::unordered_set<std::string> kSupported = {
      "JUNCTIONS", "RESERVOIRS", "TANKS", "PIPES", "PUMPS", "COORDINATES",
      "END"};

  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<std::string> warnings;
  bool roughness_warned = false;
  bool pump_warned = false;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  bool ended = false;

  while (std::getline(in, raw) && !ended) {
    ++lineno;
    if (auto semi = raw.find(';'); semi != std::string::npos)
      raw.erase(semi);
    std::vector<std::string> toks = split(raw);
    if (toks.empty()) continue;

    if (toks[0].front() == '[') {
      std::string name = toks[0];
      if (name.back() != ']')
        throw ParseError(lineno, 1, "malformed section header '" + name + "'");
      section = upper(name.substr(1, name.size() - 2));
      if (!kSupported.count(section))
        throw ParseError(lineno, 1,
                         "unsupported section [" + section + "]");
      if (section == "END") ended = true;
      continue;
    }
    if (section.empty())
      throw ParseError(lineno, 1, "data before any section header");
    if (section == "COORDINATES") continue;

    if (section == "JUNCTIONS") {
      if (toks.size() < 2)
        throw ParseError(lineno, 1, "junction needs columns: id elevation");
      Node n;
      n.id = toks[0];
      n.kind = NodeKind::junction;
      n.elevation_m = to_number(toks[1], lineno, "junction elevation");
      n.head_min_m = options.junction_head_min_m;
      n.head_max_m = options.junction_head_max_m;
      if (toks.size() >= 3) {
        double d = to_number(toks[2], lineno, "junction demand") * kLpsToM3s;
        n.fixed_demand = d;
        n.demand_min = d;
        n.demand_max = d;
      }
      nodes.push_back(std::move(n));
    } else if (section == "RESERVOIRS") {
      if (toks.size() < 2)
        throw ParseError(lineno, 1, "reservoir needs columns: id head");
      Node n;
      n.id = toks[0];
      n.kind = NodeKind::source;
      n.elevation_m = to_number(toks[1], lineno, "reservoir head");
      n.head_min_m = 0.0;
      n.head_max_m = 0.0;
      n.inject_min = -1e9;
      n.inject_max = 1e9;
      nodes.push_back(std::move(n));
    } else if (section == "TANKS") {
      if (toks.size() < 4)
        throw ParseError(
            lineno, 1,
            "tank needs columns: id elevation init-level min-level max-level");
      Node n;
      n.id = toks[0];
      n.kind = NodeKind::source;
      n.elevation_m = to_number(toks[1], lineno, "tank elevation");
      double min_level =
          toks.size() >= 4 ? to_number(toks[3], lineno, "tank min level") : 0;
      double max_level = toks.size() >= 5
                             ? to_number(toks[4], lineno, "tank max level")
                             : min_level;
      n.head_min_m = min_level;
      n.head_max_m = max_level;
      n.inject_min = -1e9;
      n.inject_max = 1e9;
      nodes.push_back(std::move(n));
    } else if (section == "PIPES") {
      if (toks.size() < 5)
        throw ParseError(
            lineno, 1,
            "pipe needs columns: id node1 node2 length diameter");
      Edge e;
      e.id = toks[0];
      e.from = toks[1];
      e.to = toks[2];
      e.kind = EdgeKind::pipe;
      e.length_m = to_number(toks[3], lineno, "pipe length");
      e.diameter_m = to_number(toks[4], lineno, "pipe diameter") * kMmToM;
      e.friction_factor = options.friction_factor;
      if (toks.size() >= 6 && !roughness_warned) {
        warnings.push_back(
            "pipe roughness column ignored; head loss uses friction factor " +
            std::to_string(options.friction_factor));
        roughness_warned = true;
      }
      edges.push_back(std::move(e));
    } else if (section == "PUMPS") {
      if (toks.size() < 3)
        throw ParseError(lineno, 1, "pump needs columns: id node1 node2");
      if (!options.pump_gain_min_m || !options.pump_gain_max_m)
        throw ParseError(lineno, 1,
                         "pump '" + toks[0] +
                             "': POWER/HEAD curves do not reduce to an "
                             "affine gain curve; supply gain bounds");
      Edge e;
      e.id = toks[0];
      e.from = toks[1];
      e.to = toks[2];
      e.kind = EdgeKind::pump;
      e.pump_gain_min_m = *options.pump_gain_min_m;
      e.pump_gain_max_m = *options.pump_gain_max_m;
      if (!pump_warned) {
        warnings.push_back("pump curve parameters ignored; gain treated as "
                           "free within the supplied bounds");
        pump_warned = true;
      }
      edges.push_back(std::move(e));
    }
  }

  if (nodes.empty()) throw ParseError(1, 1, "no nodes imported");
  try {
    return InpImport{Network(std::move(nodes), std::move(edges)), warnings};
  } catch (const std::invalid_argument& err) {
    throw ParseError(1, 1, err.what());
  }
}

}  // namespace watersir
