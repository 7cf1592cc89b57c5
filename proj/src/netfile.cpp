#include "watersir/netfile.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

namespace watersir {
namespace {

constexpr double kLpsToM3s = 1e-3;

// Inverse unit conversion that survives a reparse: find the printed value
// p with fl(p * factor) == internal, searching one ulp either side.
double exact_unconvert(double internal, double factor) {
  double p = internal / factor;
  for (double cand :
       {p, std::nextafter(p, std::numeric_limits<double>::infinity()),
        std::nextafter(p, -std::numeric_limits<double>::infinity())}) {
    if (cand * factor == internal) return cand;
  }
  return p;
}

std::string format_double(double v) {
  char buf[64];
  for (int precision : {15, 16, 17}) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

struct Token {
  std::string text;
  int line;
  int col;
};

std::vector<std::vector<Token>> tokenize(const std::string& text) {
  std::vector<std::vector<Token>> lines;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < raw.size()) {
      if (raw[i] == '#') break;
      if (std::isspace(static_cast<unsigned char>(raw[i]))) {
        ++i;
        continue;
      }
      std::size_t start = i;
      while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i])) &&
             raw[i] != '#')
        ++i;
      tokens.push_back({raw.substr(start, i - start), lineno,
                        static_cast<int>(start) + 1});
    }
    lines.push_back(std::move(tokens));
  }
  return lines;
}

double parse_number(const Token& tok) {
  const char* begin = tok.text.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + tok.text.size() || tok.text.empty())
    throw ParseError(tok.line, tok.col, "expected a number, got '" + tok.text +
                                            "'");
  return v;
}

int parse_int(const Token& tok) {
  double v = parse_number(tok);
  if (v != std::floor(v) || std::abs(v) > 1e9)
    throw ParseError(tok.line, tok.col,
                     "expected an integer, got '" + tok.text + "'");
  return static_cast<int>(v);
}

struct PendingNode {
  Node node;
  int line = 0;
  bool has_fixed = false;
  bool has_box_min = false;
  bool has_box_max = false;
};

struct PendingEdge {
  Edge edge;
  int line = 0;
};

}  // namespace

ParsedNetwork parse_network(const std::string& text, bool run_validate) {
  std::vector<std::vector<Token>> lines = tokenize(text);

  FileSettings settings;
  std::vector<PendingNode> nodes;
  std::vector<PendingEdge> edges;
  bool schema_seen = false;

  enum class Block { none, defaults, node, edge, sir };
  Block block = Block::none;
  Token block_open{"", 1, 1};
  std::set<std::string> seen_keys;

  auto expect_count = [](const std::vector<Token>& toks, std::size_t count,
                         const std::string& what) {
    if (toks.size() != count)
      throw ParseError(toks[0].line, toks[0].col,
                       what + " expects " + std::to_string(count - 1) +
                           " value(s)");
  };

  for (const auto& toks : lines) {
    if (toks.empty()) continue;
    const Token& head = toks[0];

    if (block == Block::none) {
      if (head.text == "schema") {
        expect_count(toks, 2, "schema");
        if (parse_int(toks[1]) != 1)
          throw ParseError(toks[1].line, toks[1].col,
                           "unsupported schema version '" + toks[1].text +
                               "'");
        schema_seen = true;
      } else if (head.text == "defaults" || head.text == "sir") {
        expect_count(toks, 2, head.text);
        if (toks[1].text != "{")
          throw ParseError(toks[1].line, toks[1].col, "expected '{'");
        block = head.text == "defaults" ? Block::defaults : Block::sir;
        block_open = head;
        seen_keys.clear();
      } else if (head.text == "node" || head.text == "edge") {
        expect_count(toks, 3, head.text + " <id>");
        if (toks[2].text != "{")
          throw ParseError(toks[2].line, toks[2].col, "expected '{'");
        if (head.text == "node") {
          nodes.push_back({});
          nodes.back().node.id = toks[1].text;
          nodes.back().line = head.line;
          block = Block::node;
        } else {
          edges.push_back({});
          edges.back().edge.id = toks[1].text;
          edges.back().line = head.line;
          block = Block::edge;
        }
        block_open = head;
        seen_keys.clear();
      } else {
        throw ParseError(head.line, head.col,
                         "unknown directive '" + head.text + "'");
      }
      continue;
    }

    if (head.text == "}") {
      expect_count(toks, 1, "}");
      if (block == Block::node) {
        PendingNode& p = nodes.back();
        if (p.has_fixed && !p.has_box_min && !p.has_box_max) {
          p.node.demand_min = *p.node.fixed_demand;
          p.node.demand_max = *p.node.fixed_demand;
        }
      }
      block = Block::none;
      continue;
    }

    const std::string& key = head.text;
    if (!seen_keys.insert(key).second)
      throw ParseError(head.line, head.col, "duplicate key '" + key + "'");

    auto one = [&]() {
      expect_count(toks, 2, key);
      return toks[1];
    };
    auto number = [&]() { return parse_number(one()); };
    auto positive = [&]() {
      Token tok = one();
      double v = parse_number(tok);
      if (!(v > 0))
        throw ParseError(tok.line, tok.col, key + " must be positive");
      return v;
    };

    switch (block) {
      case Block::defaults: {
        if (key == "gravity")
          settings.gravity = positive();
        else if (key == "friction_factor")
          settings.friction_factor = positive();
        else if (key == "efficiency") {
          Token tok = one();
          double v = parse_number(tok);
          if (!(v > 0 && v <= 1))
            throw ParseError(tok.line, tok.col,
                             "efficiency must lie in (0, 1]");
          settings.efficiency = v;
        } else if (key == "tariff")
          settings.tariff = number();
        else
          throw ParseError(head.line, head.col,
                           "unknown key '" + key + "' in defaults block");
        break;
      }
      case Block::sir: {
        if (key == "variable_nodes") {
          if (toks.size() < 2)
            throw ParseError(head.line, head.col,
                             "variable_nodes expects at least one node id");
          for (std::size_t i = 1; i < toks.size(); ++i)
            settings.variable_nodes.push_back(toks[i].text);
        } else if (key == "grid_points") {
          Token tok = one();
          settings.grid_points = parse_int(tok);
          if (settings.grid_points < 2)
            throw ParseError(tok.line, tok.col,
                             "grid_points must be at least 2");
        } else if (key == "rounds") {
          Token tok = one();
          settings.rounds = parse_int(tok);
          if (settings.rounds < 0)
            throw ParseError(tok.line, tok.col, "rounds must be nonnegative");
        } else {
          throw ParseError(head.line, head.col,
                           "unknown key '" + key + "' in sir block");
        }
        break;
      }
      case Block::node: {
        Node& n = nodes.back().node;
        if (key == "kind") {
          Token tok = one();
          if (tok.text == "junction")
            n.kind = NodeKind::junction;
          else if (tok.text == "source")
            n.kind = NodeKind::source;
          else
            throw ParseError(tok.line, tok.col,
                             "kind must be 'junction' or 'source'");
        } else if (key == "elevation_m")
          n.elevation_m = number();
        else if (key == "head_min_m")
          n.head_min_m = number();
        else if (key == "head_max_m")
          n.head_max_m = number();
        else if (key == "demand_lps") {
          n.fixed_demand = number() * kLpsToM3s;
          nodes.back().has_fixed = true;
        } else if (key == "demand_min_lps") {
          n.demand_min = number() * kLpsToM3s;
          nodes.back().has_box_min = true;
        } else if (key == "demand_max_lps") {
          n.demand_max = number() * kLpsToM3s;
          nodes.back().has_box_max = true;
        } else if (key == "inject_min_lps")
          n.inject_min = number() * kLpsToM3s;
        else if (key == "inject_max_lps")
          n.inject_max = number() * kLpsToM3s;
        else
          throw ParseError(head.line, head.col,
                           "unknown key '" + key + "' in node block");
        break;
      }
      case Block::edge: {
        Edge& e = edges.back().edge;
        if (key == "kind") {
          Token tok = one();
          if (tok.text == "pipe")
            e.kind = EdgeKind::pipe;
          else if (tok.text == "pump")
            e.kind = EdgeKind::pump;
          else
            throw ParseError(tok.line, tok.col,
                             "kind must be 'pipe' or 'pump'");
        } else if (key == "from")
          e.from = one().text;
        else if (key == "to")
          e.to = one().text;
        else if (key == "length_m")
          e.length_m = positive();
        else if (key == "diameter_m")
          e.diameter_m = positive();
        else if (key == "friction_factor")
          e.friction_factor = positive();
        else if (key == "headloss_coeff")
          e.headloss_coeff = number();
        else if (key == "flow_min_lps")
          e.flow_min = number() * kLpsToM3s;
        else if (key == "flow_max_lps")
          e.flow_max = number() * kLpsToM3s;
        else if (key == "curve_a0_m")
          e.pump_a0 = number();
        else if (key == "curve_a1_m_per_lps")
          e.pump_a1 = number() / kLpsToM3s;
        else if (key == "gain_min_m")
          e.pump_gain_min_m = number();
        else if (key == "gain_max_m")
          e.pump_gain_max_m = number();
        else
          throw ParseError(head.line, head.col,
                           "unknown key '" + key + "' in edge block");
        break;
      }
      case Block::none:
        break;  // unreachable
    }
  }

  if (block != Block::none)
    throw ParseError(block_open.line, block_open.col,
                     "unterminated block (missing '}')");
  if (!schema_seen)
    throw ParseError(1, 1, "missing 'schema 1' declaration");
  if (nodes.empty()) throw ParseError(1, 1, "network declares no nodes");

  std::unordered_map<std::string, int> node_lines, edge_lines;
  for (const PendingNode& p : nodes) {
    if (!node_lines.emplace(p.node.id, p.line).second)
      throw ParseError(p.line, 1, "duplicate node id '" + p.node.id + "'");
  }
  for (const PendingEdge& p : edges) {
    if (!edge_lines.emplace(p.edge.id, p.line).second)
      throw ParseError(p.line, 1, "duplicate edge id '" + p.edge.id + "'");
    if (p.edge.from.empty() || p.edge.to.empty())
      throw ParseError(p.line, 1,
                       "edge '" + p.edge.id + "' needs 'from' and 'to'");
    for (const std::string& end : {p.edge.from, p.edge.to})
      if (!node_lines.count(end))
        throw ParseError(p.line, 1, "edge '" + p.edge.id +
                                        "' references unknown node '" + end +
                                        "'");
  }
  for (const std::string& id : settings.variable_nodes)
    if (!node_lines.count(id))
      throw ParseError(1, 1, "sir block references unknown node '" + id + "'");

  std::vector<Node> node_list;
  std::vector<Edge> edge_list;
  for (PendingNode& p : nodes) node_list.push_back(std::move(p.node));
  for (PendingEdge& p : edges) {
    if (p.edge.length_m && p.edge.diameter_m && !p.edge.friction_factor)
      p.edge.friction_factor = settings.friction_factor;
    edge_list.push_back(std::move(p.edge));
  }

  ParsedNetwork parsed{Network(std::move(node_list), std::move(edge_list),
                               settings.gravity),
                       settings};

  if (run_validate) {
    std::vector<Violation> violations = validate(parsed.net);
    if (!violations.empty()) {
      const Violation& v = violations.front();
      int line = 1;
      if (auto it = node_lines.find(v.element); it != node_lines.end())
        line = it->second;
      else if (auto it2 = edge_lines.find(v.element); it2 != edge_lines.end())
        line = it2->second;
      throw ParseError(line, 1, v.element + ": " + v.rule);
    }
  }
  return parsed;
}

std::string serialize_network(const Network& net,
                              const FileSettings& settings) {
  std::ostringstream out;
  auto lps = [](double v) { return format_double(exact_unconvert(v, kLpsToM3s)); };

  out << "schema 1\n\n";
  out << "defaults {\n";
  out << "  gravity " << format_double(settings.gravity) << "\n";
  out << "  friction_factor " << format_double(settings.friction_factor)
      << "\n";
  out << "  efficiency " << format_double(settings.efficiency) << "\n";
  out << "  tariff " << format_double(settings.tariff) << "\n";
  out << "}\n";

  for (const Node& n : net.nodes()) {
    out << "\nnode " << n.id << " {\n";
    out << "  kind " << (n.kind == NodeKind::source ? "source" : "junction")
        << "\n";
    out << "  elevation_m " << format_double(n.elevation_m) << "\n";
    out << "  head_min_m " << format_double(n.head_min_m) << "\n";
    out << "  head_max_m " << format_double(n.head_max_m) << "\n";
    if (n.fixed_demand) {
      out << "  demand_lps " << lps(*n.fixed_demand) << "\n";
      if (n.demand_min != *n.fixed_demand || n.demand_max != *n.fixed_demand) {
        out << "  demand_min_lps " << lps(n.demand_min) << "\n";
        out << "  demand_max_lps " << lps(n.demand_max) << "\n";
      }
    } else if (n.demand_min != 0.0 || n.demand_max != 0.0) {
      out << "  demand_min_lps " << lps(n.demand_min) << "\n";
      out << "  demand_max_lps " << lps(n.demand_max) << "\n";
    }
    if (n.kind == NodeKind::source || n.inject_min != 0.0 ||
        n.inject_max != 0.0) {
      out << "  inject_min_lps " << lps(n.inject_min) << "\n";
      out << "  inject_max_lps " << lps(n.inject_max) << "\n";
    }
    out << "}\n";
  }

  for (const Edge& e : net.edges()) {
    out << "\nedge " << e.id << " {\n";
    out << "  kind " << (e.kind == EdgeKind::pump ? "pump" : "pipe") << "\n";
    out << "  from " << e.from << "\n";
    out << "  to " << e.to << "\n";
    if (e.length_m) out << "  length_m " << format_double(*e.length_m) << "\n";
    if (e.diameter_m)
      out << "  diameter_m " << format_double(*e.diameter_m) << "\n";
    if (e.friction_factor)
      out << "  friction_factor " << format_double(*e.friction_factor)
          << "\n";
    if (!(e.length_m && e.diameter_m) && e.headloss_coeff != 0.0)
      out << "  headloss_coeff " << format_double(e.headloss_coeff) << "\n";
    if (e.flow_min > -1e9) out << "  flow_min_lps " << lps(e.flow_min) << "\n";
    if (e.flow_max < 1e9) out << "  flow_max_lps " << lps(e.flow_max) << "\n";
    if (e.pump_a0) out << "  curve_a0_m " << format_double(*e.pump_a0) << "\n";
    if (e.pump_a1)
      out << "  curve_a1_m_per_lps "
          << format_double(exact_unconvert(*e.pump_a1, 1.0 / kLpsToM3s))
          << "\n";
    if (e.kind == EdgeKind::pump) {
      out << "  gain_min_m " << format_double(e.pump_gain_min_m) << "\n";
      out << "  gain_max_m " << format_double(e.pump_gain_max_m) << "\n";
    }
    out << "}\n";
  }

  out << "\nsir {\n";
  if (!settings.variable_nodes.empty()) {
    out << "  variable_nodes";
    for (const std::string& id : settings.variable_nodes) out << " " << id;
    out << "\n";
  }
  out << "  grid_points " << settings.grid_points << "\n";
  out << "  rounds " << settings.rounds << "\n";
  out << "}\n";
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush())
      throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace watersir
