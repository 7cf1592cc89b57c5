#include "watersir/exports.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace watersir {
namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find(',') == std::string::npos && s.find('"') == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string polytope_csv(const Polytope& p) {
  std::ostringstream out;
  for (int i = 0; i < p.dimension; ++i) out << (i ? "," : "") << "d" << i;
  out << "\n";
  for (const auto& v : p.vertices) {
    for (int i = 0; i < p.dimension; ++i) out << (i ? "," : "") << num(v[i]);
    out << "\n";
  }
  return out.str();
}

std::string sequence_csv(const PolytopeSequence& seq) {
  std::vector<double> rel = relative_volumes(seq);
  std::ostringstream out;
  out << "index,vertices,volume,relative_volume\n";
  for (std::size_t i = 0; i < seq.polytopes.size(); ++i)
    out << i << "," << seq.polytopes[i].vertices.size() << ","
        << num(seq.volumes[i]) << "," << num(rel[i]) << "\n";
  return out.str();
}

std::string grid_csv(const GridScreen& g) {
  std::ostringstream out;
  for (std::size_t i = 0; i < g.axes.size(); ++i)
    out << (i ? "," : "") << "d" << i;
  out << ",feasible,worst_residual,worst_constraint\n";
  for (std::size_t i = 0; i < g.total(); ++i) {
    for (double c : g.point(i)) out << num(c) << ",";
    const FeasibilityVerdict& v = g.verdicts[i];
    out << (v.feasible ? 1 : 0) << "," << num(v.worst_residual) << ","
        << csv_quote(v.worst_constraint) << "\n";
  }
  return out.str();
}

std::string timing_csv(const TimingReport& t) {
  std::ostringstream out;
  out << "stage,seconds\n";
  for (const auto& s : t.stages)
    out << csv_quote(s.name) << "," << num(s.seconds) << "\n";
  return out.str();
}

// Triangulated mesh: a fan per facet ring. Rings are counterclockwise
// from outside, which OFF viewers take as front-facing.
std::string polytope_off(const Polytope& p) {
  if (p.dimension != 3)
    throw std::invalid_argument("OFF export needs a 3-D polytope");
  std::size_t tris = 0;
  for (const Facet& f : p.facets)
    if (f.vertex_ring.size() >= 3) tris += f.vertex_ring.size() - 2;
  std::ostringstream out;
  out << "OFF\n" << p.vertices.size() << " " << tris << " 0\n";
  for (const auto& v : p.vertices)
    out << num(v[0]) << " " << num(v[1]) << " " << num(v[2]) << "\n";
  for (const Facet& f : p.facets)
    for (std::size_t k = 1; k + 1 < f.vertex_ring.size(); ++k)
      out << "3 " << f.vertex_ring[0] << " " << f.vertex_ring[k] << " "
          << f.vertex_ring[k + 1] << "\n";
  return out.str();
}

struct SvgCanvas {
  std::ostringstream body;
  double width = 0, height = 0;

  std::string finish() {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width)
        << "\" height=\"" << px(height) << "\" viewBox=\"0 0 " << px(width)
        << " " << px(height) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body.str() << "</svg>\n";
    return out.str();
  }
};

void svg_text(SvgCanvas& c, double x, double y, const std::string& s,
              const char* anchor = "middle") {
  c.body << "<text x=\"" << px(x) << "\" y=\"" << px(y)
         << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\""
         << anchor << "\">" << s << "</text>\n";
}

std::string bar_chart(const std::vector<std::string>& labels,
                      const std::vector<double>& values,
                      const std::string& title, const char* fill) {
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  if (vmax <= 0) vmax = 1.0;
  const double bar_w = 48, gap = 28, chart_h = 180;
  const double left = 50, top = 40, bottom = 40;
  SvgCanvas c;
  c.width = left + values.size() * (bar_w + gap) + 20;
  c.height = top + chart_h + bottom;
  svg_text(c, c.width / 2, 20, title);
  c.body << "<line x1=\"" << px(left - 8) << "\" y1=\"" << px(top + chart_h)
         << "\" x2=\"" << px(c.width - 12) << "\" y2=\"" << px(top + chart_h)
         << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    double h = chart_h * values[i] / vmax;
    double x = left + i * (bar_w + gap);
    double y = top + chart_h - h;
    c.body << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\""
           << px(bar_w) << "\" height=\"" << px(h) << "\" fill=\"" << fill
           << "\"/>\n";
    char val[32];
    std::snprintf(val, sizeof val, "%.4g", values[i]);
    svg_text(c, x + bar_w / 2, y - 6, val);
    svg_text(c, x + bar_w / 2, top + chart_h + 16, labels[i]);
  }
  return c.finish();
}

std::string sequence_svg(const PolytopeSequence& seq) {
  std::vector<double> rel = relative_volumes(seq);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < rel.size(); ++i)
    labels.push_back("C" + std::to_string(i));
  return bar_chart(labels, rel, "relative polytope volume", "#4878a8");
}

std::string timing_svg(const TimingReport& t) {
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& s : t.stages) {
    labels.push_back(s.name);
    values.push_back(s.seconds);
  }
  if (values.empty()) throw std::runtime_error("nothing to export");
  return bar_chart(labels, values, "stage time (s)", "#a85848");
}

// Boundary of the projection onto an axis pair: hull the projected
// vertices, then walk the convex outline by angle around the centroid.
std::vector<std::vector<double>> projected_outline(const Polytope& p, int ax,
                                                   int ay) {
  std::vector<std::vector<double>> pts;
  for (const auto& v : p.vertices) pts.push_back({v[ax], v[ay]});
  double sx = 0, sy = 0;
  for (const auto& q : pts) {
    sx = std::max(sx, std::abs(q[0]));
    sy = std::max(sy, std::abs(q[1]));
  }
  Polytope hull = convex_hull(pts, {sx > 0 ? sx : 1.0, sy > 0 ? sy : 1.0});
  std::vector<double> ctr(2, 0.0);
  for (const auto& q : hull.vertices) {
    ctr[0] += q[0] / hull.vertices.size();
    ctr[1] += q[1] / hull.vertices.size();
  }
  std::vector<std::vector<double>> ring = hull.vertices;
  std::sort(ring.begin(), ring.end(),
            [&](const std::vector<double>& a, const std::vector<double>& b) {
              return std::atan2(a[1] - ctr[1], a[0] - ctr[0]) <
                     std::atan2(b[1] - ctr[1], b[0] - ctr[0]);
            });
  return ring;
}

std::string polytope_svg(const Polytope& p) {
  if (p.dimension < 2)
    throw std::invalid_argument("SVG projection needs dimension 2 or 3");
  std::vector<std::pair<int, int>> panels;
  if (p.dimension == 2)
    panels = {{0, 1}};
  else
    panels = {{0, 1}, {0, 2}, {1, 2}};

  const double panel = 220, margin = 46;
  SvgCanvas c;
  c.width = margin + panels.size() * (panel + margin);
  c.height = panel + 2 * margin;
  for (std::size_t k = 0; k < panels.size(); ++k) {
    auto [ax, ay] = panels[k];
    std::vector<std::vector<double>> ring = projected_outline(p, ax, ay);
    double lo_x = ring[0][0], hi_x = ring[0][0];
    double lo_y = ring[0][1], hi_y = ring[0][1];
    for (const auto& q : ring) {
      lo_x = std::min(lo_x, q[0]);
      hi_x = std::max(hi_x, q[0]);
      lo_y = std::min(lo_y, q[1]);
      hi_y = std::max(hi_y, q[1]);
    }
    double span_x = hi_x > lo_x ? hi_x - lo_x : 1.0;
    double span_y = hi_y > lo_y ? hi_y - lo_y : 1.0;
    double ox = margin + k * (panel + margin);
    double oy = margin;
    c.body << "<polygon points=\"";
    for (const auto& q : ring) {
      double X = ox + (q[0] - lo_x) / span_x * panel;
      double Y = oy + panel - (q[1] - lo_y) / span_y * panel;
      c.body << px(X) << "," << px(Y) << " ";
    }
    c.body << "\" fill=\"#c8dcf0\" stroke=\"#203050\"/>\n";
    svg_text(c, ox + panel / 2, oy + panel + 24,
             "d" + std::to_string(ax) + " vs d" + std::to_string(ay));
  }
  return c.finish();
}

const Polytope& need_polytope(const ExportBundle& b) {
  if (!b.polytope) throw std::invalid_argument("no polytope supplied");
  return *b.polytope;
}

const PolytopeSequence& need_sequence(const ExportBundle& b) {
  if (!b.sequence) throw std::invalid_argument("no sequence supplied");
  if (b.sequence->polytopes.empty())
    throw std::runtime_error("nothing to export");
  return *b.sequence;
}

void expect_schema(const json& j, const char* tag) {
  if (!j.is_object() || j.value("schema", "") != tag)
    throw std::invalid_argument(std::string("expected a '") + tag +
                                "' document");
}

}  // namespace

json to_json(const Polytope& p) {
  json facets = json::array();
  for (const Facet& f : p.facets)
    facets.push_back({{"normal", f.normal},
                      {"offset", f.offset},
                      {"vertex_ring", f.vertex_ring}});
  return json{{"schema", "watersir/polytope/1"},
              {"dimension", p.dimension},
              {"vertices", p.vertices},
              {"facets", facets}};
}

json to_json(const PolytopeSequence& seq) {
  json polys = json::array();
  for (const Polytope& p : seq.polytopes) polys.push_back(to_json(p));
  json steps = json::array();
  for (const ExpansionStep& s : seq.steps)
    steps.push_back({{"facets_attempted", s.facets_attempted},
                     {"vertices_added", s.vertices_added},
                     {"max_gain", s.max_gain},
                     {"notes", s.notes}});
  return json{{"schema", "watersir/sequence/1"},
              {"polytopes", polys},
              {"steps", steps},
              {"volumes", seq.volumes},
              {"relative_volumes", relative_volumes(seq)}};
}

json to_json(const GridScreen& g) {
  json rows = json::array();
  for (std::size_t i = 0; i < g.total(); ++i) {
    const FeasibilityVerdict& v = g.verdicts[i];
    rows.push_back({{"point", g.point(i)},
                    {"feasible", v.feasible},
                    {"worst_residual", v.worst_residual},
                    {"worst_constraint", v.worst_constraint}});
  }
  return json{{"schema", "watersir/grid/1"},
              {"axes", g.axes},
              {"feasible_count", g.feasible_count},
              {"infeasible_count", g.infeasible_count},
              {"rows", rows}};
}

json to_json(const TimingReport& t) {
  json stages = json::array();
  for (const auto& s : t.stages)
    stages.push_back({{"name", s.name}, {"seconds", s.seconds}});
  return json{{"schema", "watersir/timing/1"}, {"stages", stages}};
}

Polytope polytope_from_json(const json& j) {
  expect_schema(j, "watersir/polytope/1");
  Polytope p;
  p.dimension = j.at("dimension").get<int>();
  p.vertices = j.at("vertices").get<std::vector<std::vector<double>>>();
  for (const json& f : j.at("facets")) {
    Facet facet;
    facet.normal = f.at("normal").get<std::vector<double>>();
    facet.offset = f.at("offset").get<double>();
    facet.vertex_ring = f.at("vertex_ring").get<std::vector<int>>();
    p.facets.push_back(std::move(facet));
  }
  return p;
}

PolytopeSequence sequence_from_json(const json& j) {
  expect_schema(j, "watersir/sequence/1");
  PolytopeSequence seq;
  for (const json& p : j.at("polytopes"))
    seq.polytopes.push_back(polytope_from_json(p));
  for (const json& s : j.at("steps")) {
    ExpansionStep step;
    step.facets_attempted = s.at("facets_attempted").get<int>();
    step.vertices_added = s.at("vertices_added").get<int>();
    step.max_gain = s.at("max_gain").get<double>();
    step.notes = s.at("notes").get<std::vector<std::string>>();
    seq.steps.push_back(std::move(step));
  }
  seq.volumes = j.at("volumes").get<std::vector<double>>();
  return seq;
}

GridScreen grid_from_json(const json& j) {
  expect_schema(j, "watersir/grid/1");
  GridScreen g;
  g.axes = j.at("axes").get<std::vector<std::vector<double>>>();
  for (const json& row : j.at("rows")) {
    FeasibilityVerdict v;
    v.feasible = row.at("feasible").get<bool>();
    v.worst_residual = row.at("worst_residual").get<double>();
    v.worst_constraint = row.at("worst_constraint").get<std::string>();
    ++(v.feasible ? g.feasible_count : g.infeasible_count);
    g.verdicts.push_back(std::move(v));
  }
  return g;
}

TimingReport timing_from_json(const json& j) {
  expect_schema(j, "watersir/timing/1");
  TimingReport t;
  for (const json& s : j.at("stages"))
    t.stages.push_back(
        {s.at("name").get<std::string>(), s.at("seconds").get<double>()});
  return t;
}

Artifact artifact_from_name(const std::string& name) {
  if (name == "polytope") return Artifact::polytope;
  if (name == "sequence") return Artifact::sequence;
  if (name == "grid") return Artifact::grid;
  if (name == "timing") return Artifact::timing;
  throw std::invalid_argument("unknown artifact '" + name + "'");
}

ExportFormat format_from_name(const std::string& name) {
  if (name == "json") return ExportFormat::json;
  if (name == "csv") return ExportFormat::csv;
  if (name == "off") return ExportFormat::off;
  if (name == "svg") return ExportFormat::svg;
  throw std::invalid_argument("unknown format '" + name + "'");
}

bool export_supported(Artifact what, ExportFormat format) {
  switch (what) {
    case Artifact::polytope:
      return true;
    case Artifact::sequence:
      return format != ExportFormat::off;
    case Artifact::grid:
      return format == ExportFormat::json || format == ExportFormat::csv;
    case Artifact::timing:
      return format != ExportFormat::off;
  }
  return false;
}

std::string export_artifact(const ExportBundle& bundle, Artifact what,
                            ExportFormat format) {
  auto unsupported = [] {
    return std::invalid_argument("unsupported artifact/format pair");
  };
  switch (what) {
    case Artifact::polytope: {
      const Polytope& p = need_polytope(bundle);
      if (format == ExportFormat::json) return to_json(p).dump(2) + "\n";
      if (format == ExportFormat::csv) return polytope_csv(p);
      if (format == ExportFormat::off) return polytope_off(p);
      return polytope_svg(p);
    }
    case Artifact::sequence: {
      const PolytopeSequence& s = need_sequence(bundle);
      if (format == ExportFormat::json) return to_json(s).dump(2) + "\n";
      if (format == ExportFormat::csv) return sequence_csv(s);
      if (format == ExportFormat::svg) return sequence_svg(s);
      throw unsupported();
    }
    case Artifact::grid: {
      if (!bundle.grid) throw std::invalid_argument("no grid supplied");
      if (format == ExportFormat::json)
        return to_json(*bundle.grid).dump(2) + "\n";
      if (format == ExportFormat::csv) return grid_csv(*bundle.grid);
      throw unsupported();
    }
    case Artifact::timing: {
      if (!bundle.timing) throw std::invalid_argument("no timing supplied");
      if (format == ExportFormat::json)
        return to_json(*bundle.timing).dump(2) + "\n";
      if (format == ExportFormat::csv) return timing_csv(*bundle.timing);
      if (format == ExportFormat::svg) return timing_svg(*bundle.timing);
      throw unsupported();
    }
  }
  throw unsupported();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void write_run_dir(const std::string& dir, const std::string& input_text,
                   const FileSettings& settings, int rounds,
                   const PolytopeSequence& seq, const TimingReport& timing) {
  if (seq.polytopes.empty()) throw std::runtime_error("nothing to export");
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto at = [&](const char* name) { return (fs::path(dir) / name).string(); };

  write_file_atomic(at("inputs.wds"), input_text);
  write_file_atomic(at("inputs-hash.txt"), hash_hex(fnv1a64(input_text)) + "\n");

  json s{{"schema", "watersir/settings/1"},
         {"gravity", settings.gravity},
         {"friction_factor", settings.friction_factor},
         {"efficiency", settings.efficiency},
         {"tariff", settings.tariff},
         {"grid_points", settings.grid_points},
         {"rounds", rounds},
         {"variable_nodes", settings.variable_nodes}};
  write_file_atomic(at("settings.json"), s.dump(2) + "\n");

  ExportBundle bundle;
  bundle.sequence = &seq;
  bundle.timing = &timing;
  write_file_atomic(at("sequence.json"),
                    export_artifact(bundle, Artifact::sequence,
                                    ExportFormat::json));
  write_file_atomic(at("volumes.csv"),
                    export_artifact(bundle, Artifact::sequence,
                                    ExportFormat::csv));
  write_file_atomic(at("volumes.svg"),
                    export_artifact(bundle, Artifact::sequence,
                                    ExportFormat::svg));
  write_file_atomic(at("timing.json"),
                    export_artifact(bundle, Artifact::timing,
                                    ExportFormat::json));

  const Polytope& last = seq.polytopes.back();
  bundle.polytope = &last;
  write_file_atomic(at("vertices-final.csv"),
                    export_artifact(bundle, Artifact::polytope,
                                    ExportFormat::csv));
  if (last.dimension == 3)
    write_file_atomic(at("final.off"),
                      export_artifact(bundle, Artifact::polytope,
                                      ExportFormat::off));
  if (last.dimension >= 2)
    write_file_atomic(at("final.svg"),
                      export_artifact(bundle, Artifact::polytope,
                                      ExportFormat::svg));
}

}  // namespace watersir
