#include "watersir/polytope.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace watersir {
namespace {

using Point = std::vector<double>;
using Vec3 = std::array<double, 3>;

Vec3 sub3(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
double dot3(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
double norm3(const Vec3& a) { return std::sqrt(dot3(a, a)); }

std::vector<Point> scale_points(const std::vector<Point>& pts,
                                const std::vector<double>& axis_scale) {
  std::vector<Point> out(pts.size(), Point(axis_scale.size()));
  for (std::size_t p = 0; p < pts.size(); ++p)
    for (std::size_t i = 0; i < axis_scale.size(); ++i)
      out[p][i] = pts[p][i] / (axis_scale[i] > 0 ? axis_scale[i] : 1.0);
  return out;
}

std::vector<int> dedup_points(const std::vector<Point>& scaled, double tol) {
  std::vector<int> keep;
  for (std::size_t p = 0; p < scaled.size(); ++p) {
    bool fresh = true;
    for (int q : keep) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < scaled[p].size(); ++i) {
        double d = scaled[p][i] - scaled[q][i];
        d2 += d * d;
      }
      if (d2 <= tol * tol) {
        fresh = false;
        break;
      }
    }
    if (fresh) keep.push_back(static_cast<int>(p));
  }
  return keep;
}

// Unit outward plane in original coordinates from a scaled-space plane;
// the offset is then tightened to the ring's own vertices.
void set_facet_plane(Facet& facet, const Point& scaled_normal,
                     const std::vector<double>& axis_scale,
                     const std::vector<Point>& vertices) {
  std::size_t dim = axis_scale.size();
  facet.normal.assign(dim, 0.0);
  double len = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    facet.normal[i] =
        scaled_normal[i] / (axis_scale[i] > 0 ? axis_scale[i] : 1.0);
    len += facet.normal[i] * facet.normal[i];
  }
  len = std::sqrt(len);
  for (double& c : facet.normal) c /= len;
  facet.offset = -std::numeric_limits<double>::infinity();
  for (int v : facet.vertex_ring) {
    double d = 0.0;
    for (std::size_t i = 0; i < dim; ++i)
      d += facet.normal[i] * vertices[v][i];
    facet.offset = std::max(facet.offset, d);
  }
}

// Counterclockwise hull of 2-D points (Andrew's monotone chain); returns
// indices into pts. Collinear points are dropped.
std::vector<int> chain_hull_2d(const std::vector<std::array<double, 2>>& pts) {
  std::vector<int> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (pts[a][0] != pts[b][0]) return pts[a][0] < pts[b][0];
    return pts[a][1] < pts[b][1];
  });
  auto turns_right = [&](int o, int a, int b) {
    double c = (pts[a][0] - pts[o][0]) * (pts[b][1] - pts[o][1]) -
               (pts[a][1] - pts[o][1]) * (pts[b][0] - pts[o][0]);
    return c <= 1e-12;
  };
  std::vector<int> hull;
  for (int idx : order) {
    while (hull.size() >= 2 &&
           turns_right(hull[hull.size() - 2], hull.back(), idx))
      hull.pop_back();
    hull.push_back(idx);
  }
  std::size_t lower = hull.size() + 1;
  for (auto it = order.rbegin() + 1; it != order.rend(); ++it) {
    while (hull.size() >= lower &&
           turns_right(hull[hull.size() - 2], hull.back(), *it))
      hull.pop_back();
    hull.push_back(*it);
  }
  hull.pop_back();  // first point repeats at the end
  return hull;
}

struct Tri {
  int a, b, c;
  Vec3 n;       // outward unit normal (scaled space)
  double off;   // n . vertex
};

Tri make_tri(int a, int b, int c, const std::vector<Vec3>& pts,
             const Vec3& interior) {
  Tri t{a, b, c, {}, 0.0};
  Vec3 n = cross3(sub3(pts[b], pts[a]), sub3(pts[c], pts[a]));
  double len = norm3(n);
  for (double& v : n) v /= len;
  double off = dot3(n, pts[a]);
  if (dot3(n, interior) > off) {  // flip to point away from the interior
    std::swap(t.b, t.c);
    for (double& v : n) v = -v;
    off = -off;
  }
  t.n = n;
  t.off = off;
  return t;
}

// Incremental 3-D hull over scaled points; returns outward triangles.
std::vector<Tri> hull_3d(const std::vector<Vec3>& pts) {
  const double eps = 1e-10;
  std::size_t n = pts.size();
  if (n < 4) throw std::invalid_argument("points are affinely dependent");

  std::size_t i0 = 0;
  for (std::size_t p = 1; p < n; ++p)
    if (pts[p] < pts[i0]) i0 = p;
  std::size_t i1 = i0;
  double best = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double d = norm3(sub3(pts[p], pts[i0]));
    if (d > best) best = d, i1 = p;
  }
  if (best < 1e-9) throw std::invalid_argument("points are affinely dependent");
  std::size_t i2 = i0;
  best = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double d = norm3(cross3(sub3(pts[i1], pts[i0]), sub3(pts[p], pts[i0])));
    if (d > best) best = d, i2 = p;
  }
  if (best < 1e-12)
    throw std::invalid_argument("points are affinely dependent");
  std::size_t i3 = i0;
  best = 0.0;
  Vec3 plane_n = cross3(sub3(pts[i1], pts[i0]), sub3(pts[i2], pts[i0]));
  for (std::size_t p = 0; p < n; ++p) {
    double d = std::abs(dot3(plane_n, sub3(pts[p], pts[i0]))) / norm3(plane_n);
    if (d > best) best = d, i3 = p;
  }
  if (best < 1e-12)
    throw std::invalid_argument("points are affinely dependent");

  Vec3 interior{};
  for (std::size_t k = 0; k < 3; ++k)
    interior[k] =
        0.25 * (pts[i0][k] + pts[i1][k] + pts[i2][k] + pts[i3][k]);

  std::vector<Tri> tris;
  int a = static_cast<int>(i0), b = static_cast<int>(i1),
      c = static_cast<int>(i2), d = static_cast<int>(i3);
  tris.push_back(make_tri(a, b, c, pts, interior));
  tris.push_back(make_tri(a, b, d, pts, interior));
  tris.push_back(make_tri(a, c, d, pts, interior));
  tris.push_back(make_tri(b, c, d, pts, interior));

  for (std::size_t p = 0; p < n; ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    std::vector<char> visible(tris.size(), 0);
    bool any = false;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (dot3(tris[t].n, pts[p]) - tris[t].off > eps) {
        visible[t] = 1;
        any = true;
      }
    }
    if (!any) continue;

    std::map<std::pair<int, int>, std::vector<int>> by_edge;
    auto key = [](int u, int v) {
      return std::make_pair(std::min(u, v), std::max(u, v));
    };
    for (std::size_t t = 0; t < tris.size(); ++t) {
      by_edge[key(tris[t].a, tris[t].b)].push_back(static_cast<int>(t));
      by_edge[key(tris[t].b, tris[t].c)].push_back(static_cast<int>(t));
      by_edge[key(tris[t].c, tris[t].a)].push_back(static_cast<int>(t));
    }
    std::vector<std::pair<int, int>> horizon;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!visible[t]) continue;
      std::array<std::pair<int, int>, 3> edges = {
          std::make_pair(tris[t].a, tris[t].b),
          std::make_pair(tris[t].b, tris[t].c),
          std::make_pair(tris[t].c, tris[t].a)};
      for (const auto& edge : edges) {
        const std::vector<int>& owners = by_edge[key(edge.first, edge.second)];
        bool neighbor_visible = false;
        for (int o : owners)
          if (o != static_cast<int>(t) && visible[o]) neighbor_visible = true;
        if (owners.size() < 2 || !neighbor_visible) horizon.push_back(edge);
      }
    }

    std::vector<Tri> next;
    for (std::size_t t = 0; t < tris.size(); ++t)
      if (!visible[t]) next.push_back(tris[t]);
    for (const auto& edge : horizon)
      next.push_back(
          make_tri(edge.first, edge.second, static_cast<int>(p), pts,
                   interior));
    tris = std::move(next);
  }
  return tris;
}

Polytope hull_1d(const std::vector<Point>& originals,
                 const std::vector<Point>& scaled,
                 const std::vector<int>& keep) {
  int lo = keep[0], hi = keep[0];
  for (int k : keep) {
    if (scaled[k][0] < scaled[lo][0]) lo = k;
    if (scaled[k][0] > scaled[hi][0]) hi = k;
  }
  if (lo == hi) throw std::invalid_argument("points are affinely dependent");
  Polytope poly;
  poly.dimension = 1;
  poly.vertices = {originals[lo], originals[hi]};
  poly.facets.resize(2);
  poly.facets[0].normal = {1.0};
  poly.facets[0].offset = originals[hi][0];
  poly.facets[0].vertex_ring = {1};
  poly.facets[1].normal = {-1.0};
  poly.facets[1].offset = -originals[lo][0];
  poly.facets[1].vertex_ring = {0};
  return poly;
}

Polytope hull_2d(const std::vector<Point>& originals,
                 const std::vector<Point>& scaled,
                 const std::vector<int>& keep,
                 const std::vector<double>& axis_scale) {
  std::vector<std::array<double, 2>> pts;
  for (int k : keep) pts.push_back({scaled[k][0], scaled[k][1]});
  std::vector<int> ring = chain_hull_2d(pts);
  if (ring.size() < 3)
    throw std::invalid_argument("points are affinely dependent");

  Polytope poly;
  poly.dimension = 2;
  for (int r : ring) poly.vertices.push_back(originals[keep[r]]);
  int m = static_cast<int>(ring.size());
  for (int i = 0; i < m; ++i) {
    int j = (i + 1) % m;
    Facet facet;
    facet.vertex_ring = {i, j};
    // Outward normal of a counterclockwise edge.
    Point sn = {pts[ring[j]][1] - pts[ring[i]][1],
                pts[ring[i]][0] - pts[ring[j]][0]};
    set_facet_plane(facet, sn, axis_scale, poly.vertices);
    poly.facets.push_back(std::move(facet));
  }
  return poly;
}

Polytope hull_3d_merged(const std::vector<Point>& originals,
                        const std::vector<Point>& scaled,
                        const std::vector<int>& keep,
                        const std::vector<double>& axis_scale) {
  std::vector<Vec3> pts;
  for (int k : keep) pts.push_back({scaled[k][0], scaled[k][1], scaled[k][2]});
  std::vector<Tri> tris = hull_3d(pts);

  // Group coplanar triangles into one facet per supporting plane.
  struct Group {
    Vec3 n;
    double off;
    std::set<int> members;  // indices into pts
  };
  std::vector<Group> groups;
  for (const Tri& t : tris) {
    Group* home = nullptr;
    for (Group& g : groups)
      if (dot3(g.n, t.n) > 1.0 - 1e-10 && std::abs(g.off - t.off) < 1e-8) {
        home = &g;
        break;
      }
    if (!home) {
      groups.push_back({t.n, t.off, {}});
      home = &groups.back();
    }
    home->members.insert(t.a);
    home->members.insert(t.b);
    home->members.insert(t.c);
  }

  // Facet rings via an in-plane 2-D hull, which also drops points interior
  // to a merged face.
  Polytope poly;
  poly.dimension = 3;
  std::vector<int> vertex_of_point(pts.size(), -1);
  auto vertex_index = [&](int p) {
    if (vertex_of_point[p] < 0) {
      vertex_of_point[p] = static_cast<int>(poly.vertices.size());
      poly.vertices.push_back(originals[keep[p]]);
    }
    return vertex_of_point[p];
  };

  for (const Group& g : groups) {
    std::vector<int> members(g.members.begin(), g.members.end());
    Vec3 centroid{};
    for (int p : members)
      for (int k = 0; k < 3; ++k) centroid[k] += pts[p][k] / members.size();
    // Orthonormal in-plane basis (u, w) with u x w = n.
    Vec3 ref = std::abs(g.n[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 u = cross3(ref, g.n);
    double ul = norm3(u);
    for (double& v : u) v /= ul;
    Vec3 w = cross3(g.n, u);

    std::vector<std::array<double, 2>> flat;
    for (int p : members) {
      Vec3 d = sub3(pts[p], centroid);
      flat.push_back({dot3(d, u), dot3(d, w)});
    }
    std::vector<int> ring2 = chain_hull_2d(flat);

    Facet facet;
    for (int r : ring2) facet.vertex_ring.push_back(vertex_index(members[r]));
    Point sn = {g.n[0], g.n[1], g.n[2]};
    set_facet_plane(facet, sn, axis_scale, poly.vertices);
    poly.facets.push_back(std::move(facet));
  }
  return poly;
}

}  // namespace

Polytope convex_hull(const std::vector<Point>& points,
                     const std::vector<double>& axis_scale) {
  std::size_t dim = axis_scale.size();
  if (dim < 1 || dim > 3)
    throw std::invalid_argument("hull dimension must be 1, 2, or 3");
  for (const Point& p : points)
    if (p.size() != dim)
      throw std::invalid_argument("point dimension mismatch");
  if (points.empty()) throw std::invalid_argument("no points given");

  std::vector<Point> scaled = scale_points(points, axis_scale);
  std::vector<int> keep =
      dedup_points(scaled, 1e-7 * std::sqrt(static_cast<double>(dim)));

  switch (dim) {
    case 1:
      return hull_1d(points, scaled, keep);
    case 2:
      return hull_2d(points, scaled, keep, axis_scale);
    default:
      return hull_3d_merged(points, scaled, keep, axis_scale);
  }
}

Polytope starting_polytope(const SIRProblem& prob) {
  std::size_t nd = prob.dimension();
  if (nd < 1 || nd > 3)
    throw std::invalid_argument(
        "polytope construction handles 1 to 3 variable demands");

  std::vector<Point> points{prob.box_lo};
  for (std::size_t i = 0; i < nd; ++i) {
    std::vector<double> axis(nd, 0.0);
    axis[i] = 1.0;
    SupportResult res = maximize_support(prob, axis);
    if (!res.converged)
      throw std::runtime_error(
          "axis maximization for variable " + std::to_string(i) +
          " did not converge after " + std::to_string(res.iterations) +
          " iterations (objective so far " + std::to_string(res.objective) +
          ")");
    points.push_back(res.vertex);
  }

  std::vector<double> ranges(nd);
  for (std::size_t i = 0; i < nd; ++i)
    ranges[i] = prob.box_hi[i] - prob.box_lo[i];
  Polytope poly;
  try {
    poly = convex_hull(points, ranges);
  } catch (const std::invalid_argument&) {
    throw std::runtime_error("axis maxima affinely dependent");
  }
  if (!(volume(poly) > 0.0))
    throw std::runtime_error("axis maxima affinely dependent");
  return poly;
}

std::pair<Polytope, ExpansionStep> expand_once(const SIRProblem& prob,
                                               const Polytope& current) {
  std::size_t nd = prob.dimension();
  if (static_cast<std::size_t>(current.dimension) != nd)
    throw std::invalid_argument("polytope dimension mismatch");
  const double eps_gain = 1e-3 * prob.box_diagonal();

  std::vector<Point> points = current.vertices;
  ExpansionStep step;
  for (const Facet& facet : current.facets) {
    bool lower_bound_facet = false;
    for (std::size_t i = 0; i < nd; ++i)
      if (facet.normal[i] < -(1.0 - 1e-9)) lower_bound_facet = true;
    if (lower_bound_facet) continue;

    ++step.facets_attempted;
    SupportResult res;
    try {
      res = maximize_support(prob, facet.normal);
    } catch (const std::exception& err) {
      step.notes.push_back("facet skipped: " + std::string(err.what()));
      continue;
    }
    if (!res.converged)
      step.notes.push_back("facet solve stopped at iteration limit (gain " +
                           std::to_string(res.objective - facet.offset) + ")");
    double gain = res.objective - facet.offset;
    step.max_gain = std::max(step.max_gain, gain);
    if (gain > eps_gain) {
      points.push_back(res.vertex);
      ++step.vertices_added;
    }
  }

  std::vector<double> ranges(nd);
  for (std::size_t i = 0; i < nd; ++i)
    ranges[i] = prob.box_hi[i] - prob.box_lo[i];
  return {convex_hull(points, ranges), step};
}

PolytopeSequence build_sequence(const SIRProblem& prob, int max_rounds) {
  PolytopeSequence seq;
  seq.polytopes.push_back(starting_polytope(prob));
  seq.volumes.push_back(volume(seq.polytopes.back()));
  for (int round = 0; round < max_rounds; ++round) {
    auto [poly, step] = expand_once(prob, seq.polytopes.back());
    if (step.vertices_added == 0) break;  // fixed point
    seq.polytopes.push_back(std::move(poly));
    seq.steps.push_back(std::move(step));
    seq.volumes.push_back(volume(seq.polytopes.back()));
  }
  return seq;
}

bool contains(const Polytope& poly, const std::vector<double>& point,
              double tol) {
  if (point.size() != static_cast<std::size_t>(poly.dimension))
    throw std::invalid_argument("point dimension mismatch");
  for (const Facet& facet : poly.facets) {
    double d = 0.0;
    for (std::size_t i = 0; i < point.size(); ++i)
      d += facet.normal[i] * point[i];
    if (d > facet.offset + tol) return false;
  }
  return true;
}

double volume(const Polytope& poly) {
  if (poly.vertices.empty()) return 0.0;
  std::size_t dim = poly.dimension;
  Point centroid(dim, 0.0);
  for (const Point& v : poly.vertices)
    for (std::size_t i = 0; i < dim; ++i)
      centroid[i] += v[i] / poly.vertices.size();

  if (dim == 1) {
    double lo = poly.vertices[0][0], hi = lo;
    for (const Point& v : poly.vertices) {
      lo = std::min(lo, v[0]);
      hi = std::max(hi, v[0]);
    }
    return hi - lo;
  }
  if (dim == 2) {
    double area = 0.0;
    for (const Facet& f : poly.facets) {
      if (f.vertex_ring.size() != 2) continue;
      const Point& a = poly.vertices[f.vertex_ring[0]];
      const Point& b = poly.vertices[f.vertex_ring[1]];
      area += 0.5 * std::abs((a[0] - centroid[0]) * (b[1] - centroid[1]) -
                             (a[1] - centroid[1]) * (b[0] - centroid[0]));
    }
    return area;
  }
  double vol = 0.0;
  for (const Facet& f : poly.facets) {
    for (std::size_t k = 1; k + 1 < f.vertex_ring.size(); ++k) {
      const Point& a = poly.vertices[f.vertex_ring[0]];
      const Point& b = poly.vertices[f.vertex_ring[k]];
      const Point& c = poly.vertices[f.vertex_ring[k + 1]];
      Vec3 u{a[0] - centroid[0], a[1] - centroid[1], a[2] - centroid[2]};
      Vec3 v{b[0] - centroid[0], b[1] - centroid[1], b[2] - centroid[2]};
      Vec3 w{c[0] - centroid[0], c[1] - centroid[1], c[2] - centroid[2]};
      vol += std::abs(dot3(u, cross3(v, w))) / 6.0;
    }
  }
  return vol;
}

std::vector<double> relative_volumes(const PolytopeSequence& seq) {
  std::vector<double> rel;
  if (seq.volumes.empty()) return rel;
  double final_volume = seq.volumes.back();
  if (!(final_volume > 0.0))
    throw std::runtime_error("final polytope has zero volume");
  for (double v : seq.volumes) rel.push_back(v / final_volume);
  return rel;
}

}  // namespace watersir
