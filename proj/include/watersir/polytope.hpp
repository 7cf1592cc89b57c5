#ifndef WATERSIR_POLYTOPE_HPP
#define WATERSIR_POLYTOPE_HPP

#include <string>
#include <utility>
#include <vector>

#include "watersir/support.hpp"

// Monotone inner polytope sequence over the variable-demand space: start
// from the simplex spanned by the per-axis support maxima plus the box
// lower corner, then repeatedly push every non-box facet outward along its
// normal via support maximization and re-hull. Every vertex is a feasible
// demand vector, so each polytope is an inner approximation of the secure
// region, and hulls of growing vertex sets are nested.
//
// Coordinates are in the problem's working demand units (m^3/s in-core).
// Dimensions 1..3 are supported, matching the exact fan-volume and
// specialized hull implementations.

namespace watersir {

struct Facet {
  std::vector<double> normal;  // outward, unit length
  double offset = 0.0;         // max of normal . v over the polytope
  std::vector<int> vertex_ring;  // indices into Polytope::vertices
};

struct Polytope {
  int dimension = 0;
  std::vector<std::vector<double>> vertices;
  std::vector<Facet> facets;
};

struct ExpansionStep {
  int facets_attempted = 0;
  int vertices_added = 0;
  double max_gain = 0.0;  // largest support improvement over a facet offset
  std::vector<std::string> notes;  // per-facet solver issues, if any
};

struct PolytopeSequence {
  std::vector<Polytope> polytopes;   // C_0 .. C_J
  std::vector<ExpansionStep> steps;  // steps[j] builds polytopes[j+1]
  std::vector<double> volumes;       // aligned with polytopes
};

// Convex hull of points in dimension 1, 2, or 3. Orientation predicates
// run on coordinates scaled per-axis by `axis_scale` (use the demand box
// ranges); near-duplicate points within 1e-7 of the scaled diagonal merge.
// Coplanar triangles merge into polygonal facets; facet rings are ordered
// counterclockwise as seen from outside.
Polytope convex_hull(const std::vector<std::vector<double>>& points,
                     const std::vector<double>& axis_scale);

// Axis support maxima plus the box lower corner, hulled. Throws when an
// axis solve fails to converge or the simplex is degenerate.
Polytope starting_polytope(const SIRProblem& prob);

// One expansion round: support-maximize along each facet normal except the
// box lower-bound facets (normal -e_i); vertices improving the offset by
// more than 1e-3 of the box diagonal join the hull.
std::pair<Polytope, ExpansionStep> expand_once(const SIRProblem& prob,
                                               const Polytope& current);

// starting_polytope followed by up to max_rounds expansions, stopping
// early at a fixed point.
PolytopeSequence build_sequence(const SIRProblem& prob, int max_rounds = 3);

bool contains(const Polytope& poly, const std::vector<double>& point,
              double tol = 1e-9);

// Exact volume by fan triangulation from the vertex centroid.
double volume(const Polytope& poly);

// Volumes divided by the final polytope's volume; last entry is 1.0.
std::vector<double> relative_volumes(const PolytopeSequence& seq);

}  // namespace watersir

#endif
