#ifndef WATERSIR_ORACLE_HPP
#define WATERSIR_ORACLE_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "watersir/polytope.hpp"
#include "watersir/support.hpp"

// Brute-force counterpart of the polytope pipeline: dense grid screening of
// the variable-demand space with the plain feasibility check, agreement
// metrics between a polytope sequence and the screened truth, and a seeded
// convexity spot-check on segments between feasible points.

namespace watersir {

struct GridScreen {
  std::vector<std::vector<double>> axes;     // sample values per variable
  std::vector<FeasibilityVerdict> verdicts;  // row-major, first axis slowest
  int feasible_count = 0;
  int infeasible_count = 0;

  std::size_t total() const { return verdicts.size(); }
  // Demand coordinates of the flat index, matching verdict order.
  std::vector<double> point(std::size_t index) const;
};

// Evaluates check_feasibility at every combination of k evenly spaced
// values per axis. Ranges default to [box lower bound, axis support
// maximum]. Structural errors count as infeasible.
GridScreen grid_screen(
    const SIRProblem& prob, int points_per_axis,
    const std::vector<std::pair<double, double>>& ranges = {});

struct AgreementReport {
  struct PerPolytope {
    int false_positives = 0;  // inside the polytope yet infeasible
    int feasible_inside = 0;
    int feasible_total = 0;
    double coverage = 0.0;  // feasible_inside / feasible_total
  };
  std::vector<PerPolytope> per_polytope;  // aligned with the sequence
};

// Compares each polytope against the screen. False positives break the
// inner-approximation contract and should always be zero; coverage is
// nondecreasing along the sequence by containment.
AgreementReport agreement(const PolytopeSequence& seq,
                          const GridScreen& screen);

struct ConvexityReport {
  int pairs_tested = 0;
  int segment_checks = 0;
  int violations = 0;       // infeasible convex combinations found
  double worst_residual = 0.0;
  std::uint64_t seed = 0;
  std::string worst_case;   // description of the worst combination
};

// Samples pairs of feasible demand points uniformly from the given ranges
// (defaulting as in grid_screen) and checks 5 evenly spaced interior
// convex combinations of each pair. Throws when feasible points are too
// rare (more than 100 * trials rejected draws).
ConvexityReport convexity_probe(
    const SIRProblem& prob, int trials, std::uint64_t seed,
    const std::vector<std::pair<double, double>>& ranges = {});

}  // namespace watersir

#endif
