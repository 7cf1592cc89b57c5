#include "watersir/oracle.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace watersir {
namespace {

std::vector<std::pair<double, double>> default_ranges(const SIRProblem& prob) {
  std::vector<std::pair<double, double>> ranges;
  for (std::size_t i = 0; i < prob.dimension(); ++i) {
    std::vector<double> axis(prob.dimension(), 0.0);
    axis[i] = 1.0;
    SupportResult res = maximize_support(prob, axis);
    ranges.emplace_back(prob.box_lo[i], res.objective);
  }
  return ranges;
}

FeasibilityVerdict screen_point(const SIRProblem& prob,
                                const std::vector<double>& values) {
  try {
    return check_feasibility(prob.net, embed_demands(prob, values),
                             prob.pump_on, prob.sign_pattern);
  } catch (const StructuralInfeasibility& err) {
    FeasibilityVerdict verdict;
    verdict.feasible = false;
    verdict.worst_residual = std::numeric_limits<double>::infinity();
    verdict.worst_constraint = err.what();
    return verdict;
  }
}

}  // namespace

std::vector<double> GridScreen::point(std::size_t index) const {
  std::vector<double> values(axes.size());
  for (std::size_t i = axes.size(); i-- > 0;) {
    values[i] = axes[i][index % axes[i].size()];
    index /= axes[i].size();
  }
  return values;
}

GridScreen grid_screen(const SIRProblem& prob, int points_per_axis,
                       const std::vector<std::pair<double, double>>& ranges) {
  if (points_per_axis < 2)
    throw std::invalid_argument("grid needs at least 2 points per axis");
  std::vector<std::pair<double, double>> span =
      ranges.empty() ? default_ranges(prob) : ranges;
  if (span.size() != prob.dimension())
    throw std::invalid_argument("grid range count must match dimension");

  GridScreen screen;
  for (const auto& [lo, hi] : span) {
    std::vector<double> axis(points_per_axis);
    for (int t = 0; t < points_per_axis; ++t)
      axis[t] = lo + (hi - lo) * t / (points_per_axis - 1);
    screen.axes.push_back(std::move(axis));
  }

  std::size_t total = 1;
  for (const auto& axis : screen.axes) total *= axis.size();
  screen.verdicts.reserve(total);
  for (std::size_t index = 0; index < total; ++index) {
    FeasibilityVerdict verdict = screen_point(prob, screen.point(index));
    if (verdict.feasible)
      ++screen.feasible_count;
    else
      ++screen.infeasible_count;
    screen.verdicts.push_back(std::move(verdict));
  }
  return screen;
}

AgreementReport agreement(const PolytopeSequence& seq,
                          const GridScreen& screen) {
  AgreementReport report;
  for (const Polytope& poly : seq.polytopes) {
    if (static_cast<std::size_t>(poly.dimension) != screen.axes.size())
      throw std::invalid_argument("polytope/screen dimension mismatch");
    AgreementReport::PerPolytope entry;
    for (std::size_t index = 0; index < screen.total(); ++index) {
      bool feasible = screen.verdicts[index].feasible;
      if (feasible) ++entry.feasible_total;
      if (!contains(poly, screen.point(index))) continue;
      if (feasible)
        ++entry.feasible_inside;
      else
        ++entry.false_positives;
    }
    entry.coverage = entry.feasible_total > 0
                         ? static_cast<double>(entry.feasible_inside) /
                               entry.feasible_total
                         : 1.0;
    report.per_polytope.push_back(entry);
  }
  return report;
}

ConvexityReport convexity_probe(
    const SIRProblem& prob, int trials, std::uint64_t seed,
    const std::vector<std::pair<double, double>>& ranges) {
  if (trials < 1) throw std::invalid_argument("trials must be positive");
  std::vector<std::pair<double, double>> span =
      ranges.empty() ? default_ranges(prob) : ranges;
  if (span.size() != prob.dimension())
    throw std::invalid_argument("probe range count must match dimension");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  long attempts = 0;
  const long attempt_cap = 100L * trials;
  auto draw_feasible = [&]() {
    while (true) {
      if (attempts >= attempt_cap)
        throw std::runtime_error(
            "could not find enough feasible sample points (" +
            std::to_string(attempts) + " draws)");
      ++attempts;
      std::vector<double> values(prob.dimension());
      for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = span[i].first +
                    (span[i].second - span[i].first) * unit(rng);
      if (screen_point(prob, values).feasible) return values;
    }
  };

  ConvexityReport report;
  report.seed = seed;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<double> a = draw_feasible();
    std::vector<double> b = draw_feasible();
    ++report.pairs_tested;
    for (int k = 1; k <= 5; ++k) {
      double mu = k / 6.0;
      std::vector<double> mid(a.size());
      for (std::size_t i = 0; i < a.size(); ++i)
        mid[i] = mu * a[i] + (1.0 - mu) * b[i];
      FeasibilityVerdict verdict = screen_point(prob, mid);
      ++report.segment_checks;
      if (verdict.worst_residual > report.worst_residual) {
        report.worst_residual = verdict.worst_residual;
        std::ostringstream what;
        what << "mu=" << mu << " combination, " << verdict.worst_constraint;
        report.worst_case = what.str();
      }
      if (!verdict.feasible) ++report.violations;
    }
  }
  return report;
}

}  // namespace watersir
