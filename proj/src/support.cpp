#include "watersir/support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "watersir/simplex.hpp"

namespace watersir {

double SIRProblem::box_diagonal() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < box_lo.size(); ++i)
    sum += (box_hi[i] - box_lo[i]) * (box_hi[i] - box_lo[i]);
  return std::sqrt(sum);
}

namespace {

SIRProblem make_problem(const Network& net, const OpsSolution& ops,
                        const std::vector<int>& variable) {
  SIRProblem prob;
  prob.net = net;
  prob.pump_on = ops.pump_on;
  prob.sign_pattern = ops.sign_pattern;
  prob.fixed_demands.assign(net.node_count(), 0.0);
  std::vector<char> is_variable(net.node_count(), 0);
  for (int v : variable) {
    const Node& node = net.node(v);
    if (node.kind == NodeKind::source)
      throw std::invalid_argument("node " + node.id +
                                  " is a source; its demand cannot vary");
    if (!(node.demand_max > node.demand_min))
      throw std::invalid_argument("node " + node.id +
                                  " has a zero-width demand box");
    is_variable[v] = 1;
    prob.variable_nodes.push_back(v);
    prob.box_lo.push_back(node.demand_min);
    prob.box_hi.push_back(node.demand_max);
    prob.nominal_values.push_back(std::clamp(
        node.fixed_demand.value_or(0.0), node.demand_min, node.demand_max));
  }
  for (std::size_t v = 0; v < net.node_count(); ++v) {
    const Node& node = net.node(v);
    if (node.kind == NodeKind::source || is_variable[v]) continue;
    prob.fixed_demands[v] = node.fixed_demand.value_or(node.demand_min);
  }
  if (prob.variable_nodes.empty())
    throw std::invalid_argument(
        "no variable demand nodes (every demand box has zero width)");
  return prob;
}

}  // namespace

SIRProblem make_sir_problem(const Network& net, const OpsSolution& ops) {
  std::vector<int> variable;
  for (std::size_t v = 0; v < net.node_count(); ++v) {
    const Node& node = net.node(v);
    if (node.kind != NodeKind::source && node.demand_max > node.demand_min)
      variable.push_back(static_cast<int>(v));
  }
  return make_problem(net, ops, variable);
}

SIRProblem make_sir_problem(const Network& net, const OpsSolution& ops,
                            const std::vector<std::string>& variable_ids) {
  std::vector<int> variable;
  for (const std::string& id : variable_ids) {
    int v = net.node_index(id);
    if (v < 0) throw std::invalid_argument("unknown node id '" + id + "'");
    variable.push_back(v);
  }
  return make_problem(net, ops, variable);
}

std::vector<double> embed_demands(const SIRProblem& prob,
                                  const std::vector<double>& variable_values) {
  if (variable_values.size() != prob.variable_nodes.size())
    throw std::invalid_argument("variable demand vector has wrong length");
  std::vector<double> demands = prob.fixed_demands;
  for (std::size_t i = 0; i < variable_values.size(); ++i)
    demands[prob.variable_nodes[i]] = variable_values[i];
  return demands;
}

namespace {

// Optimization variables: the N_d variable demands, then one gain per
// curve-less on pump, then one head per sourced component root. Flows are
// affine in the demands, so every constraint except the head bounds is a
// fixed linear row; the head rows are relinearized at each iterate.
struct SupportModel {
  RootedForest forest;
  int nd = 0;
  int nvars = 0;
  std::vector<int> gain_edges;  // edge index per gain variable
  std::vector<int> head_roots;  // node index per head variable
  std::vector<double> f0;       // flows with all variable demands at zero
  std::vector<std::vector<double>> fcoef;  // per edge, length nd
  std::vector<double> lo, hi, scale;       // per optimization variable

  struct Row {
    std::vector<double> coef;
    double ub;
  };
  std::vector<Row> affine_rows;
};

SupportModel build_model(const SIRProblem& prob) {
  const Network& net = prob.net;
  SupportModel m;
  m.forest = build_forest(net, prob.pump_on);
  m.nd = static_cast<int>(prob.dimension());

  std::vector<double> zeros(prob.dimension(), 0.0);
  FlowSolution base = solve_tree_flows(net, embed_demands(prob, zeros),
                                       prob.pump_on);
  m.f0 = base.flows;
  m.fcoef.assign(net.edge_count(), std::vector<double>(m.nd, 0.0));
  for (int i = 0; i < m.nd; ++i) {
    int v = prob.variable_nodes[i];
    while (m.forest.parent_edge[v] >= 0) {
      int e = m.forest.parent_edge[v];
      m.fcoef[e][i] += m.forest.edge_dir[e];
      v = m.forest.parent_node[v];
    }
  }

  for (int i = 0; i < m.nd; ++i) {
    m.lo.push_back(prob.box_lo[i]);
    m.hi.push_back(prob.box_hi[i]);
    m.scale.push_back(prob.box_hi[i] - prob.box_lo[i]);
  }
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const Edge& edge = net.edge(e);
    if (edge.kind != EdgeKind::pump || !m.forest.edge_active[e] ||
        edge.has_curve())
      continue;
    m.gain_edges.push_back(static_cast<int>(e));
    m.lo.push_back(edge.pump_gain_min_m);
    m.hi.push_back(edge.pump_gain_max_m);
    double range = edge.pump_gain_max_m - edge.pump_gain_min_m;
    m.scale.push_back(range > 0 ? range : 1.0);
  }
  for (std::size_t c = 0; c < m.forest.comp_root.size(); ++c) {
    if (!m.forest.comp_has_source[c]) continue;
    int r = m.forest.comp_root[c];
    m.head_roots.push_back(r);
    m.lo.push_back(net.node(r).head_min_m);
    m.hi.push_back(net.node(r).head_max_m);
    double range = net.node(r).head_max_m - net.node(r).head_min_m;
    m.scale.push_back(range > 0 ? range : 1.0);
  }
  m.nvars = static_cast<int>(m.lo.size());

  auto add_row = [&](const std::vector<double>& dcoef, double ub) {
    bool any = false;
    for (double c : dcoef)
      if (c != 0.0) any = true;
    if (!any) return;  // constant constraint, settled at the nominal point
    SupportModel::Row row;
    row.coef.assign(m.nvars, 0.0);
    std::copy(dcoef.begin(), dcoef.end(), row.coef.begin());
    row.ub = ub;
    m.affine_rows.push_back(std::move(row));
  };

  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    if (!m.forest.edge_active[e]) continue;
    const Edge& edge = net.edge(e);
    std::vector<double> neg(m.nd);
    for (int i = 0; i < m.nd; ++i) neg[i] = -m.fcoef[e][i];
    if (edge.flow_max < kUnboundedFlow)
      add_row(m.fcoef[e], edge.flow_max - m.f0[e]);
    if (edge.flow_min > -kUnboundedFlow) add_row(neg, m.f0[e] - edge.flow_min);
    if (prob.sign_pattern[e] != 0) {
      std::vector<double> s(m.nd);
      for (int i = 0; i < m.nd; ++i)
        s[i] = -prob.sign_pattern[e] * m.fcoef[e][i];
      add_row(s, prob.sign_pattern[e] * m.f0[e]);
    }
    if (edge.kind == EdgeKind::pump && edge.has_curve()) {
      std::vector<double> g(m.nd), gneg(m.nd);
      for (int i = 0; i < m.nd; ++i) {
        g[i] = *edge.pump_a1 * m.fcoef[e][i];
        gneg[i] = -g[i];
      }
      double g0 = *edge.pump_a1 * m.f0[e] + *edge.pump_a0;
      add_row(g, edge.pump_gain_max_m - g0);
      add_row(gneg, g0 - edge.pump_gain_min_m);
    }
  }
  for (std::size_t c = 0; c < m.forest.comp_root.size(); ++c) {
    if (!m.forest.comp_has_source[c]) continue;
    int r = m.forest.comp_root[c];
    const Node& node = net.node(r);
    std::vector<double> icoef(m.nd, 0.0);
    double i0 = base.injections[r];
    for (int i = 0; i < m.nd; ++i)
      if (m.forest.component[prob.variable_nodes[i]] == static_cast<int>(c))
        icoef[i] = 1.0;
    std::vector<double> ineg(m.nd);
    for (int i = 0; i < m.nd; ++i) ineg[i] = -icoef[i];
    if (node.inject_max < kUnboundedFlow) add_row(icoef, node.inject_max - i0);
    if (node.inject_min > -kUnboundedFlow) add_row(ineg, i0 - node.inject_min);
  }
  return m;
}

struct GradePoint {
  double value = 0.0;
  std::vector<double> grad;  // over optimization variables
  bool anchored = false;
};

// Grades and their gradients at the point x, for every node of a sourced
// component. Gradients are exact except for the head-loss terms, which are
// differentiable (d/df of R f|f| is 2R|f|).
std::vector<GradePoint> grade_points(const SIRProblem& prob,
                                     const SupportModel& m,
                                     const std::vector<double>& x) {
  const Network& net = prob.net;
  std::vector<double> flows = m.f0;
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    for (int i = 0; i < m.nd; ++i) flows[e] += m.fcoef[e][i] * x[i];

  std::vector<GradePoint> pts(net.node_count());
  std::vector<int> head_var_of_node(net.node_count(), -1);
  for (std::size_t k = 0; k < m.head_roots.size(); ++k)
    head_var_of_node[m.head_roots[k]] =
        m.nd + static_cast<int>(m.gain_edges.size() + k);
  std::vector<int> gain_var_of_edge(net.edge_count(), -1);
  for (std::size_t k = 0; k < m.gain_edges.size(); ++k)
    gain_var_of_edge[m.gain_edges[k]] = m.nd + static_cast<int>(k);

  for (int v : m.forest.order) {
    int e = m.forest.parent_edge[v];
    if (e < 0) {
      int hv = head_var_of_node[v];
      if (hv < 0) continue;  // sourceless component: constant, skipped
      pts[v].anchored = true;
      pts[v].value = net.node(v).elevation_m + x[hv];
      pts[v].grad.assign(m.nvars, 0.0);
      pts[v].grad[hv] = 1.0;
      continue;
    }
    const GradePoint& parent = pts[m.forest.parent_node[v]];
    if (!parent.anchored) continue;
    const Edge& edge = net.edge(e);
    double f = flows[e];
    double loss = edge.headloss_coeff * f * std::abs(f);
    double dloss = 2.0 * edge.headloss_coeff * std::abs(f);
    double dir = m.forest.edge_dir[e] > 0 ? 1.0 : -1.0;

    GradePoint& p = pts[v];
    p.anchored = true;
    p.grad = parent.grad;
    p.value = parent.value - dir * loss;
    for (int i = 0; i < m.nd; ++i)
      p.grad[i] -= dir * dloss * m.fcoef[e][i];
    if (edge.kind == EdgeKind::pump) {
      if (edge.has_curve()) {
        double gain = *edge.pump_a1 * f + *edge.pump_a0;
        p.value += dir * gain;
        for (int i = 0; i < m.nd; ++i)
          p.grad[i] += dir * *edge.pump_a1 * m.fcoef[e][i];
      } else {
        int gv = gain_var_of_edge[e];
        p.value += dir * x[gv];
        p.grad[gv] += dir;
      }
    }
  }
  return pts;
}

// Exact normalized constraint violation at x (same normalizations as the
// feasibility check: box residuals by range, head gaps by 1 m).
double exact_violation(const SIRProblem& prob, const SupportModel& m,
                       const std::vector<double>& x) {
  const Network& net = prob.net;
  double worst = 0.0;
  auto consider = [&](double v) { worst = std::max(worst, v); };

  for (int j = 0; j < m.nvars; ++j)
    consider(std::max(m.lo[j] - x[j], x[j] - m.hi[j]) / m.scale[j]);

  std::vector<double> flows = m.f0;
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    for (int i = 0; i < m.nd; ++i) flows[e] += m.fcoef[e][i] * x[i];

  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    if (!m.forest.edge_active[e]) continue;
    const Edge& edge = net.edge(e);
    double f = flows[e];
    bool lo_set = edge.flow_min > -kUnboundedFlow;
    bool hi_set = edge.flow_max < kUnboundedFlow;
    double fnorm = lo_set && hi_set && edge.flow_max > edge.flow_min
                       ? edge.flow_max - edge.flow_min
                       : 1.0;
    if (lo_set) consider((edge.flow_min - f) / fnorm);
    if (hi_set) consider((f - edge.flow_max) / fnorm);
    if (prob.sign_pattern[e] != 0)
      consider(-prob.sign_pattern[e] * f / fnorm);
    if (edge.kind == EdgeKind::pump && edge.has_curve()) {
      double gain = *edge.pump_a1 * f + *edge.pump_a0;
      double range = edge.pump_gain_max_m - edge.pump_gain_min_m;
      double gnorm = range > 0 ? range : 1.0;
      consider((edge.pump_gain_min_m - gain) / gnorm);
      consider((gain - edge.pump_gain_max_m) / gnorm);
    }
  }

  for (std::size_t c = 0; c < m.forest.comp_root.size(); ++c) {
    if (!m.forest.comp_has_source[c]) continue;
    int r = m.forest.comp_root[c];
    double total = 0.0;
    for (std::size_t v = 0; v < net.node_count(); ++v)
      if (m.forest.component[v] == static_cast<int>(c))
        total += prob.fixed_demands[v];
    for (int i = 0; i < m.nd; ++i)
      if (m.forest.component[prob.variable_nodes[i]] == static_cast<int>(c))
        total += x[i];
    const Node& node = net.node(r);
    bool ilo = node.inject_min > -kUnboundedFlow;
    bool ihi = node.inject_max < kUnboundedFlow;
    double inorm = ilo && ihi && node.inject_max > node.inject_min
                       ? node.inject_max - node.inject_min
                       : 1.0;
    if (ilo) consider((node.inject_min - total) / inorm);
    if (ihi) consider((total - node.inject_max) / inorm);
  }

  std::vector<GradePoint> pts = grade_points(prob, m, x);
  for (std::size_t v = 0; v < net.node_count(); ++v) {
    if (!pts[v].anchored) continue;
    const Node& node = net.node(v);
    consider(node.elevation_m + node.head_min_m - pts[v].value);
    consider(pts[v].value - node.elevation_m - node.head_max_m);
  }
  return worst;
}

}  // namespace

SupportResult maximize_support(const SIRProblem& prob,
                               const std::vector<double>& direction) {
  if (direction.size() != prob.dimension())
    throw std::invalid_argument("direction has wrong dimension");
  double norm = 0.0;
  for (double c : direction) norm += c * c;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw std::invalid_argument("direction must be nonzero");
  std::vector<double> unit(direction);
  for (double& c : unit) c /= norm;

  SupportModel model = build_model(prob);
  const double boxdiag = prob.box_diagonal();
  const double eps_obj = 1e-6 * boxdiag;
  const double eps_step = 1e-8 * boxdiag;
  const int max_iter = 200;
  const double accept_tol = 1e-8;

  // Feasible start at the nominal point; auxiliary variables from its
  // hydraulic witness.
  std::vector<double> d(prob.nominal_values);
  for (int i = 0; i < model.nd; ++i)
    d[i] = std::clamp(d[i], prob.box_lo[i], prob.box_hi[i]);
  FeasibilityVerdict nominal = check_feasibility(
      prob.net, embed_demands(prob, d), prob.pump_on, prob.sign_pattern);
  if (!nominal.feasible)
    throw std::invalid_argument("nominal demand point is infeasible: " +
                                nominal.worst_constraint);

  std::vector<double> x(model.nvars, 0.0);
  auto reset_aux = [&](const std::vector<double>& dval) {
    HydraulicState witness =
        nominal_state(prob.net, embed_demands(prob, dval), prob.pump_on,
                      prob.sign_pattern);
    for (int i = 0; i < model.nd; ++i) x[i] = dval[i];
    for (std::size_t k = 0; k < model.gain_edges.size(); ++k)
      x[model.nd + k] = witness.pump_gains[model.gain_edges[k]];
    for (std::size_t k = 0; k < model.head_roots.size(); ++k)
      x[model.nd + model.gain_edges.size() + k] =
          witness.heads[model.head_roots[k]];
  };
  reset_aux(d);
  const std::vector<double> z_nom = x;  // restoration anchor (interior)

  SupportResult result;
  result.converged = false;

  // Grade floors are lower bounds on concave functions of the lifted
  // variables (demands, gains and source heads enter the grade linearly or
  // through -R*f|f| with the frozen sign), so a tangent taken at any iterate
  // overestimates the grade everywhere and remains a valid relaxation of the
  // floor. Keeping those tangents from every iterate stops the LP from
  // sliding along the single newest tangent plane, which would cap progress
  // per iteration at the curvature scale of the boundary. Ceilings are the
  // opposite side of the same concave function; their tangents restrict
  // rather than relax, so they are rebuilt at the current iterate only.
  std::vector<SupportModel::Row> floor_cuts;
  std::vector<double> last_lin;
  constexpr std::size_t kMaxCuts = 600;

  double radius = 0.5;
  int it = 0;
  for (; it < max_iter; ++it) {
    // Trust-region LP around x: variables z = lb + u with u >= 0.
    std::vector<double> lb(model.nvars), width(model.nvars);
    for (int j = 0; j < model.nvars; ++j) {
      lb[j] = std::max(model.lo[j], x[j] - radius * model.scale[j]);
      double ub = std::min(model.hi[j], x[j] + radius * model.scale[j]);
      width[j] = std::max(0.0, ub - lb[j]);
    }

    LinearProgram lp;
    lp.num_vars = model.nvars;
    lp.c.assign(model.nvars, 0.0);
    for (int i = 0; i < model.nd; ++i) lp.c[i] = unit[i];

    auto push_row = [&](const std::vector<double>& coef, double ub) {
      double shift = 0.0;
      for (int j = 0; j < model.nvars; ++j) shift += coef[j] * lb[j];
      lp.rows.push_back(coef);
      lp.rhs.push_back(ub - shift);
    };
    for (const SupportModel::Row& row : model.affine_rows)
      push_row(row.coef, row.ub);

    std::vector<GradePoint> pts = grade_points(prob, model, x);
    bool fresh_point = x != last_lin;
    for (std::size_t v = 0; v < prob.net.node_count(); ++v) {
      if (!pts[v].anchored) continue;
      const Node& node = prob.net.node(v);
      double gx = 0.0;
      for (int j = 0; j < model.nvars; ++j) gx += pts[v].grad[j] * x[j];
      // grade(z) ~ value + grad.(z - x) within [floor, ceil]
      push_row(pts[v].grad,
               gx + node.elevation_m + node.head_max_m - pts[v].value);
      if (fresh_point) {
        std::vector<double> neg(model.nvars);
        for (int j = 0; j < model.nvars; ++j) neg[j] = -pts[v].grad[j];
        floor_cuts.push_back(
            {std::move(neg),
             -gx + pts[v].value - node.elevation_m - node.head_min_m});
      }
    }
    if (fresh_point) last_lin = x;
    if (floor_cuts.size() > kMaxCuts)
      floor_cuts.erase(floor_cuts.begin(),
                       floor_cuts.end() - static_cast<long>(kMaxCuts));
    for (const SupportModel::Row& cut : floor_cuts) push_row(cut.coef, cut.ub);
    for (int j = 0; j < model.nvars; ++j) {
      std::vector<double> e(model.nvars, 0.0);
      e[j] = 1.0;
      lp.rows.push_back(e);
      lp.rhs.push_back(width[j]);
    }

    LpResult sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) {
      radius *= 0.4;
      if (radius < 1e-12) {
        result.converged = true;
        break;
      }
      continue;
    }
    std::vector<double> cand(model.nvars);
    for (int j = 0; j < model.nvars; ++j) cand[j] = lb[j] + sol.x[j];

    double gain = 0.0;
    for (int i = 0; i < model.nd; ++i) gain += unit[i] * (cand[i] - x[i]);
    if (gain < eps_obj) {
      // No linear improvement available. Declare convergence only once the
      // trust region is wide enough to rule out an artificially small step.
      if (radius >= 0.05) {
        result.converged = true;
        break;
      }
      radius = std::min(1.0, radius * 4.0);
      continue;
    }

    auto demand_part = [&](const std::vector<double>& z) {
      std::vector<double> dv(z.begin(), z.begin() + model.nd);
      for (int i = 0; i < model.nd; ++i)
        dv[i] = std::clamp(dv[i], prob.box_lo[i], prob.box_hi[i]);
      return dv;
    };
    auto feasible_at = [&](const std::vector<double>& dv) {
      return check_feasibility(prob.net, embed_demands(prob, dv), prob.pump_on,
                               prob.sign_pattern, accept_tol)
          .feasible;
    };

    // Candidate processing: take the LP point outright when it passes the
    // exact check; otherwise restore feasibility by walking it back toward
    // the strictly interior nominal point. The frozen-regime region is
    // convex, so that segment crosses the boundary once, and restoring
    // toward the interior (rather than shrinking the step from the current
    // boundary iterate) keeps the per-iteration progress proportional to the
    // remaining gap instead of the feasibility tolerance.
    std::vector<double> znew = cand;
    std::vector<double> dnew = demand_part(cand);
    if (!feasible_at(dnew)) {
      double llo = 0.0, lhi = 1.0;  // 0 = candidate, 1 = nominal anchor
      for (int b = 0; b < 50; ++b) {
        double mid = 0.5 * (llo + lhi);
        std::vector<double> z(model.nvars);
        for (int j = 0; j < model.nvars; ++j)
          z[j] = cand[j] + mid * (z_nom[j] - cand[j]);
        if (feasible_at(demand_part(z)))
          lhi = mid;
        else
          llo = mid;
      }
      for (int j = 0; j < model.nvars; ++j)
        znew[j] = cand[j] + lhi * (z_nom[j] - cand[j]);
      dnew = demand_part(znew);
      if (!feasible_at(dnew)) {
        reset_aux(demand_part(x));
        radius *= 0.4;
        if (radius < 1e-12) {
          result.converged = true;
          break;
        }
        continue;
      }
    }

    double improve = 0.0;
    for (int i = 0; i < model.nd; ++i) improve += unit[i] * (dnew[i] - x[i]);
    if (improve <= 0.0) {
      // Restoration gave the whole predicted gain back; the linear model is
      // not trustworthy at this radius.
      radius *= 0.4;
      if (radius < 1e-12) {
        result.converged = true;
        break;
      }
      continue;
    }

    double step = 0.0;
    bool at_boundary = false;
    for (int i = 0; i < model.nd; ++i) {
      step += (dnew[i] - x[i]) * (dnew[i] - x[i]);
      if (std::abs(cand[i] - x[i]) >= 0.999 * radius * model.scale[i])
        at_boundary = true;
    }
    step = std::sqrt(step);

    for (int i = 0; i < model.nd; ++i) znew[i] = dnew[i];
    x = znew;
    if (exact_violation(prob, model, x) > accept_tol) reset_aux(dnew);

    if (step < eps_step) {
      result.converged = true;
      break;
    }
    if (improve >= 0.5 * gain) {
      if (at_boundary) radius = std::min(1.0, radius * 1.5);
    } else if (improve < 0.1 * gain) {
      // Most of the predicted gain was lost to curvature; tighten the trust
      // region so the next linearization is more faithful.
      radius = std::max(1e-6, radius * 0.5);
    }
  }

  result.iterations = it;
  result.vertex.assign(x.begin(), x.begin() + model.nd);
  result.objective = 0.0;
  for (int i = 0; i < model.nd; ++i)
    result.objective += direction[i] * result.vertex[i];
  return result;
}

}  // namespace watersir
