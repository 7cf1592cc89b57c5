#include "watersir/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <stdexcept>

namespace watersir {

double headloss_coefficient(double length_m, double diameter_m,
                            double friction_factor, double gravity) {
  if (!(length_m > 0.0) || !(diameter_m > 0.0) || !(friction_factor > 0.0) ||
      !(gravity > 0.0)) {
    throw std::invalid_argument(
        "headloss_coefficient: all inputs must be positive");
  }
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return 8.0 * friction_factor * length_m /
         (pi2 * gravity * std::pow(diameter_m, 5));
}

Network::Network(std::vector<Node> nodes, std::vector<Edge> edges,
                 double gravity)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), gravity_(gravity) {
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    if (!node_by_id_.emplace(nodes_[i].id, i).second) {
      throw std::invalid_argument("duplicate node id: " + nodes_[i].id);
    }
  }
  for (int i = 0; i < static_cast<int>(edges_.size()); ++i) {
    if (!edge_by_id_.emplace(edges_[i].id, i).second) {
      throw std::invalid_argument("duplicate edge id: " + edges_[i].id);
    }
  }
  // Derive head-loss coefficients from geometry where present. Invalid
  // geometry is left alone here so validate() can report it as a field
  // violation instead of the construction failing.
  for (auto& e : edges_) {
    if (e.length_m && e.diameter_m) {
      const double fs = e.friction_factor.value_or(0.02);
      if (*e.length_m > 0.0 && *e.diameter_m > 0.0 && fs > 0.0 &&
          gravity_ > 0.0) {
        e.headloss_coeff = headloss_coefficient(*e.length_m, *e.diameter_m,
                                                fs, gravity_);
        if (!e.friction_factor) e.friction_factor = fs;
      }
    }
  }
  incidence_.assign(edges_.size(), std::vector<int>(nodes_.size(), 0));
  adjacency_.assign(nodes_.size(), {});
  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    const int a = node_index(edges_[e].from);
    const int b = node_index(edges_[e].to);
    if (a < 0 || b < 0) {
      throw std::invalid_argument("edge " + edges_[e].id +
                                  " references unknown node");
    }
    incidence_[e][a] = +1;
    incidence_[e][b] = -1;
    adjacency_[a].push_back(e);
    adjacency_[b].push_back(e);
  }
}

int Network::node_index(const std::string& id) const {
  auto it = node_by_id_.find(id);
  return it == node_by_id_.end() ? -1 : it->second;
}

int Network::edge_index(const std::string& id) const {
  auto it = edge_by_id_.find(id);
  return it == edge_by_id_.end() ? -1 : it->second;
}

std::vector<int> Network::source_indices() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    if (nodes_[i].kind == NodeKind::source) out.push_back(i);
  }
  return out;
}

std::vector<Violation> validate(const Network& net) {
  std::vector<Violation> out;
  auto bad = [&](const std::string& el, const std::string& rule) {
    out.push_back({el, rule});
  };

  for (const auto& n : net.nodes()) {
    if (!std::isfinite(n.elevation_m)) bad(n.id, "elevation not finite");
    if (n.head_min_m > n.head_max_m) bad(n.id, "head_min > head_max");
    if (n.demand_min > n.demand_max) bad(n.id, "demand_min > demand_max");
    if (n.demand_min < 0.0) bad(n.id, "demand bounds must be nonnegative");
    if (n.fixed_demand &&
        (*n.fixed_demand < n.demand_min || *n.fixed_demand > n.demand_max)) {
      bad(n.id, "fixed demand outside demand bounds");
    }
    if (n.kind == NodeKind::source) {
      if (n.inject_min > n.inject_max) bad(n.id, "inject_min > inject_max");
      if (n.fixed_demand && *n.fixed_demand != 0.0) {
        bad(n.id, "source node carries demand");
      }
    }
  }

  for (const auto& e : net.edges()) {
    if (e.kind == EdgeKind::pipe) {
      if (!e.length_m || !(*e.length_m > 0.0)) bad(e.id, "pipe length not positive");
      if (!e.diameter_m || !(*e.diameter_m > 0.0)) bad(e.id, "pipe diameter not positive");
      if (e.friction_factor && !(*e.friction_factor > 0.0)) {
        bad(e.id, "friction factor not positive");
      }
      if (!(e.headloss_coeff > 0.0)) bad(e.id, "head-loss coefficient not positive");
      if (e.pump_a0 || e.pump_a1) bad(e.id, "pipe carries pump fields");
    } else {
      if (e.pump_gain_min_m > e.pump_gain_max_m) bad(e.id, "pump gain_min > gain_max");
      if (e.headloss_coeff < 0.0) bad(e.id, "head-loss coefficient negative");
    }
    if (e.flow_min > e.flow_max) bad(e.id, "flow_min > flow_max");
    if (e.from == e.to) bad(e.id, "self loop");
  }

  const std::size_t n = net.node_count();
  const std::size_t m = net.edge_count();
  if (n == 0) {
    bad("network", "no nodes");
    return out;
  }
  if (net.source_indices().empty()) bad("network", "no source node");

  if (m != n - 1) {
    bad("network", "not a tree: |edges| != |nodes| - 1");
  } else {
    // Connectivity check; acyclicity follows from the edge count.
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int e : net.edges_at(v)) {
        const int a = net.node_index(net.edge(e).from);
        const int b = net.node_index(net.edge(e).to);
        const int w = (a == v) ? b : a;
        if (!seen[w]) {
          seen[w] = 1;
          ++reached;
          q.push(w);
        }
      }
    }
    if (reached != n) bad("network", "not a tree: disconnected");
  }
  return out;
}

int incidence_rank(const Network& net) {
  const std::size_t m = net.edge_count();
  const std::size_t n = net.node_count();
  std::vector<std::vector<double>> a(m, std::vector<double>(n, 0.0));
  for (std::size_t e = 0; e < m; ++e) {
    for (std::size_t v = 0; v < n; ++v) a[e][v] = net.incidence()[e][v];
  }
  int rank = 0;
  std::size_t col = 0;
  for (std::size_t row = 0; row < m && col < n; ++col) {
    std::size_t piv = row;
    for (std::size_t r = row; r < m; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    if (std::fabs(a[piv][col]) < 1e-12) continue;
    std::swap(a[piv], a[row]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == row) continue;
      const double k = a[r][col] / a[row][col];
      if (k == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= k * a[row][c];
    }
    ++row;
    ++rank;
  }
  return rank;
}

}  // namespace watersir
