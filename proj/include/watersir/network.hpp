#ifndef WATERSIR_NETWORK_HPP
#define WATERSIR_NETWORK_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

// Graph data model for a tree-structured water distribution network.
//
// Conventions used throughout the library:
//   - Flows are stored in m^3/s. File formats use L/s and convert at the
//     boundary (1 L/s = 1e-3 m^3/s).
//   - Heads (y) are pressure heads in meters of water column; elevations (h)
//     are in meters. The hydraulic grade of a node is y + h.
//   - An edge's declared direction is from -> to; positive flow runs that way.
//   - Incidence matrix A is |edges| x |nodes| with +1 at the from-node and
//     -1 at the to-node of each edge row.

namespace watersir {

enum class NodeKind { junction, source };
enum class EdgeKind { pipe, pump };

struct Node {
  std::string id;
  NodeKind kind = NodeKind::junction;
  double elevation_m = 0.0;
  double head_min_m = 0.0;
  double head_max_m = 1000.0;
  double demand_min = 0.0;   // m^3/s
  double demand_max = 0.0;   // m^3/s
  std::optional<double> fixed_demand;  // m^3/s; absent = nominal 0
  // Injection bounds, meaningful only for sources.
  double inject_min = 0.0;   // m^3/s
  double inject_max = 0.0;   // m^3/s
};

struct Edge {
  std::string id;
  std::string from;
  std::string to;
  EdgeKind kind = EdgeKind::pipe;
  // Pipe geometry. Optional for pumps (a pump may still have a pipe body,
  // in which case it gets a head-loss coefficient like any pipe).
  std::optional<double> length_m;
  std::optional<double> diameter_m;
  std::optional<double> friction_factor;
  double headloss_coeff = 0.0;  // R, s^2/m^5; derived from geometry
  double flow_min = -1e9;       // m^3/s
  double flow_max = 1e9;        // m^3/s
  // Pump-only fields. The reduced curve is gain = a1 * flow + a0.
  std::optional<double> pump_a1;  // m per m^3/s
  std::optional<double> pump_a0;  // m
  double pump_gain_min_m = 0.0;
  double pump_gain_max_m = 0.0;

  bool has_curve() const { return pump_a1.has_value() && pump_a0.has_value(); }
};

struct Violation {
  std::string element;  // node or edge id, or "network"
  std::string rule;
};

// R = 8 f_s L / (pi^2 g D^5). Units: with L, D in meters and g in m/s^2 the
// result is s^2/m^5, so R * f^2 is a head in meters when f is in m^3/s.
// Callers holding L/s must convert before applying the pipe equation.
double headloss_coefficient(double length_m, double diameter_m,
                            double friction_factor, double gravity = 9.81);

class Network {
 public:
  Network() = default;
  Network(std::vector<Node> nodes, std::vector<Edge> edges,
          double gravity = 9.81);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  double gravity() const { return gravity_; }

  int node_index(const std::string& id) const;  // -1 if unknown
  int edge_index(const std::string& id) const;
  const Node& node(int i) const { return nodes_[i]; }
  const Edge& edge(int i) const { return edges_[i]; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  // Signed incidence matrix, row e: +1 at from(e), -1 at to(e).
  const std::vector<std::vector<int>>& incidence() const { return incidence_; }

  // Edge indices incident to a node.
  const std::vector<int>& edges_at(int node) const { return adjacency_[node]; }

  std::vector<int> source_indices() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  double gravity_ = 9.81;
  std::unordered_map<std::string, int> node_by_id_;
  std::unordered_map<std::string, int> edge_by_id_;
  std::vector<std::vector<int>> incidence_;
  std::vector<std::vector<int>> adjacency_;
};

// Checks every type invariant plus the tree property (connected, acyclic,
// |edges| = |nodes| - 1, at least one source). Returns an empty list iff the
// network is valid.
std::vector<Violation> validate(const Network& net);

// Rank of the incidence matrix by Gaussian elimination; equals |edges| for
// a validated tree.
int incidence_rank(const Network& net);

}  // namespace watersir

#endif
