#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "expcost/instance.hpp"

namespace expcost {

/// All-pairs shortest-path distances with a next-hop table. Among equally short
/// routes the next hop is the lowest node id, so reconstructed paths are
/// deterministic.
class ShortestPathTable {
 public:
  ShortestPathTable() = default;
  ShortestPathTable(int n, std::vector<double> dist, std::vector<NodeId> next_hop);

  int node_count() const { return n_; }
  double distance(NodeId u, NodeId v) const { return dist_[index(u, v)]; }
  NodeId next_hop(NodeId u, NodeId v) const { return next_hop_[index(u, v)]; }
  /// Largest finite distance.
  double diameter() const { return diameter_; }

  /// Node sequence u..v along next hops; {u} when u == v.
  Path path(NodeId u, NodeId v) const;

 private:
  std::size_t index(NodeId u, NodeId v) const {
    return static_cast<std::size_t>(u) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(v);
  }

  int n_ = 0;
  std::vector<double> dist_;
  std::vector<NodeId> next_hop_;
  double diameter_ = 0.0;
};

/// Floyd-Warshall, O(n^3).
ShortestPathTable all_pairs_shortest_paths(const ProblemInstance& inst);

/// Dijkstra distances from one source; +inf for unreachable nodes.
std::vector<double> shortest_distances_from(const ProblemInstance& inst, NodeId source);

/// Shortest path from `from` to the node whose distance field is `dist_to_target`
/// (as returned by shortest_distances_from(target)), choosing the lowest-id
/// next hop among ties.
Path shortest_path_along(const ProblemInstance& inst, NodeId from,
                         const std::vector<double>& dist_to_target);

/// Metric closure: same nodes, probabilities and start as the base graph, with
/// an edge between every pair of distinct nodes costing the base shortest-path
/// distance.
struct CompleteInstance {
  ProblemInstance base;
  ProblemInstance comp;
  ShortestPathTable table;
};

CompleteInstance build_complete_graph(const ProblemInstance& inst);

/// Replaces each closure edge with its base shortest path.
Path expand_simple_path(const CompleteInstance& ci, const Path& comp_path);

/// First-visit subsequence of a base path, as a simple path on the closure.
Path compress_path(const ProblemInstance& inst, const Path& path);

/// Closure in the instance schema, tagged with "derived_from".
nlohmann::json complete_instance_to_json(const CompleteInstance& ci,
                                         const std::string& derived_from = "metric_closure");

/// Result of attaching an artificial terminal to an instance without terminals.
struct NtReduction {
  ProblemInstance instance;
  NodeId terminal = kNoNode;
  double edge_cost = 0.0;
};

/// Adds a terminal joined to every original node with cost
/// 1.5 * D / min{p_v : p_v > 0}. D defaults to the graph diameter.
/// Throws std::invalid_argument if terminals already exist, every p_v is 0,
/// or D is 0.
NtReduction nt_reduction(const ProblemInstance& inst,
                         std::optional<double> diameter_override = std::nullopt);

}  // namespace expcost
