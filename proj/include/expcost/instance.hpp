#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "expcost/extended_cost.hpp"

namespace expcost {

using NodeId = int;

/// Sentinel for "no node": the null action of a successor profile, a missing
/// next hop, and so on.
inline constexpr NodeId kNoNode = -1;

struct Edge {
  NodeId u;
  NodeId v;
  double cost;
};

struct Neighbor {
  NodeId node;
  double cost;
};

/// Ordered node sequence. Consecutive entries must be adjacent in the instance
/// the path is evaluated against.
using Path = std::vector<NodeId>;

/// Undirected graph with per-node success probabilities and a start node.
///
/// Nodes are dense ids 0..n-1. A node is terminal iff its success probability
/// is exactly 1. The object is immutable once built; structural problems
/// (edge endpoints out of range) throw, everything else is reported by
/// validate_instance().
class ProblemInstance {
 public:
  ProblemInstance() = default;
  ProblemInstance(std::vector<double> success_prob, std::vector<Edge> edges, NodeId start);

  int node_count() const { return static_cast<int>(success_prob_.size()); }
  NodeId start() const { return start_; }

  double success_prob(NodeId v) const { return success_prob_[v]; }
  std::span<const double> success_probs() const { return success_prob_; }

  /// Neighbors of v sorted by ascending node id.
  std::span<const Neighbor> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Cheapest direct edge between u and v, if any.
  std::optional<double> edge_cost(NodeId u, NodeId v) const;

  bool is_terminal(NodeId v) const { return success_prob_[v] == 1.0; }
  const std::vector<NodeId>& terminals() const { return terminals_; }
  const std::vector<NodeId>& nonterminals() const { return nonterminals_; }

  /// Copy with a different start node.
  ProblemInstance with_start(NodeId start) const;

 private:
  std::vector<double> success_prob_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
  std::vector<NodeId> terminals_;
  std::vector<NodeId> nonterminals_;
  NodeId start_ = 0;
};

/// Returns every violated invariant as a human-readable message; empty means
/// the instance is valid.
std::vector<std::string> validate_instance(const ProblemInstance& inst);

/// Throws std::invalid_argument listing all violations when the instance is
/// not valid.
void require_valid(const ProblemInstance& inst);

/// Throws std::invalid_argument unless the path is non-empty, in range, and
/// every consecutive pair is an edge.
void require_valid_path(const ProblemInstance& inst, const Path& path);

/// Expected cost until success along the path, by backward recursion over
/// first visits. INFINITE iff the path never reaches a terminal node.
ExtendedCost expected_cost(const ProblemInstance& inst, const Path& path);

/// Sum over traversed edges of the edge cost weighted by the probability that
/// every node first-visited so far failed. Always finite. Equals
/// expected_cost() for paths that reach a terminal; for paths that do not, it
/// is the no-terminal objective including the cost of the total-failure event.
double traversal_cost(const ProblemInstance& inst, const Path& path);

/// Probability that every first-visited node on the path fails. Computed in
/// the log domain once more than 64 distinct nodes have been visited.
double failure_probability(const ProblemInstance& inst, const Path& path);

/// Mask of positions in `path` that are first visits.
std::vector<bool> first_visit_mask(const Path& path, int node_count);

}  // namespace expcost
