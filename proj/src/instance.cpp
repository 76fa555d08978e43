#include "expcost/instance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace expcost {

ProblemInstance::ProblemInstance(std::vector<double> success_prob, std::vector<Edge> edges,
                                 NodeId start)
    : success_prob_(std::move(success_prob)), edges_(std::move(edges)), start_(start) {
  const int n = node_count();
  std::vector<std::size_t> degree(n, 0);
  for (const Edge& e : edges_) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n) {
      std::ostringstream msg;
      msg << "edge (" << e.u << "," << e.v << ") has an endpoint outside 0.." << n - 1;
      throw std::invalid_argument(msg.str());
    }
    ++degree[e.u];
    if (e.u != e.v) ++degree[e.v];
  }
  offsets_.assign(n + 1, 0);
  for (int v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + degree[v];
  adjacency_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : edges_) {
    adjacency_[fill[e.u]++] = {e.v, e.cost};
    if (e.u != e.v) adjacency_[fill[e.v]++] = {e.u, e.cost};
  }
  for (int v = 0; v < n; ++v) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]),
              [](const Neighbor& a, const Neighbor& b) {
                return a.node != b.node ? a.node < b.node : a.cost < b.cost;
              });
    (is_terminal(v) ? terminals_ : nonterminals_).push_back(v);
  }
}

std::optional<double> ProblemInstance::edge_cost(NodeId u, NodeId v) const {
  auto nbrs = neighbors(u);
  auto it = std::lower_bound(nbrs.begin(), nbrs.end(), v,
                             [](const Neighbor& a, NodeId id) { return a.node < id; });
  if (it == nbrs.end() || it->node != v) return std::nullopt;
  return it->cost;  // sorted by cost within equal ids, so this is the cheapest
}

ProblemInstance ProblemInstance::with_start(NodeId start) const {
  ProblemInstance copy = *this;
  copy.start_ = start;
  return copy;
}

std::vector<std::string> validate_instance(const ProblemInstance& inst) {
  std::vector<std::string> violations;
  const int n = inst.node_count();
  if (n == 0) {
    violations.emplace_back("instance has no nodes");
    return violations;
  }
  if (inst.start() < 0 || inst.start() >= n) {
    violations.push_back("start node " + std::to_string(inst.start()) + " out of range");
  }
  for (int v = 0; v < n; ++v) {
    const double p = inst.success_prob(v);
    if (!(p >= 0.0 && p <= 1.0)) {
      std::ostringstream msg;
      msg << "success probability of node " << v << " outside [0,1]: " << p;
      violations.push_back(msg.str());
    }
  }
  bool duplicate_reported = false;
  for (const Edge& e : inst.edges()) {
    if (e.u == e.v) violations.push_back("self-loop at node " + std::to_string(e.u));
    if (!(e.cost > 0.0) || !std::isfinite(e.cost)) {
      std::ostringstream msg;
      msg << "nonpositive edge cost " << e.cost << " on edge (" << e.u << "," << e.v << ")";
      violations.push_back(msg.str());
    }
  }
  for (int v = 0; v < n && !duplicate_reported; ++v) {
    auto nbrs = inst.neighbors(v);
    for (std::size_t i = 1; i < nbrs.size(); ++i) {
      if (nbrs[i].node == nbrs[i - 1].node && nbrs[i].node != v) {
        violations.push_back("duplicate edge between " + std::to_string(v) + " and " +
                             std::to_string(nbrs[i].node));
        duplicate_reported = true;
        break;
      }
    }
  }
  // Connectivity by BFS from node 0.
  std::vector<char> seen(n, 0);
  std::vector<NodeId> queue{0};
  seen[0] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (const Neighbor& nb : inst.neighbors(queue[head])) {
      if (!seen[nb.node]) {
        seen[nb.node] = 1;
        queue.push_back(nb.node);
      }
    }
  }
  if (static_cast<int>(queue.size()) != n) violations.emplace_back("graph not connected");
  return violations;
}

void require_valid(const ProblemInstance& inst) {
  auto violations = validate_instance(inst);
  if (violations.empty()) return;
  std::string msg = "invalid instance:";
  for (const auto& v : violations) msg += " " + v + ";";
  throw std::invalid_argument(msg);
}

void require_valid_path(const ProblemInstance& inst, const Path& path) {
  if (path.empty()) throw std::invalid_argument("path is empty");
  for (NodeId v : path) {
    if (v < 0 || v >= inst.node_count()) {
      throw std::invalid_argument("path node " + std::to_string(v) + " out of range");
    }
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!inst.edge_cost(path[i], path[i + 1])) {
      throw std::invalid_argument("path step " + std::to_string(path[i]) + "->" +
                                  std::to_string(path[i + 1]) + " is not an edge");
    }
  }
}

std::vector<bool> first_visit_mask(const Path& path, int node_count) {
  std::vector<bool> seen(node_count, false);
  std::vector<bool> first(path.size(), false);
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!seen[path[i]]) {
      seen[path[i]] = true;
      first[i] = true;
    }
  }
  return first;
}

ExtendedCost expected_cost(const ProblemInstance& inst, const Path& path) {
  require_valid_path(inst, path);
  const bool reaches_terminal =
      std::any_of(path.begin(), path.end(), [&](NodeId v) { return inst.is_terminal(v); });
  if (!reaches_terminal) return ExtendedCost::infinite();

  const auto first = first_visit_mask(path, inst.node_count());
  double cost = 0.0;
  for (std::size_t i = path.size() - 1; i-- > 0;) {
    const double step = *inst.edge_cost(path[i], path[i + 1]) + cost;
    cost = first[i] ? (1.0 - inst.success_prob(path[i])) * step : step;
  }
  return ExtendedCost(cost);
}

double traversal_cost(const ProblemInstance& inst, const Path& path) {
  require_valid_path(inst, path);
  const auto first = first_visit_mask(path, inst.node_count());
  double survive = 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (first[i]) survive *= 1.0 - inst.success_prob(path[i]);
    total += survive * *inst.edge_cost(path[i], path[i + 1]);
  }
  return total;
}

double failure_probability(const ProblemInstance& inst, const Path& path) {
  require_valid_path(inst, path);
  const auto first = first_visit_mask(path, inst.node_count());
  const auto distinct = std::count(first.begin(), first.end(), true);
  if (distinct <= 64) {
    double product = 1.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (first[i]) product *= 1.0 - inst.success_prob(path[i]);
    }
    return product;
  }
  double log_sum = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!first[i]) continue;
    const double p = inst.success_prob(path[i]);
    if (p == 1.0) return 0.0;
    log_sum += std::log1p(-p);
  }
  return std::exp(log_sum);
}

}  // namespace expcost
