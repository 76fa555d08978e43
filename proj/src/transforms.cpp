#include "expcost/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>

#include "expcost/instance_io.hpp"

namespace expcost {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_length(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

ShortestPathTable::ShortestPathTable(int n, std::vector<double> dist, std::vector<NodeId> next_hop)
    : n_(n), dist_(std::move(dist)), next_hop_(std::move(next_hop)) {
  for (double d : dist_) {
    if (std::isfinite(d)) diameter_ = std::max(diameter_, d);
  }
}

Path ShortestPathTable::path(NodeId u, NodeId v) const {
  Path out{u};
  if (!std::isfinite(distance(u, v))) return {};
  while (u != v) {
    u = next_hop(u, v);
    out.push_back(u);
  }
  return out;
}

ShortestPathTable all_pairs_shortest_paths(const ProblemInstance& inst) {
  const int n = inst.node_count();
  const auto N = static_cast<std::size_t>(n);
  std::vector<double> dist(N * N, kInf);
  for (NodeId u = 0; u < n; ++u) {
    dist[u * N + u] = 0.0;
    for (const Neighbor& nb : inst.neighbors(u)) {
      dist[u * N + nb.node] = std::min(dist[u * N + nb.node], nb.cost);
    }
  }
  for (std::size_t k = 0; k < N; ++k) {
    const double* row_k = &dist[k * N];
    for (std::size_t i = 0; i < N; ++i) {
      const double d_ik = dist[i * N + k];
      if (!std::isfinite(d_ik)) continue;
      double* row_i = &dist[i * N];
      for (std::size_t j = 0; j < N; ++j) {
        const double cand = d_ik + row_k[j];
        if (cand < row_i[j]) row_i[j] = cand;
      }
    }
  }
  // Next hops from final distances: lowest-id neighbor on some shortest route.
  std::vector<NodeId> next(N * N, kNoNode);
  for (NodeId u = 0; u < n; ++u) {
    next[u * N + u] = u;
    for (NodeId v = 0; v < n; ++v) {
      if (u == v || !std::isfinite(dist[u * N + v])) continue;
      for (const Neighbor& nb : inst.neighbors(u)) {
        if (same_length(nb.cost + dist[nb.node * N + v], dist[u * N + v])) {
          next[u * N + v] = nb.node;
          break;
        }
      }
    }
  }
  return ShortestPathTable(n, std::move(dist), std::move(next));
}

std::vector<double> shortest_distances_from(const ProblemInstance& inst, NodeId source) {
  std::vector<double> dist(inst.node_count(), kInf);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (const Neighbor& nb : inst.neighbors(u)) {
      const double cand = d + nb.cost;
      if (cand < dist[nb.node]) {
        dist[nb.node] = cand;
        heap.push({cand, nb.node});
      }
    }
  }
  return dist;
}

Path shortest_path_along(const ProblemInstance& inst, NodeId from,
                         const std::vector<double>& dist_to_target) {
  if (!std::isfinite(dist_to_target[from])) return {};
  Path out{from};
  NodeId cur = from;
  while (dist_to_target[cur] > 0.0) {
    NodeId next = kNoNode;
    for (const Neighbor& nb : inst.neighbors(cur)) {
      if (same_length(nb.cost + dist_to_target[nb.node], dist_to_target[cur])) {
        next = nb.node;
        break;
      }
    }
    if (next == kNoNode) throw std::logic_error("distance field is not a shortest-path field");
    out.push_back(next);
    cur = next;
  }
  return out;
}

CompleteInstance build_complete_graph(const ProblemInstance& inst) {
  ShortestPathTable table = all_pairs_shortest_paths(inst);
  const int n = inst.node_count();
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (std::isfinite(table.distance(u, v))) edges.push_back({u, v, table.distance(u, v)});
    }
  }
  std::vector<double> probs(inst.success_probs().begin(), inst.success_probs().end());
  ProblemInstance comp(std::move(probs), std::move(edges), inst.start());
  return CompleteInstance{inst, std::move(comp), std::move(table)};
}

Path expand_simple_path(const CompleteInstance& ci, const Path& comp_path) {
  if (comp_path.empty()) return {};
  Path out{comp_path.front()};
  for (std::size_t i = 0; i + 1 < comp_path.size(); ++i) {
    Path leg = ci.table.path(comp_path[i], comp_path[i + 1]);
    if (leg.empty()) throw std::invalid_argument("closure path step between disconnected nodes");
    out.insert(out.end(), leg.begin() + 1, leg.end());
  }
  return out;
}

Path compress_path(const ProblemInstance& inst, const Path& path) {
  require_valid_path(inst, path);
  const auto first = first_visit_mask(path, inst.node_count());
  Path out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (first[i]) out.push_back(path[i]);
  }
  return out;
}

nlohmann::json complete_instance_to_json(const CompleteInstance& ci,
                                         const std::string& derived_from) {
  auto doc = instance_to_json(ci.comp);
  doc["derived_from"] = derived_from;
  return doc;
}

NtReduction nt_reduction(const ProblemInstance& inst, std::optional<double> diameter_override) {
  if (!inst.terminals().empty()) {
    throw std::invalid_argument("nt_reduction requires an instance without terminal nodes");
  }
  double min_p = kInf;
  for (double p : inst.success_probs()) {
    if (p > 0.0) min_p = std::min(min_p, p);
  }
  if (!std::isfinite(min_p)) {
    throw std::invalid_argument("objective undefined: every success probability is 0");
  }
  double diameter = 0.0;
  if (diameter_override) {
    diameter = *diameter_override;
  } else {
    // Diameter via one Dijkstra per node keeps this usable on large grids.
    for (NodeId v = 0; v < inst.node_count(); ++v) {
      for (double d : shortest_distances_from(inst, v)) {
        if (std::isfinite(d)) diameter = std::max(diameter, d);
      }
    }
  }
  if (!(diameter > 0.0)) {
    throw std::invalid_argument("degenerate no-terminal instance: diameter is 0");
  }
  const double cost = 1.5 * diameter / min_p;
  const int n = inst.node_count();
  std::vector<double> probs(inst.success_probs().begin(), inst.success_probs().end());
  probs.push_back(1.0);
  std::vector<Edge> edges = inst.edges();
  for (NodeId v = 0; v < n; ++v) edges.push_back({v, n, cost});
  return NtReduction{ProblemInstance(std::move(probs), std::move(edges), inst.start()), n, cost};
}

}  // namespace expcost
