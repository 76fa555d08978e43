#include "expcost/idag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "expcost/transforms.hpp"

namespace expcost {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool strictly_farther(double dv, double du) {
  return dv > du + 1e-12 * std::max(1.0, std::abs(du));
}

}  // namespace

nlohmann::json ImposedDag::to_json() const {
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t u = 0; u < successors.size(); ++u) {
    for (const Neighbor& nb : successors[u]) {
      edges.push_back({{"u", u}, {"v", nb.node}, {"cost", nb.cost}});
    }
  }
  nlohmann::json dist = nlohmann::json::array();
  for (double d : start_distance) dist.push_back(std::isfinite(d) ? nlohmann::json(d) : nlohmann::json("inf"));
  return {{"edges", edges}, {"start_distance", dist}};
}

ImposedDag impose_dag(const ProblemInstance& inst, const DagOptions& options) {
  const int n = inst.node_count();
  ImposedDag dag;
  dag.start_distance = shortest_distances_from(inst, inst.start());
  dag.successors.assign(n, {});
  for (NodeId u = 0; u < n; ++u) {
    if (inst.is_terminal(u)) continue;
    for (const Neighbor& nb : inst.neighbors(u)) {
      const bool farther = strictly_farther(dag.start_distance[nb.node], dag.start_distance[u]);
      if (farther || (options.always_admit_terminals && inst.is_terminal(nb.node))) {
        auto& out = dag.successors[u];
        if (!out.empty() && out.back().node == nb.node) continue;  // parallel edge, cheapest first
        out.push_back(nb);
        ++dag.edge_count;
      }
    }
  }
  // With terminal admission a terminal may be closer than its predecessor;
  // terminals have no successors, so placing them first keeps the order valid.
  dag.topological_order.resize(n);
  std::iota(dag.topological_order.begin(), dag.topological_order.end(), 0);
  std::stable_sort(dag.topological_order.begin(), dag.topological_order.end(),
                   [&](NodeId a, NodeId b) {
                     const bool ta = inst.is_terminal(a), tb = inst.is_terminal(b);
                     if (ta != tb) return ta;
                     return dag.start_distance[a] < dag.start_distance[b];
                   });
  return dag;
}

DagSolveResult idag_value_iteration(const ProblemInstance& inst, const ImposedDag& dag,
                                    DagSweep sweep) {
  const int n = inst.node_count();
  DagSolveResult r;
  std::vector<double> J(n, kInf);
  for (NodeId t : inst.terminals()) J[t] = 0.0;
  r.action.assign(n, kNoNode);

  auto backup = [&](NodeId v, const std::vector<double>& from, NodeId& act) {
    double best = kInf;
    act = kNoNode;
    for (const Neighbor& nb : dag.successors[v]) {
      if (from[nb.node] == kInf) continue;
      const double c = (1.0 - inst.success_prob(v)) * (nb.cost + from[nb.node]);
      if (c < best) {
        best = c;
        act = nb.node;
      }
    }
    return best;
  };

  if (sweep == DagSweep::kReverseTopological) {
    for (auto it = dag.topological_order.rbegin(); it != dag.topological_order.rend(); ++it) {
      const NodeId v = *it;
      if (!inst.is_terminal(v)) J[v] = backup(v, J, r.action[v]);
    }
    r.sweeps_to_stable = 1;
  } else {
    std::vector<double> next(J);
    const std::uint64_t limit = static_cast<std::uint64_t>(n) + 2;
    for (std::uint64_t s = 1;; ++s) {
      bool changed = false;
      for (NodeId v = 0; v < n; ++v) {
        if (inst.is_terminal(v)) continue;
        next[v] = backup(v, J, r.action[v]);
        changed |= next[v] != J[v];
      }
      J.swap(next);
      if (!changed) break;
      r.sweeps_to_stable = s;
      if (s > limit) throw std::logic_error("value iteration on the DAG did not stabilize");
    }
  }

  r.value.reserve(n);
  for (double j : J) r.value.push_back(j == kInf ? ExtendedCost::infinite() : ExtendedCost(j));
  if (J[inst.start()] == kInf) {
    throw std::runtime_error("infeasible DAG: no terminal is reachable from the start along outward edges");
  }
  for (NodeId v = inst.start();; v = r.action[v]) {
    r.path.push_back(v);
    if (inst.is_terminal(v)) break;
  }
  r.cost = expected_cost(inst, r.path);
  return r;
}

}  // namespace expcost
