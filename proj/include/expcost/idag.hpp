#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "expcost/instance.hpp"

namespace expcost {

/// Orientation of the instance graph that only allows moves strictly away from
/// the start in shortest-path distance.
struct ImposedDag {
  std::vector<double> start_distance;             // l^min from the start
  std::vector<std::vector<Neighbor>> successors;  // ascending node id
  std::vector<NodeId> topological_order;          // ascending start distance
  std::size_t edge_count = 0;

  nlohmann::json to_json() const;
};

struct DagOptions {
  /// Admit every adjacent terminal as an action even when it is not farther
  /// from the start.
  bool always_admit_terminals = false;
};

/// Keeps (u, v) iff it is an edge and dist(v) > dist(u); equal distances give
/// no edge in either direction.
ImposedDag impose_dag(const ProblemInstance& inst, const DagOptions& options = {});

enum class DagSweep {
  kReverseTopological,  // Gauss-Seidel, one pass suffices
  kSynchronous,         // Jacobi sweeps from INFINITE
};

struct DagSolveResult {
  std::vector<ExtendedCost> value;  // per node
  std::vector<NodeId> action;       // greedy successor, kNoNode at terminals or dead ends
  Path path;
  ExtendedCost cost = ExtendedCost::infinite();
  /// Sweeps until the values stopped changing (the confirming sweep excluded).
  std::uint64_t sweeps_to_stable = 0;
};

/// Value iteration J_v = min over DAG successors u of (1 - p_v)(l_vu + J_u),
/// J = 0 at terminals. Throws std::runtime_error "infeasible DAG" when no
/// terminal is reachable from the start.
DagSolveResult idag_value_iteration(const ProblemInstance& inst, const ImposedDag& dag,
                                    DagSweep sweep = DagSweep::kReverseTopological);

}  // namespace expcost
