#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "expcost/instance.hpp"
#include "expcost/rng.hpp"

namespace expcost {

/// Per-node successor choice; kNoNode is the null action. Entries for
/// terminal nodes are ignored and kept null.
struct SuccessorProfile {
  std::vector<NodeId> choice;

  static SuccessorProfile all_null(int node_count) {
    return SuccessorProfile{std::vector<NodeId>(node_count, kNoNode)};
  }
  bool operator==(const SuccessorProfile&) const = default;
};

/// Weights of the local costs: 1 at the start node and eps_prime elsewhere.
struct GameWeights {
  double eps_prime = 1e-6;
  NodeId start = 0;
  double alpha(NodeId v) const { return v == start ? 1.0 : eps_prime; }
};

inline GameWeights default_weights(const ProblemInstance& inst, double eps_prime = 1e-6) {
  return GameWeights{eps_prime, inst.start()};
}

/// Cost of following the successor graph from every node: 0 at terminals,
/// C_v = (1 - p_v)(l + C_next) otherwise, INFINITE when the walk cycles or
/// stops at a non-terminal.
std::vector<ExtendedCost> profile_costs(const ProblemInstance& inst, const SuccessorProfile& profile);

/// v plus every node whose successor walk passes through v, ascending.
std::vector<NodeId> upstream_set(const SuccessorProfile& profile, NodeId v);

/// Neighbors u of v that are not upstream of v and have finite cost.
std::vector<NodeId> feasible_actions(const ProblemInstance& inst, const SuccessorProfile& profile,
                                     NodeId v);

/// Sum over the upstream set of v of alpha_u * C_u.
ExtendedCost local_cost(const ProblemInstance& inst, const SuccessorProfile& profile, NodeId v,
                        const GameWeights& w);

/// C_start + eps' * sum of C_v over the other non-terminal nodes.
ExtendedCost potential(const ProblemInstance& inst, const SuccessorProfile& profile,
                       const GameWeights& w);

/// True when every non-terminal node has finite cost (the successor graph is a
/// forest rooted at terminals).
bool in_acyclic_successor_graph(const ProblemInstance& inst, const SuccessorProfile& profile);

/// Walk from `from` along the successor graph to a terminal; empty when the
/// walk hits a null action or a cycle.
Path induced_path(const ProblemInstance& inst, const SuccessorProfile& profile, NodeId from);

/// Single best-reply update of player v: argmin over feasible actions of
/// (1 - p_v)(l_vu + C_u), lowest id among ties, null when nothing is feasible.
SuccessorProfile best_reply_step(const ProblemInstance& inst, const SuccessorProfile& profile,
                                 NodeId v, const GameWeights& w);

/// Single log-linear update of player v at temperature tau.
SuccessorProfile log_linear_step(const ProblemInstance& inst, const SuccessorProfile& profile,
                                 NodeId v, double tau, Rng& rng, const GameWeights& w);

/// Selection probabilities of a log-linear update: softmax(-J/tau) over
/// `costs`, computed with the minimum subtracted first.
std::vector<double> log_linear_probabilities(std::span<const double> costs, double tau);

/// No player can lower its own expected cost by a unilateral feasible change.
bool is_nash_equilibrium(const ProblemInstance& inst, const SuccessorProfile& profile,
                         double tolerance = 1e-12);

nlohmann::json profile_to_json(const SuccessorProfile& profile);

/// Incrementally maintained game state: successor choices, their costs, and
/// reverse successor lists. Each update costs O(|upstream set| + degree).
class GameState {
 public:
  GameState(const ProblemInstance& inst, const GameWeights& weights);

  const SuccessorProfile& profile() const { return profile_; }
  double cost(NodeId v) const { return cost_[v]; }
  bool in_asg() const { return null_players_ == 0; }

  /// Potential; +inf while some player is null. Recomputed from the cost
  /// table, so it carries no accumulated rounding.
  double potential() const;

  /// Fills `upstream_` with the BFS order of v's upstream set (v first).
  const std::vector<NodeId>& compute_upstream(NodeId v);
  /// Feasible actions of v; requires compute_upstream(v) first.
  const std::vector<NodeId>& compute_feasible(NodeId v);

  /// Best-reply choice for v (kNoNode if none feasible).
  NodeId best_reply(NodeId v);

  /// Local costs J_v(u, mu_-v) for each u in `feasible`, after compute_upstream(v).
  void local_costs(NodeId v, std::span<const NodeId> feasible, std::vector<double>& out);

  /// Sets v's successor and refreshes costs of v and its upstream nodes.
  void set_choice(NodeId v, NodeId u);

  const ProblemInstance& instance() const { return *inst_; }
  const std::vector<NodeId>& players() const { return inst_->nonterminals(); }

 private:
  double step_cost(NodeId v, NodeId u) const;

  const ProblemInstance* inst_;
  GameWeights weights_;
  SuccessorProfile profile_;
  std::vector<double> cost_;
  std::vector<double> edge_;  // cost of the chosen edge
  std::vector<std::vector<NodeId>> preds_;
  std::vector<NodeId> upstream_;
  std::vector<NodeId> feasible_;
  std::vector<std::uint32_t> mark_;
  std::uint32_t epoch_ = 0;
  std::vector<double> lin_a_, lin_b_;
  int null_players_ = 0;
};

enum class PlayerOrder { kRoundRobin, kRandom };

struct BestReplyOptions {
  PlayerOrder order = PlayerOrder::kRoundRobin;
  std::uint64_t seed = 0;
  double eps_prime = 1e-6;
  /// Hard cap on single-player updates; 0 means 100 * |V'|^2 + |V'|.
  std::uint64_t iteration_cap = 0;
  /// Called after every update with the updated player.
  std::function<void(const GameState&, NodeId)> observer;
};

struct GameSolveResult {
  SuccessorProfile profile;
  Path path;                          // on the graph the game was played on
  ExtendedCost cost = ExtendedCost::infinite();
  double potential = 0.0;
  std::uint64_t iterations = 0;       // single-player updates performed
  std::uint64_t last_change = 0;      // 1-based index of the last update that changed a choice
  bool converged = false;
};

/// Best-reply dynamics from the all-null profile until no player changes.
GameSolveResult best_reply_solve(const ProblemInstance& inst, const BestReplyOptions& options);

struct TracePoint {
  std::uint64_t iteration;
  double wall_time_s;
  double best_cost;
};

struct LogLinearOptions {
  double tau0 = 1.0;
  /// tau(k) = tau0 * k^-decay_exponent; 0 gives a fixed temperature.
  double decay_exponent = 0.75;
  std::uint64_t iteration_budget = 100'000;
  std::uint64_t seed = 0;
  double eps_prime = 1e-6;
  /// Called after every update with the updated player.
  std::function<void(const GameState&, NodeId)> observer;
};

struct LogLinearResult : GameSolveResult {
  std::vector<TracePoint> trace;  // one point per improvement of the best profile
};

/// Log-linear learning from the all-null profile; returns the lowest-potential
/// profile visited (ties: earliest).
LogLinearResult log_linear_solve(const ProblemInstance& inst, const LogLinearOptions& options);

}  // namespace expcost
