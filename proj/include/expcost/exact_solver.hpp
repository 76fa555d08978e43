#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "expcost/instance.hpp"

namespace expcost {

/// Thrown when an exact method would exceed its size cap.
class StateExplosionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// MDP state (node, set of non-terminal nodes already visited). History bit i
/// refers to the i-th entry of ProblemInstance::nonterminals().
struct MdpState {
  NodeId node = kNoNode;
  std::uint64_t history = 0;
};

/// Converged cost-to-go and greedy policy over the reachable MDP states.
/// The absorbing success state is implicit with value 0.
class ValueTable {
 public:
  ExtendedCost value(const MdpState& s) const;
  /// kNoNode when the state is unreachable or has infinite value.
  NodeId action(const MdpState& s) const;
  bool contains(const MdpState& s) const { return index_of(s) >= 0; }

  ExtendedCost start_value() const { return values_.empty() ? ExtendedCost() : values_[0]; }
  std::size_t state_count() const { return states_.size(); }

  /// Sweeps performed, including the final sweep that changed nothing.
  std::uint64_t sweeps() const { return sweeps_; }
  /// |V'| * 2^|V'| + 1, the full state-space size.
  double full_state_space_size() const;
  /// Max |J - TJ| over materialized states after convergence.
  double bellman_residual() const { return residual_; }
  /// True when no state's value ever increased between sweeps.
  bool monotone() const { return monotone_; }

  const std::vector<NodeId>& nonterminals() const { return nonterminals_; }
  int history_bit(NodeId v) const { return v < 0 ? -1 : bit_of_[v]; }

  nlohmann::json to_json() const;

 private:
  friend ValueTable value_iteration_exact(const ProblemInstance&, int);
  long long index_of(const MdpState& s) const;

  std::vector<NodeId> nonterminals_;
  std::vector<int> bit_of_;           // node -> bit or -1
  std::unordered_map<std::uint64_t, std::int32_t> index_;  // key(state) -> index
  std::vector<MdpState> states_;      // states_[0] is the start state
  std::vector<ExtendedCost> values_;
  std::vector<NodeId> policy_;
  std::uint64_t sweeps_ = 0;
  double residual_ = 0.0;
  bool monotone_ = true;
};

/// Synchronous value iteration from J = INFINITE over the states reachable from
/// (start, {}). Throws StateExplosionError when |V'| > size_cap and
/// std::invalid_argument when the instance has no terminal.
ValueTable value_iteration_exact(const ProblemInstance& inst, int size_cap = 20);

/// Follows the converged policy from (start, {}). Throws std::runtime_error
/// "no proper policy" if the policy cycles or the start value is infinite.
Path extract_optimal_path(const ValueTable& vt, const ProblemInstance& inst);

struct OptimumResult {
  Path path;              // on the base graph
  double cost = 0.0;      // expected cost of `path`
  Path closure_path;      // simple path on the metric closure
  std::uint64_t work = 0; // paths enumerated or states expanded
};

/// Enumerates every simple path on the metric closure from the start through
/// non-terminal nodes to a terminal; the best one is expanded to the base
/// graph. Ties keep the first path in lexicographic order. |V'| <= size_cap.
OptimumResult brute_force_optimum(const ProblemInstance& inst, int size_cap = 9);

/// Exact optimum by best-first search over (visited set, node) on the metric
/// closure with an admissible bound on the remaining expected cost. Handles
/// |V'| up to 64 when the optimum is found within `expansion_cap` expansions;
/// throws StateExplosionError otherwise.
OptimumResult best_first_optimum(const ProblemInstance& inst,
                                 std::uint64_t expansion_cap = 20'000'000);

struct RtdpOptions {
  std::uint64_t trial_budget = 10'000;
  std::uint64_t seed = 0;
  /// Trials and path extraction abort past this many stored states.
  std::size_t state_cap = 4'000'000;
  /// Max steps per trial; 0 means 4 * node_count.
  std::size_t max_trial_length = 0;
};

struct RtdpResult {
  bool viable = false;  // false reproduces the "no viable path" outcome
  Path path;
  ExtendedCost cost = ExtendedCost::infinite();
  std::size_t states_stored = 0;
  std::uint64_t trials_run = 0;
  std::string failure_reason;
};

/// Real-time dynamic programming on the (node, history) MDP with zero
/// (admissible) initialization and greedy action choice.
RtdpResult rtdp_solve(const ProblemInstance& inst, const RtdpOptions& options);

}  // namespace expcost
