#include "expcost/exact_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "expcost/rng.hpp"
#include "expcost/transforms.hpp"

namespace expcost {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t state_key(int bit, std::uint64_t history) { return (history << 6) | std::uint64_t(bit); }

std::vector<int> history_bits(const ProblemInstance& inst) {
  std::vector<int> bit_of(inst.node_count(), -1);
  int k = 0;
  for (NodeId v : inst.nonterminals()) bit_of[v] = k++;
  return bit_of;
}

void require_terminal(const ProblemInstance& inst) {
  if (inst.terminals().empty()) {
    throw std::invalid_argument("instance has no terminal node; apply nt_reduction first");
  }
}

struct Transition {
  NodeId action;
  std::int32_t next;  // -1: absorbing success state
  double stage_cost;
  double weight;      // probability of landing in `next`
};

}  // namespace

ExtendedCost ValueTable::value(const MdpState& s) const {
  const long long i = index_of(s);
  return i < 0 ? ExtendedCost::infinite() : values_[i];
}

NodeId ValueTable::action(const MdpState& s) const {
  const long long i = index_of(s);
  return i < 0 ? kNoNode : policy_[i];
}

long long ValueTable::index_of(const MdpState& s) const {
  if (s.node < 0 || s.node >= static_cast<NodeId>(bit_of_.size()) || bit_of_[s.node] < 0) return -1;
  auto it = index_.find(state_key(bit_of_[s.node], s.history));
  return it == index_.end() ? -1 : it->second;
}

double ValueTable::full_state_space_size() const {
  const double k = static_cast<double>(nonterminals_.size());
  return k * std::pow(2.0, k) + 1.0;
}

nlohmann::json ValueTable::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < states_.size(); ++i) {
    nlohmann::json visited = nlohmann::json::array();
    for (std::size_t b = 0; b < nonterminals_.size(); ++b) {
      if (states_[i].history >> b & 1U) visited.push_back(nonterminals_[b]);
    }
    nlohmann::json row = {{"node", states_[i].node}, {"visited", visited}, {"action", policy_[i]}};
    row["value"] = values_[i].is_infinite() ? nlohmann::json("inf") : nlohmann::json(values_[i].value());
    out.push_back(row);
  }
  return out;
}

ValueTable value_iteration_exact(const ProblemInstance& inst, int size_cap) {
  require_terminal(inst);
  const int k = static_cast<int>(inst.nonterminals().size());
  if (k > size_cap || k > 57) {
    throw StateExplosionError("state explosion: " + std::to_string(k) +
                              " non-terminal nodes exceed the exact-solver cap of " +
                              std::to_string(std::min(size_cap, 57)));
  }
  ValueTable vt;
  vt.nonterminals_ = inst.nonterminals();
  vt.bit_of_ = history_bits(inst);
  if (inst.is_terminal(inst.start())) return vt;

  // Forward reachability from (start, {}).
  std::vector<std::vector<Transition>> transitions;
  auto intern = [&](NodeId v, std::uint64_t h) -> std::int32_t {
    auto [it, inserted] = vt.index_.try_emplace(state_key(vt.bit_of_[v], h),
                                                static_cast<std::int32_t>(vt.states_.size()));
    if (inserted) vt.states_.push_back({v, h});
    return it->second;
  };
  intern(inst.start(), 0);
  for (std::size_t s = 0; s < vt.states_.size(); ++s) {
    const MdpState st = vt.states_[s];
    const std::uint64_t vbit = std::uint64_t{1} << vt.bit_of_[st.node];
    const bool first_visit = (st.history & vbit) == 0;
    const double stay = first_visit ? 1.0 - inst.success_prob(st.node) : 1.0;
    std::vector<Transition> out;
    for (const Neighbor& nb : inst.neighbors(st.node)) {
      std::int32_t next = -1;
      if (!inst.is_terminal(nb.node)) next = intern(nb.node, st.history | vbit);
      out.push_back({nb.node, next, stay * nb.cost, stay});
    }
    transitions.push_back(std::move(out));
  }

  const std::size_t S = vt.states_.size();
  const double bound = vt.full_state_space_size();
  std::vector<double> cur(S, kInf), next(S, kInf);
  std::vector<NodeId> policy(S, kNoNode);
  auto backup = [&](std::size_t s, const std::vector<double>& J, NodeId* arg) {
    double best = kInf;
    NodeId best_action = kNoNode;
    for (const Transition& t : transitions[s]) {
      const double tail = t.next < 0 ? 0.0 : J[t.next];
      if (tail == kInf) continue;
      const double q = t.stage_cost + t.weight * tail;
      if (q < best) {  // neighbors are in ascending id order: ties keep the lowest id
        best = q;
        best_action = t.action;
      }
    }
    if (arg) *arg = best_action;
    return best;
  };

  for (;;) {
    bool changed = false;
    for (std::size_t s = 0; s < S; ++s) {
      next[s] = backup(s, cur, nullptr);
      if (next[s] != cur[s]) changed = true;
      if (next[s] > cur[s]) vt.monotone_ = false;
    }
    ++vt.sweeps_;
    std::swap(cur, next);
    if (!changed) break;
    if (static_cast<double>(vt.sweeps_) > bound) {
      throw std::logic_error("value iteration exceeded the |S| sweep bound");
    }
  }

  vt.values_.resize(S);
  vt.policy_.resize(S);
  for (std::size_t s = 0; s < S; ++s) {
    const double q = backup(s, cur, &vt.policy_[s]);
    vt.values_[s] = cur[s] == kInf ? ExtendedCost::infinite() : ExtendedCost(cur[s]);
    if (cur[s] != kInf) vt.residual_ = std::max(vt.residual_, std::abs(q - cur[s]));
  }
  return vt;
}

Path extract_optimal_path(const ValueTable& vt, const ProblemInstance& inst) {
  if (inst.is_terminal(inst.start())) return {inst.start()};
  MdpState s{inst.start(), 0};
  if (vt.value(s).is_infinite()) throw std::runtime_error("no proper policy: start value is infinite");
  Path path{s.node};
  for (std::size_t steps = 0; steps <= vt.state_count(); ++steps) {
    const NodeId u = vt.action(s);
    if (u == kNoNode) throw std::runtime_error("no proper policy: state without action");
    path.push_back(u);
    if (inst.is_terminal(u)) return path;
    s = MdpState{u, s.history | (std::uint64_t{1} << vt.history_bit(s.node))};
  }
  throw std::runtime_error("no proper policy: policy cycles");
}

OptimumResult brute_force_optimum(const ProblemInstance& inst, int size_cap) {
  require_terminal(inst);
  const int k = static_cast<int>(inst.nonterminals().size());
  if (k > size_cap) {
    throw StateExplosionError("brute force limited to " + std::to_string(size_cap) +
                              " non-terminal nodes, instance has " + std::to_string(k));
  }
  const NodeId start = inst.start();
  if (inst.is_terminal(start)) return {{start}, 0.0, {start}, 1};

  const CompleteInstance ci = build_complete_graph(inst);
  const auto& table = ci.table;
  const auto& others = inst.nonterminals();
  std::vector<char> used(inst.node_count(), 0);
  Path current{start};
  used[start] = 1;
  double best = kInf;
  Path best_path;
  std::uint64_t enumerated = 0;

  // cost: expected cost so far; survive: product of (1 - p) over visited nodes.
  auto dfs = [&](auto&& self, NodeId v, double cost, double survive) -> void {
    for (NodeId t : inst.terminals()) {
      const double d = table.distance(v, t);
      if (!std::isfinite(d)) continue;
      ++enumerated;
      const double total = cost + survive * d;
      if (total < best) {
        best = total;
        best_path = current;
        best_path.push_back(t);
      }
    }
    for (NodeId u : others) {
      if (used[u] || !std::isfinite(table.distance(v, u))) continue;
      used[u] = 1;
      current.push_back(u);
      self(self, u, cost + survive * table.distance(v, u), survive * (1.0 - inst.success_prob(u)));
      current.pop_back();
      used[u] = 0;
    }
  };
  dfs(dfs, start, 0.0, 1.0 - inst.success_prob(start));
  if (best_path.empty()) throw std::runtime_error("no terminal reachable from the start node");

  OptimumResult result;
  result.closure_path = best_path;
  result.path = expand_simple_path(ci, best_path);
  result.cost = expected_cost(inst, result.path).value();
  result.work = enumerated;
  return result;
}

OptimumResult best_first_optimum(const ProblemInstance& inst, std::uint64_t expansion_cap) {
  require_terminal(inst);
  const NodeId start = inst.start();
  if (inst.is_terminal(start)) return {{start}, 0.0, {start}, 0};
  const auto& nonterminals = inst.nonterminals();
  const int k = static_cast<int>(nonterminals.size());
  if (k > 64) throw StateExplosionError("best-first search supports at most 64 non-terminal nodes");

  const CompleteInstance ci = build_complete_graph(inst);
  const auto& table = ci.table;
  const std::vector<int> bit_of = history_bits(inst);

  double min_edge = kInf;
  for (const Edge& e : inst.edges()) min_edge = std::min(min_edge, e.cost);
  std::vector<double> to_terminal(inst.node_count(), kInf);
  for (NodeId v = 0; v < inst.node_count(); ++v) {
    for (NodeId t : inst.terminals()) to_terminal[v] = std::min(to_terminal[v], table.distance(v, t));
  }
  // Non-terminals with p > 0, most likely first; nodes with p = 0 never pay
  // off as intermediate stops on the closure and are not expanded.
  std::vector<NodeId> by_prob;
  for (NodeId v : nonterminals) {
    if (inst.success_prob(v) > 0.0) by_prob.push_back(v);
  }
  std::stable_sort(by_prob.begin(), by_prob.end(), [&](NodeId a, NodeId b) {
    return inst.success_prob(a) > inst.success_prob(b);
  });

  // Lower bound on the remaining cost, in units of the current survival
  // probability: j-th remaining edge has length >= min_edge and weight >= the
  // product over the j-1 likeliest unvisited nodes; total length >= distance
  // to the nearest terminal.
  auto remaining_bound = [&](NodeId v, std::uint64_t visited) {
    const double d = to_terminal[v];
    double best = kInf, prefix = 0.0, weight = 1.0;
    std::size_t idx = 0;
    for (int edges = 1;; ++edges) {
      const double rest = std::max(min_edge, d - (edges - 1) * min_edge);
      best = std::min(best, prefix + weight * rest);
      if ((edges - 1) * min_edge >= d) break;
      prefix += weight * min_edge;
      while (idx < by_prob.size() && (visited >> bit_of[by_prob[idx]] & 1U)) ++idx;
      if (idx < by_prob.size()) weight *= 1.0 - inst.success_prob(by_prob[idx++]);
    }
    return best;
  };

  struct Entry {
    double f;
    double g;
    double survive;
    std::uint64_t visited;
    NodeId node;
    std::int64_t crumb;  // index into `trail` of this entry's node
    bool goal;
  };
  struct Worse {
    bool operator()(const Entry& a, const Entry& b) const { return a.f > b.f; }
  };
  struct Crumb {
    NodeId node;
    std::int64_t parent;
  };
  struct Key {
    std::uint64_t visited;
    NodeId node;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::hash<std::uint64_t>{}(k.visited * 0x9e3779b97f4a7c15ULL ^ std::uint64_t(k.node));
    }
  };
  std::vector<Crumb> trail;
  std::priority_queue<Entry, std::vector<Entry>, Worse> open;
  std::unordered_map<Key, double, KeyHash> best_g;

  const double s0 = 1.0 - inst.success_prob(start);
  const std::uint64_t v0 = std::uint64_t{1} << bit_of[start];
  trail.push_back({start, -1});
  open.push({s0 * remaining_bound(start, v0), 0.0, s0, v0, start, 0, false});
  double incumbent = kInf;
  std::uint64_t expansions = 0;

  while (!open.empty()) {
    Entry e = open.top();
    open.pop();
    if (e.goal) {
      Path closure;
      for (std::int64_t i = e.crumb; i >= 0; i = trail[i].parent) closure.push_back(trail[i].node);
      std::reverse(closure.begin(), closure.end());
      OptimumResult result;
      result.closure_path = closure;
      result.path = expand_simple_path(ci, closure);
      result.cost = expected_cost(inst, result.path).value();
      result.work = expansions;
      return result;
    }
    auto it = best_g.find(Key{e.visited, e.node});
    if (it != best_g.end() && it->second < e.g) continue;
    if (++expansions > expansion_cap) {
      throw StateExplosionError("best-first search exceeded " + std::to_string(expansion_cap) +
                                " expansions");
    }
    const std::int64_t here = e.crumb;
    // Goal successors: any terminal.
    for (NodeId t : inst.terminals()) {
      const double d = table.distance(e.node, t);
      if (!std::isfinite(d)) continue;
      const double total = e.g + e.survive * d;
      if (total < incumbent) {
        incumbent = total;
        trail.push_back({t, here});
        open.push({total, total, 0.0, e.visited, t, static_cast<std::int64_t>(trail.size() - 1), true});
      }
    }
    for (NodeId u : by_prob) {
      const std::uint64_t ubit = std::uint64_t{1} << bit_of[u];
      if (e.visited & ubit) continue;
      const double d = table.distance(e.node, u);
      if (!std::isfinite(d)) continue;
      const double g = e.g + e.survive * d;
      const double survive = e.survive * (1.0 - inst.success_prob(u));
      const std::uint64_t visited = e.visited | ubit;
      const double f = g + survive * remaining_bound(u, visited);
      if (f >= incumbent) continue;
      auto [slot, inserted] = best_g.try_emplace(Key{visited, u}, g);
      if (!inserted) {
        if (slot->second <= g) continue;
        slot->second = g;
      }
      trail.push_back({u, here});
      open.push({f, g, survive, visited, u, static_cast<std::int64_t>(trail.size() - 1), false});
    }
  }
  throw std::runtime_error("no terminal reachable from the start node");
}

RtdpResult rtdp_solve(const ProblemInstance& inst, const RtdpOptions& options) {
  require_terminal(inst);
  RtdpResult result;
  const NodeId start = inst.start();
  if (inst.is_terminal(start)) {
    result.viable = true;
    result.path = {start};
    result.cost = ExtendedCost(0.0);
    return result;
  }
  if (inst.nonterminals().size() > 57) {
    result.failure_reason = "too many non-terminal nodes for the history encoding";
    return result;
  }
  const std::vector<int> bit_of = history_bits(inst);
  std::unordered_map<std::uint64_t, double> J;  // missing entries read as 0
  auto value_of = [&](NodeId v, std::uint64_t h) {
    auto it = J.find(state_key(bit_of[v], h));
    return it == J.end() ? 0.0 : it->second;
  };
  // Greedy action and its Q-value at (v, h).
  auto greedy = [&](NodeId v, std::uint64_t h) {
    const std::uint64_t vbit = std::uint64_t{1} << bit_of[v];
    const double stay = (h & vbit) ? 1.0 : 1.0 - inst.success_prob(v);
    double best = kInf;
    NodeId best_u = kNoNode;
    for (const Neighbor& nb : inst.neighbors(v)) {
      const double tail = inst.is_terminal(nb.node) ? 0.0 : value_of(nb.node, h | vbit);
      const double q = stay * (nb.cost + tail);
      if (q < best) {
        best = q;
        best_u = nb.node;
      }
    }
    return std::pair{best_u, best};
  };

  Rng rng = Rng::derive(options.seed, "rtdp");
  const std::size_t max_len =
      options.max_trial_length ? options.max_trial_length : 4 * static_cast<std::size_t>(inst.node_count());
  for (std::uint64_t trial = 0; trial < options.trial_budget; ++trial) {
    NodeId v = start;
    std::uint64_t h = 0;
    for (std::size_t step = 0; step < max_len; ++step) {
      auto [u, q] = greedy(v, h);
      J[state_key(bit_of[v], h)] = q;
      if (J.size() > options.state_cap) {
        result.failure_reason = "state explosion: stored states exceed cap";
        result.states_stored = J.size();
        result.trials_run = trial;
        return result;
      }
      const std::uint64_t vbit = std::uint64_t{1} << bit_of[v];
      if (!(h & vbit) && rng.uniform() < inst.success_prob(v)) break;
      if (inst.is_terminal(u)) break;
      h |= vbit;
      v = u;
    }
    result.trials_run = trial + 1;
  }
  result.states_stored = J.size();
  if (options.trial_budget == 0) {
    result.failure_reason = "no trials run";
    return result;
  }

  // Greedy rollout; a repeated state means the greedy policy is improper.
  std::unordered_set<std::uint64_t> on_path;
  NodeId v = start;
  std::uint64_t h = 0;
  Path path{start};
  for (;;) {
    if (!on_path.insert(state_key(bit_of[v], h)).second) {
      result.failure_reason = "greedy policy cycles";
      return result;
    }
    const NodeId u = greedy(v, h).first;
    if (u == kNoNode) {
      result.failure_reason = "dead end";
      return result;
    }
    path.push_back(u);
    if (inst.is_terminal(u)) break;
    h |= std::uint64_t{1} << bit_of[v];
    v = u;
  }
  result.path = std::move(path);
  result.cost = expected_cost(inst, result.path);
  result.viable = result.cost.is_finite();
  if (!result.viable) result.failure_reason = "greedy path does not reach a terminal";
  return result;
}

}  // namespace expcost
