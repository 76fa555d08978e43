#include "expcost/potential_game.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace expcost {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double chosen_edge_cost(const ProblemInstance& inst, NodeId v, NodeId u) {
  auto cost = inst.edge_cost(v, u);
  if (!cost) {
    throw std::invalid_argument("successor " + std::to_string(u) + " of node " + std::to_string(v) +
                                " is not a neighbor");
  }
  return *cost;
}

std::vector<std::vector<NodeId>> reverse_successors(const SuccessorProfile& profile) {
  std::vector<std::vector<NodeId>> preds(profile.choice.size());
  for (std::size_t v = 0; v < profile.choice.size(); ++v) {
    if (profile.choice[v] != kNoNode) preds[profile.choice[v]].push_back(static_cast<NodeId>(v));
  }
  return preds;
}

NodeId sample_index(std::span<const double> probs, Rng& rng) {
  double u = rng.uniform();
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    if (u < probs[i]) return static_cast<NodeId>(i);
    u -= probs[i];
  }
  return static_cast<NodeId>(probs.size() - 1);
}

}  // namespace

std::vector<ExtendedCost> profile_costs(const ProblemInstance& inst, const SuccessorProfile& profile) {
  const int n = inst.node_count();
  if (static_cast<int>(profile.choice.size()) != n) {
    throw std::invalid_argument("profile size does not match the instance");
  }
  enum : char { kUnseen, kActive, kDone };
  std::vector<char> state(n, kUnseen);
  std::vector<ExtendedCost> cost(n, ExtendedCost::infinite());
  std::vector<NodeId> walk;
  for (NodeId root = 0; root < n; ++root) {
    if (state[root] == kDone) continue;
    walk.clear();
    NodeId v = root;
    ExtendedCost tail = ExtendedCost::infinite();
    for (;;) {
      if (state[v] == kDone) {
        tail = cost[v];
        break;
      }
      if (state[v] == kActive) break;  // cycle
      if (inst.is_terminal(v)) {
        state[v] = kDone;
        cost[v] = ExtendedCost(0.0);
        tail = cost[v];
        break;
      }
      state[v] = kActive;
      walk.push_back(v);
      if (profile.choice[v] == kNoNode) break;
      v = profile.choice[v];
    }
    for (auto it = walk.rbegin(); it != walk.rend(); ++it) {
      const NodeId w = *it;
      if (tail.is_finite()) {
        const double l = chosen_edge_cost(inst, w, profile.choice[w]);
        tail = ExtendedCost((1.0 - inst.success_prob(w)) * (l + tail.value()));
      }
      cost[w] = tail;
      state[w] = kDone;
    }
  }
  return cost;
}

std::vector<NodeId> upstream_set(const SuccessorProfile& profile, NodeId v) {
  const auto preds = reverse_successors(profile);
  std::vector<char> seen(profile.choice.size(), 0);
  std::vector<NodeId> out{v};
  seen[v] = 1;
  for (std::size_t head = 0; head < out.size(); ++head) {
    for (NodeId w : preds[out[head]]) {
      if (!seen[w]) {
        seen[w] = 1;
        out.push_back(w);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodeId> feasible_actions(const ProblemInstance& inst, const SuccessorProfile& profile,
                                     NodeId v) {
  const auto cost = profile_costs(inst, profile);
  const auto up = upstream_set(profile, v);
  std::vector<NodeId> out;
  for (const Neighbor& nb : inst.neighbors(v)) {
    if (cost[nb.node].is_finite() && !std::binary_search(up.begin(), up.end(), nb.node)) {
      if (out.empty() || out.back() != nb.node) out.push_back(nb.node);
    }
  }
  return out;
}

ExtendedCost local_cost(const ProblemInstance& inst, const SuccessorProfile& profile, NodeId v,
                        const GameWeights& w) {
  const auto cost = profile_costs(inst, profile);
  ExtendedCost total;
  for (NodeId u : upstream_set(profile, v)) total += cost[u].scaled(w.alpha(u));
  return total;
}

ExtendedCost potential(const ProblemInstance& inst, const SuccessorProfile& profile,
                       const GameWeights& w) {
  const auto cost = profile_costs(inst, profile);
  ExtendedCost total = cost[w.start].scaled(1.0);
  for (NodeId v : inst.nonterminals()) {
    if (v != w.start) total += cost[v].scaled(w.eps_prime);
  }
  return total;
}

bool in_acyclic_successor_graph(const ProblemInstance& inst, const SuccessorProfile& profile) {
  const auto cost = profile_costs(inst, profile);
  return std::all_of(inst.nonterminals().begin(), inst.nonterminals().end(),
                     [&](NodeId v) { return cost[v].is_finite(); });
}

Path induced_path(const ProblemInstance& inst, const SuccessorProfile& profile, NodeId from) {
  Path path{from};
  std::vector<char> seen(inst.node_count(), 0);
  NodeId v = from;
  while (!inst.is_terminal(v)) {
    if (seen[v]) return {};
    seen[v] = 1;
    v = profile.choice[v];
    if (v == kNoNode) return {};
    path.push_back(v);
  }
  return path;
}

SuccessorProfile best_reply_step(const ProblemInstance& inst, const SuccessorProfile& profile,
                                 NodeId v, const GameWeights&) {
  const auto cost = profile_costs(inst, profile);
  SuccessorProfile next = profile;
  next.choice[v] = kNoNode;
  double best = kInf;
  for (NodeId u : feasible_actions(inst, profile, v)) {
    const double c = (1.0 - inst.success_prob(v)) * (*inst.edge_cost(v, u) + cost[u].value());
    if (c < best) {
      best = c;
      next.choice[v] = u;
    }
  }
  return next;
}

std::vector<double> log_linear_probabilities(std::span<const double> costs, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
  std::vector<double> probs(costs.size());
  if (costs.empty()) return probs;
  const double lowest = *std::min_element(costs.begin(), costs.end());
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    probs[i] = std::exp(-(costs[i] - lowest) / tau);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

SuccessorProfile log_linear_step(const ProblemInstance& inst, const SuccessorProfile& profile,
                                 NodeId v, double tau, Rng& rng, const GameWeights& w) {
  const auto feasible = feasible_actions(inst, profile, v);
  SuccessorProfile next = profile;
  if (feasible.empty()) {
    next.choice[v] = kNoNode;
    return next;
  }
  std::vector<double> local(feasible.size());
  for (std::size_t i = 0; i < feasible.size(); ++i) {
    next.choice[v] = feasible[i];
    local[i] = local_cost(inst, next, v, w).value();
  }
  const auto probs = log_linear_probabilities(local, tau);
  next.choice[v] = feasible[sample_index(probs, rng)];
  return next;
}

bool is_nash_equilibrium(const ProblemInstance& inst, const SuccessorProfile& profile,
                         double tolerance) {
  const auto cost = profile_costs(inst, profile);
  for (NodeId v : inst.nonterminals()) {
    for (NodeId u : feasible_actions(inst, profile, v)) {
      const double c = (1.0 - inst.success_prob(v)) * (*inst.edge_cost(v, u) + cost[u].value());
      if (cost[v].is_infinite() || c < cost[v].value() - tolerance) return false;
    }
  }
  return true;
}

nlohmann::json profile_to_json(const SuccessorProfile& profile) {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t v = 0; v < profile.choice.size(); ++v) {
    if (profile.choice[v] != kNoNode) out[std::to_string(v)] = profile.choice[v];
  }
  return out;
}

// ---------------------------------------------------------------------------

GameState::GameState(const ProblemInstance& inst, const GameWeights& weights)
    : inst_(&inst),
      weights_(weights),
      profile_(SuccessorProfile::all_null(inst.node_count())),
      cost_(inst.node_count(), kInf),
      edge_(inst.node_count(), 0.0),
      preds_(inst.node_count()),
      mark_(inst.node_count(), 0),
      lin_a_(inst.node_count(), 0.0),
      lin_b_(inst.node_count(), 0.0),
      null_players_(static_cast<int>(inst.nonterminals().size())) {
  for (NodeId t : inst.terminals()) cost_[t] = 0.0;
}

double GameState::potential() const {
  if (null_players_ > 0) return kInf;
  double total = 0.0;
  for (NodeId v : inst_->nonterminals()) total += weights_.alpha(v) * cost_[v];
  return total;
}

double GameState::step_cost(NodeId v, NodeId u) const {
  return (1.0 - inst_->success_prob(v)) * (*inst_->edge_cost(v, u) + cost_[u]);
}

const std::vector<NodeId>& GameState::compute_upstream(NodeId v) {
  if (++epoch_ == 0) {
    std::fill(mark_.begin(), mark_.end(), 0);
    epoch_ = 1;
  }
  upstream_.clear();
  upstream_.push_back(v);
  mark_[v] = epoch_;
  for (std::size_t head = 0; head < upstream_.size(); ++head) {
    for (NodeId w : preds_[upstream_[head]]) {
      if (mark_[w] != epoch_) {
        mark_[w] = epoch_;
        upstream_.push_back(w);
      }
    }
  }
  return upstream_;
}

const std::vector<NodeId>& GameState::compute_feasible(NodeId v) {
  feasible_.clear();
  for (const Neighbor& nb : inst_->neighbors(v)) {
    if (mark_[nb.node] != epoch_ && cost_[nb.node] != kInf &&
        (feasible_.empty() || feasible_.back() != nb.node)) {
      feasible_.push_back(nb.node);
    }
  }
  return feasible_;
}

NodeId GameState::best_reply(NodeId v) {
  compute_upstream(v);
  NodeId best_u = kNoNode;
  double best = kInf;
  for (const Neighbor& nb : inst_->neighbors(v)) {
    if (mark_[nb.node] == epoch_ || cost_[nb.node] == kInf) continue;
    const double c = (1.0 - inst_->success_prob(v)) * (nb.cost + cost_[nb.node]);
    if (c < best) {
      best = c;
      best_u = nb.node;
    }
  }
  return best_u;
}

void GameState::local_costs(NodeId v, std::span<const NodeId> feasible, std::vector<double>& out) {
  // Upstream costs are affine in C_v: C_w = a_w + b_w * C_v.
  double sum_a = 0.0, sum_b = 0.0;
  for (NodeId w : upstream_) {
    if (w == v) {
      lin_a_[w] = 0.0;
      lin_b_[w] = 1.0;
    } else {
      const NodeId x = profile_.choice[w];
      const double keep = 1.0 - inst_->success_prob(w);
      lin_a_[w] = keep * (edge_[w] + lin_a_[x]);
      lin_b_[w] = keep * lin_b_[x];
    }
    sum_a += weights_.alpha(w) * lin_a_[w];
    sum_b += weights_.alpha(w) * lin_b_[w];
  }
  out.resize(feasible.size());
  for (std::size_t i = 0; i < feasible.size(); ++i) {
    out[i] = sum_a + sum_b * step_cost(v, feasible[i]);
  }
}

void GameState::set_choice(NodeId v, NodeId u) {
  const NodeId old = profile_.choice[v];
  if (old == u) return;
  if (old != kNoNode) {
    auto& list = preds_[old];
    list.erase(std::find(list.begin(), list.end(), v));
  } else {
    --null_players_;
  }
  profile_.choice[v] = u;
  if (u != kNoNode) {
    preds_[u].push_back(v);
    edge_[v] = *inst_->edge_cost(v, u);
    cost_[v] = (1.0 - inst_->success_prob(v)) * (edge_[v] + cost_[u]);
  } else {
    ++null_players_;
    cost_[v] = kInf;
  }
  compute_upstream(v);
  for (std::size_t i = 1; i < upstream_.size(); ++i) {
    const NodeId w = upstream_[i];
    const NodeId x = profile_.choice[w];
    cost_[w] = cost_[x] == kInf ? kInf : (1.0 - inst_->success_prob(w)) * (edge_[w] + cost_[x]);
  }
}

// ---------------------------------------------------------------------------

namespace {

GameSolveResult finish(const ProblemInstance& inst, const GameState& state) {
  GameSolveResult r;
  r.profile = state.profile();
  r.path = induced_path(inst, r.profile, inst.start());
  const double c = state.cost(inst.start());
  r.cost = c == kInf ? ExtendedCost::infinite() : ExtendedCost(c);
  r.potential = state.potential();
  return r;
}

}  // namespace

GameSolveResult best_reply_solve(const ProblemInstance& inst, const BestReplyOptions& options) {
  if (inst.terminals().empty()) throw std::invalid_argument("best reply requires a terminal node");
  GameState state(inst, default_weights(inst, options.eps_prime));
  const auto& players = inst.nonterminals();
  const std::uint64_t n = players.size();
  const std::uint64_t cap = options.iteration_cap ? options.iteration_cap : 100 * n * n + n;
  std::uint64_t iterations = 0, last_change = 0;
  bool converged = n == 0;

  auto update = [&](NodeId v) {
    ++iterations;
    const NodeId u = state.best_reply(v);
    if (u != state.profile().choice[v]) {
      state.set_choice(v, u);
      last_change = iterations;
    }
    if (options.observer) options.observer(state, v);
  };

  if (options.order == PlayerOrder::kRoundRobin) {
    while (!converged && iterations < cap) {
      const std::uint64_t before = last_change;
      for (NodeId v : players) update(v);
      converged = last_change == before;
    }
  } else {
    Rng rng = Rng::derive(options.seed, "best_reply.order");
    while (!converged && iterations < cap) {
      for (std::uint64_t i = 0; i < n && iterations < cap; ++i) {
        update(players[rng.uniform_int(n)]);
      }
      converged = std::all_of(players.begin(), players.end(), [&](NodeId v) {
        return state.best_reply(v) == state.profile().choice[v];
      });
    }
  }

  GameSolveResult r = finish(inst, state);
  r.iterations = iterations;
  r.last_change = last_change;
  r.converged = converged;
  return r;
}

LogLinearResult log_linear_solve(const ProblemInstance& inst, const LogLinearOptions& options) {
  if (inst.terminals().empty()) throw std::invalid_argument("log-linear learning requires a terminal node");
  if (options.iteration_budget == 0) throw std::invalid_argument("iteration budget must be positive");
  if (!(options.tau0 > 0.0)) throw std::invalid_argument("tau0 must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  GameState state(inst, default_weights(inst, options.eps_prime));
  const auto& players = inst.nonterminals();
  LogLinearResult result;
  if (players.empty()) {
    static_cast<GameSolveResult&>(result) = finish(inst, state);
    result.converged = true;
    return result;
  }

  Rng rng = Rng::derive(options.seed, "log_linear");
  std::vector<double> local, probs;
  double best_phi = kInf, best_cost = kInf;
  bool have_best = false;
  const NodeId start = inst.start();

  for (std::uint64_t k = 1; k <= options.iteration_budget; ++k) {
    const NodeId v = players[rng.uniform_int(players.size())];
    const double tau = options.tau0 * std::pow(static_cast<double>(k), -options.decay_exponent);
    state.compute_upstream(v);
    const auto& feasible = state.compute_feasible(v);
    if (feasible.empty()) {
      state.set_choice(v, kNoNode);
    } else {
      std::vector<NodeId> actions(feasible.begin(), feasible.end());
      state.local_costs(v, actions, local);
      probs = log_linear_probabilities(local, tau);
      state.set_choice(v, actions[sample_index(probs, rng)]);
    }
    if (options.observer) options.observer(state, v);

    const double c = state.cost(start);
    const double phi = state.in_asg() ? state.potential() : kInf;
    if (!have_best || phi < best_phi || (phi == best_phi && c < best_cost)) {
      have_best = true;
      best_phi = phi;
      best_cost = c;
      result.profile = state.profile();
      result.potential = phi;
      result.trace.push_back({k, elapsed(), c});
    }
    result.iterations = k;
  }

  result.path = induced_path(inst, result.profile, start);
  result.cost = best_cost == kInf ? ExtendedCost::infinite() : ExtendedCost(best_cost);
  result.converged = best_phi != kInf;
  return result;
}

}  // namespace expcost
