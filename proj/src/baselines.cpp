#include "expcost/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "expcost/rng.hpp"

namespace expcost {

Path nearest_neighbor(const ProblemInstance& inst) {
  if (inst.terminals().empty()) throw std::invalid_argument("nearest neighbor requires a terminal node");
  std::vector<char> visited(inst.node_count(), 0);
  std::vector<NodeId> stack{inst.start()};
  Path path{inst.start()};
  visited[inst.start()] = 1;
  while (!inst.is_terminal(stack.back())) {
    NodeId next = kNoNode;
    double best = -1.0;
    for (const Neighbor& nb : inst.neighbors(stack.back())) {
      if (!visited[nb.node] && inst.success_prob(nb.node) > best) {
        best = inst.success_prob(nb.node);
        next = nb.node;
      }
    }
    if (next != kNoNode) {
      visited[next] = 1;
      stack.push_back(next);
      path.push_back(next);
    } else {
      stack.pop_back();
      if (stack.empty()) throw std::runtime_error("no terminal reachable from the start");
      path.push_back(stack.back());
    }
  }
  return path;
}

Path closest_terminal(const ProblemInstance& inst) {
  if (inst.terminals().empty()) throw std::invalid_argument("closest terminal requires a terminal node");
  const auto dist = shortest_distances_from(inst, inst.start());
  NodeId target = kNoNode;
  for (NodeId t : inst.terminals()) {
    if (target == kNoNode || dist[t] < dist[target]) target = t;
  }
  if (!std::isfinite(dist[target])) throw std::runtime_error("no terminal reachable from the start");
  const auto to_target = shortest_distances_from(inst, target);
  return shortest_path_along(inst, inst.start(), to_target);
}

void validate(const AnnealingConfig& cfg) {
  if (!(cfg.cooling_rate > 0.0 && cfg.cooling_rate <= 1.0)) {
    throw std::invalid_argument("cooling rate must lie in (0, 1]");
  }
  if (cfg.moves_per_temperature == 0) throw std::invalid_argument("moves per temperature must be positive");
  if (cfg.reversal_weight < 0.0 || cfg.insertion_weight < 0.0 ||
      std::abs(cfg.reversal_weight + cfg.insertion_weight - 1.0) > 1e-12) {
    throw std::invalid_argument("move weights must be nonnegative and sum to 1");
  }
}

double annealing_energy(const CompleteInstance& ci, const std::vector<NodeId>& order) {
  const ProblemInstance& inst = ci.comp;
  NodeId at = inst.start();
  if (inst.is_terminal(at)) return 0.0;
  double alive = 1.0 - inst.success_prob(at);
  double total = 0.0;
  for (NodeId v : order) {
    total += alive * ci.table.distance(at, v);
    if (inst.is_terminal(v)) return total;
    alive *= 1.0 - inst.success_prob(v);
    at = v;
  }
  return std::numeric_limits<double>::infinity();
}

std::vector<NodeId> annealing_initial_state(const ProblemInstance& inst) {
  std::vector<NodeId> order;
  for (NodeId v : inst.nonterminals()) {
    if (v != inst.start()) order.push_back(v);
  }
  for (NodeId t : inst.terminals()) {
    if (t != inst.start()) order.push_back(t);
  }
  return order;
}

namespace {

Path state_to_path(const CompleteInstance& ci, const std::vector<NodeId>& order) {
  Path comp_path{ci.comp.start()};
  if (!ci.comp.is_terminal(ci.comp.start())) {
    for (NodeId v : order) {
      comp_path.push_back(v);
      if (ci.comp.is_terminal(v)) break;
    }
  }
  return expand_simple_path(ci, comp_path);
}

void propose(std::vector<NodeId>& order, const AnnealingConfig& cfg, Rng& rng) {
  const std::uint64_t m = order.size();
  std::uint64_t i = rng.uniform_int(m), j = rng.uniform_int(m - 1);
  if (j >= i) ++j;
  if (rng.uniform() < cfg.reversal_weight) {
    if (i > j) std::swap(i, j);
    std::reverse(order.begin() + i, order.begin() + j + 1);
  } else {
    const NodeId v = order[i];
    order.erase(order.begin() + i);
    order.insert(order.begin() + j, v);
  }
}

}  // namespace

AnnealingResult simulated_annealing(const CompleteInstance& ci, const AnnealingConfig& cfg) {
  validate(cfg);
  const ProblemInstance& inst = ci.comp;
  if (inst.terminals().empty()) throw std::invalid_argument("simulated annealing requires a terminal node");
  Rng rng = Rng::derive(cfg.seed, "annealing");

  std::vector<NodeId> state = annealing_initial_state(inst);
  double temperature = cfg.initial_temperature;
  if (!(temperature > 0.0)) {
    std::vector<NodeId> probe = state;
    double sum = 0.0, sum_sq = 0.0;
    for (int k = 0; k < 100; ++k) {
      for (std::size_t i = probe.size(); i > 1; --i) std::swap(probe[i - 1], probe[rng.uniform_int(i)]);
      const double e = annealing_energy(ci, probe);
      sum += e;
      sum_sq += e * e;
    }
    const double mean = sum / 100.0;
    const double sd = std::sqrt(std::max(0.0, sum_sq / 100.0 - mean * mean));
    temperature = sd > 0.0 ? sd : 1.0;
  }

  AnnealingResult r;
  r.initial_temperature = temperature;
  double energy = annealing_energy(ci, state);
  double best = energy;
  r.best_state = state;
  if (state.size() >= 2) {
    std::vector<NodeId> candidate;
    for (std::uint64_t move = 1; move <= cfg.total_moves; ++move) {
      candidate = state;
      propose(candidate, cfg, rng);
      const double e = annealing_energy(ci, candidate);
      const double delta = e - energy;
      if (delta <= 0.0 || rng.uniform() < std::exp(-delta / temperature)) {
        state.swap(candidate);
        energy = e;
        ++r.accepted;
        if (energy < best) {
          best = energy;
          r.best_state = state;
        }
      }
      if (cfg.observer) cfg.observer(state, energy);
      if (move % cfg.moves_per_temperature == 0) temperature *= cfg.cooling_rate;
      r.moves = move;
    }
  }
  r.path = state_to_path(ci, r.best_state);
  r.cost = expected_cost(ci.base, r.path).value();
  return r;
}

AnnealingResult simulated_annealing(const ProblemInstance& inst, const AnnealingConfig& cfg) {
  return simulated_annealing(build_complete_graph(inst), cfg);
}

}  // namespace expcost
