#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "expcost/instance.hpp"
#include "expcost/transforms.hpp"

namespace expcost {

/// Greedy walk to the unvisited neighbor with the highest success
/// probability (lowest id on ties). At a dead end the walk retraces its steps
/// to the most recent node with an unvisited neighbor.
Path nearest_neighbor(const ProblemInstance& inst);

/// Shortest path from the start to the nearest terminal; ties between
/// terminals and between next hops go to the lowest id.
Path closest_terminal(const ProblemInstance& inst);

struct AnnealingConfig {
  /// <= 0 selects the standard deviation of 100 random-state energies.
  double initial_temperature = 0.0;
  /// Geometric factor applied after every `moves_per_temperature` moves;
  /// 1 keeps the temperature fixed.
  double cooling_rate = 0.995;
  std::uint64_t moves_per_temperature = 100;
  std::uint64_t total_moves = 100'000;
  double reversal_weight = 0.5;
  double insertion_weight = 0.5;
  std::uint64_t seed = 0;
  /// Called after every move with the current state and its energy.
  std::function<void(const std::vector<NodeId>&, double)> observer;
};

/// Throws std::invalid_argument on out-of-range parameters.
void validate(const AnnealingConfig& cfg);

/// Expected cost on the closure of the state: the start followed by the
/// permutation, cut at its first terminal.
double annealing_energy(const CompleteInstance& ci, const std::vector<NodeId>& order);

/// Initial state: non-terminal nodes other than the start in ascending id
/// order, then the terminals.
std::vector<NodeId> annealing_initial_state(const ProblemInstance& inst);

struct AnnealingResult {
  Path path;                     // best state, expanded to the base graph
  double cost = 0.0;
  std::vector<NodeId> best_state;
  std::uint64_t moves = 0;
  std::uint64_t accepted = 0;
  double initial_temperature = 0.0;
};

/// Metropolis annealing over visiting orders with segment-reversal and
/// node-insertion moves; returns the best state seen.
AnnealingResult simulated_annealing(const CompleteInstance& ci, const AnnealingConfig& cfg);
AnnealingResult simulated_annealing(const ProblemInstance& inst, const AnnealingConfig& cfg);

}  // namespace expcost
