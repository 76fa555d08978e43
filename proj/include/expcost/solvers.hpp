#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "expcost/instance.hpp"
#include "expcost/potential_game.hpp"

namespace expcost {

/// Method names accepted by run_solver.
const std::vector<std::string>& solver_methods();

struct SolverConfig {
  std::string method = "bestreply";
  /// Play the game methods and the greedy baselines on the metric closure and
  /// expand the result.
  bool comp = false;
  PlayerOrder order = PlayerOrder::kRoundRobin;
  double eps_prime = 1e-6;
  double tau0 = 1.0;
  double tau_exponent = 0.75;
  /// Iterations (loglinear), moves (sa) or trials (rtdp); 0 keeps the default.
  std::uint64_t budget = 0;
  int exact_cap = 20;
  std::uint64_t seed = 0;
  bool record_trace = false;
};

struct SolveOutcome {
  std::string method;
  Path path;  // on the input instance
  /// Expected cost on the input instance; for instances without terminals,
  /// the no-terminal objective including total failure.
  double cost = 0.0;
  bool no_terminal = false;
  double wall_time_s = 0.0;
  nlohmann::json details = nlohmann::json::object();
  std::vector<TracePoint> trace;
};

/// Runs one method. Instances without terminals are reduced by attaching an
/// artificial terminal, solved, and the terminal is stripped from the path.
/// Throws std::invalid_argument for unknown methods and StateExplosionError
/// when an exact method exceeds its cap.
SolveOutcome run_solver(const ProblemInstance& inst, const SolverConfig& config);

nlohmann::json to_json(const SolveOutcome& outcome);

}  // namespace expcost
