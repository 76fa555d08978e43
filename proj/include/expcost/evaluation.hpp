#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "expcost/instance.hpp"
#include "expcost/solvers.hpp"

namespace expcost {

struct RealizationStats {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::uint64_t count = 0;
};

/// Distance traveled along `path` until the first success, drawn
/// independently at each first visit with the truth probabilities; the full
/// path cost when every draw fails. Realization i uses the stream
/// Rng::derive(seed, "realization", i); `threads` = 0 reads EXPCOST_THREADS.
RealizationStats simulate_realizations(const ProblemInstance& truth, const Path& path,
                                       std::uint64_t n_realizations, std::uint64_t seed,
                                       unsigned threads = 1);

/// Threads requested through EXPCOST_THREADS, at least 1.
unsigned env_thread_count();

struct EvalRow {
  std::string method;
  std::string instance_id;
  double expected_cost_plan = 0.0;
  double expected_cost_truth = 0.0;
  double mc_mean = 0.0;
  double mc_std = 0.0;
  double fail_prob = 0.0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  std::string error;  // non-empty when the solver failed
  Path path;
};

/// Solves the planning instance with every method and evaluates each path on
/// the truth instance. Truth expected cost falls back to the cost including
/// total failure when the path ends at a node that is not a truth terminal.
/// Solver failures are recorded in EvalRow::error.
std::vector<EvalRow> compare_methods(const ProblemInstance& planning, const ProblemInstance& truth,
                                     const std::vector<SolverConfig>& methods,
                                     std::uint64_t n_realizations, std::uint64_t seed,
                                     const std::string& instance_id = "0");

struct MethodAggregate {
  std::string method;
  std::uint64_t instances = 0;
  std::uint64_t failures = 0;
  double mean_truth_cost = 0.0;
  double std_truth_cost = 0.0;  // across instances
  double mean_mc = 0.0;
  double mean_mc_std = 0.0;     // average over instances of the per-realization stddev
  double mean_wall_time_s = 0.0;
};

/// Per-method aggregate in order of first appearance; failed rows are counted
/// but excluded from the means.
std::vector<MethodAggregate> aggregate(const std::vector<EvalRow>& rows);

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<MethodAggregate> summary;
};

inline const char* kEvalCsvHeader =
    "method,instance_id,expected_cost_plan,expected_cost_truth,mc_mean,mc_std,fail_prob,wall_time_s,seed,error";

void write_csv(std::ostream& out, const std::vector<EvalRow>& rows, bool zero_wall_time = false);
void write_summary_csv(std::ostream& out, const std::vector<MethodAggregate>& summary,
                       bool zero_wall_time = false);
nlohmann::json to_json(const EvalReport& report, bool zero_wall_time = false);

}  // namespace expcost
