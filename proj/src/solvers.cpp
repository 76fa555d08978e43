#include "expcost/solvers.hpp"

#include <chrono>
#include <stdexcept>

#include "expcost/baselines.hpp"
#include "expcost/exact_solver.hpp"
#include "expcost/idag.hpp"
#include "expcost/instance_io.hpp"
#include "expcost/transforms.hpp"

namespace expcost {

const std::vector<std::string>& solver_methods() {
  static const std::vector<std::string> methods{"exact", "brute",   "bestreply", "loglinear", "idag",
                                                "nn",    "closest", "sa",        "rtdp"};
  return methods;
}

namespace {

struct Raw {
  Path path;
  nlohmann::json details = nlohmann::json::object();
  std::vector<TracePoint> trace;
};

Raw game_or_greedy(const ProblemInstance& inst, const SolverConfig& cfg) {
  Raw r;
  const std::string& m = cfg.method;
  if (m == "bestreply") {
    BestReplyOptions opt;
    opt.order = cfg.order;
    opt.seed = cfg.seed;
    opt.eps_prime = cfg.eps_prime;
    const auto res = best_reply_solve(inst, opt);
    if (res.path.empty()) throw std::runtime_error("best reply ended without a path from the start");
    r.path = res.path;
    r.details = {{"iterations", res.iterations}, {"last_change", res.last_change},
                 {"converged", res.converged}, {"potential", res.potential}};
  } else if (m == "loglinear") {
    LogLinearOptions opt;
    opt.tau0 = cfg.tau0;
    opt.decay_exponent = cfg.tau_exponent;
    if (cfg.budget) opt.iteration_budget = cfg.budget;
    opt.seed = cfg.seed;
    opt.eps_prime = cfg.eps_prime;
    auto res = log_linear_solve(inst, opt);
    if (res.path.empty()) throw std::runtime_error("log-linear learning found no feasible profile within the budget");
    r.path = res.path;
    r.details = {{"iterations", res.iterations}, {"potential", res.potential}};
    if (cfg.record_trace) r.trace = std::move(res.trace);
  } else if (m == "idag") {
    const auto dag = impose_dag(inst);
    const auto res = idag_value_iteration(inst, dag);
    r.path = res.path;
    r.details = {{"dag_edges", dag.edge_count}};
  } else if (m == "nn") {
    r.path = nearest_neighbor(inst);
  } else if (m == "closest") {
    r.path = closest_terminal(inst);
  } else {
    throw std::logic_error("not a game or greedy method: " + m);
  }
  return r;
}

Raw solve_with_terminal(const ProblemInstance& inst, const SolverConfig& cfg) {
  const std::string& m = cfg.method;
  if (m == "exact") {
    const int vp = static_cast<int>(inst.nonterminals().size());
    if (vp > cfg.exact_cap) {
      throw StateExplosionError("exact value iteration refused: " + std::to_string(vp) +
                                " non-terminal nodes exceed the cap of " + std::to_string(cfg.exact_cap) +
                                "; use bestreply, loglinear or idag instead");
    }
    const auto vt = value_iteration_exact(inst, cfg.exact_cap);
    Raw r;
    r.path = extract_optimal_path(vt, inst);
    r.details = {{"states", vt.state_count()}, {"sweeps", vt.sweeps()}};
    return r;
  }
  if (m == "brute") {
    const auto res = brute_force_optimum(inst);
    Raw r;
    r.path = res.path;
    r.details = {{"paths_enumerated", res.work}};
    return r;
  }
  if (m == "sa") {
    AnnealingConfig ac;
    ac.seed = cfg.seed;
    if (cfg.budget) ac.total_moves = cfg.budget;
    const auto res = simulated_annealing(inst, ac);
    Raw r;
    r.path = res.path;
    r.details = {{"moves", res.moves}, {"accepted", res.accepted},
                 {"initial_temperature", res.initial_temperature}};
    return r;
  }
  if (m == "rtdp") {
    RtdpOptions opt;
    opt.seed = cfg.seed;
    if (cfg.budget) opt.trial_budget = cfg.budget;
    const auto res = rtdp_solve(inst, opt);
    if (!res.viable) throw std::runtime_error("rtdp: no viable path (" + res.failure_reason + ")");
    Raw r;
    r.path = res.path;
    r.details = {{"states_stored", res.states_stored}, {"trials", res.trials_run}};
    return r;
  }
  if (cfg.comp) {
    const auto ci = build_complete_graph(inst);
    Raw r = game_or_greedy(ci.comp, cfg);
    r.details["closure_path"] = r.path;
    r.path = expand_simple_path(ci, r.path);
    return r;
  }
  return game_or_greedy(inst, cfg);
}

}  // namespace

SolveOutcome run_solver(const ProblemInstance& inst, const SolverConfig& config) {
  const auto& methods = solver_methods();
  if (std::find(methods.begin(), methods.end(), config.method) == methods.end()) {
    throw std::invalid_argument("unknown method '" + config.method + "'");
  }
  require_valid(inst);
  const auto t0 = std::chrono::steady_clock::now();
  SolveOutcome out;
  out.method = config.method;
  Raw raw;
  if (inst.terminals().empty()) {
    const NtReduction nt = nt_reduction(inst);
    raw = solve_with_terminal(nt.instance, config);
    if (!raw.path.empty() && raw.path.back() == nt.terminal) raw.path.pop_back();
    out.no_terminal = true;
    out.cost = traversal_cost(inst, raw.path);
    raw.details["nt_terminal_edge_cost"] = nt.edge_cost;
  } else {
    raw = solve_with_terminal(inst, config);
    out.cost = expected_cost(inst, raw.path).value();
  }
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.path = std::move(raw.path);
  out.details = std::move(raw.details);
  out.trace = std::move(raw.trace);
  return out;
}

nlohmann::json to_json(const SolveOutcome& o) {
  nlohmann::json j = {{"method", o.method},        {"cost", o.cost},
                      {"path", path_to_json(o.path)}, {"path_nodes", o.path.size()},
                      {"no_terminal", o.no_terminal}, {"wall_time_s", o.wall_time_s},
                      {"details", o.details}};
  if (!o.trace.empty()) {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& p : o.trace) t.push_back({{"iteration", p.iteration}, {"wall_time_s", p.wall_time_s}, {"best_cost", p.best_cost}});
    j["trace"] = t;
  }
  return j;
}

}  // namespace expcost
