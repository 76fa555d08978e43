#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "expcost/evaluation.hpp"
#include "expcost/exact_solver.hpp"
#include "expcost/instance_io.hpp"
#include "expcost/scenarios.hpp"
#include "expcost/solvers.hpp"

#ifndef EXPCOST_GIT_HASH
#define EXPCOST_GIT_HASH "unknown"
#endif

namespace fs = std::filesystem;
using namespace expcost;
using nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
};

struct MethodFlags {
  bool comp = false;
  std::string order = "roundrobin";
  double eps_prime = 1e-6;
  double tau0 = 1.0;
  double tau_exponent = 0.75;
  std::uint64_t budget = 0;
  int exact_cap = 20;
};

void add_method_flags(CLI::App* cmd, MethodFlags& f) {
  cmd->add_flag("--comp", f.comp, "Play on the metric closure and expand the result");
  cmd->add_option("--order", f.order, "Best-reply player order")->check(CLI::IsMember({"roundrobin", "random"}));
  cmd->add_option("--eps-prime", f.eps_prime, "Weight of non-start players in the potential")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--tau0", f.tau0, "Initial log-linear temperature")->check(CLI::PositiveNumber);
  cmd->add_option("--tau-exponent", f.tau_exponent, "Temperature decay exponent")->check(CLI::NonNegativeNumber);
  cmd->add_option("--budget-iters", f.budget, "Iterations (loglinear), moves (sa) or trials (rtdp)");
  cmd->add_option("--exact-cap", f.exact_cap, "Largest |V'| the exact solver accepts")->check(CLI::PositiveNumber);
}

SolverConfig make_config(const std::string& method, const MethodFlags& f, std::uint64_t seed) {
  SolverConfig c;
  c.method = method;
  c.comp = f.comp;
  c.order = f.order == "random" ? PlayerOrder::kRandom : PlayerOrder::kRoundRobin;
  c.eps_prime = f.eps_prime;
  c.tau0 = f.tau0;
  c.tau_exponent = f.tau_exponent;
  c.budget = f.budget;
  c.exact_cap = f.exact_cap;
  c.seed = seed;
  return c;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Writes to --out when given, stdout otherwise.
void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << text;
}

std::string path_string(const Path& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? " " : "") + std::to_string(p[i]);
  return s;
}

int cmd_generate_grid(const Globals& g, int n, int nt) {
  GridSpec spec{n, nt, g.seed};
  validate(spec);
  const auto inst = gen_grid(spec);
  const json meta{{"generator", "grid"}, {"spec", to_json(spec)}};
  if (g.out.empty()) {
    auto doc = instance_to_json(inst);
    doc["meta"] = meta;
    std::cout << doc.dump(2) << "\n";
  } else {
    save_instance(inst, g.out, meta);
  }
  std::cerr << "grid n=" << n << " nt=" << nt << " seed=" << g.seed << ": " << inst.node_count() << " nodes, "
            << inst.edges().size() << " edges\n";
  return 0;
}

int cmd_generate_channel(const Globals& g, ChannelSpec spec) {
  spec.seed = g.seed;
  validate(spec);
  if (g.out.empty()) throw CLI::ValidationError("--out", "channel generation needs an output directory");
  const fs::path dir(g.out);
  fs::create_directories(dir);
  const auto sc = gen_channel_scenario(spec);
  const int side = spec.cells_per_side;
  write_map_csv((dir / "truth_map.csv").string(), side, sc.truth_probability);
  write_map_csv((dir / "prob_map.csv").string(), side, sc.prediction.probability);
  std::vector<double> power(sc.field.power_dbm.begin(), sc.field.power_dbm.end());
  write_map_csv((dir / "power_dbm.csv").string(), side, power);
  const json meta{{"generator", "channel"},
                  {"spec", to_json(spec)},
                  {"station", sc.planning.station},
                  {"attach_cell", sc.planning.attach_cell},
                  {"station_edge_cost", sc.planning.station_edge_cost},
                  {"station_edge_model", "straight-line approximation"},
                  {"fitted_k0_dbm", sc.prediction.fitted_k0_dbm},
                  {"fitted_n_pl", sc.prediction.fitted_n_pl},
                  {"measured_cells", sc.measurements.cells}};
  save_instance(sc.planning.instance, dir / "instance.json", meta);
  save_instance(sc.truth.instance, dir / "truth_instance.json", meta);
  std::cerr << "channel seed=" << g.seed << ": " << side << "x" << side << " cells, "
            << sc.measurements.cells.size() << " measurements, written to " << dir.string() << "\n";
  return 0;
}

int cmd_solve(const Globals& g, const std::string& input, const std::string& method, const MethodFlags& f,
              bool trace) {
  const auto inst = load_instance(input);
  auto cfg = make_config(method, f, g.seed);
  cfg.record_trace = trace;
  SolveOutcome out;
  try {
    out = run_solver(inst, cfg);
  } catch (const StateExplosionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  std::printf("method=%s cost=%.6f path_length=%zu wall_time_s=%.6f path=%s\n", out.method.c_str(), out.cost,
              out.path.size(), out.wall_time_s, path_string(out.path).c_str());
  if (!g.out.empty()) {
    std::ostringstream text;
    if (g.format == "json") {
      text << to_json(out).dump(2) << "\n";
    } else {
      text << "method,cost,path_length,wall_time_s,seed,path\n"
           << out.method << "," << out.cost << "," << out.path.size() << "," << out.wall_time_s << "," << g.seed
           << "," << path_string(out.path) << "\n";
    }
    emit(g.out, text.str());
  }
  return 0;
}

std::string report_text(const EvalReport& report, const std::string& format, bool deterministic) {
  std::ostringstream text;
  if (format == "json") {
    text << to_json(report, deterministic).dump(2) << "\n";
  } else {
    write_csv(text, report.rows, deterministic);
  }
  return text.str();
}

void print_summary(const EvalReport& report) {
  std::fprintf(stderr, "%-10s %9s %9s %12s %10s %10s %10s\n", "method", "instances", "failures", "truth_cost",
               "truth_std", "mc_mean", "mc_std");
  for (const auto& a : report.summary) {
    std::fprintf(stderr, "%-10s %9llu %9llu %12.4f %10.4f %10.4f %10.4f\n", a.method.c_str(),
                 (unsigned long long)a.instances, (unsigned long long)a.failures, a.mean_truth_cost,
                 a.std_truth_cost, a.mean_mc, a.mean_mc_std);
  }
}

int count_failures(const EvalReport& report) {
  int n = 0;
  for (const auto& r : report.rows) n += !r.error.empty();
  return n;
}

int cmd_eval(const Globals& g, const std::string& input, const std::string& truth_file,
             const std::vector<std::string>& methods, const MethodFlags& f, std::uint64_t realizations) {
  const auto plan = load_instance(input);
  const auto truth = truth_file.empty() ? plan : load_instance(truth_file);
  std::vector<SolverConfig> cfgs;
  for (const auto& m : methods) cfgs.push_back(make_config(m, f, g.seed));
  EvalReport report;
  report.rows = compare_methods(plan, truth, cfgs, realizations, g.seed, fs::path(input).stem().string());
  report.summary = aggregate(report.rows);
  emit(g.out, report_text(report, g.format, false));
  print_summary(report);
  if (const int failed = count_failures(report)) std::cerr << "warning: " << failed << " method(s) failed\n";
  return 0;
}

struct BenchFlags {
  std::string scenario = "grid";
  int count = 10;
  std::vector<int> sizes{10};
  int nt = 1;
  std::string methods = "bestreply,idag,nn,closest";
  std::uint64_t realizations = 100;
  bool deterministic = false;
};

int cmd_bench(const Globals& g, const BenchFlags& b, const MethodFlags& f, const ChannelSpec& channel,
              const std::vector<std::string>& argv) {
  const auto methods = split(b.methods);
  std::vector<SolverConfig> cfgs;
  for (const auto& m : methods) cfgs.push_back(make_config(m, f, g.seed));
  EvalReport report;
  const auto sizes = b.scenario == "channel" ? std::vector<int>{channel.cells_per_side} : b.sizes;
  for (int n : sizes) {
    for (int i = 0; i < b.count; ++i) {
      const std::uint64_t seed = g.seed + static_cast<std::uint64_t>(i);
      const std::string id = b.scenario + "-n" + std::to_string(n) + "-s" + std::to_string(seed);
      std::vector<EvalRow> rows;
      if (b.scenario == "grid") {
        GridSpec spec{n, b.nt, seed};
        validate(spec);
        const auto inst = gen_grid(spec);
        rows = compare_methods(inst, inst, cfgs, b.realizations, seed, id);
      } else {
        ChannelSpec spec = channel;
        spec.seed = seed;
        const auto sc = gen_channel_scenario(spec);
        rows = compare_methods(sc.planning.instance, sc.truth.instance, cfgs, b.realizations, seed, id);
      }
      report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    }
  }
  report.summary = aggregate(report.rows);

  std::ostringstream text;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  std::string flags;
  for (const auto& a : argv) flags += (flags.empty() ? "" : " ") + a;
  if (g.format == "json") {
    auto doc = to_json(report, b.deterministic);
    doc["meta"] = {{"git_hash", EXPCOST_GIT_HASH}, {"timestamp", stamp}, {"seed", g.seed}, {"flags", flags}};
    text << doc.dump(2) << "\n";
  } else {
    text << "# git_hash: " << EXPCOST_GIT_HASH << "\n"
         << "# timestamp: " << stamp << "\n"
         << "# seeds: " << g.seed << ".." << g.seed + static_cast<std::uint64_t>(b.count) - 1 << "\n"
         << "# flags: " << flags << "\n";
    write_csv(text, report.rows, b.deterministic);
  }
  emit(g.out, text.str());
  print_summary(report);
  if (const int failed = count_failures(report)) std::cerr << "warning: " << failed << " failed run(s)\n";
  return 0;
}

void add_channel_flags(CLI::App* cmd, ChannelSpec& s) {
  cmd->add_option("--cells", s.cells_per_side, "Cells per side");
  cmd->add_option("--cell-size", s.cell_size_m, "Cell edge length in meters");
  cmd->add_option("--station-x", s.station_x, "Station x coordinate in meters");
  cmd->add_option("--station-y", s.station_y, "Station y coordinate in meters");
  cmd->add_option("--n-pl", s.n_pl, "Path-loss exponent");
  cmd->add_option("--sigma-sh", s.sigma_sh_db, "Shadowing standard deviation in dB");
  cmd->add_option("--beta-sh", s.beta_sh_m, "Shadowing decorrelation distance in meters");
  cmd->add_option("--k-ric", s.k_ric, "Rician K factor");
  cmd->add_option("--p-th", s.p_th_dbm, "Connection threshold in dBm");
  cmd->add_option("--p0", s.p0_dbm, "Transmit power in dBm");
  cmd->add_option("--k0", s.k0_dbm, "Received power at 1 m in dBm");
  cmd->add_option("--measure-frac", s.measurement_fraction, "Fraction of cells measured a priori");
  cmd->add_option("--start-row", s.start_row, "Start cell row");
  cmd->add_option("--start-col", s.start_col, "Start cell column");
  cmd->add_flag("!--no-shadowing", s.shadowing, "Disable shadowing");
  cmd->add_flag("!--no-multipath", s.multipath, "Disable multipath");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Expected-cost path planning on probability-labeled graphs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("expcost ") + EXPCOST_GIT_HASH);
  Globals g;
  app.add_option("--seed", g.seed, "Root seed for every random stream")->capture_default_str();
  app.add_option("-o,--out", g.out, "Output file (directory for generate channel)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.fallthrough();

  auto* gen = app.add_subcommand("generate", "Generate an instance");
  gen->require_subcommand(1);
  auto* gen_grid_cmd = gen->add_subcommand("grid", "Square grid with random probabilities");
  int grid_n = 10, grid_nt = 1;
  gen_grid_cmd->add_option("--n", grid_n, "Grid side")->check(CLI::Range(2, 1000));
  gen_grid_cmd->add_option("--nt", grid_nt, "Number of terminal cells")->check(CLI::PositiveNumber);
  auto* gen_channel_cmd = gen->add_subcommand("channel", "Wireless connectivity scenario");
  ChannelSpec channel;
  add_channel_flags(gen_channel_cmd, channel);

  MethodFlags solve_flags;
  std::string solve_input, solve_method = "bestreply";
  bool solve_trace = false;
  auto* solve = app.add_subcommand("solve", "Solve one instance");
  solve->add_option("-i,--instance", solve_input, "Instance JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("-m,--method", solve_method, "Method")->check(CLI::IsMember(solver_methods()));
  solve->add_flag("--trace", solve_trace, "Record the convergence trace in JSON output");
  add_method_flags(solve, solve_flags);

  MethodFlags eval_flags;
  std::string eval_input, eval_truth, eval_methods = "bestreply,idag,nn,closest";
  std::uint64_t eval_realizations = 500;
  auto* eval = app.add_subcommand("eval", "Compare methods on one instance");
  eval->add_option("-i,--instance", eval_input, "Planning instance JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--truth", eval_truth, "Truth instance JSON (defaults to the planning instance)")
      ->check(CLI::ExistingFile);
  eval->add_option("-m,--methods", eval_methods, "Comma-separated methods");
  eval->add_option("--realizations", eval_realizations, "Monte Carlo realizations");
  add_method_flags(eval, eval_flags);

  MethodFlags bench_flags;
  BenchFlags bench;
  ChannelSpec bench_channel;
  auto* bench_cmd = app.add_subcommand("bench", "Batch comparison over generated instances");
  bench_cmd->add_option("--scenario", bench.scenario, "Instance family")
      ->check(CLI::IsMember({"grid", "channel"}));
  bench_cmd->add_option("--count", bench.count, "Instances per size")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--sizes", bench.sizes, "Grid sides")->delimiter(',');
  bench_cmd->add_option("--nt", bench.nt, "Terminals per grid")->check(CLI::PositiveNumber);
  bench_cmd->add_option("-m,--methods", bench.methods, "Comma-separated methods");
  bench_cmd->add_option("--realizations", bench.realizations, "Monte Carlo realizations per run");
  bench_cmd->add_flag("--deterministic", bench.deterministic, "Write zero wall times");
  add_method_flags(bench_cmd, bench_flags);
  add_channel_flags(bench_cmd, bench_channel);

  auto check_methods = [](const std::string& list) {
    const auto names = split(list);
    if (names.empty()) throw CLI::ValidationError("--methods", "method list is empty");
    for (const auto& m : names) {
      if (std::find(solver_methods().begin(), solver_methods().end(), m) == solver_methods().end())
        throw CLI::ValidationError("--methods", "unknown method " + m);
    }
  };

  try {
    app.parse(argc, argv);
    if (*eval) check_methods(eval_methods);
    if (*bench_cmd) check_methods(bench.methods);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen_grid_cmd) return cmd_generate_grid(g, grid_n, grid_nt);
    if (*gen_channel_cmd) return cmd_generate_channel(g, channel);
    if (*solve) return cmd_solve(g, solve_input, solve_method, solve_flags, solve_trace);
    if (*eval) return cmd_eval(g, eval_input, eval_truth, split(eval_methods), eval_flags, eval_realizations);
    if (*bench_cmd) return cmd_bench(g, bench, bench_flags, bench_channel, std::vector<std::string>(argv + 1, argv + argc));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const InstanceFormatError& e) {
    std::cerr << "error: invalid instance\n";
    for (const auto& d : e.diagnostics()) std::cerr << "  " << d << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
