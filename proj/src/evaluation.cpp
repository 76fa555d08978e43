#include "expcost/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "expcost/rng.hpp"

namespace expcost {

unsigned env_thread_count() {
  const char* env = std::getenv("EXPCOST_THREADS");
  if (!env) return 1;
  const long v = std::strtol(env, nullptr, 10);
  return v > 0 ? static_cast<unsigned>(v) : 1;
}

RealizationStats simulate_realizations(const ProblemInstance& truth, const Path& path,
                                       std::uint64_t n_realizations, std::uint64_t seed,
                                       unsigned threads) {
  require_valid_path(truth, path);
  const auto first = first_visit_mask(path, truth.node_count());
  std::vector<double> step(path.size(), 0.0);  // cost of leaving position k
  for (std::size_t k = 0; k + 1 < path.size(); ++k) step[k] = *truth.edge_cost(path[k], path[k + 1]);
  double full = 0.0;
  for (double s : step) full += s;

  std::vector<double> dist(n_realizations);
  auto run = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      Rng rng = Rng::derive(seed, "realization", i);
      double traveled = full;
      double so_far = 0.0;
      for (std::size_t k = 0; k < path.size(); ++k) {
        if (first[k]) {
          const double p = truth.success_prob(path[k]);
          if (p >= 1.0 || (p > 0.0 && rng.uniform() < p)) {
            traveled = so_far;
            break;
          }
        }
        so_far += step[k];
      }
      dist[i] = traveled;
    }
  };
  if (threads == 0) threads = env_thread_count();
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(1, n_realizations)));
  if (threads <= 1) {
    run(0, n_realizations);
  } else {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = (n_realizations + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::uint64_t b = t * chunk, e = std::min(n_realizations, b + chunk);
      if (b < e) pool.emplace_back(run, b, e);
    }
  }

  RealizationStats s;
  s.count = n_realizations;
  if (n_realizations == 0) return s;
  double sum = 0.0;
  for (double d : dist) sum += d;
  s.mean = sum / n_realizations;
  double sq = 0.0;
  for (double d : dist) sq += (d - s.mean) * (d - s.mean);
  s.stddev = std::sqrt(sq / n_realizations);
  return s;
}

std::vector<EvalRow> compare_methods(const ProblemInstance& planning, const ProblemInstance& truth,
                                     const std::vector<SolverConfig>& methods,
                                     std::uint64_t n_realizations, std::uint64_t seed,
                                     const std::string& instance_id) {
  if (planning.node_count() != truth.node_count()) {
    throw std::invalid_argument("planning and truth instances must share node ids");
  }
  std::vector<EvalRow> rows;
  for (const SolverConfig& cfg : methods) {
    EvalRow row;
    row.method = cfg.method;
    row.instance_id = instance_id;
    row.seed = cfg.seed;
    try {
      const SolveOutcome out = run_solver(planning, cfg);
      row.path = out.path;
      row.expected_cost_plan = out.cost;
      row.wall_time_s = out.wall_time_s;
      const ExtendedCost truth_cost = expected_cost(truth, out.path);
      row.expected_cost_truth = truth_cost.is_finite() ? truth_cost.value() : traversal_cost(truth, out.path);
      row.fail_prob = failure_probability(truth, out.path);
      const auto mc = simulate_realizations(truth, out.path, n_realizations,
                                            Rng::derive_seed(seed, "evaluation"), 0);
      row.mc_mean = mc.mean;
      row.mc_std = mc.stddev;
    } catch (const std::exception& e) {
      row.error = e.what();
      row.expected_cost_plan = row.expected_cost_truth = row.mc_mean = row.mc_std = row.fail_prob =
          std::nan("");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<MethodAggregate> aggregate(const std::vector<EvalRow>& rows) {
  std::vector<MethodAggregate> out;
  std::vector<std::vector<const EvalRow*>> groups;
  for (const EvalRow& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const MethodAggregate& a) { return a.method == r.method; });
    if (it == out.end()) {
      out.push_back({r.method});
      groups.emplace_back();
      it = out.end() - 1;
    }
    groups[it - out.begin()].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    MethodAggregate& a = out[g];
    std::uint64_t ok = 0;
    for (const EvalRow* r : groups[g]) {
      ++a.instances;
      if (!r->error.empty()) {
        ++a.failures;
        continue;
      }
      ++ok;
      a.mean_truth_cost += r->expected_cost_truth;
      a.mean_mc += r->mc_mean;
      a.mean_mc_std += r->mc_std;
      a.mean_wall_time_s += r->wall_time_s;
    }
    if (ok == 0) continue;
    a.mean_truth_cost /= ok;
    a.mean_mc /= ok;
    a.mean_mc_std /= ok;
    a.mean_wall_time_s /= ok;
    double sq = 0.0;
    for (const EvalRow* r : groups[g]) {
      if (r->error.empty()) sq += (r->expected_cost_truth - a.mean_truth_cost) * (r->expected_cost_truth - a.mean_truth_cost);
    }
    a.std_truth_cost = std::sqrt(sq / ok);
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<EvalRow>& rows, bool zero_wall_time) {
  const auto old = out.precision(12);
  out << kEvalCsvHeader << '\n';
  for (const EvalRow& r : rows) {
    out << csv_field(r.method) << ',' << csv_field(r.instance_id) << ',' << r.expected_cost_plan << ','
        << r.expected_cost_truth << ',' << r.mc_mean << ',' << r.mc_std << ',' << r.fail_prob << ','
        << (zero_wall_time ? 0.0 : r.wall_time_s) << ',' << r.seed << ',' << csv_field(r.error) << '\n';
  }
  out.precision(old);
}

void write_summary_csv(std::ostream& out, const std::vector<MethodAggregate>& summary, bool zero_wall_time) {
  const auto old = out.precision(12);
  out << "method,instances,failures,mean_expected_cost_truth,std_expected_cost_truth,mean_mc_mean,mean_mc_std,mean_wall_time_s\n";
  for (const auto& a : summary) {
    out << csv_field(a.method) << ',' << a.instances << ',' << a.failures << ',' << a.mean_truth_cost << ','
        << a.std_truth_cost << ',' << a.mean_mc << ',' << a.mean_mc_std << ','
        << (zero_wall_time ? 0.0 : a.mean_wall_time_s) << '\n';
  }
  out.precision(old);
}

nlohmann::json to_json(const EvalReport& report, bool zero_wall_time) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json rows = nlohmann::json::array();
  for (const EvalRow& r : report.rows) {
    nlohmann::json j = {{"method", r.method},
                        {"instance_id", r.instance_id},
                        {"expected_cost_plan", num(r.expected_cost_plan)},
                        {"expected_cost_truth", num(r.expected_cost_truth)},
                        {"mc_mean", num(r.mc_mean)},
                        {"mc_std", num(r.mc_std)},
                        {"fail_prob", num(r.fail_prob)},
                        {"wall_time_s", zero_wall_time ? 0.0 : r.wall_time_s},
                        {"seed", r.seed}};
    if (!r.error.empty()) j["error"] = r.error;
    rows.push_back(j);
  }
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& a : report.summary) {
    summary.push_back({{"method", a.method},
                       {"instances", a.instances},
                       {"failures", a.failures},
                       {"mean_expected_cost_truth", num(a.mean_truth_cost)},
                       {"std_expected_cost_truth", num(a.std_truth_cost)},
                       {"mean_mc_mean", num(a.mean_mc)},
                       {"mean_mc_std", num(a.mean_mc_std)},
                       {"mean_wall_time_s", zero_wall_time ? 0.0 : a.mean_wall_time_s}});
  }
  return {{"rows", rows}, {"summary", summary}};
}

}  // namespace expcost
