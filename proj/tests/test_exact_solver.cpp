#include <doctest.h>

#include "expcost/baselines.hpp"
#include "expcost/exact_solver.hpp"
#include "expcost/scenarios.hpp"
#include "expcost/transforms.hpp"
#include "test_support.hpp"

using namespace expcost;
using testing::toy_line;

TEST_CASE("value iteration on the line example") {
  const auto inst = toy_line();
  const auto vt = value_iteration_exact(inst);
  CHECK(vt.start_value().value() == doctest::Approx(1.161).epsilon(1e-12));
  CHECK(vt.value({1, 0}).value() == doctest::Approx(1.161).epsilon(1e-12));
  CHECK(extract_optimal_path(vt, inst) == Path{1, 0, 1, 2, 3});
  CHECK(vt.bellman_residual() <= 1e-12);
  CHECK(vt.monotone());
  CHECK(vt.sweeps() <= vt.full_state_space_size());
  CHECK(vt.to_json().is_array());
}

TEST_CASE("value iteration one-step cases") {
  const ProblemInstance forced({0.0, 1.0}, {{0, 1, 2.5}}, 0);
  CHECK(value_iteration_exact(forced).start_value().value() == doctest::Approx(2.5));
  const ProblemInstance half({0.5, 1.0}, {{0, 1, 2.0}}, 0);
  CHECK(value_iteration_exact(half).start_value().value() == doctest::Approx(1.0));
  // start next to the only terminal, nothing else can succeed
  const ProblemInstance star({0.0, 0.0, 1.0, 0.0}, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}}, 0);
  const auto vt = value_iteration_exact(star);
  CHECK(extract_optimal_path(vt, star) == Path{0, 2});
}

TEST_CASE("exact solver errors") {
  CHECK_THROWS_AS(value_iteration_exact(testing::line({0.5, 0.5}, 0)), std::invalid_argument);
  std::vector<double> p(23, 0.05);
  p.push_back(1.0);
  CHECK_THROWS_AS(value_iteration_exact(testing::line(p, 0)), StateExplosionError);
  CHECK_THROWS_AS(brute_force_optimum(testing::line(p, 0)), StateExplosionError);
}

TEST_CASE("shortest path is optimal when nothing off the path can succeed") {
  // Grid with p = 0 everywhere except a corner terminal.
  GridSpec spec{4, 1, 0};
  auto grid = gen_grid(spec);
  std::vector<double> p(grid.node_count(), 0.0);
  p[0] = 1.0;
  const ProblemInstance inst(p, grid.edges(), grid.start());
  const auto vt = value_iteration_exact(inst);
  const Path path = extract_optimal_path(vt, inst);
  CHECK(expected_cost(inst, path).value() == doctest::Approx(expected_cost(inst, closest_terminal(inst)).value()));
  CHECK(vt.start_value().value() == doctest::Approx(4.0));
}

TEST_CASE("brute force and best-first search on the line example") {
  const auto bf = brute_force_optimum(toy_line());
  CHECK(bf.cost == doctest::Approx(1.161).epsilon(1e-12));
  CHECK(bf.path == Path{1, 0, 1, 2, 3});
  CHECK(bf.closure_path == Path{1, 0, 2, 3});
  const auto bs = best_first_optimum(toy_line());
  CHECK(bs.cost == doctest::Approx(1.161).epsilon(1e-12));
  CHECK(bs.path == Path{1, 0, 1, 2, 3});

  const ProblemInstance two_terms({0.0, 1.0, 1.0}, {{0, 1, 2.0}, {0, 2, 2.0}}, 0);
  CHECK(brute_force_optimum(two_terms).cost == doctest::Approx(2.0));
}

TEST_CASE("oracles agree on random instances") {
  Rng rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(6));
    const auto inst = testing::random_instance(rng, n, 1 + static_cast<int>(rng.uniform_int(2)));
    const double oracle = testing::closure_optimum(inst);
    const auto vt = value_iteration_exact(inst);
    CHECK(vt.start_value().value() == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(vt.bellman_residual() <= 1e-12);
    CHECK(vt.monotone());
    CHECK(static_cast<double>(vt.sweeps()) <= vt.full_state_space_size());
    const Path p = extract_optimal_path(vt, inst);
    CHECK(expected_cost(inst, p).value() == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(brute_force_optimum(inst).cost == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(best_first_optimum(inst).cost == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("best-first search matches value iteration on small grids") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = gen_grid({4, 1, seed});
    const auto vt = value_iteration_exact(inst);
    CHECK(best_first_optimum(inst).cost == doctest::Approx(vt.start_value().value()).epsilon(1e-9));
  }
}

TEST_CASE("rtdp") {
  RtdpOptions opt;
  opt.seed = 3;
  const auto r = rtdp_solve(toy_line(), opt);
  CHECK(r.viable);
  CHECK(r.cost.value() == doctest::Approx(1.161).epsilon(1e-9));

  opt.trial_budget = 0;
  const auto none = rtdp_solve(toy_line(), opt);
  CHECK_FALSE(none.viable);
  CHECK_FALSE(none.failure_reason.empty());

  const auto grid = gen_grid({4, 1, 9});
  RtdpOptions big;
  big.trial_budget = 20000;
  const auto g = rtdp_solve(grid, big);
  if (g.viable) {
    CHECK(g.cost.value() >= value_iteration_exact(grid).start_value().value() - 1e-9);
  }
}
