#include <doctest.h>

#include "expcost/exact_solver.hpp"
#include "expcost/scenarios.hpp"
#include "expcost/solvers.hpp"
#include "test_support.hpp"

using namespace expcost;
using testing::toy_line;

namespace {

SolveOutcome solve(const ProblemInstance& inst, const std::string& method, bool comp = false) {
  SolverConfig c;
  c.method = method;
  c.comp = comp;
  c.seed = 1;
  return run_solver(inst, c);
}

}  // namespace

TEST_CASE("every method on the line example") {
  CHECK(solve(toy_line(), "exact").cost == doctest::Approx(1.161));
  CHECK(solve(toy_line(), "brute").cost == doctest::Approx(1.161));
  CHECK(solve(toy_line(), "bestreply", true).cost == doctest::Approx(1.161));
  CHECK(solve(toy_line(), "bestreply", true).path == Path{1, 0, 1, 2, 3});
  CHECK(solve(toy_line(), "bestreply").cost == doctest::Approx(1.71));
  CHECK(solve(toy_line(), "loglinear", true).cost == doctest::Approx(1.161));
  CHECK(solve(toy_line(), "idag").cost == doctest::Approx(1.71));
  CHECK(solve(toy_line(), "nn").cost == doctest::Approx(1.161));
  CHECK(solve(toy_line(), "closest").cost == doctest::Approx(1.71));
  CHECK(solve(toy_line(), "sa").cost == doctest::Approx(1.161));
  CHECK(solve(toy_line(), "rtdp").cost == doctest::Approx(1.161));
  CHECK_THROWS_AS(solve(toy_line(), "dijkstra"), std::invalid_argument);
}

TEST_CASE("exact refuses large instances with a hint") {
  const auto big = gen_grid({6, 1, 0});
  CHECK_THROWS_WITH_AS(solve(big, "exact"), doctest::Contains("bestreply"), StateExplosionError);
}

TEST_CASE("instances without terminals") {
  const auto inst = testing::line({0.5, 0.5, 0.5}, 0);
  const auto out = solve(inst, "exact");
  CHECK(out.no_terminal);
  CHECK(out.path == Path{0, 1, 2});
  CHECK(out.cost == doctest::Approx(traversal_cost(inst, out.path)));
  CHECK(out.details.at("nt_terminal_edge_cost") == doctest::Approx(6.0));
  for (const char* m : {"bestreply", "idag", "nn", "closest"}) {
    const auto o = solve(gen_grid({4, 0, 3}), m);
    CHECK(o.no_terminal);
    CHECK(o.path.back() < 16);
  }
}

TEST_CASE("outcome json") {
  const auto j = to_json(solve(toy_line(), "closest"));
  CHECK(j.at("method") == "closest");
  CHECK(j.at("path").size() == 3);
}
