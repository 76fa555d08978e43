#include <doctest.h>

#include "expcost/exact_solver.hpp"
#include "expcost/instance_io.hpp"
#include "expcost/transforms.hpp"
#include "test_support.hpp"

using namespace expcost;
using testing::toy_line;

TEST_CASE("all pairs shortest paths") {
  const auto table = all_pairs_shortest_paths(toy_line());
  CHECK(table.distance(0, 3) == 3.0);
  CHECK(table.diameter() == 3.0);
  for (NodeId v = 0; v < 4; ++v) CHECK(table.distance(v, v) == 0.0);

  const ProblemInstance tri({0.1, 0.2, 1.0}, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 5.0}}, 0);
  const auto t2 = all_pairs_shortest_paths(tri);
  CHECK(t2.distance(0, 2) == 2.0);
  CHECK(t2.path(0, 2) == Path{0, 1, 2});
}

TEST_CASE("floyd-warshall matches dijkstra and satisfies the metric axioms") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = testing::random_instance(rng, 12, 1);
    const auto table = all_pairs_shortest_paths(inst);
    for (NodeId u = 0; u < inst.node_count(); ++u) {
      const auto d = shortest_distances_from(inst, u);
      for (NodeId v = 0; v < inst.node_count(); ++v) {
        CHECK(table.distance(u, v) == doctest::Approx(d[v]).epsilon(1e-12));
        CHECK(table.distance(u, v) == doctest::Approx(table.distance(v, u)).epsilon(1e-12));
        // reconstructed path has the tabulated length
        const Path p = table.path(u, v);
        double len = 0.0;
        for (std::size_t k = 0; k + 1 < p.size(); ++k) len += *inst.edge_cost(p[k], p[k + 1]);
        CHECK(len == doctest::Approx(table.distance(u, v)).epsilon(1e-12));
        for (NodeId w = 0; w < inst.node_count(); ++w) {
          CHECK(table.distance(u, v) <= table.distance(u, w) + table.distance(w, v) + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("ties in next hops go to the lowest id") {
  // Square 0-1-3, 0-2-3 with equal lengths.
  const ProblemInstance sq({0.1, 0.1, 0.1, 1.0}, {{0, 2, 1.0}, {2, 3, 1.0}, {0, 1, 1.0}, {1, 3, 1.0}}, 0);
  CHECK(all_pairs_shortest_paths(sq).path(0, 3) == Path{0, 1, 3});
}

TEST_CASE("metric closure") {
  const auto ci = build_complete_graph(toy_line());
  CHECK(ci.comp.edge_cost(0, 2) == 2.0);
  CHECK(ci.comp.edge_cost(0, 3) == 3.0);
  CHECK(ci.comp.edge_cost(1, 3) == 2.0);
  CHECK(ci.comp.edges().size() == 6);
  CHECK(ci.comp.start() == 1);
  CHECK(ci.comp.success_prob(0) == 0.9);

  const ProblemInstance two({0.5, 1.0}, {{0, 1, 2.5}}, 0);
  const auto c2 = build_complete_graph(two);
  CHECK(c2.comp.edges().size() == 1);
  CHECK(c2.comp.edge_cost(0, 1) == 2.5);

  const ProblemInstance k3({0.1, 0.2, 1.0}, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 5.0}}, 0);
  CHECK(build_complete_graph(k3).comp.edge_cost(0, 2) == 2.0);

  const auto doc = complete_instance_to_json(ci);
  CHECK(doc.at("derived_from") == "metric_closure");
  CHECK(instance_from_json(doc).edges().size() == 6);
}

TEST_CASE("expand and compress") {
  const auto ci = build_complete_graph(toy_line());
  const Path expanded = expand_simple_path(ci, {1, 0, 2, 3});
  CHECK(expanded == Path{1, 0, 1, 2, 3});
  CHECK(expected_cost(ci.comp, {1, 0, 2, 3}).value() == doctest::Approx(1.161).epsilon(1e-12));
  CHECK(expected_cost(toy_line(), expanded).value() == doctest::Approx(1.161).epsilon(1e-12));
  CHECK(expand_simple_path(ci, {1, 2, 3}) == Path{1, 2, 3});
  CHECK(expand_simple_path(ci, {0, 3}) == Path{0, 1, 2, 3});

  CHECK(compress_path(toy_line(), {1, 0, 1, 2, 3}) == Path{1, 0, 2, 3});
  CHECK(compress_path(toy_line(), {1, 2, 3}) == Path{1, 2, 3});
  CHECK(compress_path(toy_line(), {0, 1, 0}) == Path{0, 1});
}

TEST_CASE("compress after expand keeps the first-visit order of optimal closure paths") {
  Rng rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = testing::random_instance(rng, 7, 1, 0.2, 0.0);
    const auto ci = build_complete_graph(inst);
    Path order;
    const double best = testing::closure_optimum(inst, &order);
    const Path expanded = expand_simple_path(ci, order);
    CHECK(expected_cost(inst, expanded).value() == doctest::Approx(best).epsilon(1e-9));
    // with every p > 0 an intermediate node on a shortest path would be a
    // cheaper earlier stop, so the optimal order already contains it
    CHECK(compress_path(inst, expanded) == order);
  }
}

TEST_CASE("nt reduction") {
  const auto inst = testing::line({0.5, 0.5, 0.5}, 0);
  const auto nt = nt_reduction(inst);
  CHECK(nt.edge_cost == doctest::Approx(6.0));
  CHECK(nt.terminal == 3);
  CHECK(nt.instance.node_count() == 4);
  CHECK(nt.instance.is_terminal(3));
  for (NodeId v = 0; v < 3; ++v) CHECK(nt.instance.edge_cost(v, 3) == doctest::Approx(6.0));

  // Grid with min p = 0.1 and diameter override D = 2n gives l = 30 n.
  const int n = 4;
  std::vector<double> p(n * n, 0.3);
  p[5] = 0.1;
  std::vector<Edge> edges;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      if (c + 1 < n) edges.push_back({r * n + c, r * n + c + 1, 1.0});
      if (r + 1 < n) edges.push_back({r * n + c, (r + 1) * n + c, 1.0});
    }
  const ProblemInstance grid(p, edges, 0);
  CHECK(nt_reduction(grid, 2.0 * n).edge_cost == doctest::Approx(30.0 * n));
  CHECK(nt_reduction(grid).edge_cost == doctest::Approx(1.5 * 2 * (n - 1) / 0.1));

  CHECK_THROWS_WITH_AS(nt_reduction(testing::line({0.0, 0.0}, 0)), doctest::Contains("objective undefined"),
                       std::invalid_argument);
  CHECK_THROWS_AS(nt_reduction(ProblemInstance({0.5}, {}, 0)), std::invalid_argument);
  CHECK_THROWS_AS(nt_reduction(toy_line()), std::invalid_argument);
}

TEST_CASE("optimal reduced paths visit every positive-probability node before the artificial terminal") {
  Rng rng(21);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = testing::random_instance(rng, 6, 0, 0.3, 0.3);
    bool any_positive = false;
    for (double p : inst.success_probs()) any_positive |= p > 0.0;
    if (!any_positive) continue;
    const auto nt = nt_reduction(inst);
    Path order;
    testing::closure_optimum(nt.instance, &order);
    for (NodeId v = 0; v < inst.node_count(); ++v) {
      if (inst.success_prob(v) > 0.0) CHECK(std::find(order.begin(), order.end(), v) != order.end());
    }
    CHECK(order.back() == nt.terminal);
    ++checked;
  }
  CHECK(checked > 20);
}
