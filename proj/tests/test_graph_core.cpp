#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "expcost/instance.hpp"
#include "expcost/instance_io.hpp"
#include "test_support.hpp"

using namespace expcost;
using testing::toy_line;

namespace {

bool has_message(const std::vector<std::string>& msgs, const std::string& needle) {
  return std::any_of(msgs.begin(), msgs.end(), [&](const std::string& m) { return m.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("extended cost arithmetic") {
  const ExtendedCost inf = ExtendedCost::infinite();
  CHECK((inf + ExtendedCost(3.0)).is_infinite());
  CHECK(ExtendedCost(1.0) + ExtendedCost(2.0) == ExtendedCost(3.0));
  CHECK(ExtendedCost(1e300) < inf);
  CHECK(inf.scaled(0.0).is_infinite());
  CHECK(ExtendedCost(2.0).scaled(0.5) == ExtendedCost(1.0));
  std::ostringstream os;
  os << inf;
  CHECK(os.str() == "inf");
}

TEST_CASE("validate_instance") {
  CHECK(validate_instance(toy_line()).empty());
  CHECK(toy_line().terminals() == std::vector<NodeId>{3});
  CHECK(toy_line().nonterminals() == std::vector<NodeId>{0, 1, 2});

  const ProblemInstance zero_cost({0.5, 1.0}, {{0, 1, 0.0}}, 0);
  CHECK(has_message(validate_instance(zero_cost), "nonpositive edge cost"));

  const ProblemInstance split({0.5, 1.0}, {}, 0);
  CHECK(has_message(validate_instance(split), "graph not connected"));

  const ProblemInstance bad({1.5, -0.1}, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 2.0}}, 3);
  const auto msgs = validate_instance(bad);
  CHECK(msgs.size() >= 4);
  CHECK_THROWS_AS(require_valid(bad), std::invalid_argument);
  CHECK_THROWS(ProblemInstance({0.5}, {{0, 4, 1.0}}, 0));
}

TEST_CASE("terminal detection uses exact equality") {
  const ProblemInstance inst({std::nextafter(1.0, 0.0), 1.0}, {{0, 1, 1.0}}, 0);
  CHECK_FALSE(inst.is_terminal(0));
  CHECK(inst.is_terminal(1));
}

TEST_CASE("expected_cost on the line example") {
  const auto inst = toy_line();
  // Values from summing over the first-success position.
  const double straight = testing::enumerate_expected_cost(inst, {1, 2, 3});
  const double detour = testing::enumerate_expected_cost(inst, {1, 0, 1, 2, 3});
  CHECK(straight == doctest::Approx(1.71).epsilon(1e-12));
  CHECK(detour == doctest::Approx(1.161).epsilon(1e-12));
  CHECK(expected_cost(inst, {1, 2, 3}).value() == doctest::Approx(1.71).epsilon(1e-12));
  CHECK(expected_cost(inst, {1, 0, 1, 2, 3}).value() == doctest::Approx(1.161).epsilon(1e-12));
  CHECK(expected_cost(inst, {3}).value() == 0.0);
  CHECK(expected_cost(inst, {1, 2}).is_infinite());
  CHECK_THROWS_AS(expected_cost(inst, {1, 3}), std::invalid_argument);
  CHECK_THROWS_AS(expected_cost(inst, {}), std::invalid_argument);
}

TEST_CASE("hamiltonian path with uniform probability") {
  // (1-p)/p * (1 - (1-p)^(|V|-1)) with p = 0.5 and three nodes.
  const ProblemInstance inst({0.5, 0.5, 1.0}, {{0, 1, 1.0}, {1, 2, 1.0}}, 0);
  CHECK(expected_cost(inst, {0, 1, 2}).value() == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("failure_probability") {
  CHECK(failure_probability(toy_line(), {1, 2, 3}) == 0.0);
  const auto inst = testing::line({0.5, 0.5, 0.5}, 0);
  CHECK(failure_probability(inst, {0, 1, 2}) == doctest::Approx(0.125));
  CHECK(failure_probability(inst, {0, 1, 0, 1}) == doctest::Approx(0.25));
  // Long paths switch to the log domain without losing accuracy.
  std::vector<double> p(200, 0.01);
  const auto long_line = testing::line(p, 0);
  Path path(200);
  std::iota(path.begin(), path.end(), 0);
  CHECK(failure_probability(long_line, path) == doctest::Approx(std::pow(0.99, 200)).epsilon(1e-12));
}

TEST_CASE("recursion agrees with the closed form and the enumeration oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(8));
    const auto inst = testing::random_instance(rng, n, 1 + static_cast<int>(rng.uniform_int(2)));
    // random walk from the start until a terminal or 30 steps
    Path path{inst.start()};
    while (path.size() < 30 && !inst.is_terminal(path.back())) {
      const auto nbs = inst.neighbors(path.back());
      path.push_back(nbs[rng.uniform_int(nbs.size())].node);
    }
    const ExtendedCost rec = expected_cost(inst, path);
    const double oracle = testing::enumerate_expected_cost(inst, path);
    CHECK(rec.is_infinite() == (failure_probability(inst, path) > 0.0));
    if (rec.is_finite()) {
      CHECK(rec.value() == doctest::Approx(oracle).epsilon(1e-12));
      CHECK(rec.value() == doctest::Approx(traversal_cost(inst, path)).epsilon(1e-12));
    } else {
      CHECK(std::isinf(oracle));
    }
  }
}

TEST_CASE("revisit neutrality") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = testing::random_instance(rng, 6, 1, 0.5, 0.0);
    Path path{inst.start()};
    while (path.size() < 12 && !inst.is_terminal(path.back())) {
      const auto nbs = inst.neighbors(path.back());
      path.push_back(nbs[rng.uniform_int(nbs.size())].node);
    }
    if (!inst.is_terminal(path.back()) || path.size() < 2) continue;
    // Insert a back-and-forth excursion to an already visited node.
    const std::size_t k = rng.uniform_int(path.size() - 1);
    const NodeId a = path[k], b = path[k + 1];
    Path longer(path.begin(), path.begin() + k + 2);
    longer.push_back(a);
    longer.push_back(b);
    longer.insert(longer.end(), path.begin() + k + 2, path.end());
    CHECK(failure_probability(inst, longer) == failure_probability(inst, path));
    const double prefix_alive = failure_probability(inst, Path(path.begin(), path.begin() + k + 2));
    if (prefix_alive > 0.0) {
      CHECK(expected_cost(inst, longer).value() > expected_cost(inst, path).value());
    }
  }
}

TEST_CASE("instance JSON round trip and diagnostics") {
  const auto inst = toy_line();
  const auto again = parse_instance(instance_to_json(inst).dump());
  CHECK(again.node_count() == 4);
  CHECK(again.start() == 1);
  CHECK(expected_cost(again, {1, 0, 1, 2, 3}).value() == doctest::Approx(1.161));

  try {
    parse_instance("{\"nodes\": [\n {\"id\": 0, \"p\": 0.5},\n ]\n}");
    FAIL("expected a syntax error");
  } catch (const InstanceFormatError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  try {
    parse_instance(R"({"nodes":[{"id":0,"p":2},{"id":1}],"edges":[{"u":0,"v":1}],"start":0})");
    FAIL("expected schema errors");
  } catch (const InstanceFormatError& e) {
    CHECK(e.diagnostics().size() >= 3);
    CHECK(has_message(e.diagnostics(), "/nodes/1"));
    CHECK(has_message(e.diagnostics(), "/edges/0"));
  }
}
