#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "expcost/scenarios.hpp"
#include "test_support.hpp"

using namespace expcost;

TEST_CASE("grid generator") {
  const auto g = gen_grid({5, 1, 7});
  CHECK(g.node_count() == 25);
  CHECK(g.success_prob(0) == 1.0);
  CHECK(g.start() == grid_node(5, 2, 2));
  CHECK(g.terminals() == std::vector<NodeId>{0});
  CHECK(g.edges().size() == 40);
  CHECK(validate_instance(g).empty());

  const auto big = gen_grid({25, 4, 1});
  CHECK(big.terminals() == std::vector<NodeId>{0, 24, 600, 624});

  const auto nt = gen_grid({2, 0, 3});
  CHECK(nt.terminals().empty());
  CHECK_THROWS_AS(gen_grid({1, 1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(gen_grid({5, 5, 0}), std::invalid_argument);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto gi = gen_grid({8, 2, seed});
    for (NodeId v = 0; v < gi.node_count(); ++v) {
      if (gi.is_terminal(v)) continue;
      CHECK(gi.success_prob(v) >= 0.0);
      CHECK(gi.success_prob(v) <= 0.1);
    }
  }
  CHECK(gen_grid({6, 1, 4}).success_probs()[7] == gen_grid({6, 1, 4}).success_probs()[7]);
}

TEST_CASE("rician helpers") {
  // Rayleigh limit: E[10 log10 X] = -10 gamma / ln 10, Var = (10/ln10)^2 pi^2/6
  CHECK(rician_db_mean(0.0) == doctest::Approx(-10.0 * 0.5772156649015329 / std::log(10.0)));
  CHECK(rician_db_variance(0.0) == doctest::Approx(std::pow(10.0 / std::log(10.0), 2) * M_PI * M_PI / 6.0));
  // Rayleigh exceedance is exp(-x)
  CHECK(rician_exceedance(0.7, 0.0) == doctest::Approx(std::exp(-0.7)));
  CHECK(rician_exceedance(0.0, 1.59) == 1.0);
  CHECK(rician_exceedance(1e4, 1.59) == doctest::Approx(0.0));

  Rng rng(3);
  const double k = 1.59;
  const int n = 200000;
  double sum = 0.0, sq = 0.0, lin = 0.0;
  int above = 0;
  for (int i = 0; i < n; ++i) {
    const double db = sample_rician_db(k, rng);
    sum += db;
    sq += db * db;
    lin += std::pow(10.0, db / 10.0);
    above += std::pow(10.0, db / 10.0) >= 0.8;
  }
  const double mean = sum / n;
  CHECK(lin / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(mean == doctest::Approx(rician_db_mean(k)).epsilon(0.02));
  CHECK(sq / n - mean * mean == doctest::Approx(rician_db_variance(k)).epsilon(0.02));
  CHECK(above / double(n) == doctest::Approx(rician_exceedance(0.8, k)).epsilon(0.01));
}

TEST_CASE("gauss-hermite rule") {
  const auto& rule = gauss_hermite_64();
  CHECK(rule.size() == 64);
  double w = 0.0, x2 = 0.0;
  for (const auto& [x, wt] : rule) {
    w += wt;
    x2 += wt * x * x;
  }
  CHECK(w == doctest::Approx(std::sqrt(M_PI)));
  CHECK(x2 == doctest::Approx(std::sqrt(M_PI) / 2));
}

TEST_CASE("connection probability") {
  // nearly deterministic fading is symmetric in dB, so a predictive mean at
  // the threshold gives one half
  CHECK(connection_probability(-80.0, 3.0, -80.0, 1e4) == doctest::Approx(0.5).epsilon(1e-2));
  CHECK(connection_probability(-20.0, 0.0, -80.0, 1.59) == doctest::Approx(1.0));
  // quadrature against sampling
  Rng rng(8);
  int hits = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) hits += -83.0 + 2.5 * rng.normal() + sample_rician_db(1.59, rng) >= -80.0;
  CHECK(connection_probability(-83.0, 2.5, -80.0, 1.59) == doctest::Approx(hits / double(n)).epsilon(0.02));
  CHECK(connection_probability(-140.0, 1.0, -80.0, 1.59) == doctest::Approx(0.0));
  const double lo = connection_probability(-85.0, 2.0, -80.0, 1.59);
  const double hi = connection_probability(-75.0, 2.0, -80.0, 1.59);
  CHECK(lo < hi);
}

TEST_CASE("shadowing statistics") {
  ChannelSpec spec;
  spec.multipath = false;
  const int lag = static_cast<int>(std::lround(spec.beta_sh_m));
  const int side = spec.cells_per_side;
  double sq = 0.0, lag_sum = 0.0;
  long long count = 0, lag_count = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    spec.seed = seed;
    const auto f = gen_channel_field(spec);
    for (double s : f.shadowing_db) sq += s * s;
    count += spec.cell_count();
    for (int r = 0; r < side; ++r)
      for (int c = 0; c + lag < side; ++c) {
        lag_sum += f.shadowing_db[r * side + c] * f.shadowing_db[r * side + c + lag];
        lag_sum += f.shadowing_db[c * side + r] * f.shadowing_db[(c + lag) * side + r];
        lag_count += 2;
      }
  }
  const double s2 = spec.sigma_sh_db * spec.sigma_sh_db;
  CHECK(sq / count == doctest::Approx(s2).epsilon(0.15));
  CHECK(lag_sum / lag_count == doctest::Approx(s2 * std::exp(-lag / spec.beta_sh_m)).epsilon(0.2));
}

TEST_CASE("channel field reproducibility and pure path loss") {
  ChannelSpec spec;
  spec.seed = 42;
  const auto a = gen_channel_field(spec);
  const auto b = gen_channel_field(spec);
  CHECK(a.power_dbm == b.power_dbm);

  spec.shadowing = false;
  spec.multipath = false;
  const auto pl = gen_channel_field(spec);
  for (int i = 0; i < spec.cell_count(); ++i) {
    for (int j : {i + 1, i + spec.cells_per_side}) {
      if (j >= spec.cell_count()) continue;
      const double di = cell_distance_to_station(spec, i), dj = cell_distance_to_station(spec, j);
      if (di < dj) CHECK(pl.power_dbm[i] > pl.power_dbm[j]);
    }
  }
}

TEST_CASE("kriging sanity") {
  ChannelSpec spec;
  spec.seed = 5;
  spec.multipath = false;
  const auto field = gen_channel_field(spec);
  Rng rng(1);
  const auto meas = sample_measurements(field, spec, rng);
  CHECK(meas.cells.size() == 125);
  const auto pred = predict_connectivity(spec, meas, {true});
  for (int c : meas.cells) CHECK(pred.sd_db[c] < 1e-3);
  for (std::size_t i = 0; i < meas.cells.size(); ++i) {
    CHECK(pred.mean_dbm[meas.cells[i]] == doctest::Approx(meas.power_dbm[i]).epsilon(1e-6));
  }
  for (double s : pred.sd_db) CHECK(s <= spec.sigma_sh_db + 1e-9);
  for (double p : pred.probability) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  // variance grows with distance from a single measurement
  Measurements three;
  three.cells = {0, 1, 2};
  three.power_dbm = {-60.0, -61.0, -62.0};
  const auto p3 = predict_connectivity(spec, three, {true});
  CHECK(p3.sd_db[3] < p3.sd_db[10]);
  CHECK(p3.sd_db[10] < p3.sd_db[40]);
  Measurements two;
  two.cells = {0, 1};
  two.power_dbm = {-60.0, -61.0};
  CHECK_THROWS_AS(predict_connectivity(spec, two), std::invalid_argument);

  // measurement exactly at a cell far above threshold: probability tends to 1 as fading vanishes
  ChannelSpec strong = spec;
  strong.multipath = true;
  strong.k_ric = 1e4;
  const auto near_one = predict_connectivity(strong, three, {true});
  CHECK(near_one.probability[1] == doctest::Approx(1.0));
}

TEST_CASE("straight-line station edge") {
  ChannelSpec spec;
  spec.cells_per_side = 10;
  spec.station_x = -3.0;
  spec.station_y = 0.5;
  const std::vector<double> zero(spec.cell_count(), 0.0);
  CHECK(straight_line_cost(spec, zero, 0) == doctest::Approx(3.5));
  std::vector<double> ones(spec.cell_count(), 1.0);
  CHECK(straight_line_cost(spec, ones, 0) == doctest::Approx(3.5));  // cells outside never connect

  spec.station_x = 0.5;
  spec.station_y = 0.0;
  // station at the bottom edge below cell (0,0): line inside the attach cell only
  CHECK(straight_line_cost(spec, ones, 0) == doctest::Approx(0.5));
  // line crossing workspace cells: attach at (0,0), station beyond (0,3)
  ChannelSpec inner = spec;
  inner.station_x = 3.5;
  inner.station_y = 0.5;
  std::vector<double> p(inner.cell_count(), 0.0);
  p[1] = 0.5;
  p[2] = 0.2;
  // segments: 0.5 in cell 0, 1 in cell 1, 1 in cell 2, 0.5 in cell 3
  const double expect = 0.5 + 0.5 * 1.0 + 0.5 * 0.8 * 1.0 + 0.5 * 0.8 * 1.0 * 0.5;
  CHECK(straight_line_cost(inner, p, 0) == doctest::Approx(expect));
}

TEST_CASE("channel instance") {
  ChannelSpec spec;
  spec.cells_per_side = 6;
  std::vector<double> p(spec.cell_count(), 0.05);
  const auto ci = channel_instance(p, spec);
  CHECK(ci.instance.node_count() == 37);
  CHECK(ci.station == 36);
  CHECK(ci.attach_cell == 0);
  CHECK(ci.instance.is_terminal(36));
  CHECK(ci.instance.start() == 35);
  CHECK(ci.station_edge_cost == doctest::Approx(std::sqrt(0.5)));
  CHECK(validate_instance(ci.instance).empty());

  std::vector<double> all_one(spec.cell_count(), 1.0);
  spec.start_row = 2;
  spec.start_col = 3;
  const auto done = channel_instance(all_one, spec);
  CHECK(done.instance.start() == 15);
  CHECK(done.instance.is_terminal(15));
}

TEST_CASE("channel scenario and map csv") {
  ChannelSpec spec;
  spec.seed = 11;
  const auto s = gen_channel_scenario(spec);
  CHECK(s.planning.instance.node_count() == 2501);
  CHECK(s.truth.instance.node_count() == 2501);
  CHECK(validate_instance(s.planning.instance).empty());
  // median cell power within 10 dB of the threshold
  auto power = s.field.power_dbm;
  std::nth_element(power.begin(), power.begin() + power.size() / 2, power.end());
  CHECK(std::abs(power[power.size() / 2] - spec.p_th_dbm) < 10.0);

  const auto file = std::filesystem::temp_directory_path() / "expcost_map_test.csv";
  write_map_csv(file.string(), 50, s.prediction.probability);
  int side = 0;
  const auto back = read_map_csv(file.string(), &side);
  CHECK(side == 50);
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == doctest::Approx(s.prediction.probability[i]).epsilon(1e-15));
  std::filesystem::remove(file);

  const auto j = to_json(spec);
  const auto again = channel_spec_from_json(j);
  CHECK(again.seed == 11);
  CHECK(again.k0_dbm == spec.k0_dbm);
}
