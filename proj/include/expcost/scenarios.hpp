#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "expcost/instance.hpp"
#include "expcost/rng.hpp"

namespace expcost {

// ---------------------------------------------------------------- grids

struct GridSpec {
  int n = 10;
  int n_t = 1;  // terminals at the first n_t of (0,0), (0,n-1), (n-1,0), (n-1,n-1)
  std::uint64_t seed = 0;
};

void validate(const GridSpec& spec);

inline NodeId grid_node(int n, int row, int col) { return row * n + col; }

/// n x n 4-neighbor grid with unit edges, p ~ U[0, 0.1] i.i.d., start at the
/// center cell (n/2, n/2).
ProblemInstance gen_grid(const GridSpec& spec);

nlohmann::json to_json(const GridSpec& spec);

// ---------------------------------------------------------------- channel

struct ChannelSpec {
  int cells_per_side = 50;
  double cell_size_m = 1.0;
  double station_x = 0.0;  // workspace spans [0, side]^2
  double station_y = 0.0;
  double n_pl = 4.2;
  double sigma_sh_db = 2.9;
  double beta_sh_m = 12.92;
  double k_ric = 1.59;
  double p_th_dbm = -80.0;
  double p0_dbm = 27.0;
  double measurement_fraction = 0.05;
  /// Received power at 1 m from the station, transmit power included.
  double k0_dbm = -10.0;
  bool shadowing = true;
  bool multipath = true;
  /// Start cell; negative selects the corner farthest from the station.
  int start_row = -1;
  int start_col = -1;
  std::uint64_t seed = 0;

  int cell_count() const { return cells_per_side * cells_per_side; }
};

void validate(const ChannelSpec& spec);
nlohmann::json to_json(const ChannelSpec& spec);
ChannelSpec channel_spec_from_json(const nlohmann::json& j);

/// Center of cell (row, col): ((col + 0.5) * size, (row + 0.5) * size).
double cell_distance_to_station(const ChannelSpec& spec, int cell);

/// Per-cell received power decomposed into its components (dB / dBm).
struct ChannelField {
  int side = 0;
  std::vector<double> path_loss_dbm;  // K0 - 10 n_PL log10(d)
  std::vector<double> shadowing_db;
  std::vector<double> multipath_db;
  std::vector<double> power_dbm;      // sum of the three

  /// Path loss plus shadowing, the slowly varying part.
  std::vector<double> mean_power_dbm() const;
};

/// Draws correlated Gaussian fields with covariance sigma^2 exp(-dist / beta)
/// on a square cell grid through a Cholesky factor of the full covariance
/// (1e-9 relative jitter on the diagonal).
class ShadowingSampler {
 public:
  ShadowingSampler(int side, double cell_size, double sigma, double beta);
  std::vector<double> sample(Rng& rng) const;
  int side() const { return side_; }

 private:
  struct Factor;
  int side_;
  std::shared_ptr<const Factor> factor_;
};

/// Sampler for the channel geometry, shared between calls with equal geometry.
std::shared_ptr<const ShadowingSampler> shadowing_sampler(const ChannelSpec& spec);

/// Rician power with unit mean: 10 log10 |h|^2.
double sample_rician_db(double k, Rng& rng);

/// P(|h|^2 >= x) for unit-mean Rician power, i.e. Marcum Q1(sqrt(2K), sqrt(2(K+1)x)).
double rician_exceedance(double x, double k);

/// Mean and variance of 10 log10 |h|^2 for unit-mean Rician power.
double rician_db_mean(double k);
double rician_db_variance(double k);

/// 64-node Gauss-Hermite rule for weight exp(-x^2).
const std::vector<std::pair<double, double>>& gauss_hermite_64();

/// P(mean + sd * Z + MP_dB >= threshold) with Z standard normal and MP Rician.
double connection_probability(double mean_dbm, double sd_db, double threshold_dbm, double k);

/// Deterministic per spec.seed.
ChannelField gen_channel_field(const ChannelSpec& spec);

struct Measurements {
  std::vector<int> cells;
  std::vector<double> power_dbm;
};

/// Uniform sample without replacement of round(fraction * cells) cells (at
/// least 3) from the field.
Measurements sample_measurements(const ChannelField& field, const ChannelSpec& spec, Rng& rng);

struct PredictionOptions {
  /// Treat measurements as exact samples of path loss plus shadowing.
  bool noise_free = false;
};

struct ConnectivityPrediction {
  std::vector<double> mean_dbm;  // predicted path loss plus shadowing
  std::vector<double> sd_db;
  std::vector<double> probability;
  double fitted_k0_dbm = 0.0;
  double fitted_n_pl = 0.0;
};

/// Least-squares path-loss fit, simple kriging of the residual with the
/// exponential covariance, and Rician exceedance averaged over the Gaussian
/// predictive density. Measured cells that were connected get probability 1.
/// Throws std::invalid_argument with fewer than 3 measurements.
ConnectivityPrediction predict_connectivity(const ChannelSpec& spec, const Measurements& meas,
                                            const PredictionOptions& options = {});

/// Connectivity probability from the known path loss and shadowing with
/// multipath resampled.
std::vector<double> truth_connectivity(const ChannelField& field, const ChannelSpec& spec);

struct ChannelInstance {
  ProblemInstance instance;
  NodeId station = kNoNode;  // == cell_count()
  int attach_cell = -1;
  double station_edge_cost = 0.0;
};

/// Expected distance from the attach cell center to the station along the
/// straight line, with each crossed cell a chance to connect; cells outside
/// the workspace never connect.
double straight_line_cost(const ChannelSpec& spec, const std::vector<double>& prob, int attach_cell);

/// Cell grid with unit edges plus a station terminal joined to the cell
/// nearest the station.
ChannelInstance channel_instance(const std::vector<double>& prob, const ChannelSpec& spec);

/// Everything produced for one channel scenario.
struct ChannelScenario {
  ChannelSpec spec;
  ChannelField field;
  Measurements measurements;
  ConnectivityPrediction prediction;
  std::vector<double> truth_probability;
  ChannelInstance planning;
  ChannelInstance truth;
};

ChannelScenario gen_channel_scenario(const ChannelSpec& spec);

void write_map_csv(const std::string& file, int side, const std::vector<double>& values);
std::vector<double> read_map_csv(const std::string& file, int* side = nullptr);

}  // namespace expcost
