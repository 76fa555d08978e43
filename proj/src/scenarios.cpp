#include "expcost/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <Eigen/Dense>

namespace expcost {

// ---------------------------------------------------------------- grids

void validate(const GridSpec& spec) {
  if (spec.n < 2) throw std::invalid_argument("grid side n must be at least 2");
  if (spec.n_t < 0 || spec.n_t > 4) throw std::invalid_argument("n_t must lie in [0, 4]");
}

ProblemInstance gen_grid(const GridSpec& spec) {
  validate(spec);
  const int n = spec.n;
  Rng rng = Rng::derive(spec.seed, "grid.probabilities");
  std::vector<double> probs(n * n);
  for (double& p : probs) p = rng.uniform(0.0, 0.1);
  const NodeId corners[4] = {grid_node(n, 0, 0), grid_node(n, 0, n - 1), grid_node(n, n - 1, 0),
                             grid_node(n, n - 1, n - 1)};
  for (int k = 0; k < spec.n_t; ++k) probs[corners[k]] = 1.0;
  std::vector<Edge> edges;
  edges.reserve(2 * n * (n - 1));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (c + 1 < n) edges.push_back({grid_node(n, r, c), grid_node(n, r, c + 1), 1.0});
      if (r + 1 < n) edges.push_back({grid_node(n, r, c), grid_node(n, r + 1, c), 1.0});
    }
  }
  return ProblemInstance(std::move(probs), std::move(edges), grid_node(n, n / 2, n / 2));
}

nlohmann::json to_json(const GridSpec& spec) {
  return {{"kind", "grid"}, {"n", spec.n}, {"n_t", spec.n_t}, {"seed", spec.seed}};
}

// ---------------------------------------------------------------- channel spec

void validate(const ChannelSpec& s) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  if (s.cells_per_side < 2) throw std::invalid_argument("cells_per_side must be at least 2");
  positive(s.cell_size_m, "cell_size_m");
  positive(s.n_pl, "n_pl");
  positive(s.beta_sh_m, "beta_sh_m");
  if (s.sigma_sh_db < 0.0) throw std::invalid_argument("sigma_sh_db must be nonnegative");
  if (s.k_ric < 0.0) throw std::invalid_argument("k_ric must be nonnegative");
  if (!(s.measurement_fraction > 0.0 && s.measurement_fraction < 1.0)) {
    throw std::invalid_argument("measurement_fraction must lie in (0, 1)");
  }
  if (s.start_row >= s.cells_per_side || s.start_col >= s.cells_per_side) {
    throw std::invalid_argument("start cell outside the workspace");
  }
}

nlohmann::json to_json(const ChannelSpec& s) {
  return {{"kind", "channel"},
          {"cells_per_side", s.cells_per_side},
          {"cell_size_m", s.cell_size_m},
          {"station", {s.station_x, s.station_y}},
          {"n_pl", s.n_pl},
          {"sigma_sh_db", s.sigma_sh_db},
          {"beta_sh_m", s.beta_sh_m},
          {"k_ric", s.k_ric},
          {"p_th_dbm", s.p_th_dbm},
          {"p0_dbm", s.p0_dbm},
          {"measurement_fraction", s.measurement_fraction},
          {"k0_dbm", s.k0_dbm},
          {"shadowing", s.shadowing},
          {"multipath", s.multipath},
          {"start", {s.start_row, s.start_col}},
          {"seed", s.seed},
          {"station_edge_model", "straight-line expected distance over crossed cells"}};
}

ChannelSpec channel_spec_from_json(const nlohmann::json& j) {
  ChannelSpec s;
  s.cells_per_side = j.value("cells_per_side", s.cells_per_side);
  s.cell_size_m = j.value("cell_size_m", s.cell_size_m);
  if (j.contains("station")) {
    s.station_x = j.at("station").at(0).get<double>();
    s.station_y = j.at("station").at(1).get<double>();
  }
  s.n_pl = j.value("n_pl", s.n_pl);
  s.sigma_sh_db = j.value("sigma_sh_db", s.sigma_sh_db);
  s.beta_sh_m = j.value("beta_sh_m", s.beta_sh_m);
  s.k_ric = j.value("k_ric", s.k_ric);
  s.p_th_dbm = j.value("p_th_dbm", s.p_th_dbm);
  s.p0_dbm = j.value("p0_dbm", s.p0_dbm);
  s.measurement_fraction = j.value("measurement_fraction", s.measurement_fraction);
  s.k0_dbm = j.value("k0_dbm", s.k0_dbm);
  s.shadowing = j.value("shadowing", s.shadowing);
  s.multipath = j.value("multipath", s.multipath);
  if (j.contains("start")) {
    s.start_row = j.at("start").at(0).get<int>();
    s.start_col = j.at("start").at(1).get<int>();
  }
  s.seed = j.value("seed", s.seed);
  validate(s);
  return s;
}

namespace {

std::pair<double, double> cell_center(const ChannelSpec& s, int cell) {
  const int r = cell / s.cells_per_side, c = cell % s.cells_per_side;
  return {(c + 0.5) * s.cell_size_m, (r + 0.5) * s.cell_size_m};
}

double log10_distance(const ChannelSpec& s, int cell) { return std::log10(cell_distance_to_station(s, cell)); }

}  // namespace

double cell_distance_to_station(const ChannelSpec& s, int cell) {
  const auto [x, y] = cell_center(s, cell);
  return std::hypot(x - s.station_x, y - s.station_y);
}

std::vector<double> ChannelField::mean_power_dbm() const {
  std::vector<double> out(path_loss_dbm.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = path_loss_dbm[i] + shadowing_db[i];
  return out;
}

// ---------------------------------------------------------------- shadowing

struct ShadowingSampler::Factor {
  Eigen::MatrixXd lower;
};

namespace {

Eigen::MatrixXd exponential_covariance(const std::vector<std::pair<double, double>>& a,
                                       const std::vector<std::pair<double, double>>& b,
                                       double sigma, double beta) {
  Eigen::MatrixXd cov(a.size(), b.size());
  const double var = sigma * sigma;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = std::hypot(a[i].first - b[j].first, a[i].second - b[j].second);
      cov(i, j) = var * std::exp(-d / beta);
    }
  }
  return cov;
}

std::vector<std::pair<double, double>> grid_centers(int side, double size) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(side * side);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) pts.emplace_back((c + 0.5) * size, (r + 0.5) * size);
  }
  return pts;
}

}  // namespace

ShadowingSampler::ShadowingSampler(int side, double cell_size, double sigma, double beta)
    : side_(side) {
  const auto pts = grid_centers(side, cell_size);
  Eigen::MatrixXd cov = exponential_covariance(pts, pts, sigma, beta);
  cov.diagonal().array() += 1e-9 * sigma * sigma;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("shadowing covariance is not positive definite");
  auto f = std::make_shared<Factor>();
  f->lower = llt.matrixL();
  factor_ = std::move(f);
}

std::vector<double> ShadowingSampler::sample(Rng& rng) const {
  const Eigen::Index n = factor_->lower.rows();
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  const Eigen::VectorXd x = factor_->lower.triangularView<Eigen::Lower>() * z;
  return std::vector<double>(x.data(), x.data() + n);
}

std::shared_ptr<const ShadowingSampler> shadowing_sampler(const ChannelSpec& spec) {
  using Key = std::tuple<int, double, double, double>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const ShadowingSampler>> cache;
  const Key key{spec.cells_per_side, spec.cell_size_m, spec.sigma_sh_db, spec.beta_sh_m};
  std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (!slot) {
    slot = std::make_shared<ShadowingSampler>(spec.cells_per_side, spec.cell_size_m, spec.sigma_sh_db,
                                              spec.beta_sh_m);
  }
  return slot;
}

// ---------------------------------------------------------------- multipath

double sample_rician_db(double k, Rng& rng) {
  const double los = std::sqrt(k / (k + 1.0));
  const double scatter = std::sqrt(0.5 / (k + 1.0));
  const double re = los + scatter * rng.normal();
  const double im = scatter * rng.normal();
  return 10.0 * std::log10(re * re + im * im);
}

namespace {

// Poisson(k) weights until the remaining mass is negligible.
std::vector<double> poisson_weights(double k) {
  std::vector<double> w;
  const int last = static_cast<int>(std::ceil(k + 40.0 * std::sqrt(k) + 50.0));
  double log_w = -k, total = 0.0;
  for (int j = 0; j <= last; ++j) {
    if (j > 0) log_w += std::log(k) - std::log(double(j));
    w.push_back(std::exp(log_w));
    total += w.back();
    if (j > k && 1.0 - total < 1e-15) break;
  }
  return w;
}

constexpr double kDbPerNeper = 10.0 / std::numbers::ln10;

}  // namespace

double rician_exceedance(double x, double k) {
  if (x <= 0.0) return 1.0;
  // |h|^2 * 2(K+1) is noncentral chi-square with 2 degrees of freedom and
  // noncentrality 2K: a Poisson(K) mixture of central chi-square(2 + 2j),
  // whose tails are Poisson(y/2) CDFs. Both recurrences run in the log domain
  // so large K or y do not underflow.
  const double half_y = (k + 1.0) * x;
  const double log_k = std::log(k), log_h = std::log(half_y);
  double log_w = -k, log_term = -half_y;
  double central = 0.0, total = 0.0, mass = 0.0;
  const int last = static_cast<int>(std::ceil(k + 40.0 * std::sqrt(k) + 50.0));
  for (int j = 0; j <= last; ++j) {
    if (j > 0) {
      log_w += log_k - std::log(double(j));
      log_term += log_h - std::log(double(j));
    }
    central = std::min(1.0, central + std::exp(log_term));
    const double w = std::exp(log_w);
    total += w * central;
    mass += w;
    if (j > k && (1.0 - mass < 1e-15 || central >= 1.0 - 1e-16)) {
      if (central >= 1.0 - 1e-16) total += std::max(0.0, 1.0 - mass);
      break;
    }
  }
  return std::clamp(total, 0.0, 1.0);
}

double rician_db_mean(double k) {
  const auto w = poisson_weights(k);
  double harmonic = 0.0, mean_psi = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (j > 0) harmonic += 1.0 / j;
    mean_psi += w[j] * (harmonic - std::numbers::egamma);
  }
  return kDbPerNeper * (mean_psi - std::log(k + 1.0));
}

double rician_db_variance(double k) {
  const auto w = poisson_weights(k);
  double harmonic = 0.0, inv_sq = 0.0, m1 = 0.0, m2 = 0.0, trigamma = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (j > 0) {
      harmonic += 1.0 / j;
      inv_sq += 1.0 / (double(j) * j);
    }
    const double psi = harmonic - std::numbers::egamma;
    m1 += w[j] * psi;
    m2 += w[j] * psi * psi;
    trigamma += w[j] * (std::numbers::pi * std::numbers::pi / 6.0 - inv_sq);
  }
  return kDbPerNeper * kDbPerNeper * (trigamma + m2 - m1 * m1);
}

const std::vector<std::pair<double, double>>& gauss_hermite_64() {
  static const std::vector<std::pair<double, double>> rule = [] {
    constexpr int n = 64;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    std::vector<std::pair<double, double>> out(n);
    for (int i = 0; i < n; ++i) {
      const double v0 = eig.eigenvectors()(0, i);
      out[i] = {eig.eigenvalues()(i), std::sqrt(std::numbers::pi) * v0 * v0};
    }
    return out;
  }();
  return rule;
}

double connection_probability(double mean_dbm, double sd_db, double threshold_dbm, double k) {
  auto exceed = [&](double level) { return rician_exceedance(std::pow(10.0, (threshold_dbm - level) / 10.0), k); };
  if (!(sd_db > 0.0)) return exceed(mean_dbm);
  double total = 0.0;
  for (const auto& [x, w] : gauss_hermite_64()) {
    total += w * exceed(mean_dbm + std::numbers::sqrt2 * sd_db * x);
  }
  return std::clamp(total / std::sqrt(std::numbers::pi), 0.0, 1.0);
}

namespace {

double gaussian_exceedance(double mean, double sd, double threshold) {
  if (!(sd > 0.0)) return mean >= threshold ? 1.0 : 0.0;
  return 0.5 * std::erfc((threshold - mean) / (sd * std::numbers::sqrt2));
}

double cell_connection_probability(const ChannelSpec& s, double mean, double sd) {
  return s.multipath ? connection_probability(mean, sd, s.p_th_dbm, s.k_ric)
                     : gaussian_exceedance(mean, sd, s.p_th_dbm);
}

}  // namespace

// ---------------------------------------------------------------- field

ChannelField gen_channel_field(const ChannelSpec& spec) {
  validate(spec);
  const int n = spec.cell_count();
  ChannelField f;
  f.side = spec.cells_per_side;
  f.path_loss_dbm.resize(n);
  for (int i = 0; i < n; ++i) f.path_loss_dbm[i] = spec.k0_dbm - 10.0 * spec.n_pl * log10_distance(spec, i);
  if (spec.shadowing && spec.sigma_sh_db > 0.0) {
    Rng rng = Rng::derive(spec.seed, "channel.shadowing");
    f.shadowing_db = shadowing_sampler(spec)->sample(rng);
  } else {
    f.shadowing_db.assign(n, 0.0);
  }
  f.multipath_db.assign(n, 0.0);
  if (spec.multipath) {
    Rng rng = Rng::derive(spec.seed, "channel.multipath");
    for (double& m : f.multipath_db) m = sample_rician_db(spec.k_ric, rng);
  }
  f.power_dbm.resize(n);
  for (int i = 0; i < n; ++i) f.power_dbm[i] = f.path_loss_dbm[i] + f.shadowing_db[i] + f.multipath_db[i];
  return f;
}

Measurements sample_measurements(const ChannelField& field, const ChannelSpec& spec, Rng& rng) {
  const int n = static_cast<int>(field.power_dbm.size());
  const int m = std::clamp(static_cast<int>(std::lround(spec.measurement_fraction * n)), 3, n);
  std::vector<int> cells(n);
  for (int i = 0; i < n; ++i) cells[i] = i;
  for (int i = 0; i < m; ++i) std::swap(cells[i], cells[i + rng.uniform_int(n - i)]);
  cells.resize(m);
  std::sort(cells.begin(), cells.end());
  Measurements out;
  out.cells = cells;
  for (int c : cells) out.power_dbm.push_back(field.power_dbm[c]);
  return out;
}

ConnectivityPrediction predict_connectivity(const ChannelSpec& spec, const Measurements& meas,
                                            const PredictionOptions& options) {
  validate(spec);
  const int m = static_cast<int>(meas.cells.size());
  if (m < 3 || meas.power_dbm.size() != meas.cells.size()) {
    throw std::invalid_argument("connectivity prediction needs at least 3 measurements");
  }
  const int n = spec.cell_count();
  const bool fading = spec.multipath && !options.noise_free;
  const double mp_mean = fading ? rician_db_mean(spec.k_ric) : 0.0;
  const double nugget = fading ? rician_db_variance(spec.k_ric) : 0.0;
  const double sigma = spec.shadowing ? spec.sigma_sh_db : 0.0;

  Eigen::MatrixXd X(m, 2);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = -10.0 * log10_distance(spec, meas.cells[i]);
    y(i) = meas.power_dbm[i] - mp_mean;
  }
  const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd residual = y - X * beta;

  ConnectivityPrediction out;
  out.fitted_k0_dbm = beta(0);
  out.fitted_n_pl = beta(1);
  out.mean_dbm.resize(n);
  out.sd_db.assign(n, 0.0);
  for (int i = 0; i < n; ++i) out.mean_dbm[i] = beta(0) - 10.0 * beta(1) * log10_distance(spec, i);

  if (sigma > 0.0) {
    std::vector<std::pair<double, double>> mpts, all;
    for (int c : meas.cells) mpts.push_back(cell_center(spec, c));
    for (int i = 0; i < n; ++i) all.push_back(cell_center(spec, i));
    Eigen::MatrixXd cov = exponential_covariance(mpts, mpts, sigma, spec.beta_sh_m);
    cov.diagonal().array() += nugget + 1e-9 * sigma * sigma;
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw std::runtime_error("measurement covariance is singular");
    const Eigen::MatrixXd cross = exponential_covariance(mpts, all, sigma, spec.beta_sh_m);  // m x n
    const Eigen::VectorXd alpha = llt.solve(residual);
    const Eigen::MatrixXd solved = llt.solve(cross);
    for (int i = 0; i < n; ++i) {
      out.mean_dbm[i] += cross.col(i).dot(alpha);
      const double var = sigma * sigma - cross.col(i).dot(solved.col(i));
      out.sd_db[i] = std::sqrt(std::max(0.0, var));
    }
  }

  out.probability.resize(n);
  for (int i = 0; i < n; ++i) out.probability[i] = cell_connection_probability(spec, out.mean_dbm[i], out.sd_db[i]);
  for (int i = 0; i < m; ++i) {
    if (meas.power_dbm[i] >= spec.p_th_dbm) out.probability[meas.cells[i]] = 1.0;
  }
  return out;
}

std::vector<double> truth_connectivity(const ChannelField& field, const ChannelSpec& spec) {
  const auto mean = field.mean_power_dbm();
  std::vector<double> p(mean.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = cell_connection_probability(spec, mean[i], 0.0);
  return p;
}

// ---------------------------------------------------------------- instance

double straight_line_cost(const ChannelSpec& spec, const std::vector<double>& prob, int attach_cell) {
  const auto [x0, y0] = cell_center(spec, attach_cell);
  const double dx = spec.station_x - x0, dy = spec.station_y - y0;
  const double length = std::hypot(dx, dy);
  if (length == 0.0) return 0.0;
  const double h = spec.cell_size_m;
  // Parameters where the segment crosses a grid line.
  std::vector<double> ts{0.0, 1.0};
  auto crossings = [&](double from, double delta) {
    if (delta == 0.0) return;
    const double lo = std::min(from, from + delta), hi = std::max(from, from + delta);
    for (double g = std::ceil(lo / h) * h; g <= hi; g += h) {
      const double t = (g - from) / delta;
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  };
  crossings(x0, dx);
  crossings(y0, dy);
  std::sort(ts.begin(), ts.end());
  const int side = spec.cells_per_side;
  double alive = 1.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double seg = (ts[i + 1] - ts[i]) * length;
    if (seg <= 0.0) continue;
    const double tm = 0.5 * (ts[i] + ts[i + 1]);
    const int col = static_cast<int>(std::floor((x0 + tm * dx) / h));
    const int row = static_cast<int>(std::floor((y0 + tm * dy) / h));
    const int cell = row * side + col;
    if (cell != attach_cell) {
      const bool inside = row >= 0 && row < side && col >= 0 && col < side;
      // Entering a new cell is a chance to connect before crossing it.
      alive *= 1.0 - (inside ? prob[cell] : 0.0);
    }
    total += alive * seg;
  }
  return total;
}

ChannelInstance channel_instance(const std::vector<double>& prob, const ChannelSpec& spec) {
  validate(spec);
  const int side = spec.cells_per_side, n = spec.cell_count();
  if (static_cast<int>(prob.size()) != n) throw std::invalid_argument("probability map size does not match the workspace");
  ChannelInstance out;
  out.station = n;
  int attach = 0, far = 0;
  for (int i = 1; i < n; ++i) {
    if (cell_distance_to_station(spec, i) < cell_distance_to_station(spec, attach)) attach = i;
    if (cell_distance_to_station(spec, i) > cell_distance_to_station(spec, far)) far = i;
  }
  out.attach_cell = attach;
  out.station_edge_cost = straight_line_cost(spec, prob, attach);

  std::vector<double> p(prob.begin(), prob.end());
  for (double& v : p) v = std::clamp(v, 0.0, 1.0);
  p.push_back(1.0);
  std::vector<Edge> edges;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      if (c + 1 < side) edges.push_back({r * side + c, r * side + c + 1, spec.cell_size_m});
      if (r + 1 < side) edges.push_back({r * side + c, (r + 1) * side + c, spec.cell_size_m});
    }
  }
  // A zero-length line still needs a positive edge cost.
  edges.push_back({attach, out.station, std::max(out.station_edge_cost, 1e-9)});
  const int start = spec.start_row >= 0 && spec.start_col >= 0 ? spec.start_row * side + spec.start_col : far;
  out.instance = ProblemInstance(std::move(p), std::move(edges), start);
  return out;
}

ChannelScenario gen_channel_scenario(const ChannelSpec& spec) {
  ChannelScenario s;
  s.spec = spec;
  s.field = gen_channel_field(spec);
  Rng rng = Rng::derive(spec.seed, "channel.measurements");
  s.measurements = sample_measurements(s.field, spec, rng);
  s.prediction = predict_connectivity(spec, s.measurements);
  s.truth_probability = truth_connectivity(s.field, spec);
  s.planning = channel_instance(s.prediction.probability, spec);
  s.truth = channel_instance(s.truth_probability, spec);
  return s;
}

void write_map_csv(const std::string& file, int side, const std::vector<double>& values) {
  if (static_cast<int>(values.size()) != side * side) throw std::invalid_argument("map size mismatch");
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file);
  out.precision(17);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) out << (c ? "," : "") << values[r * side + c];
    out << '\n';
  }
}

std::vector<double> read_map_csv(const std::string& file, int* side) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file);
  std::vector<double> values;
  std::string line;
  int rows = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stod(cell));
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw std::runtime_error(file + ": ragged row " + std::to_string(rows + 1));
    ++rows;
  }
  if (static_cast<std::size_t>(rows) != cols) throw std::runtime_error(file + ": map is not square");
  if (side) *side = rows;
  return values;
}

}  // namespace expcost
