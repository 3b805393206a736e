#pragma once

// End-to-end forecasting pipeline: Mackey-Glass train/test series, reservoir
// features, ridge readout, NMSE per horizon averaged over independent runs.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "optrc/mackey_glass.hpp"
#include "optrc/readout.hpp"
#include "optrc/reservoir.hpp"

namespace optrc {

enum class PredictorMode { ridge, training_mean, oracle };

std::string_view to_string(PredictorMode mode);
PredictorMode predictor_from_string(std::string_view name);

/// 1..50, then log-spaced up to max_horizon, plus whole multiples of the
/// Lyapunov time (in samples) so banded criteria hit exact points.
std::vector<int> default_horizons(int max_horizon = 1000, double lyapunov_samples = 1.0 / 0.006);

using ParameterGrid = std::map<std::string, std::vector<nlohmann::json>>;

struct ExperimentConfig {
  ReservoirConfig reservoir = ReservoirConfig::slm();
  MGParams mackey_glass;
  double alpha = 1e4;
  std::vector<int> horizons = default_horizons();
  std::size_t train_length = 2000;
  std::size_t test_length = 2000;
  std::size_t n_test_windows = 900;
  std::size_t averaging_runs = 10;
  std::uint64_t master_seed = 42;
  /// Reference exponent for the horizon axis (per unit time).
  double lyapunov_exponent = 0.006;
  PredictorMode predictor = PredictorMode::ridge;
  bool center_features = false;
  std::size_t n_traces = 3;
  /// Grid search only: parameter paths and values, and the ranking band.
  ParameterGrid grid;
  std::array<int, 2> validation_band{1, 167};

  void validate() const;
  int max_horizon() const { return horizons.empty() ? 0 : horizons.back(); }
  /// Samples per Lyapunov time.
  double lyapunov_samples() const { return 1.0 / (lyapunov_exponent * mackey_glass.sample_period()); }
  /// Per-run seeds are derived, so reservoir seeds are left out.
  nlohmann::json to_json() const;
  std::string hash() const;

  static ExperimentConfig slm();
  static ExperimentConfig dmd_basket();
};

/// Every random quantity of one averaging run, derived from the master seed.
struct RunSeeds {
  std::size_t run = 0;
  std::uint64_t train_series = 0;
  std::uint64_t test_series = 0;
  std::uint64_t tm = 0;
  std::uint64_t bias = 0;
  std::uint64_t init_train = 0;
  std::uint64_t init_test = 0;
  nlohmann::json to_json() const;
};

RunSeeds derive_run_seeds(std::uint64_t master_seed, std::size_t run);
/// Throws if a test-series seed is also used for any training series.
void audit_seeds(const std::vector<RunSeeds>& seeds);

/// Test-window start positions t0 in [warmup, length - max_horizon), evenly
/// spaced. Windows may overlap.
std::vector<std::size_t> test_windows(std::size_t length, std::size_t warmup, int max_horizon,
                                      std::size_t count);

struct NMSEPoint {
  int horizon = 0;
  double horizon_lyapunov = 0.0;
  double nmse = 0.0;
  double std = 0.0;  // across runs
};

struct BandStat {
  double mean = 0.0;
  double std = 0.0;
};

struct NMSECurve {
  std::vector<NMSEPoint> points;
  std::vector<std::vector<double>> per_run;  // run x horizon
  std::string config_hash;
  double lyapunov_exponent = 0.0;

  const NMSEPoint& at(int horizon) const;
  /// Point whose horizon is closest to `horizon`.
  const NMSEPoint& nearest(double horizon) const;
  /// Per run, the mean NMSE over horizons in [lo, hi]; then mean and sample
  /// std of those across runs.
  BandStat band(double lo, double hi) const;
};

double pooled_std(double s1, double s2);

struct PredictionTrace {
  std::size_t run = 0;
  std::size_t t0 = 0;
  std::vector<int> horizons;
  std::vector<double> truth;
  std::vector<double> predicted;
};

struct ExperimentResult {
  NMSECurve curve;
  std::vector<PredictionTrace> traces;
  std::vector<RunSeeds> seeds;
};

/// NMSE(h) = mean squared error over test windows / variance of the test
/// series, averaged over independent runs.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Returns a copy of `config` with the value at a dotted path replaced.
ExperimentConfig with_parameter(const ExperimentConfig& config, const std::string& path,
                                const nlohmann::json& value);

struct GridCell {
  std::map<std::string, nlohmann::json> params;
  NMSECurve curve;
  BandStat score;
};

/// Cartesian product of config.grid, every cell with the same master seed.
/// Ranked by score mean, ties broken by the parameter values in key order.
std::vector<GridCell> grid_search(const ExperimentConfig& config);

struct CompareOptions {
  std::size_t n_res = 512;
  int n_bin = 10;
  std::size_t runs = 5;
  /// Also run the binary ESN with n_res * n_bin nodes, matching the DMD
  /// pixel count of the basket arm.
  bool matched_pixels = true;
  /// Upper end of the scoring band in Lyapunov times.
  double band_lyapunov = 2.0;
};

struct ComparisonArm {
  std::string name;
  ReservoirConfig reservoir;
  NMSECurve curve;
  BandStat score;
  std::size_t frame_pixels = 0;  // modulator pixels per frame, 0 for the software ESN
};

std::vector<ComparisonArm> compare_encodings(const ExperimentConfig& base, const CompareOptions& options = {});

// CSV writers. Doubles use round-trip precision.
void write_nmse_csv(const std::filesystem::path& path, const NMSECurve& curve);
void write_predictions_csv(const std::filesystem::path& path, const std::vector<PredictionTrace>& traces,
                           double lyapunov_samples);
void write_gridsearch_csv(const std::filesystem::path& path, const std::vector<GridCell>& cells);
void write_comparison_csv(const std::filesystem::path& path, const std::vector<ComparisonArm>& arms,
                          const std::array<double, 2>& band);

}  // namespace optrc
