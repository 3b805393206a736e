#pragma once

// Reservoir recursion
//
//   x(t+1) = (1-a) x(t) + a f(W_in g(i(t)) + W_res g(x(t)) + b)
//
// Optical backends realize the bracket with one transmission matrix acting
// on the concatenated modulator frame and f = |.| (camera modulus). The
// classical backend keeps separate dense matrices and f = tanh. The binary
// ESN backend thresholds the camera intensity, so the state itself is binary.
//
// Macro-pixels: a region whose pixels repeat each encoded value r times sees
// the sum of r i.i.d. columns, which is again a Gaussian column with r times
// the variance. Optical reservoirs therefore hold a folded matrix with one
// column per distinct encoded value plus one bias column. fold_tm() builds it
// from a full-frame matrix; the default constructor draws it directly.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "optrc/encoding.hpp"
#include "optrc/mackey_glass.hpp"
#include "optrc/random_optics.hpp"

namespace optrc {

enum class Backend { optical_phase, optical_binary, classical_esn, binary_esn };
enum class LayoutKind { equal_thirds, quarters_half };

std::string_view to_string(Backend backend);
Backend backend_from_string(std::string_view name);
std::string_view to_string(LayoutKind layout);
LayoutKind layout_from_string(std::string_view name);
std::string_view to_string(CameraReading reading);
CameraReading camera_from_string(std::string_view name);

struct EsnParams {
  double spectral_radius = 0.9;
  double input_scale = 1.0;
  double density = 1.0;
  double bias_scale = 1.0;
};

struct ReservoirConfig {
  std::size_t n_res = 1024;
  std::size_t input_dim = 1;
  double leak_rate = 0.3;
  Backend backend = Backend::optical_phase;
  EncodingSpec spec_in = EncodingSpec::phase();
  EncodingSpec spec_res = EncodingSpec::phase();
  LayoutKind layout = LayoutKind::equal_thirds;
  std::uint64_t tm_seed = 1;
  std::uint64_t bias_seed = 2;
  std::uint64_t init_seed = 3;
  std::size_t warmup_discard = 100;
  NoiseModel noise;
  CameraReading camera = CameraReading::modulus;
  /// Camera counts per unit reading. The simulated field has unit mean
  /// intensity; readout features (and hence ridge alpha) live in counts.
  /// Dynamics do not depend on it since states are rescaled before encoding.
  double camera_gain = 1.0;
  double scale_percentile = 0.99;
  EsnParams esn;

  /// Accepts leak_rate = 0 (frozen reservoir) for diagnostics; user-facing
  /// configs reject it at parse time.
  void validate() const;
  bool is_optical() const { return backend != Backend::classical_esn; }
  /// Region sizes: each region holds lcm(encoded input, encoded state) pixels.
  FrameLayout frame_layout() const;
  nlohmann::json to_json() const;
  /// SHA-256 of the canonical JSON form.
  std::string hash() const;

  static ReservoirConfig slm(std::size_t n_res = 1024);
  static ReservoirConfig dmd_basket(std::size_t n_res = 512, int n_bin = 10);
  static ReservoirConfig dmd_threshold(std::size_t n_res = 512, int n_bin = 10);
  static ReservoirConfig binary_esn(std::size_t n_res = 512, int n_bin_in = 10);
  static ReservoirConfig classical(std::size_t n_res = 512);
};

struct ClassicalWeights {
  Eigen::MatrixXd w_in;   // n_res x input_dim
  Eigen::MatrixXd w_res;  // n_res x n_res
  Eigen::VectorXd bias;   // n_res
};

struct ReservoirState {
  Eigen::VectorXd x;
  std::int64_t t = 0;
};

/// Frozen pre-encoding normalization of optical states.
struct StateScale {
  double divisor = 1.0;    // states are divided by this, then clipped to [0,1]
  double threshold = 0.0;  // binary ESN intensity threshold
};

struct ReservoirTrajectory {
  using Rows = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Rows states;             // row k is x(k+1), the state after input k
  Eigen::VectorXd initial; // x(0)
  std::size_t warmup_discard = 0;
  std::string config_hash;
  std::string input_ref;

  std::size_t size() const { return static_cast<std::size_t>(states.rows()); }
  ReservoirState state(std::size_t k) const {
    return {states.row(static_cast<Eigen::Index>(k)).transpose(), static_cast<std::int64_t>(k) + 1};
  }
  bool trainable(std::size_t k) const { return k >= warmup_discard; }
};

/// Identifier of a driving series: length plus a digest of its values.
std::string series_ref(const TimeSeries& series);

/// Column variances of the folded matrix for this config (input columns,
/// reservoir columns, one bias column).
std::vector<double> folded_column_variance(const ReservoirConfig& config);

/// Folds a full-frame matrix (n_res x frame length) by summing the columns
/// of each macro-pixel; the bias region collapses to H_bias * bias_pattern.
TransmissionMatrix fold_tm(const ReservoirConfig& config, const TransmissionMatrix& full);

ClassicalWeights draw_classical_weights(const ReservoirConfig& config);

class Reservoir {
 public:
  /// Draws the folded matrix (optical) or the ESN weights (classical) from tm_seed.
  explicit Reservoir(ReservoirConfig config);
  /// Optical backends driven through an explicit full-frame matrix.
  Reservoir(ReservoirConfig config, const TransmissionMatrix& full_tm);
  /// Classical backend with explicit weights.
  Reservoir(ReservoirConfig config, ClassicalWeights weights);

  const ReservoirConfig& config() const { return config_; }
  const TransmissionMatrix& folded_tm() const { return tm_; }
  const ClassicalWeights& weights() const { return weights_; }

  /// Runs the warmup of `series` from a calibration state (seeded from
  /// tm_seed, not init_seed) with a running percentile of the states, then
  /// freezes it. Binary ESN: median camera intensity becomes the threshold.
  StateScale calibrate(const TimeSeries& series);
  void set_scale(const StateScale& scale) { scale_ = scale; }
  const std::optional<StateScale>& scale() const { return scale_; }

  ReservoirState initial_state(std::uint64_t init_seed) const;

  /// One recursion step. Uncalibrated optical reservoirs use divisor 1.
  ReservoirState step(const ReservoirState& state, std::span<const double> input,
                      std::uint64_t noise_seed = 0) const;

  /// x(0) uniform in [0,1] from init_seed, then one step per sample. Without
  /// a frozen scale the series' own warmup calibrates it.
  ReservoirTrajectory run(const TimeSeries& series, std::uint64_t init_seed) const;
  ReservoirTrajectory run_from(const TimeSeries& series, const ReservoirState& initial,
                               std::uint64_t noise_seed_root) const;

  /// Series k runs with init seed derive_seed(init_seed, "batch", k).
  std::vector<ReservoirTrajectory> run_batch(std::span<const TimeSeries> batch,
                                             std::uint64_t init_seed) const;

 private:
  StateScale effective_scale(const TimeSeries& series) const;
  StateScale calibration_pass(const TimeSeries& series) const;
  ReservoirState step_with(const ReservoirState& state, std::span<const double> input,
                           const StateScale& scale, std::uint64_t noise_seed,
                           Eigen::VectorXd* intensity_out) const;

  ReservoirConfig config_;
  TransmissionMatrix tm_;
  ClassicalWeights weights_;
  std::optional<StateScale> scale_;
};

struct DiagnosticsReport {
  std::vector<double> convergence;  // relative distance of two trajectories per step
  double final_ratio = 0.0;
  double separation = 0.0;     // mean pairwise final-state distance, 10 distinct probes
  double approximation = 0.0;  // same over 10 noisy replicas of one probe
  nlohmann::json to_json() const;
};

/// Echo-state, separation and approximation measurements. The probe must be
/// at least 4 * warmup_discard samples long.
DiagnosticsReport diagnose_dynamics(const Reservoir& reservoir, const TimeSeries& probe,
                                    std::uint64_t seed);

/// Binary state file: magic, version, config hash, n_res, count, then
/// row-major doubles. A JSON sidecar (<path>.json) holds the config.
void save_trajectory(const std::filesystem::path& path, const ReservoirTrajectory& trajectory,
                     const ReservoirConfig& config);
ReservoirTrajectory load_trajectory(const std::filesystem::path& path);

}  // namespace optrc
