#include "optrc/reservoir.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <tbb/parallel_for.h>

#include "optrc/digest.hpp"
#include "optrc/error.hpp"
#include "optrc/rng.hpp"

namespace optrc {

namespace {

constexpr std::array<char, 8> kTrajectoryMagic{'O', 'P', 'T', 'R', 'C', 'S', 'T', '\0'};
constexpr std::uint32_t kTrajectoryVersion = 1;
constexpr std::size_t kMinCalibrationSteps = 10;

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 1.0;
  const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

void check_unit_series(const TimeSeries& series) {
  for (std::size_t t = 0; t < series.size(); ++t)
    if (!(series[t] >= 0.0 && series[t] <= 1.0))
      throw RangeError("reservoir input at index " + std::to_string(t) +
                       " is outside [0, 1]; normalize the series first");
}

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::optical_phase: return "optical_phase";
    case Backend::optical_binary: return "optical_binary";
    case Backend::classical_esn: return "classical_esn";
    case Backend::binary_esn: return "binary_esn";
  }
  return "unknown";
}

Backend backend_from_string(std::string_view name) {
  for (auto b : {Backend::optical_phase, Backend::optical_binary, Backend::classical_esn,
                 Backend::binary_esn})
    if (to_string(b) == name) return b;
  throw ConfigError("unknown backend '" + std::string(name) +
                    "' (expected optical_phase, optical_binary, classical_esn or binary_esn)");
}

std::string_view to_string(LayoutKind layout) {
  return layout == LayoutKind::equal_thirds ? "thirds" : "quarters_half";
}

LayoutKind layout_from_string(std::string_view name) {
  if (name == "thirds") return LayoutKind::equal_thirds;
  if (name == "quarters_half") return LayoutKind::quarters_half;
  throw ConfigError("unknown layout '" + std::string(name) + "' (expected thirds or quarters_half)");
}

std::string_view to_string(CameraReading reading) {
  return reading == CameraReading::modulus ? "modulus" : "intensity";
}

CameraReading camera_from_string(std::string_view name) {
  if (name == "modulus") return CameraReading::modulus;
  if (name == "intensity") return CameraReading::intensity;
  throw ConfigError("unknown camera reading '" + std::string(name) + "' (expected modulus or intensity)");
}

// ---------------------------------------------------------------------------
// ReservoirConfig

void ReservoirConfig::validate() const {
  if (n_res < 1) throw ConfigError("reservoir.n_res must be >= 1");
  if (input_dim < 1) throw ConfigError("reservoir.input_dim must be >= 1");
  if (!(leak_rate >= 0.0 && leak_rate <= 1.0))
    throw ConfigError("reservoir.leak_rate must lie in (0, 1], got " + std::to_string(leak_rate));
  if (!(camera_gain > 0.0)) throw ConfigError("reservoir.camera_gain must be > 0");
  if (!(scale_percentile > 0.0 && scale_percentile <= 1.0))
    throw ConfigError("reservoir.scale_percentile must lie in (0, 1]");
  spec_in.validate();
  spec_res.validate();
  noise.validate();
  switch (backend) {
    case Backend::optical_binary:
      if (!spec_in.is_binary() || !spec_res.is_binary())
        throw ConfigError("optical_binary backend needs binary encodings for input and state");
      break;
    case Backend::binary_esn:
      if (spec_res.kind != EncodingKind::identity)
        throw ConfigError("binary_esn backend displays its binary state directly (encoding_res: identity)");
      break;
    case Backend::classical_esn:
      if (!(esn.spectral_radius >= 0.0)) throw ConfigError("esn.spectral_radius must be >= 0");
      if (!(esn.density > 0.0 && esn.density <= 1.0)) throw ConfigError("esn.density must lie in (0, 1]");
      break;
    case Backend::optical_phase:
      break;
  }
  if (is_optical()) frame_layout().validate();
}

FrameLayout ReservoirConfig::frame_layout() const {
  const std::size_t encoded_in = input_dim * spec_in.encoded_length();
  const std::size_t encoded_res = n_res * spec_res.encoded_length();
  const std::size_t region = std::lcm(encoded_in, encoded_res);
  return layout == LayoutKind::equal_thirds ? FrameLayout::equal_thirds(region)
                                            : FrameLayout::quarters_half(region);
}

nlohmann::json ReservoirConfig::to_json() const {
  auto spec_json = [](const EncodingSpec& s) {
    return nlohmann::json{{"kind", to_string(s.kind)}, {"n_bin", s.n_bin}, {"phase_range", s.phase_range}};
  };
  return {
      {"n_res", n_res},
      {"input_dim", input_dim},
      {"leak_rate", leak_rate},
      {"backend", to_string(backend)},
      {"encoding_in", spec_json(spec_in)},
      {"encoding_res", spec_json(spec_res)},
      {"layout", to_string(layout)},
      {"tm_seed", tm_seed},
      {"bias_seed", bias_seed},
      {"init_seed", init_seed},
      {"warmup_discard", warmup_discard},
      {"noise",
       {{"additive_sigma", noise.additive_sigma},
        {"quantize_bits", noise.quantize_bits},
        {"saturation_level", noise.saturation_level}}},
      {"camera", to_string(camera)},
      {"camera_gain", camera_gain},
      {"scale_percentile", scale_percentile},
      {"esn",
       {{"spectral_radius", esn.spectral_radius},
        {"input_scale", esn.input_scale},
        {"density", esn.density},
        {"bias_scale", esn.bias_scale}}},
  };
}

std::string ReservoirConfig::hash() const { return sha256_hex(to_json().dump()); }

ReservoirConfig ReservoirConfig::slm(std::size_t n_res) {
  ReservoirConfig c;
  c.n_res = n_res;
  c.camera_gain = 100.0;
  return c;
}

ReservoirConfig ReservoirConfig::dmd_basket(std::size_t n_res, int n_bin) {
  ReservoirConfig c;
  c.n_res = n_res;
  c.backend = Backend::optical_binary;
  c.spec_in = EncodingSpec::basket(n_bin);
  c.spec_res = EncodingSpec::basket(n_bin);
  c.layout = LayoutKind::quarters_half;
  c.camera = CameraReading::intensity;
  c.leak_rate = 0.2;
  c.warmup_discard = 50;
  return c;
}

ReservoirConfig ReservoirConfig::dmd_threshold(std::size_t n_res, int n_bin) {
  ReservoirConfig c = dmd_basket(n_res, n_bin);
  c.spec_in = EncodingSpec::threshold(n_bin);
  c.spec_res = EncodingSpec::threshold(n_bin);
  return c;
}

ReservoirConfig ReservoirConfig::binary_esn(std::size_t n_res, int n_bin_in) {
  ReservoirConfig c = dmd_basket(n_res, n_bin_in);
  c.backend = Backend::binary_esn;
  c.spec_in = EncodingSpec::threshold(n_bin_in);
  c.spec_res = EncodingSpec::identity();
  c.leak_rate = 1.0;
  return c;
}

ReservoirConfig ReservoirConfig::classical(std::size_t n_res) {
  ReservoirConfig c;
  c.n_res = n_res;
  c.backend = Backend::classical_esn;
  c.spec_in = EncodingSpec::identity();
  c.spec_res = EncodingSpec::identity();
  c.leak_rate = 0.2;
  c.warmup_discard = 50;
  return c;
}

// ---------------------------------------------------------------------------
// Matrices

std::string series_ref(const TimeSeries& series) {
  const std::string_view bytes(reinterpret_cast<const char*>(series.values.data()),
                               series.values.size() * sizeof(double));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return "len=" + std::to_string(series.size()) + ":fnv1a64=" + buf;
}

std::vector<double> folded_column_variance(const ReservoirConfig& config) {
  const FrameLayout layout = config.frame_layout();
  const std::size_t encoded_in = config.input_dim * config.spec_in.encoded_length();
  const std::size_t encoded_res = config.n_res * config.spec_res.encoded_length();
  const auto total = static_cast<double>(layout.total());
  std::vector<double> variance;
  variance.reserve(encoded_in + encoded_res + 1);
  variance.insert(variance.end(), encoded_in, static_cast<double>(layout.input.length / encoded_in) / total);
  variance.insert(variance.end(), encoded_res,
                  static_cast<double>(layout.reservoir.length / encoded_res) / total);
  const Eigen::VectorXcd bias =
      bias_pattern(frame_mode(config.spec_in, config.spec_res), layout.bias.length, config.bias_seed);
  variance.push_back(bias.squaredNorm() / total);
  return variance;
}

TransmissionMatrix fold_tm(const ReservoirConfig& config, const TransmissionMatrix& full) {
  config.validate();
  const FrameLayout layout = config.frame_layout();
  if (full.n_in != layout.total() || full.n_out != config.n_res)
    throw DimensionError("fold_tm: matrix is " + std::to_string(full.n_out) + "x" +
                         std::to_string(full.n_in) + ", layout needs " + std::to_string(config.n_res) +
                         "x" + std::to_string(layout.total()));
  const auto encoded_in = static_cast<Eigen::Index>(config.input_dim * config.spec_in.encoded_length());
  const auto encoded_res = static_cast<Eigen::Index>(config.n_res * config.spec_res.encoded_length());

  TransmissionMatrix folded{full.n_out, static_cast<std::size_t>(encoded_in + encoded_res + 1), full.seed,
                            Eigen::MatrixXcd::Zero(full.entries.rows(), encoded_in + encoded_res + 1)};
  auto fold_region = [&](const Span& span, Eigen::Index width, Eigen::Index first_column) {
    const auto repeat = static_cast<Eigen::Index>(span.length) / width;
    for (Eigen::Index p = 0; p < width; ++p)
      folded.entries.col(first_column + p) =
          full.entries.middleCols(static_cast<Eigen::Index>(span.offset) + p * repeat, repeat).rowwise().sum();
  };
  fold_region(layout.input, encoded_in, 0);
  fold_region(layout.reservoir, encoded_res, encoded_in);
  if (layout.bias.length > 0) {
    const Eigen::VectorXcd bias =
        bias_pattern(frame_mode(config.spec_in, config.spec_res), layout.bias.length, config.bias_seed);
    folded.entries.col(encoded_in + encoded_res) =
        full.entries.middleCols(static_cast<Eigen::Index>(layout.bias.offset),
                                static_cast<Eigen::Index>(layout.bias.length)) * bias;
  }
  return folded;
}

ClassicalWeights draw_classical_weights(const ReservoirConfig& config) {
  const auto n = static_cast<Eigen::Index>(config.n_res);
  const auto d = static_cast<Eigen::Index>(config.input_dim);
  ClassicalWeights w{Eigen::MatrixXd(n, d), Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};

  RandomStream in_rng(derive_seed(config.tm_seed, "esn-w-in"));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) w.w_in(i, j) = config.esn.input_scale * in_rng.normal();

  RandomStream res_rng(derive_seed(config.tm_seed, "esn-w-res"));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double value = res_rng.normal();
      w.w_res(i, j) = res_rng.uniform() < config.esn.density ? value : 0.0;
    }
  const double radius = w.w_res.eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 0.0) w.w_res *= config.esn.spectral_radius / radius;

  RandomStream bias_rng(derive_seed(config.tm_seed, "esn-bias"));
  for (Eigen::Index i = 0; i < n; ++i) w.bias[i] = config.esn.bias_scale * bias_rng.normal();
  return w;
}

// ---------------------------------------------------------------------------
// Reservoir

Reservoir::Reservoir(ReservoirConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.is_optical()) {
    tm_ = build_weighted_tm(config_.n_res, folded_column_variance(config_), config_.tm_seed);
  } else {
    weights_ = draw_classical_weights(config_);
  }
}

Reservoir::Reservoir(ReservoirConfig config, const TransmissionMatrix& full_tm)
    : config_(std::move(config)) {
  config_.validate();
  if (!config_.is_optical()) throw ConfigError("a transmission matrix needs an optical backend");
  tm_ = fold_tm(config_, full_tm);
}

Reservoir::Reservoir(ReservoirConfig config, ClassicalWeights weights)
    : config_(std::move(config)), weights_(std::move(weights)) {
  config_.validate();
  if (config_.is_optical()) throw ConfigError("explicit ESN weights need the classical_esn backend");
  const auto n = static_cast<Eigen::Index>(config_.n_res);
  if (weights_.w_res.rows() != n || weights_.w_res.cols() != n || weights_.w_in.rows() != n ||
      weights_.w_in.cols() != static_cast<Eigen::Index>(config_.input_dim) || weights_.bias.size() != n)
    throw DimensionError("classical weights do not match n_res / input_dim");
}

ReservoirState Reservoir::initial_state(std::uint64_t init_seed) const {
  RandomStream rng(init_seed);
  ReservoirState s{Eigen::VectorXd(static_cast<Eigen::Index>(config_.n_res)), 0};
  for (Eigen::Index k = 0; k < s.x.size(); ++k) s.x[k] = rng.uniform();
  return s;
}

ReservoirState Reservoir::step_with(const ReservoirState& state, std::span<const double> input,
                                    const StateScale& scale, std::uint64_t noise_seed,
                                    Eigen::VectorXd* intensity_out) const {
  if (static_cast<std::size_t>(state.x.size()) != config_.n_res)
    throw DimensionError("state dimension " + std::to_string(state.x.size()) + " != n_res " +
                         std::to_string(config_.n_res));
  if (input.size() != config_.input_dim)
    throw DimensionError("input dimension " + std::to_string(input.size()) + " != input_dim " +
                         std::to_string(config_.input_dim));
  const double a = config_.leak_rate;
  Eigen::VectorXd fresh;

  if (config_.backend == Backend::classical_esn) {
    const Eigen::Map<const Eigen::VectorXd> in(input.data(), static_cast<Eigen::Index>(input.size()));
    fresh = (weights_.w_in * in + weights_.w_res * state.x + weights_.bias).array().tanh().matrix();
  } else {
    const auto encoded_in = static_cast<Eigen::Index>(config_.input_dim * config_.spec_in.encoded_length());
    const auto encoded_res = static_cast<Eigen::Index>(config_.n_res * config_.spec_res.encoded_length());
    Eigen::VectorXcd frame(encoded_in + encoded_res + 1);
    frame.head(encoded_in) = encode(config_.spec_in, input);
    std::vector<double> displayed(static_cast<std::size_t>(state.x.size()));
    for (std::size_t k = 0; k < displayed.size(); ++k)
      displayed[k] = std::clamp(state.x[static_cast<Eigen::Index>(k)] / scale.divisor, 0.0, 1.0);
    frame.segment(encoded_in, encoded_res) = encode(config_.spec_res, displayed);
    frame[encoded_in + encoded_res] = 1.0;

    Eigen::VectorXd modulus = project(tm_, frame);
    if (!config_.noise.is_identity()) modulus = apply_noise(modulus, config_.noise, noise_seed);
    if (config_.backend == Backend::binary_esn) {
      Eigen::VectorXd intensity = modulus.array().square().matrix();
      fresh = (intensity.array() > scale.threshold).cast<double>().matrix();
      if (intensity_out) *intensity_out = std::move(intensity);
    } else if (config_.camera == CameraReading::intensity) {
      fresh = config_.camera_gain * modulus.array().square().matrix();
    } else {
      fresh = config_.camera_gain * modulus;
    }
  }

  ReservoirState next{(1.0 - a) * state.x + a * fresh, state.t + 1};
  if (!next.x.allFinite()) throw DivergenceError("reservoir state became non-finite", next.t);
  return next;
}

ReservoirState Reservoir::step(const ReservoirState& state, std::span<const double> input,
                               std::uint64_t noise_seed) const {
  return step_with(state, input, scale_.value_or(StateScale{}), noise_seed, nullptr);
}

StateScale Reservoir::calibration_pass(const TimeSeries& series) const {
  if (!config_.is_optical() || series.size() == 0) return {};
  const std::size_t steps =
      std::min(series.size(), std::max(config_.warmup_discard, kMinCalibrationSteps));
  ReservoirState state = initial_state(derive_seed(config_.tm_seed, "calibration"));

  StateScale scale;
  std::vector<double> state_pool;
  std::vector<double> intensity_pool;
  const bool binary_esn = config_.backend == Backend::binary_esn;
  if (!binary_esn)
    scale.divisor = percentile({state.x.data(), state.x.data() + state.x.size()}, config_.scale_percentile);

  for (std::size_t t = 0; t < steps; ++t) {
    const double u = series[t];
    const std::uint64_t noise_seed =
        config_.noise.is_identity() ? 0 : derive_seed(config_.tm_seed, "calibration-noise", t);
    if (binary_esn) {
      // Threshold from the running median of every intensity seen so far,
      // including the current frame.
      Eigen::VectorXd intensity;
      StateScale probe = scale;
      probe.threshold = std::numeric_limits<double>::infinity();
      step_with(state, {&u, 1}, probe, noise_seed, &intensity);
      intensity_pool.insert(intensity_pool.end(), intensity.data(), intensity.data() + intensity.size());
      scale.threshold = percentile(intensity_pool, 0.5);
      const double a = config_.leak_rate;
      state.x = (1.0 - a) * state.x + a * (intensity.array() > scale.threshold).cast<double>().matrix();
      ++state.t;
    } else {
      state = step_with(state, {&u, 1}, scale, noise_seed, nullptr);
      state_pool.insert(state_pool.end(), state.x.data(), state.x.data() + state.x.size());
      scale.divisor = percentile(state_pool, config_.scale_percentile);
    }
  }
  if (!(scale.divisor > 0.0)) scale.divisor = 1.0;
  return scale;
}

StateScale Reservoir::calibrate(const TimeSeries& series) {
  check_unit_series(series);
  scale_ = calibration_pass(series);
  return *scale_;
}

StateScale Reservoir::effective_scale(const TimeSeries& series) const {
  return scale_ ? *scale_ : calibration_pass(series);
}

ReservoirTrajectory Reservoir::run_from(const TimeSeries& series, const ReservoirState& initial,
                                        std::uint64_t noise_seed_root) const {
  if (config_.input_dim != 1) throw DimensionError("run: scalar series need input_dim = 1");
  check_unit_series(series);
  const StateScale scale = effective_scale(series);

  ReservoirTrajectory out;
  out.states.resize(static_cast<Eigen::Index>(series.size()), static_cast<Eigen::Index>(config_.n_res));
  out.initial = initial.x;
  out.warmup_discard = config_.warmup_discard;
  out.config_hash = config_.hash();
  out.input_ref = series_ref(series);

  ReservoirState state = initial;
  const bool noisy = !config_.noise.is_identity();
  for (std::size_t t = 0; t < series.size(); ++t) {
    const double u = series[t];
    const std::uint64_t noise_seed = noisy ? derive_seed(noise_seed_root, "camera-noise", t) : 0;
    state = step_with(state, {&u, 1}, scale, noise_seed, nullptr);
    out.states.row(static_cast<Eigen::Index>(t)) = state.x.transpose();
  }
  return out;
}

ReservoirTrajectory Reservoir::run(const TimeSeries& series, std::uint64_t init_seed) const {
  return run_from(series, initial_state(init_seed), init_seed);
}

std::vector<ReservoirTrajectory> Reservoir::run_batch(std::span<const TimeSeries> batch,
                                                      std::uint64_t init_seed) const {
  if (batch.empty()) return {};
  for (const TimeSeries& s : batch)
    if (s.size() != batch.front().size())
      throw BatchShapeError("run_batch: all series must share one length (got " +
                            std::to_string(batch.front().size()) + " and " + std::to_string(s.size()) + ")");
  std::vector<ReservoirTrajectory> out(batch.size());
  tbb::parallel_for(std::size_t{0}, batch.size(), [&](std::size_t k) {
    out[k] = run(batch[k], derive_seed(init_seed, "batch", k));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics

nlohmann::json DiagnosticsReport::to_json() const {
  return {{"convergence", convergence},
          {"echo_state_final_ratio", final_ratio},
          {"separation", separation},
          {"approximation", approximation}};
}

namespace {

double mean_pairwise_distance(const std::vector<Eigen::VectorXd>& points) {
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      sum += (points[i] - points[j]).norm();
      ++pairs;
    }
  return pairs ? sum / static_cast<double>(pairs) : 0.0;
}

TimeSeries window_of(const TimeSeries& series, std::size_t offset, std::size_t length) {
  TimeSeries out = series;
  out.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(offset),
                    series.values.begin() + static_cast<std::ptrdiff_t>(offset + length));
  return out;
}

}  // namespace

DiagnosticsReport diagnose_dynamics(const Reservoir& reservoir, const TimeSeries& probe,
                                    std::uint64_t seed) {
  constexpr std::size_t kProbes = 10;
  constexpr double kReplicaNoise = 1e-3;
  const std::size_t warmup = reservoir.config().warmup_discard;
  const std::size_t min_length = std::max<std::size_t>(4 * warmup, 2 * kProbes);
  if (probe.size() < min_length)
    throw ConfigError("diagnose_dynamics: probe needs at least " + std::to_string(min_length) +
                      " samples (4 x warmup_discard)");

  Reservoir local = reservoir;
  if (!local.scale()) local.calibrate(probe);

  DiagnosticsReport report;
  const ReservoirTrajectory a = local.run(probe, derive_seed(seed, "echo-a"));
  const ReservoirTrajectory b = local.run(probe, derive_seed(seed, "echo-b"));
  report.convergence.reserve(a.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    const auto ra = a.states.row(static_cast<Eigen::Index>(t));
    const auto rb = b.states.row(static_cast<Eigen::Index>(t));
    const double norm = ra.norm();
    const double diff = (ra - rb).norm();
    report.convergence.push_back(norm > 0.0 ? diff / norm : diff);
  }
  report.final_ratio = report.convergence.back();

  const std::size_t window = probe.size() / 2;
  const std::uint64_t init = derive_seed(seed, "probe-init");
  std::vector<Eigen::VectorXd> distinct;
  std::vector<Eigen::VectorXd> replicas;
  const TimeSeries base = window_of(probe, 0, window);
  for (std::size_t i = 0; i < kProbes; ++i) {
    const std::size_t offset = i * (probe.size() - window) / (kProbes - 1);
    const ReservoirTrajectory tr = local.run(window_of(probe, offset, window), init);
    distinct.push_back(tr.states.bottomRows(1).transpose());

    TimeSeries noisy = base;
    RandomStream rng(derive_seed(seed, "replica", i));
    for (double& v : noisy.values) v = std::clamp(v + kReplicaNoise * rng.normal(), 0.0, 1.0);
    const ReservoirTrajectory tn = local.run(noisy, init);
    replicas.push_back(tn.states.bottomRows(1).transpose());
  }
  report.separation = mean_pairwise_distance(distinct);
  report.approximation = mean_pairwise_distance(replicas);
  return report;
}

// ---------------------------------------------------------------------------
// Persistence

void save_trajectory(const std::filesystem::path& path, const ReservoirTrajectory& trajectory,
                     const ReservoirConfig& config) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kTrajectoryMagic.data(), kTrajectoryMagic.size());
  write_pod(os, kTrajectoryVersion);
  std::array<char, 64> hash{};
  std::copy_n(trajectory.config_hash.begin(), std::min<std::size_t>(trajectory.config_hash.size(), 64), hash.begin());
  os.write(hash.data(), hash.size());
  write_pod(os, static_cast<std::uint64_t>(trajectory.states.cols()));
  write_pod(os, static_cast<std::uint64_t>(trajectory.states.rows()));
  write_pod(os, static_cast<std::uint64_t>(trajectory.warmup_discard));
  os.write(reinterpret_cast<const char*>(trajectory.states.data()),
           static_cast<std::streamsize>(trajectory.states.size() * sizeof(double)));
  if (!os) throw IoError("failed writing " + path.string());

  nlohmann::json sidecar{{"config", config.to_json()},
                         {"config_hash", trajectory.config_hash},
                         {"input_ref", trajectory.input_ref},
                         {"initial_state", std::vector<double>(trajectory.initial.data(),
                                                               trajectory.initial.data() + trajectory.initial.size())}};
  std::ofstream js(path.string() + ".json");
  if (!js) throw IoError("cannot open sidecar for " + path.string());
  js << sidecar.dump(2) << '\n';
}

ReservoirTrajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (magic != kTrajectoryMagic) throw IoError(path.string() + " is not a trajectory file");
  if (read_pod<std::uint32_t>(is) != kTrajectoryVersion)
    throw IoError(path.string() + ": unsupported trajectory version");
  std::array<char, 64> hash{};
  is.read(hash.data(), hash.size());
  ReservoirTrajectory tr;
  tr.config_hash.assign(hash.data(), strnlen(hash.data(), hash.size()));
  const auto cols = read_pod<std::uint64_t>(is);
  const auto rows = read_pod<std::uint64_t>(is);
  tr.warmup_discard = read_pod<std::uint64_t>(is);
  if (!is) throw IoError(path.string() + ": truncated header");
  tr.states.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  is.read(reinterpret_cast<char*>(tr.states.data()), static_cast<std::streamsize>(rows * cols * sizeof(double)));
  if (!is) throw IoError(path.string() + ": truncated body");

  std::ifstream js(path.string() + ".json");
  if (js) {
    const auto sidecar = nlohmann::json::parse(js);
    tr.input_ref = sidecar.value("input_ref", "");
    const auto initial = sidecar.value("initial_state", std::vector<double>{});
    tr.initial = Eigen::Map<const Eigen::VectorXd>(initial.data(), static_cast<Eigen::Index>(initial.size()));
  }
  return tr;
}

}  // namespace optrc
