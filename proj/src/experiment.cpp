#include "optrc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "optrc/config.hpp"
#include "optrc/digest.hpp"
#include "optrc/error.hpp"
#include "optrc/rng.hpp"

namespace optrc {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

void finish_csv(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("failed writing " + path.string());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double population_variance(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

struct RunOutput {
  std::vector<double> nmse;
  std::vector<PredictionTrace> traces;
};

RunOutput run_single(const ExperimentConfig& cfg, const RunSeeds& seeds) {
  const TimeSeries train = normalize_to_unit(generate(cfg.mackey_glass, cfg.train_length, seeds.train_series));
  const TimeSeries test =
      apply_normalization(generate(cfg.mackey_glass, cfg.test_length, seeds.test_series), *train.normalization);
  const double variance = population_variance(test.values);
  if (!(variance > 0.0)) throw DegenerateError("test series has zero variance");

  const std::size_t warmup = cfg.reservoir.warmup_discard;
  const int max_h = cfg.max_horizon();
  const auto k = static_cast<Eigen::Index>(cfg.horizons.size());
  const std::vector<std::size_t> windows = test_windows(cfg.test_length, warmup, max_h, cfg.n_test_windows);
  const auto n_win = static_cast<Eigen::Index>(windows.size());

  Eigen::MatrixXd pred(n_win, k);
  switch (cfg.predictor) {
    case PredictorMode::oracle:
      for (Eigen::Index i = 0; i < n_win; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
          pred(i, j) = test[windows[static_cast<std::size_t>(i)] + static_cast<std::size_t>(cfg.horizons[static_cast<std::size_t>(j)])];
      break;
    case PredictorMode::training_mean: {
      const double mean = std::accumulate(train.values.begin(), train.values.end(), 0.0) /
                          static_cast<double>(train.size());
      pred.setConstant(mean);
      break;
    }
    case PredictorMode::ridge: {
      ReservoirConfig rc = cfg.reservoir;
      rc.tm_seed = seeds.tm;
      rc.bias_seed = seeds.bias;
      rc.init_seed = seeds.init_train;
      Reservoir reservoir(rc);
      reservoir.calibrate(train);
      const ReservoirTrajectory tr = reservoir.run(train, seeds.init_train);
      const ReservoirTrajectory te = reservoir.run(test, seeds.init_test);

      // Row t holds x(t+1), the state after u(t); its targets are u(t+h).
      const auto rows = static_cast<Eigen::Index>(cfg.train_length - warmup - static_cast<std::size_t>(max_h));
      Eigen::MatrixXd targets(rows, k);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index j = 0; j < k; ++j)
          targets(r, j) = train[warmup + static_cast<std::size_t>(r) + static_cast<std::size_t>(cfg.horizons[static_cast<std::size_t>(j)])];
      const ReadoutModel model =
          fit_ridge(tr.states.middleRows(static_cast<Eigen::Index>(warmup), rows), targets, cfg.alpha, cfg.horizons,
                    FitOptions{cfg.center_features});

      FeatureMatrix features(n_win, te.states.cols());
      for (Eigen::Index i = 0; i < n_win; ++i)
        features.row(i) = te.states.row(static_cast<Eigen::Index>(windows[static_cast<std::size_t>(i)]));
      pred = predict_rows(model, features);
      break;
    }
  }

  RunOutput out;
  out.nmse.resize(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto h = static_cast<std::size_t>(cfg.horizons[static_cast<std::size_t>(j)]);
    double se = 0.0;
    for (Eigen::Index i = 0; i < n_win; ++i) {
      const double e = pred(i, j) - test[windows[static_cast<std::size_t>(i)] + h];
      se += e * e;
    }
    out.nmse[static_cast<std::size_t>(j)] = se / static_cast<double>(n_win) / variance;
  }

  if (seeds.run == 0) {
    const std::size_t n_traces = std::min(cfg.n_traces, windows.size());
    for (std::size_t m = 0; m < n_traces; ++m) {
      const std::size_t i = n_traces > 1 ? m * (windows.size() - 1) / (n_traces - 1) : 0;
      PredictionTrace trace{seeds.run, windows[i], cfg.horizons, {}, {}};
      for (Eigen::Index j = 0; j < k; ++j) {
        trace.truth.push_back(test[windows[i] + static_cast<std::size_t>(cfg.horizons[static_cast<std::size_t>(j)])]);
        trace.predicted.push_back(pred(static_cast<Eigen::Index>(i), j));
      }
      out.traces.push_back(std::move(trace));
    }
  }
  return out;
}

/// Rough peak memory of one ridge run; used to bound how many run at once.
std::size_t run_footprint(const ExperimentConfig& cfg) {
  if (cfg.predictor != PredictorMode::ridge) return 1 << 20;
  const std::size_t n = cfg.reservoir.n_res;
  std::size_t columns = n;
  if (cfg.reservoir.is_optical())
    columns = cfg.reservoir.spec_in.encoded_length() + n * cfg.reservoir.spec_res.encoded_length() + 1;
  const std::size_t matrix = cfg.reservoir.is_optical() ? n * columns * 16 : n * n * 8;
  const std::size_t states = (cfg.train_length + cfg.test_length) * n * 8;
  const std::size_t solve = 3 * n * n * 8;
  return matrix + states + solve;
}

}  // namespace

std::string_view to_string(PredictorMode mode) {
  switch (mode) {
    case PredictorMode::ridge: return "ridge";
    case PredictorMode::training_mean: return "training_mean";
    case PredictorMode::oracle: return "oracle";
  }
  return "unknown";
}

PredictorMode predictor_from_string(std::string_view name) {
  for (auto m : {PredictorMode::ridge, PredictorMode::training_mean, PredictorMode::oracle})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown predictor '" + std::string(name) + "' (expected ridge, training_mean or oracle)");
}

std::vector<int> default_horizons(int max_horizon, double lyapunov_samples) {
  std::set<int> h;
  for (int i = 1; i <= std::min(50, max_horizon); ++i) h.insert(i);
  if (max_horizon > 50) {
    constexpr int kLogPoints = 30;
    for (int i = 0; i <= kLogPoints; ++i)
      h.insert(static_cast<int>(std::lround(50.0 * std::pow(max_horizon / 50.0, i / double(kLogPoints)))));
    for (int m = 1; std::lround(m * lyapunov_samples) <= max_horizon; ++m)
      h.insert(static_cast<int>(std::lround(m * lyapunov_samples)));
  }
  return {h.begin(), h.end()};
}

// ---------------------------------------------------------------------------
// ExperimentConfig

void ExperimentConfig::validate() const {
  reservoir.validate();
  if (!(reservoir.leak_rate > 0.0)) throw ConfigError("reservoir.leak_rate must lie in (0, 1]");
  if (reservoir.input_dim != 1) throw ConfigError("reservoir.input_dim must be 1 for scalar forecasting");
  mackey_glass.validate();
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (horizons.empty()) throw ConfigError("horizons must not be empty");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1 || horizons[i] > 1000) throw ConfigError("horizons must lie in [1, 1000]");
    if (i > 0 && horizons[i] <= horizons[i - 1]) throw ConfigError("horizons must be strictly increasing");
  }
  const auto needed = reservoir.warmup_discard + static_cast<std::size_t>(max_horizon());
  if (train_length <= needed)
    throw ConfigError("train_length must exceed max horizon + warmup_discard (" + std::to_string(needed) + ")");
  if (test_length <= needed)
    throw ConfigError("test_length must exceed max horizon + warmup_discard (" + std::to_string(needed) + ")");
  if (n_test_windows < 1 || n_test_windows > test_length - needed)
    throw ConfigError("n_test_windows must lie in [1, " + std::to_string(test_length - needed) + "]");
  if (averaging_runs < 1) throw ConfigError("averaging_runs must be >= 1");
  if (!(lyapunov_exponent > 0.0)) throw ConfigError("lyapunov_exponent must be > 0");
  if (validation_band[0] < 1 || validation_band[1] < validation_band[0])
    throw ConfigError("validation_band must be [lo, hi] with 1 <= lo <= hi");
  for (const auto& [path, values] : grid)
    if (values.empty()) throw ConfigError("grid dimension '" + path + "' has no values");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json res = reservoir.to_json();
  for (const char* key : {"tm_seed", "bias_seed", "init_seed"}) res.erase(key);
  nlohmann::json grid_json = nlohmann::json::object();
  for (const auto& [path, values] : grid) grid_json[path] = values;
  return {
      {"seed", master_seed},
      {"alpha", alpha},
      {"horizons", horizons},
      {"train_length", train_length},
      {"test_length", test_length},
      {"n_test_windows", n_test_windows},
      {"averaging_runs", averaging_runs},
      {"lyapunov_exponent", lyapunov_exponent},
      {"predictor", to_string(predictor)},
      {"center_features", center_features},
      {"n_traces", n_traces},
      {"grid", grid_json},
      {"validation_band", validation_band},
      {"mackey_glass",
       {{"beta", mackey_glass.beta},
        {"gamma", mackey_glass.gamma},
        {"tau", mackey_glass.tau},
        {"n_exp", mackey_glass.n_exp},
        {"dt", mackey_glass.dt},
        {"sample_stride", mackey_glass.sample_stride},
        {"warmup_steps", mackey_glass.warmup_steps}}},
      {"reservoir", res},
  };
}

std::string ExperimentConfig::hash() const { return sha256_hex(to_json().dump()); }

ExperimentConfig ExperimentConfig::slm() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::dmd_basket() {
  ExperimentConfig c;
  c.reservoir = ReservoirConfig::dmd_basket(512, 10);
  c.alpha = 0.1;
  c.averaging_runs = 5;
  return c;
}

// ---------------------------------------------------------------------------
// Seeds and windows

nlohmann::json RunSeeds::to_json() const {
  return {{"run", run},          {"train_series", train_series}, {"test_series", test_series},
          {"tm", tm},            {"bias", bias},                 {"init_train", init_train},
          {"init_test", init_test}};
}

RunSeeds derive_run_seeds(std::uint64_t master_seed, std::size_t run) {
  const std::uint64_t root = derive_seed(master_seed, "run", run);
  return {run,
          derive_seed(root, "train-series"),
          derive_seed(root, "test-series"),
          derive_seed(root, "transmission-matrix"),
          derive_seed(root, "bias"),
          derive_seed(root, "init-train"),
          derive_seed(root, "init-test")};
}

void audit_seeds(const std::vector<RunSeeds>& seeds) {
  std::set<std::uint64_t> train;
  for (const RunSeeds& s : seeds) train.insert(s.train_series);
  for (const RunSeeds& s : seeds)
    if (train.count(s.test_series))
      throw NumericalError("seed audit: test series seed of run " + std::to_string(s.run) +
                           " also drives a training series");
}

std::vector<std::size_t> test_windows(std::size_t length, std::size_t warmup, int max_horizon, std::size_t count) {
  const std::size_t end = length - static_cast<std::size_t>(max_horizon);
  if (end <= warmup || count < 1 || count > end - warmup)
    throw ConfigError("test windows: cannot place " + std::to_string(count) + " windows in [" +
                      std::to_string(warmup) + ", " + std::to_string(end) + ")");
  std::vector<std::size_t> t0(count);
  const std::size_t span = end - warmup;
  for (std::size_t i = 0; i < count; ++i) t0[i] = warmup + i * span / count;
  return t0;
}

// ---------------------------------------------------------------------------
// Curves

const NMSEPoint& NMSECurve::at(int horizon) const {
  for (const NMSEPoint& p : points)
    if (p.horizon == horizon) return p;
  throw ConfigError("horizon " + std::to_string(horizon) + " is not on the curve");
}

const NMSEPoint& NMSECurve::nearest(double horizon) const {
  if (points.empty()) throw ConfigError("empty NMSE curve");
  return *std::min_element(points.begin(), points.end(), [&](const NMSEPoint& a, const NMSEPoint& b) {
    return std::abs(a.horizon - horizon) < std::abs(b.horizon - horizon);
  });
}

BandStat NMSECurve::band(double lo, double hi) const {
  std::vector<double> per_run_mean;
  for (const auto& run : per_run) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < points.size(); ++j)
      if (points[j].horizon >= lo && points[j].horizon <= hi) {
        sum += run[j];
        ++n;
      }
    if (n == 0) throw ConfigError("no horizons inside the band [" + fmt(lo) + ", " + fmt(hi) + "]");
    per_run_mean.push_back(sum / static_cast<double>(n));
  }
  if (per_run_mean.empty()) throw ConfigError("empty NMSE curve");
  const double mean = std::accumulate(per_run_mean.begin(), per_run_mean.end(), 0.0) /
                      static_cast<double>(per_run_mean.size());
  return {mean, sample_std(per_run_mean)};
}

double pooled_std(double s1, double s2) { return std::sqrt(0.5 * (s1 * s1 + s2 * s2)); }

// ---------------------------------------------------------------------------
// Pipelines

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  for (std::size_t r = 0; r < config.averaging_runs; ++r)
    result.seeds.push_back(derive_run_seeds(config.master_seed, r));
  audit_seeds(result.seeds);

  std::vector<RunOutput> outputs(config.averaging_runs);
  const int hardware = tbb::this_task_arena::max_concurrency();
  const auto by_memory = static_cast<int>(std::max<std::size_t>(1, kDefaultMemoryBudget / run_footprint(config)));
  tbb::task_arena arena(std::max(1, std::min(hardware, by_memory)));
  arena.execute([&] {
    tbb::parallel_for(std::size_t{0}, config.averaging_runs,
                      [&](std::size_t r) { outputs[r] = run_single(config, result.seeds[r]); });
  });

  NMSECurve& curve = result.curve;
  curve.config_hash = config.hash();
  curve.lyapunov_exponent = config.lyapunov_exponent;
  for (const RunOutput& o : outputs) {
    curve.per_run.push_back(o.nmse);
    result.traces.insert(result.traces.end(), o.traces.begin(), o.traces.end());
  }
  const double samples = config.lyapunov_samples();
  for (std::size_t j = 0; j < config.horizons.size(); ++j) {
    std::vector<double> column;
    for (const auto& run : curve.per_run) column.push_back(run[j]);
    const double mean = std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(column.size());
    if (!std::isfinite(mean)) throw NumericalError("non-finite NMSE at horizon " + std::to_string(config.horizons[j]));
    curve.points.push_back({config.horizons[j], config.horizons[j] / samples, mean, sample_std(column)});
  }
  return result;
}

ExperimentConfig with_parameter(const ExperimentConfig& config, const std::string& path, const nlohmann::json& value) {
  nlohmann::json j = config.to_json();
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) {
      std::vector<std::string> keys;
      if (node->is_object())
        for (const auto& item : node->items()) keys.push_back(item.key());
      throw ConfigError("unknown parameter path '" + path + "'" + nearest_key_hint(key, keys));
    }
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
  return config_from_json(j).config;
}

std::vector<GridCell> grid_search(const ExperimentConfig& config) {
  config.validate();
  if (config.grid.empty()) throw ConfigError("grid search needs at least one grid dimension");

  std::vector<std::map<std::string, nlohmann::json>> cells{{}};
  for (const auto& [path, values] : config.grid) {
    std::vector<std::map<std::string, nlohmann::json>> next;
    for (const auto& partial : cells)
      for (const auto& v : values) {
        auto cell = partial;
        cell[path] = v;
        next.push_back(std::move(cell));
      }
    cells = std::move(next);
  }

  // Validate every cell before running any of them.
  std::vector<ExperimentConfig> configs;
  for (const auto& params : cells) {
    ExperimentConfig c = config;
    for (const auto& [path, v] : params) c = with_parameter(c, path, v);
    c.grid.clear();
    c.validate();
    configs.push_back(std::move(c));
  }

  std::vector<GridCell> out(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out[i].params = cells[i];
    out[i].curve = run_experiment(configs[i]).curve;
    out[i].score = out[i].curve.band(config.validation_band[0], config.validation_band[1]);
  }
  std::stable_sort(out.begin(), out.end(), [](const GridCell& a, const GridCell& b) {
    if (a.score.mean != b.score.mean) return a.score.mean < b.score.mean;
    return a.params < b.params;
  });
  return out;
}

std::vector<ComparisonArm> compare_encodings(const ExperimentConfig& base, const CompareOptions& options) {
  std::vector<std::pair<std::string, ReservoirConfig>> arms{
      {"tanh_esn", ReservoirConfig::classical(options.n_res)},
      {"basket", ReservoirConfig::dmd_basket(options.n_res, options.n_bin)},
      {"threshold", ReservoirConfig::dmd_threshold(options.n_res, options.n_bin)},
      {"binary_esn", ReservoirConfig::binary_esn(options.n_res, options.n_bin)},
  };
  if (options.matched_pixels)
    arms.emplace_back("binary_esn_matched",
                      ReservoirConfig::binary_esn(options.n_res * static_cast<std::size_t>(options.n_bin), options.n_bin));

  std::vector<ExperimentConfig> configs;
  for (auto& [name, rc] : arms) {
    rc.warmup_discard = base.reservoir.warmup_discard;
    rc.noise = base.reservoir.noise;
    ExperimentConfig c = base;
    c.reservoir = rc;
    c.averaging_runs = options.runs;
    c.grid.clear();
    c.validate();
    configs.push_back(std::move(c));
  }

  const double band_hi = options.band_lyapunov * base.lyapunov_samples();
  std::vector<ComparisonArm> out;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    ComparisonArm arm{arms[i].first, arms[i].second, run_experiment(configs[i]).curve, {}, 0};
    arm.score = arm.curve.band(1.0, band_hi);
    if (arm.reservoir.is_optical()) arm.frame_pixels = arm.reservoir.frame_layout().total();
    out.push_back(std::move(arm));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

void write_nmse_csv(const std::filesystem::path& path, const NMSECurve& curve) {
  auto os = open_csv(path);
  os << "horizon,horizon_lyapunov,nmse,std\n";
  for (const NMSEPoint& p : curve.points)
    os << p.horizon << ',' << fmt(p.horizon_lyapunov) << ',' << fmt(p.nmse) << ',' << fmt(p.std) << '\n';
  finish_csv(os, path);
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<PredictionTrace>& traces,
                           double lyapunov_samples) {
  auto os = open_csv(path);
  os << "trace,run,t0,t,horizon,horizon_lyapunov,truth,predicted\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const PredictionTrace& tr = traces[i];
    for (std::size_t j = 0; j < tr.horizons.size(); ++j)
      os << i << ',' << tr.run << ',' << tr.t0 << ',' << tr.t0 + static_cast<std::size_t>(tr.horizons[j]) << ','
         << tr.horizons[j] << ',' << fmt(tr.horizons[j] / lyapunov_samples) << ',' << fmt(tr.truth[j]) << ','
         << fmt(tr.predicted[j]) << '\n';
  }
  finish_csv(os, path);
}

void write_gridsearch_csv(const std::filesystem::path& path, const std::vector<GridCell>& cells) {
  auto os = open_csv(path);
  os << "rank";
  if (!cells.empty())
    for (const auto& [key, v] : cells.front().params) os << ',' << key;
  os << ",score,score_std,config_hash\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    os << i + 1;
    for (const auto& [key, v] : cells[i].params) os << ',' << (v.is_string() ? v.get<std::string>() : v.dump());
    os << ',' << fmt(cells[i].score.mean) << ',' << fmt(cells[i].score.std) << ',' << cells[i].curve.config_hash
       << '\n';
  }
  finish_csv(os, path);
}

void write_comparison_csv(const std::filesystem::path& path, const std::vector<ComparisonArm>& arms,
                          const std::array<double, 2>& band) {
  auto os = open_csv(path);
  os << "arm,backend,encoding,n_res,frame_pixels,band_lo,band_hi,nmse,std\n";
  for (const ComparisonArm& a : arms) {
    std::string_view encoding = to_string(a.reservoir.spec_res.kind);
    if (a.reservoir.backend == Backend::classical_esn) encoding = "none";
    if (a.reservoir.backend == Backend::binary_esn) encoding = to_string(a.reservoir.spec_in.kind);
    os << a.name << ',' << to_string(a.reservoir.backend) << ',' << encoding << ','
       << a.reservoir.n_res << ',' << a.frame_pixels << ',' << fmt(band[0]) << ',' << fmt(band[1]) << ','
       << fmt(a.score.mean) << ',' << fmt(a.score.std) << '\n';
  }
  finish_csv(os, path);
}

}  // namespace optrc
