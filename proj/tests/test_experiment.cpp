#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <string>

#include "optrc/error.hpp"
#include "optrc/experiment.hpp"
#include "optrc/rng.hpp"

using namespace optrc;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.reservoir = ReservoirConfig::slm(64);
  c.horizons = {1, 2, 5, 10, 20, 50};
  c.train_length = 600;
  c.test_length = 600;
  c.n_test_windows = 100;
  c.averaging_runs = 3;
  c.n_traces = 2;
  return c;
}

}  // namespace

TEST_CASE("default horizons") {
  const auto h = default_horizons();
  for (int i = 1; i <= 50; ++i) CHECK(std::find(h.begin(), h.end(), i) != h.end());
  CHECK(h.back() == 1000);
  CHECK(std::is_sorted(h.begin(), h.end()));
  CHECK(std::adjacent_find(h.begin(), h.end()) == h.end());
  for (int m : {167, 333, 500, 667, 833, 1000}) CHECK(std::find(h.begin(), h.end(), m) != h.end());
  CHECK(default_horizons(20).size() == 20);
}

TEST_CASE("preset experiment configs validate") {
  CHECK_NOTHROW(ExperimentConfig::slm().validate());
  CHECK_NOTHROW(ExperimentConfig::dmd_basket().validate());
  CHECK(ExperimentConfig::slm().lyapunov_samples() == doctest::Approx(1.0 / 0.006));
  auto c = small_config();
  c.reservoir.leak_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.horizons = {1, 1};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.n_test_windows = 1000;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("test windows are evenly spaced inside the valid range") {
  const auto w = test_windows(2000, 100, 1000, 900);
  CHECK(w.size() == 900);
  CHECK(w.front() == 100);
  CHECK(w.back() < 1000);
  for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i] > w[i - 1]);
  CHECK(test_windows(300, 100, 50, 150) == std::vector<std::size_t>(
                                             [] {
                                               std::vector<std::size_t> v(150);
                                               std::iota(v.begin(), v.end(), std::size_t{100});
                                               return v;
                                             }()));
  CHECK_THROWS_AS(test_windows(300, 100, 50, 151), ConfigError);
  CHECK_THROWS_AS(test_windows(300, 100, 250, 1), ConfigError);
}

TEST_CASE("run seeds are distinct and audited") {
  std::vector<RunSeeds> seeds;
  std::set<std::uint64_t> all;
  for (std::size_t r = 0; r < 20; ++r) {
    seeds.push_back(derive_run_seeds(42, r));
    const auto& s = seeds.back();
    for (auto v : {s.train_series, s.test_series, s.tm, s.bias, s.init_train, s.init_test}) all.insert(v);
  }
  CHECK(all.size() == 20 * 6);
  CHECK_NOTHROW(audit_seeds(seeds));
  seeds[3].test_series = seeds[7].train_series;
  CHECK_THROWS_AS(audit_seeds(seeds), NumericalError);
  CHECK(derive_run_seeds(42, 0).tm == derive_run_seeds(42, 0).tm);
  CHECK(derive_run_seeds(42, 0).tm != derive_run_seeds(43, 0).tm);
}

TEST_CASE("oracle predictor scores zero") {
  auto c = small_config();
  c.predictor = PredictorMode::oracle;
  const auto result = run_experiment(c);
  for (const auto& p : result.curve.points) {
    CHECK(p.nmse == 0.0);
    CHECK(p.std == 0.0);
  }
}

TEST_CASE("training-mean predictor matches a direct computation") {
  auto c = small_config();
  c.predictor = PredictorMode::training_mean;
  const auto result = run_experiment(c);
  const auto windows = test_windows(c.test_length, c.reservoir.warmup_discard, c.max_horizon(), c.n_test_windows);
  for (std::size_t r = 0; r < c.averaging_runs; ++r) {
    const auto seeds = derive_run_seeds(c.master_seed, r);
    const auto train = normalize_to_unit(generate(c.mackey_glass, c.train_length, seeds.train_series));
    const auto test = apply_normalization(generate(c.mackey_glass, c.test_length, seeds.test_series),
                                          *train.normalization);
    double mean_train = 0;
    for (double v : train.values) mean_train += v;
    mean_train /= train.size();
    double mean_test = 0, var = 0;
    for (double v : test.values) mean_test += v;
    mean_test /= test.size();
    for (double v : test.values) var += (v - mean_test) * (v - mean_test);
    var /= test.size();
    for (std::size_t j = 0; j < c.horizons.size(); ++j) {
      double se = 0;
      for (auto t0 : windows) se += std::pow(mean_train - test[t0 + c.horizons[j]], 2);
      CHECK(result.curve.per_run[r][j] == doctest::Approx(se / windows.size() / var).epsilon(1e-12));
    }
  }
  const auto band = result.curve.band(1, 50);
  CHECK(band.mean > 0.8);
  CHECK(band.mean < 1.5);
}

TEST_CASE("ridge forecasts are bit-reproducible and beat the mean") {
  const auto c = small_config();
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  CHECK(a.curve.per_run == b.curve.per_run);
  CHECK(a.curve.config_hash == c.hash());
  REQUIRE(a.traces.size() == 2);
  CHECK(a.traces[0].predicted == b.traces[0].predicted);
  CHECK(a.traces[0].truth.size() == c.horizons.size());

  auto other = c;
  other.master_seed = 43;
  CHECK(run_experiment(other).curve.per_run != a.curve.per_run);

  CHECK(a.curve.at(1).nmse < 0.1);
  CHECK(a.curve.band(1, 5).mean < a.curve.band(20, 50).mean);
  CHECK(a.curve.at(50).horizon_lyapunov == doctest::Approx(50 * 0.006));
  CHECK(a.seeds.size() == 3);
}

TEST_CASE("curve helpers") {
  NMSECurve curve;
  curve.points = {{1, 0.0, 0.1, 0.0}, {5, 0.0, 0.2, 0.0}, {9, 0.0, 0.4, 0.0}};
  curve.per_run = {{0.1, 0.2, 0.3}, {0.1, 0.2, 0.5}};
  CHECK(curve.at(5).nmse == 0.2);
  CHECK_THROWS_AS(curve.at(4), ConfigError);
  CHECK(curve.nearest(8.0).horizon == 9);
  const auto band = curve.band(5, 9);
  CHECK(band.mean == doctest::Approx(0.3));
  CHECK(band.std == doctest::Approx(std::sqrt(0.005)));
  CHECK_THROWS_AS(curve.band(2, 4), ConfigError);
  CHECK(pooled_std(3.0, 4.0) == doctest::Approx(std::sqrt(12.5)));
}

TEST_CASE("with_parameter edits one dotted path") {
  const auto c = small_config();
  const auto d = with_parameter(c, "reservoir.leak_rate", 0.5);
  CHECK(d.reservoir.leak_rate == 0.5);
  CHECK(d.reservoir.n_res == 64);
  CHECK(d.alpha == c.alpha);
  try {
    with_parameter(c, "reservoir.leek_rate", 0.5);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("leak_rate") != std::string::npos);
  }
  CHECK_THROWS_AS(with_parameter(c, "reservoir.leak_rate", 2.0), ConfigError);
}

TEST_CASE("a single-cell grid reproduces the plain run") {
  auto c = small_config();
  c.averaging_runs = 2;
  c.grid["alpha"] = {1.0};
  c.validation_band = {1, 10};
  const auto cells = grid_search(c);
  REQUIRE(cells.size() == 1);
  auto plain = c;
  plain.grid.clear();
  plain.alpha = 1.0;
  CHECK(cells[0].curve.per_run == run_experiment(plain).curve.per_run);
  CHECK(cells[0].score.mean == doctest::Approx(run_experiment(plain).curve.band(1, 10).mean));
}

TEST_CASE("grid cells are ranked by validation score") {
  auto c = small_config();
  c.averaging_runs = 2;
  c.grid["reservoir.leak_rate"] = {0.05, 0.3, 1.0};
  c.validation_band = {1, 20};
  const auto cells = grid_search(c);
  REQUIRE(cells.size() == 3);
  for (std::size_t i = 1; i < cells.size(); ++i) CHECK(cells[i - 1].score.mean <= cells[i].score.mean);

  auto bad = c;
  bad.grid["reservoir.leak_rate"] = {0.3, 1.5};
  CHECK_THROWS_AS(grid_search(bad), ConfigError);
  auto empty = c;
  empty.grid.clear();
  CHECK_THROWS_AS(grid_search(empty), ConfigError);
}

TEST_CASE("csv writers") {
  const auto dir = std::filesystem::temp_directory_path() / "optrc_experiment_csv";
  std::filesystem::create_directories(dir);
  auto c = small_config();
  c.predictor = PredictorMode::training_mean;
  const auto result = run_experiment(c);
  write_nmse_csv(dir / "nmse.csv", result.curve);
  write_predictions_csv(dir / "pred.csv", result.traces, c.lyapunov_samples());

  std::ifstream nmse(dir / "nmse.csv");
  std::string line;
  std::getline(nmse, line);
  CHECK(line == "horizon,horizon_lyapunov,nmse,std");
  std::size_t rows = 0;
  while (std::getline(nmse, line)) ++rows;
  CHECK(rows == c.horizons.size());

  std::ifstream pred(dir / "pred.csv");
  std::getline(pred, line);
  CHECK(line == "trace,run,t0,t,horizon,horizon_lyapunov,truth,predicted");
  rows = 0;
  while (std::getline(pred, line)) ++rows;
  CHECK(rows == result.traces.size() * c.horizons.size());

  CHECK_THROWS_AS(write_nmse_csv(dir / "no" / "such" / "dir.csv", result.curve), IoError);
  std::filesystem::remove_all(dir);
}
