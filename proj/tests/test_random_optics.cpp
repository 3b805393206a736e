#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <Eigen/Dense>

#include "optrc/error.hpp"
#include "optrc/random_optics.hpp"
#include "optrc/rng.hpp"
#include "support/oracles.hpp"

using namespace optrc;

namespace {

Eigen::VectorXcd unit_phase_frame(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  Eigen::VectorXcd frame(static_cast<Eigen::Index>(n));
  for (auto& v : frame) v = std::polar(1.0, rng.uniform(0.0, 2.0 * M_PI));
  return frame;
}

}  // namespace

TEST_CASE("entries are reproducible from the seed") {
  const auto a = build_tm(64, 32, 5);
  const auto b = build_tm(64, 32, 5);
  const auto c = build_tm(64, 32, 6);
  CHECK(a.entries == b.entries);
  CHECK(a.entries != c.entries);
  CHECK(a.n_out == 64);
  CHECK(a.n_in == 32);
  CHECK(a.entries.rows() == 64);
  CHECK(a.entries.cols() == 32);
}

TEST_CASE("entry statistics") {
  const auto tm = build_tm(512, 512, 3);
  const double n = 512.0 * 512.0;
  const double mean_re = tm.entries.real().sum() / n;
  const double mean_im = tm.entries.imag().sum() / n;
  const double var_re = tm.entries.real().array().square().sum() / n;
  const double var_im = tm.entries.imag().array().square().sum() / n;
  const double cross = (tm.entries.real().array() * tm.entries.imag().array()).sum() / n;
  const double expected = 1.0 / (2.0 * 512.0);
  // Four standard errors of the sample mean.
  const double tolerance = 4.0 * std::sqrt(expected / n);
  CHECK(std::abs(mean_re) < tolerance);
  CHECK(std::abs(mean_im) < tolerance);
  CHECK(var_re == doctest::Approx(expected).epsilon(0.01));
  CHECK(var_im == doctest::Approx(expected).epsilon(0.01));
  CHECK(std::abs(cross) < 0.01 * expected);
}

TEST_CASE("column norms concentrate at 1") {
  const auto tm = build_tm(1024, 1024, 9);
  for (Eigen::Index j = 0; j < tm.entries.cols(); ++j) {
    const double norm2 = tm.entries.col(j).squaredNorm();
    CHECK(std::abs(norm2 - 1.0) < 0.2);
  }
}

TEST_CASE("singular values follow the quarter-circle law") {
  const auto tm = build_tm(400, 400, 17);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(tm.entries);
  const Eigen::VectorXd s = svd.singularValues();
  const std::vector<double> sample(s.data(), s.data() + s.size());
  // Singular values repel, so the empirical CDF tracks the limit more tightly
  // than an i.i.d. sample would; the i.i.d. KS bound is conservative here.
  const double d = oracle::ks_statistic(sample, oracle::quarter_circle_cdf);
  CHECK(oracle::ks_pvalue(d, sample.size()) > 0.05);
  CHECK(s.maxCoeff() < 2.2);
}

TEST_CASE("speckle intensities are exponential with unit mean") {
  const std::size_t n_in = 256;
  const auto tm = build_tm(4000, n_in, 21);
  const Eigen::VectorXcd frame = unit_phase_frame(n_in, 4) / std::sqrt(1.0);
  const Eigen::VectorXd intensity = project_intensity(tm, frame);
  CHECK(intensity.mean() == doctest::Approx(1.0).epsilon(0.05));
  const std::vector<double> sample(intensity.data(), intensity.data() + intensity.size());
  const double d = oracle::ks_statistic(sample, [](double v) { return v <= 0 ? 0.0 : 1.0 - std::exp(-v); });
  CHECK(oracle::ks_pvalue(d, sample.size()) > 0.01);

  const Eigen::VectorXd modulus = project(tm, frame);
  CHECK((modulus.array().square() - intensity.array()).abs().maxCoeff() < 1e-12);
  CHECK((transmit(tm, frame).cwiseAbs() - modulus).norm() < 1e-12);
}

TEST_CASE("norms are approximately preserved up to the dimension ratio") {
  const std::size_t n_in = 300, n_out = 1200;
  const auto tm = build_tm(n_out, n_in, 8);
  const double scale = std::sqrt(static_cast<double>(n_out) / n_in);
  RandomStream rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXcd x(static_cast<Eigen::Index>(n_in));
    for (auto& v : x) v = rng.complex_normal(1.0);
    const double ratio = transmit(tm, x).norm() / x.norm() / scale;
    CHECK(ratio > 0.9);
    CHECK(ratio < 1.1);
  }
}

TEST_CASE("weighted columns carry their variance") {
  const std::vector<double> variance{0.5, 2.0, 8.0};
  const auto tm = build_weighted_tm(20000, variance, 3);
  for (std::size_t j = 0; j < variance.size(); ++j)
    CHECK(tm.entries.col(static_cast<Eigen::Index>(j)).squaredNorm() / 20000.0 ==
          doctest::Approx(variance[j]).epsilon(0.03));
}

TEST_CASE("dimension and capacity errors") {
  CHECK_THROWS_AS(build_tm(0, 4, 1), DimensionError);
  CHECK_THROWS_AS(build_tm(1u << 20, 1u << 20, 1), CapacityError);
  CHECK_THROWS_AS(build_tm(1024, 1024, 1, 1024), CapacityError);
  const auto tm = build_tm(8, 4, 1);
  CHECK_THROWS_AS(project(tm, Eigen::VectorXcd::Ones(5)), DimensionError);
}

TEST_CASE("save and load round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "optrc_tm_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "tm.bin";
  const auto tm = build_tm(33, 17, 77);
  save_tm(path, tm);
  const auto back = load_tm(path);
  CHECK(back.n_out == tm.n_out);
  CHECK(back.n_in == tm.n_in);
  CHECK(back.seed == tm.seed);
  CHECK(back.entries == tm.entries);
  CHECK_THROWS_AS(load_tm(dir / "missing.bin"), IoError);
  {
    std::ofstream junk(dir / "junk.bin", std::ios::binary);
    junk << "not a matrix";
  }
  CHECK_THROWS_AS(load_tm(dir / "junk.bin"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("noise model") {
  NoiseModel none;
  Eigen::VectorXd readings = Eigen::VectorXd::LinSpaced(1000, 0.5, 2.0);
  CHECK(apply_noise(readings, none, 1) == readings);

  NoiseModel additive;
  additive.additive_sigma = 0.1;
  const auto a = apply_noise(readings, additive, 5);
  const auto b = apply_noise(readings, additive, 5);
  const auto c = apply_noise(readings, additive, 6);
  CHECK(a == b);
  CHECK(a != c);
  const Eigen::ArrayXd delta = a.array().square() - readings.array().square();
  CHECK(std::abs(delta.mean()) < 0.015);
  CHECK(std::sqrt(delta.square().mean()) == doctest::Approx(0.1).epsilon(0.1));
  CHECK(a.minCoeff() >= 0.0);

  NoiseModel quantized;
  quantized.quantize_bits = 4;
  quantized.saturation_level = 3.0;
  const auto q = apply_noise(readings, quantized, 1);
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    const double level = q[k] * q[k] / 3.0 * 15.0;
    CHECK(std::abs(level - std::round(level)) < 1e-9);
    CHECK(q[k] * q[k] <= 3.0 + 1e-12);
  }

  NoiseModel bad;
  bad.quantize_bits = 8;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.quantize_bits = 0;
  bad.additive_sigma = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
