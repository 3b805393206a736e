#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "optrc/error.hpp"
#include "optrc/mackey_glass.hpp"
#include "support/oracles.hpp"

using namespace optrc;

namespace {

double stddev(const std::vector<double>& v, std::size_t from, std::size_t count) {
  const double mean = std::accumulate(v.begin() + from, v.begin() + from + count, 0.0) / count;
  double ss = 0;
  for (std::size_t i = from; i < from + count; ++i) ss += (v[i] - mean) * (v[i] - mean);
  return std::sqrt(ss / count);
}

}  // namespace

TEST_CASE("parameter validation") {
  MGParams p;
  CHECK_NOTHROW(p.validate());
  p.tau = 17.05;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = MGParams{};
  p.gamma = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = MGParams{};
  p.sample_stride = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS(generate(MGParams{}, 0, 1), ConfigError);
}

TEST_CASE("generation is deterministic and seed dependent") {
  const auto a = generate(MGParams{}, 400, 11);
  const auto b = generate(MGParams{}, 400, 11);
  const auto c = generate(MGParams{}, 400, 12);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.size() == 400);
  CHECK(a.dt_sample == doctest::Approx(1.0));
}

TEST_CASE("canonical series stays chaotic and bounded") {
  const auto s = generate(MGParams{}, 3000, 5);
  for (double v : s.values) {
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
    CHECK(v < 2.0);
  }
  for (std::size_t from = 0; from + 500 <= s.size(); from += 500) CHECK(stddev(s.values, from, 500) > 0.05);
}

TEST_CASE("beta = 0 decays exponentially") {
  MGParams p;
  p.beta = 0.0;
  const auto s = generate(p, 50, 3);
  for (std::size_t i = 1; i < s.size(); ++i)
    CHECK(s[i] / s[i - 1] == doctest::Approx(std::exp(-p.gamma)).epsilon(1e-9));
}

TEST_CASE("matches an independent fine-step integrator") {
  MGParams p;
  p.warmup_steps = 0;
  const std::vector<double> history(static_cast<std::size_t>(p.delay_steps()) + 1, 1.2);
  const auto ours = generate_from_history(p, 300, history);

  const double h = 0.01;
  const std::vector<double> fine_history(static_cast<std::size_t>(std::lround(p.tau / h)) + 1, 1.2);
  const auto ref = oracle::mackey_glass(p.beta, p.gamma, p.tau, p.n_exp, h, fine_history, 100, 300);
  CHECK(oracle::relative_rms(ours.values, ref) < 1e-3);
}

TEST_CASE("halving dt changes samples by less than 1e-4 relative RMS") {
  MGParams coarse;
  coarse.warmup_steps = 0;
  MGParams fine = coarse;
  fine.dt = coarse.dt / 2;
  fine.sample_stride = coarse.sample_stride * 2;
  const auto a = generate_from_history(coarse, 500, std::vector<double>(coarse.delay_steps() + 1, 1.2));
  const auto b = generate_from_history(fine, 500, std::vector<double>(fine.delay_steps() + 1, 1.2));
  CHECK(oracle::relative_rms(a.values, b.values) < 1e-4);
}

TEST_CASE("history length is checked") {
  MGParams p;
  CHECK_THROWS_AS(generate_from_history(p, 10, std::vector<double>(5, 1.0)), DimensionError);
}

TEST_CASE("divergence reports the step") {
  MGParams q;
  q.n_exp = 1.0;
  q.beta = 1e308;
  q.warmup_steps = 0;
  try {
    generate_from_history(q, 50, std::vector<double>(q.delay_steps() + 1, 1e10));
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("normalization round trip and clipping") {
  TimeSeries t;
  t.values = {2.0, 4.0, 6.0};
  const auto n = normalize_to_unit(t);
  CHECK(n.values == std::vector<double>{0.0, 0.5, 1.0});
  const auto back = denormalize(n);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back[i] == doctest::Approx(t.values[i]).epsilon(1e-12));

  TimeSeries held;
  held.values = {1.0, 5.0, 7.0};
  const auto clipped = apply_normalization(held, *n.normalization);
  CHECK(clipped.values == std::vector<double>{0.0, 0.75, 1.0});

  TimeSeries unit;
  unit.values = {0.0, 0.3, 1.0};
  CHECK(normalize_to_unit(unit).values == unit.values);

  TimeSeries flat;
  flat.values = {3.0, 3.0};
  CHECK_THROWS_AS(normalize_to_unit(flat), DegenerateError);

  const auto s = generate(MGParams{}, 1000, 2);
  const auto ns = normalize_to_unit(s);
  const auto rs = denormalize(ns);
  CHECK(oracle::relative_rms(rs, s.values) < 1e-12);
}

TEST_CASE("lyapunov estimate") {
  const MGParams p;
  const std::size_t length = 6000;
  const double a = lyapunov_estimate(p, length, 1);
  const double b = lyapunov_estimate(p, length, 2);
  CHECK(a > 0.003);
  CHECK(a < 0.009);
  CHECK(std::abs(a - b) / std::max(a, b) < 0.2);

  MGParams decay = p;
  decay.beta = 0.0;
  CHECK(lyapunov_estimate(decay, length, 1) <= 0.0);

  CHECK_THROWS_AS(lyapunov_estimate(p, 100, 1), ConfigError);
}
