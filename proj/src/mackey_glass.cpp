#include "optrc/mackey_glass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "optrc/error.hpp"
#include "optrc/rng.hpp"

namespace optrc {

void MGParams::validate() const {
  if (!(beta >= 0.0)) throw ConfigError("mackey_glass.beta must be >= 0");
  if (!(gamma > 0.0)) throw ConfigError("mackey_glass.gamma must be > 0");
  if (!(tau > 0.0)) throw ConfigError("mackey_glass.tau must be > 0");
  if (!(n_exp > 0.0)) throw ConfigError("mackey_glass.n_exp must be > 0");
  if (!(dt > 0.0)) throw ConfigError("mackey_glass.dt must be > 0");
  const double ratio = tau / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0)
    throw ConfigError("mackey_glass.tau / dt must be an integer >= 1, got " +
                      std::to_string(ratio));
  if (sample_stride < 1) throw ConfigError("mackey_glass.sample_stride must be >= 1");
  if (warmup_steps < 0) throw ConfigError("mackey_glass.warmup_steps must be >= 0");
}

int MGParams::delay_steps() const { return static_cast<int>(std::lround(tau / dt)); }

namespace {

// Discretized delay state: u on the dt grid over [t - tau, t] plus the slope
// du/dt at each node. The delayed value at a half step comes from the cubic
// Hermite interpolant between the two bracketing nodes.
class DelayIntegrator {
 public:
  DelayIntegrator(const MGParams& p, std::span<const double> history)
      : p_(p),
        delay_(p.delay_steps()),
        ring_(history.begin(), history.end()),
        slope_(history.size(), 0.0) {}

  double current() const { return ring_[index(delay_)]; }

  void step() {
    const double delayed0 = ring_[index(0)];
    const double delayed1 = ring_[index(1)];
    const double h = p_.dt;
    const double delayed_mid =
        0.5 * (delayed0 + delayed1) + 0.125 * h * (slope_[index(0)] - slope_[index(1)]);
    const double u = current();
    const double k1 = rhs(u, delayed0);
    const double k2 = rhs(u + 0.5 * h * k1, delayed_mid);
    const double k3 = rhs(u + 0.5 * h * k2, delayed_mid);
    const double k4 = rhs(u + h * k3, delayed1);
    const double next = u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(next)) throw DivergenceError("Mackey-Glass integration diverged", steps_);
    slope_[index(delay_)] = k1;
    // The oldest node u(t - tau) is no longer needed after this step.
    ring_[head_] = next;
    slope_[head_] = 0.0;
    head_ = (head_ + 1) % ring_.size();
    ++steps_;
  }

  /// Node k of the window, k = 0 is u(t - tau), k = delay is u(t).
  double& at(int k) { return ring_[index(k)]; }
  double& slope_at(int k) { return slope_[index(k)]; }
  int window() const { return delay_ + 1; }

 private:
  std::size_t index(int k) const { return (head_ + static_cast<std::size_t>(k)) % ring_.size(); }

  double rhs(double u, double delayed) const {
    return p_.beta * delayed / (1.0 + std::pow(delayed, p_.n_exp)) - p_.gamma * u;
  }

  MGParams p_;
  int delay_;
  std::vector<double> ring_;
  std::vector<double> slope_;  // zero for nodes of the initial history
  std::size_t head_ = 0;
  std::int64_t steps_ = 0;
};

std::vector<double> seeded_history(const MGParams& params, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> history(static_cast<std::size_t>(params.delay_steps()) + 1);
  for (double& v : history) v = rng.uniform(0.5, 1.5);
  return history;
}

}  // namespace

TimeSeries generate_from_history(const MGParams& params, std::size_t length,
                                 std::span<const double> history) {
  params.validate();
  if (length < 1) throw ConfigError("generate: length must be >= 1");
  if (history.size() != static_cast<std::size_t>(params.delay_steps()) + 1)
    throw DimensionError("generate: history must hold tau/dt + 1 values");

  DelayIntegrator integrator(params, history);
  TimeSeries out;
  out.dt_sample = params.sample_period();
  out.values.reserve(length);
  const std::size_t total = static_cast<std::size_t>(params.warmup_steps) + length;
  for (std::size_t sample = 0; sample < total; ++sample) {
    if (sample > 0)
      for (int s = 0; s < params.sample_stride; ++s) integrator.step();
    if (sample >= static_cast<std::size_t>(params.warmup_steps))
      out.values.push_back(integrator.current());
  }
  return out;
}

TimeSeries generate(const MGParams& params, std::size_t length, std::uint64_t seed) {
  params.validate();
  TimeSeries out = generate_from_history(params, length, seeded_history(params, seed));
  out.seed = seed;
  return out;
}

TimeSeries normalize_to_unit(const TimeSeries& series) {
  if (series.values.empty()) throw ConfigError("normalize_to_unit: empty series");
  const auto [lo, hi] = std::minmax_element(series.values.begin(), series.values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw DegenerateError("normalize_to_unit: constant series");
  const AffineMap map{1.0 / range, -*lo / range};
  TimeSeries out = series;
  for (double& v : out.values) v = std::clamp(map.apply(v), 0.0, 1.0);
  out.normalization = map;
  return out;
}

TimeSeries apply_normalization(const TimeSeries& series, const AffineMap& map) {
  TimeSeries out = series;
  for (double& v : out.values) v = std::clamp(map.apply(v), 0.0, 1.0);
  out.normalization = map;
  return out;
}

std::vector<double> denormalize(const TimeSeries& series) {
  std::vector<double> out = series.values;
  if (series.normalization)
    for (double& v : out) v = series.normalization->invert(v);
  return out;
}

double lyapunov_estimate(const MGParams& params, std::size_t length, std::uint64_t seed) {
  params.validate();
  const double window = static_cast<double>(length) * params.sample_period();
  if (window < kMinLyapunovWindow)
    throw ConfigError("lyapunov_estimate: averaging window of " + std::to_string(window) +
                      " time units is shorter than 10 Lyapunov times (" +
                      std::to_string(kMinLyapunovWindow) + ")");

  const std::vector<double> history = seeded_history(params, seed);
  DelayIntegrator reference(params, history);
  for (int sample = 0; sample < params.warmup_steps; ++sample)
    for (int s = 0; s < params.sample_stride; ++s) reference.step();

  // Perturb the whole delay window along a seeded random direction.
  constexpr double kSeparation = 1e-8;
  DelayIntegrator perturbed = reference;
  RandomStream direction(derive_seed(seed, "lyapunov-direction"));
  std::vector<double> offset(static_cast<std::size_t>(reference.window()));
  double norm = 0.0;
  for (double& v : offset) {
    v = direction.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (int k = 0; k < reference.window(); ++k)
    perturbed.at(k) += kSeparation * offset[static_cast<std::size_t>(k)] / norm;

  double log_growth = 0.0;
  for (std::size_t sample = 0; sample < length; ++sample) {
    for (int s = 0; s < params.sample_stride; ++s) {
      reference.step();
      perturbed.step();
    }
    double dist = 0.0;
    for (int k = 0; k < reference.window(); ++k) {
      const double d = perturbed.at(k) - reference.at(k);
      dist += d * d;
    }
    dist = std::sqrt(dist);
    if (dist == 0.0) return -std::numeric_limits<double>::infinity();
    log_growth += std::log(dist / kSeparation);
    const double shrink = kSeparation / dist;
    for (int k = 0; k < reference.window(); ++k) {
      perturbed.at(k) = reference.at(k) + (perturbed.at(k) - reference.at(k)) * shrink;
      perturbed.slope_at(k) =
          reference.slope_at(k) + (perturbed.slope_at(k) - reference.slope_at(k)) * shrink;
    }
  }
  return log_growth / window;
}

}  // namespace optrc
