#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace optrc {

/// Parameters of du/dt = beta*u(t-tau)/(1+u(t-tau)^n) - gamma*u(t).
struct MGParams {
  double beta = 0.2;
  double gamma = 0.1;
  double tau = 17.0;
  double n_exp = 10.0;
  double dt = 0.1;
  int sample_stride = 10;  // integrator steps per emitted sample
  int warmup_steps = 170;  // emitted samples dropped after initialization

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
  /// tau/dt as an integer.
  int delay_steps() const;
  double sample_period() const { return dt * sample_stride; }
};

/// y = scale * v + offset.
struct AffineMap {
  double scale = 1.0;
  double offset = 0.0;

  double apply(double v) const { return scale * v + offset; }
  double invert(double y) const { return (y - offset) / scale; }
};

struct TimeSeries {
  std::vector<double> values;
  double dt_sample = 1.0;
  std::uint64_t seed = 0;
  std::optional<AffineMap> normalization;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Integrates with RK4; the delayed value at half steps is cubic Hermite
/// interpolated. The history on [-tau, 0] is seeded uniform in [0.5, 1.5].
TimeSeries generate(const MGParams& params, std::size_t length, std::uint64_t seed);

/// Same integrator from an explicit history u(-tau), u(-tau+dt), ..., u(0)
/// (delay_steps()+1 values).
TimeSeries generate_from_history(const MGParams& params, std::size_t length,
                                 std::span<const double> history);

/// Min-max map of the series onto [0, 1]; the map is stored in the result.
TimeSeries normalize_to_unit(const TimeSeries& series);

/// Applies a map computed on another (training) series and clips to [0, 1].
TimeSeries apply_normalization(const TimeSeries& series, const AffineMap& map);

/// Undoes the stored normalization (identity when none).
std::vector<double> denormalize(const TimeSeries& series);

/// Maximal Lyapunov exponent from two nearby trajectories of the discretized
/// delay system, renormalized once per emitted sample. `length` samples are
/// averaged after the usual warmup.
double lyapunov_estimate(const MGParams& params, std::size_t length, std::uint64_t seed);

/// Shortest averaging window accepted by lyapunov_estimate, in time units:
/// ten Lyapunov times at the reference exponent 0.006.
inline constexpr double kMinLyapunovWindow = 10.0 / 0.006;

}  // namespace optrc
