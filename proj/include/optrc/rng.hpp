#pragma once

// Counter-based random numbers. Every seeded quantity in the library is drawn
// from Philox4x32-10 so that a seed maps to the same values on any platform
// (up to libm differences in log/cos/sin for normal deviates).

#include <array>
#include <complex>
#include <cstdint>
#include <string_view>

namespace optrc {

inline constexpr std::string_view kRngId = "philox4x32-10";

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key) noexcept;
};

/// Sequential stream over Philox blocks. `stream` selects an independent
/// substream for the same seed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;
  /// Circular complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  void refill() noexcept;

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Philox4x32::Counter buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Child seed for a named purpose. The master -> child map is a pure function,
/// so the full seed tree is reproducible from the master seed alone.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view purpose,
                          std::uint64_t index = 0) noexcept;

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace optrc
