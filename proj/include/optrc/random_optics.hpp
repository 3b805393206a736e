#pragma once

// Simulated scattering medium: a seeded i.i.d. complex Gaussian transmission
// matrix, the camera reading of the transmitted field, and camera noise.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

#include <Eigen/Dense>

namespace optrc {

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{2} << 30;  // bytes

struct TransmissionMatrix {
  std::size_t n_out = 0;
  std::size_t n_in = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXcd entries;  // n_out x n_in
};

struct NoiseModel {
  double additive_sigma = 0.0;  // std of additive noise, intensity units
  int quantize_bits = 0;        // 0 disables quantization
  double saturation_level = 0.0;  // <= 0 means no clamp from above

  void validate() const;
  bool is_identity() const { return additive_sigma == 0.0 && quantize_bits == 0; }
};

enum class CameraReading { modulus, intensity };

/// Entries drawn row by row from one Philox stream; real and imaginary parts
/// are independent with variance 1/(2 n_in) each.
TransmissionMatrix build_tm(std::size_t n_out, std::size_t n_in, std::uint64_t seed,
                            std::size_t memory_budget = kDefaultMemoryBudget);

/// Column j drawn with E|h_ij|^2 = column_variance[j]. Used for matrices whose
/// columns stand for sums of several physical pixels.
TransmissionMatrix build_weighted_tm(std::size_t n_out, std::span<const double> column_variance,
                                     std::uint64_t seed,
                                     std::size_t memory_budget = kDefaultMemoryBudget);

/// |H frame|, the field modulus (square root of the camera intensity).
Eigen::VectorXd project(const TransmissionMatrix& tm, const Eigen::Ref<const Eigen::VectorXcd>& frame);

/// |H frame|^2.
Eigen::VectorXd project_intensity(const TransmissionMatrix& tm,
                                  const Eigen::Ref<const Eigen::VectorXcd>& frame);

/// H frame, the complex output field before detection.
Eigen::VectorXcd transmit(const TransmissionMatrix& tm, const Eigen::Ref<const Eigen::VectorXcd>& frame);

/// Adds Gaussian noise to the squared input, clamps to [0, saturation],
/// optionally quantizes and returns the square root.
Eigen::VectorXd apply_noise(const Eigen::Ref<const Eigen::VectorXd>& intensity_sqrt,
                            const NoiseModel& model, std::uint64_t seed);

void save_tm(const std::filesystem::path& path, const TransmissionMatrix& tm);
TransmissionMatrix load_tm(const std::filesystem::path& path);

}  // namespace optrc
