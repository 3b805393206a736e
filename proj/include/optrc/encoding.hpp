#pragma once

// Componentwise encoders g: [0,1] -> frame pixels, region layout of a
// modulator frame, and the distance-matrix view of an encoder.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace optrc {

enum class EncodingKind { phase, basket, threshold, base2, identity };

std::string_view to_string(EncodingKind kind);
EncodingKind encoding_kind_from_string(std::string_view name);

struct EncodingSpec {
  EncodingKind kind = EncodingKind::phase;
  int n_bin = 1;
  double phase_range = std::numbers::pi;

  static EncodingSpec phase() { return {EncodingKind::phase, 1, std::numbers::pi}; }
  static EncodingSpec identity() { return {EncodingKind::identity, 1, std::numbers::pi}; }
  static EncodingSpec basket(int n_bin) { return {EncodingKind::basket, n_bin, std::numbers::pi}; }
  static EncodingSpec threshold(int n_bin) { return {EncodingKind::threshold, n_bin, std::numbers::pi}; }
  static EncodingSpec base2(int n_bin) { return {EncodingKind::base2, n_bin, std::numbers::pi}; }

  void validate() const;
  bool is_binary() const;
  /// Pixels per encoded scalar.
  std::size_t encoded_length() const;
};

using BinaryCode = std::vector<std::uint8_t>;

/// e^{i*range*x} componentwise. Throws RangeError outside [0,1] (1e-9 slack).
Eigen::VectorXcd encode_phase(std::span<const double> x, double phase_range = std::numbers::pi);
BinaryCode encode_basket(double x, int n_bin);
BinaryCode encode_threshold(double x, int n_bin);
BinaryCode encode_base2(double x, int n_bin);

/// Codes of every component concatenated, as frame pixels.
Eigen::VectorXcd encode(const EncodingSpec& spec, std::span<const double> x);

/// Writes the pixels of one scalar into out (size encoded_length()).
void encode_scalar(const EncodingSpec& spec, double x, std::span<std::complex<double>> out);

/// D(p,q) = ||g(x_p) - g(x_q)|| on a uniform grid of [0,1].
Eigen::MatrixXd distance_matrix(const EncodingSpec& spec, int grid_points = 101);

/// Number of different codes a binary encoder produces on [0,1]. All code
/// breakpoints are visited, so the count is exact for the encoders above.
std::size_t distinct_code_count(const EncodingSpec& spec);

/// Grid pairs (p, q, r) on the same side of p with |x_q-x_p| < |x_r-x_p| but
/// D(p,q) > D(p,r), i.e. breaches of monotone locality.
std::size_t locality_violations(const Eigen::MatrixXd& distances);

/// Largest code distance between adjacent grid points.
double max_adjacent_distance(const Eigen::MatrixXd& distances);

// ---------------------------------------------------------------------------
// Frame layout

struct Span {
  std::size_t offset = 0;
  std::size_t length = 0;
  std::size_t end() const { return offset + length; }
};

struct FrameLayout {
  Span input;
  Span reservoir;
  Span bias;

  std::size_t total() const { return input.length + reservoir.length + bias.length; }
  /// Spans must be disjoint, non-empty (bias may be empty) and tile [0, total).
  void validate() const;

  /// Input, reservoir and bias each take `region` pixels.
  static FrameLayout equal_thirds(std::size_t region);
  /// Input and reservoir take a quarter each, the bias the remaining half.
  static FrameLayout quarters_half(std::size_t quarter);
};

enum class FrameMode { phase, binary, amplitude };

/// phase if either encoder is phase; binary if both are binary; amplitude otherwise.
FrameMode frame_mode(const EncodingSpec& spec_in, const EncodingSpec& spec_res);

struct EncodedFrame {
  Eigen::VectorXcd data;
  FrameLayout layout;
  FrameMode mode = FrameMode::phase;
};

/// The bias region content. Phase mode: constant phase pi/2. Binary and
/// amplitude modes: seeded random bits with density 0.5.
Eigen::VectorXcd bias_pattern(FrameMode mode, std::size_t length, std::uint64_t bias_seed);

/// Builds the full modulator frame. Encoded input and state are repeated as
/// contiguous macro-pixels to fill their spans.
EncodedFrame expand_frame(std::span<const double> input, std::span<const double> state,
                          const EncodingSpec& spec_in, const EncodingSpec& spec_res,
                          const FrameLayout& layout, std::uint64_t bias_seed);

}  // namespace optrc
