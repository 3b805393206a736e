#include "optrc/random_optics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "optrc/error.hpp"
#include "optrc/rng.hpp"

namespace optrc {

namespace {

constexpr std::array<char, 8> kTmMagic{'O', 'P', 'T', 'R', 'C', 'T', 'M', '\0'};
constexpr std::uint32_t kTmVersion = 1;

void check_budget(std::size_t n_out, std::size_t n_in, std::size_t budget) {
  const std::size_t bytes_per_entry = sizeof(std::complex<double>);
  if (n_in != 0 && n_out > budget / bytes_per_entry / n_in)
    throw CapacityError("transmission matrix " + std::to_string(n_out) + "x" +
                        std::to_string(n_in) + " exceeds the memory budget of " +
                        std::to_string(budget) + " bytes");
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

void NoiseModel::validate() const {
  if (!(additive_sigma >= 0.0)) throw ConfigError("noise.additive_sigma must be >= 0");
  if (quantize_bits < 0 || quantize_bits > 16)
    throw ConfigError("noise.quantize_bits must be 0 (off) or in 1..16");
  if (quantize_bits > 0 && !(saturation_level > 0.0))
    throw ConfigError("noise.saturation_level must be > 0 when quantization is on");
}

TransmissionMatrix build_weighted_tm(std::size_t n_out, std::span<const double> column_variance,
                                     std::uint64_t seed, std::size_t memory_budget) {
  const std::size_t n_in = column_variance.size();
  if (n_out < 1 || n_in < 1) throw DimensionError("transmission matrix dimensions must be >= 1");
  check_budget(n_out, n_in, memory_budget);

  TransmissionMatrix tm{n_out, n_in, seed, Eigen::MatrixXcd(n_out, n_in)};
  RandomStream rng(seed);
  for (std::size_t i = 0; i < n_out; ++i)
    for (std::size_t j = 0; j < n_in; ++j)
      tm.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rng.complex_normal(column_variance[j]);
  return tm;
}

TransmissionMatrix build_tm(std::size_t n_out, std::size_t n_in, std::uint64_t seed,
                            std::size_t memory_budget) {
  if (n_out < 1 || n_in < 1) throw DimensionError("transmission matrix dimensions must be >= 1");
  check_budget(n_out, n_in, memory_budget);
  const std::vector<double> variance(n_in, 1.0 / static_cast<double>(n_in));
  return build_weighted_tm(n_out, variance, seed, memory_budget);
}

Eigen::VectorXcd transmit(const TransmissionMatrix& tm, const Eigen::Ref<const Eigen::VectorXcd>& frame) {
  if (static_cast<std::size_t>(frame.size()) != tm.n_in)
    throw DimensionError("frame length " + std::to_string(frame.size()) +
                         " does not match transmission matrix input size " +
                         std::to_string(tm.n_in));
  return tm.entries * frame;
}

Eigen::VectorXd project(const TransmissionMatrix& tm, const Eigen::Ref<const Eigen::VectorXcd>& frame) {
  return transmit(tm, frame).cwiseAbs();
}

Eigen::VectorXd project_intensity(const TransmissionMatrix& tm,
                                  const Eigen::Ref<const Eigen::VectorXcd>& frame) {
  return transmit(tm, frame).cwiseAbs2();
}

Eigen::VectorXd apply_noise(const Eigen::Ref<const Eigen::VectorXd>& intensity_sqrt,
                            const NoiseModel& model, std::uint64_t seed) {
  if (model.is_identity()) return intensity_sqrt;
  RandomStream rng(seed);
  const bool clamp_high = model.saturation_level > 0.0;
  const double levels = model.quantize_bits > 0 ? std::ldexp(1.0, model.quantize_bits) - 1.0 : 0.0;
  Eigen::VectorXd out(intensity_sqrt.size());
  for (Eigen::Index k = 0; k < intensity_sqrt.size(); ++k) {
    double intensity = intensity_sqrt[k] * intensity_sqrt[k];
    if (model.additive_sigma > 0.0) intensity += model.additive_sigma * rng.normal();
    intensity = std::max(intensity, 0.0);
    if (clamp_high) intensity = std::min(intensity, model.saturation_level);
    if (model.quantize_bits > 0)
      intensity = std::round(intensity / model.saturation_level * levels) / levels *
                  model.saturation_level;
    out[k] = std::sqrt(intensity);
  }
  return out;
}

void save_tm(const std::filesystem::path& path, const TransmissionMatrix& tm) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kTmMagic.data(), kTmMagic.size());
  write_pod(os, kTmVersion);
  write_pod(os, static_cast<std::uint64_t>(tm.n_out));
  write_pod(os, static_cast<std::uint64_t>(tm.n_in));
  write_pod(os, tm.seed);
  std::array<char, 16> rng_id{};
  std::copy_n(kRngId.begin(), std::min(kRngId.size(), rng_id.size()), rng_id.begin());
  os.write(rng_id.data(), rng_id.size());
  // Row-major body, (re, im) pairs.
  for (std::size_t i = 0; i < tm.n_out; ++i)
    for (std::size_t j = 0; j < tm.n_in; ++j) {
      const auto z = tm.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      write_pod(os, z.real());
      write_pod(os, z.imag());
    }
  if (!os) throw IoError("failed writing " + path.string());
}

TransmissionMatrix load_tm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (magic != kTmMagic) throw IoError(path.string() + " is not a transmission matrix file");
  if (read_pod<std::uint32_t>(is) != kTmVersion)
    throw IoError(path.string() + ": unsupported transmission matrix version");
  TransmissionMatrix tm;
  tm.n_out = read_pod<std::uint64_t>(is);
  tm.n_in = read_pod<std::uint64_t>(is);
  tm.seed = read_pod<std::uint64_t>(is);
  std::array<char, 16> rng_id{};
  is.read(rng_id.data(), rng_id.size());
  const std::string_view stored_id(rng_id.data(), strnlen(rng_id.data(), rng_id.size()));
  if (stored_id != kRngId)
    throw IoError(path.string() + ": written with unknown generator " + std::string(stored_id));
  if (!is) throw IoError(path.string() + ": truncated header");
  check_budget(tm.n_out, tm.n_in, kDefaultMemoryBudget);
  tm.entries.resize(static_cast<Eigen::Index>(tm.n_out), static_cast<Eigen::Index>(tm.n_in));
  for (std::size_t i = 0; i < tm.n_out; ++i)
    for (std::size_t j = 0; j < tm.n_in; ++j) {
      const double re = read_pod<double>(is);
      const double im = read_pod<double>(is);
      tm.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = {re, im};
    }
  if (!is) throw IoError(path.string() + ": truncated body");
  return tm;
}

}  // namespace optrc
