#include "optrc/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "optrc/error.hpp"
#include "optrc/rng.hpp"

namespace optrc {

namespace {

constexpr double kRangeSlack = 1e-9;

double checked_unit(double x, std::string_view who) {
  if (!(x >= -kRangeSlack && x <= 1.0 + kRangeSlack))
    throw RangeError(std::string(who) + ": value " + std::to_string(x) + " outside [0, 1]");
  return std::clamp(x, 0.0, 1.0);
}

void require_bins(int n_bin, int minimum, std::string_view who) {
  if (n_bin < minimum)
    throw ConfigError(std::string(who) + ": n_bin must be >= " + std::to_string(minimum));
}

// Sorted code breakpoints of a binary encoder on [0,1], endpoints included.
std::vector<double> breakpoints(const EncodingSpec& spec) {
  std::vector<double> points{0.0, 1.0};
  const double n = spec.n_bin;
  switch (spec.kind) {
    case EncodingKind::basket: {
      const double s = (2.0 * std::floor(n / 2.0) - 1.0) / (4.0 * n);
      for (int i = 1; i <= spec.n_bin; ++i) {
        const double c = (2.0 * i - 1.0) / (2.0 * n);
        points.push_back(c - s);
        points.push_back(c + s);
      }
      break;
    }
    case EncodingKind::threshold:
      for (int i = 1; i <= spec.n_bin; ++i) points.push_back(i / n);
      break;
    case EncodingKind::base2: {
      const double levels = std::ldexp(1.0, spec.n_bin);
      for (double k = 1.0; k < levels; k += 1.0) points.push_back(k / levels);
      break;
    }
    default:
      break;
  }
  std::erase_if(points, [](double p) { return p < 0.0 || p > 1.0; });
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

BinaryCode binary_code(const EncodingSpec& spec, double x) {
  switch (spec.kind) {
    case EncodingKind::basket: return encode_basket(x, spec.n_bin);
    case EncodingKind::threshold: return encode_threshold(x, spec.n_bin);
    case EncodingKind::base2: return encode_base2(x, spec.n_bin);
    default: throw ConfigError("binary_code: encoder is not binary");
  }
}

void check_span(const Span& span, std::size_t encoded, std::string_view region) {
  if (encoded == 0 || span.length % encoded != 0)
    throw LayoutError(std::string(region) + " region of length " + std::to_string(span.length) +
                      " is not a whole multiple of the encoded length " + std::to_string(encoded));
}

}  // namespace

std::string_view to_string(EncodingKind kind) {
  switch (kind) {
    case EncodingKind::phase: return "phase";
    case EncodingKind::basket: return "basket";
    case EncodingKind::threshold: return "threshold";
    case EncodingKind::base2: return "base2";
    case EncodingKind::identity: return "identity";
  }
  return "unknown";
}

EncodingKind encoding_kind_from_string(std::string_view name) {
  for (auto kind : {EncodingKind::phase, EncodingKind::basket, EncodingKind::threshold,
                    EncodingKind::base2, EncodingKind::identity})
    if (to_string(kind) == name) return kind;
  throw ConfigError("unknown encoding kind '" + std::string(name) +
                    "' (expected phase, basket, threshold, base2 or identity)");
}

void EncodingSpec::validate() const {
  switch (kind) {
    case EncodingKind::phase:
      if (n_bin != 1) throw ConfigError("phase encoding requires n_bin = 1");
      if (!(phase_range > 0.0)) throw ConfigError("phase_range must be > 0");
      break;
    case EncodingKind::identity:
      if (n_bin != 1) throw ConfigError("identity encoding requires n_bin = 1");
      break;
    case EncodingKind::basket:
      require_bins(n_bin, 2, "basket encoding");
      break;
    case EncodingKind::threshold:
      require_bins(n_bin, 1, "threshold encoding");
      break;
    case EncodingKind::base2:
      require_bins(n_bin, 1, "base2 encoding");
      if (n_bin > 30) throw ConfigError("base2 encoding: n_bin must be <= 30");
      break;
  }
}

bool EncodingSpec::is_binary() const {
  return kind == EncodingKind::basket || kind == EncodingKind::threshold ||
         kind == EncodingKind::base2;
}

std::size_t EncodingSpec::encoded_length() const {
  return is_binary() ? static_cast<std::size_t>(n_bin) : 1;
}

Eigen::VectorXcd encode_phase(std::span<const double> x, double phase_range) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = std::polar(1.0, phase_range * checked_unit(x[k], "encode_phase"));
  return out;
}

BinaryCode encode_basket(double x, int n_bin) {
  require_bins(n_bin, 2, "encode_basket");
  x = checked_unit(x, "encode_basket");
  // Scaled by 4 n_bin: bit i is on iff |4n x - 2(2i-1)| <= 2 floor(n/2) - 1.
  const double scaled = 4.0 * n_bin * x;
  const double half_width = 2.0 * (n_bin / 2) - 1.0;
  BinaryCode code(static_cast<std::size_t>(n_bin));
  for (int i = 1; i <= n_bin; ++i)
    code[static_cast<std::size_t>(i - 1)] = std::abs(scaled - 2.0 * (2 * i - 1)) <= half_width;
  return code;
}

BinaryCode encode_threshold(double x, int n_bin) {
  require_bins(n_bin, 1, "encode_threshold");
  x = checked_unit(x, "encode_threshold");
  BinaryCode code(static_cast<std::size_t>(n_bin));
  for (int i = 1; i <= n_bin; ++i) code[static_cast<std::size_t>(i - 1)] = x * n_bin > i;
  return code;
}

BinaryCode encode_base2(double x, int n_bin) {
  require_bins(n_bin, 1, "encode_base2");
  x = checked_unit(x, "encode_base2");
  const double levels = std::ldexp(1.0, n_bin);
  const auto value = static_cast<std::uint64_t>(std::min(std::floor(x * levels), levels - 1.0));
  BinaryCode code(static_cast<std::size_t>(n_bin));
  for (int b = 0; b < n_bin; ++b)
    code[static_cast<std::size_t>(b)] = (value >> (n_bin - 1 - b)) & 1u;
  return code;
}

void encode_scalar(const EncodingSpec& spec, double x, std::span<std::complex<double>> out) {
  switch (spec.kind) {
    case EncodingKind::phase:
      out[0] = std::polar(1.0, spec.phase_range * checked_unit(x, "encode_phase"));
      return;
    case EncodingKind::identity:
      out[0] = x;
      return;
    default: {
      const BinaryCode code = binary_code(spec, x);
      std::copy(code.begin(), code.end(), out.begin());
    }
  }
}

Eigen::VectorXcd encode(const EncodingSpec& spec, std::span<const double> x) {
  const std::size_t width = spec.encoded_length();
  Eigen::VectorXcd out(static_cast<Eigen::Index>(x.size() * width));
  std::span<std::complex<double>> pixels(out.data(), static_cast<std::size_t>(out.size()));
  for (std::size_t k = 0; k < x.size(); ++k) encode_scalar(spec, x[k], pixels.subspan(k * width, width));
  return out;
}

Eigen::MatrixXd distance_matrix(const EncodingSpec& spec, int grid_points) {
  spec.validate();
  if (grid_points < 2) throw ConfigError("distance_matrix: grid_points must be >= 2");
  const auto n = static_cast<Eigen::Index>(grid_points);
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (int p = 0; p < grid_points; ++p) grid[static_cast<std::size_t>(p)] = static_cast<double>(p) / (grid_points - 1);
  const Eigen::VectorXcd codes = encode(spec, grid);
  const auto width = static_cast<Eigen::Index>(spec.encoded_length());

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = p + 1; q < n; ++q) {
      const double dist = (codes.segment(p * width, width) - codes.segment(q * width, width)).norm();
      d(p, q) = dist;
      d(q, p) = dist;
    }
  return d;
}

std::size_t distinct_code_count(const EncodingSpec& spec) {
  spec.validate();
  if (!spec.is_binary()) throw ConfigError("distinct_code_count: encoder is not binary");
  const std::vector<double> points = breakpoints(spec);
  std::set<BinaryCode> codes;
  for (std::size_t k = 0; k < points.size(); ++k) {
    codes.insert(binary_code(spec, points[k]));
    if (k + 1 < points.size()) codes.insert(binary_code(spec, 0.5 * (points[k] + points[k + 1])));
  }
  return codes.size();
}

std::size_t locality_violations(const Eigen::MatrixXd& distances) {
  constexpr double kTol = 1e-12;
  const Eigen::Index n = distances.rows();
  std::size_t violations = 0;
  for (Eigen::Index p = 0; p < n; ++p) {
    double running = 0.0;
    for (Eigen::Index r = p + 1; r < n; ++r) {
      if (distances(p, r) < running - kTol) ++violations;
      running = std::max(running, distances(p, r));
    }
    running = 0.0;
    for (Eigen::Index r = p - 1; r >= 0; --r) {
      if (distances(p, r) < running - kTol) ++violations;
      running = std::max(running, distances(p, r));
    }
  }
  return violations;
}

double max_adjacent_distance(const Eigen::MatrixXd& distances) {
  double best = 0.0;
  for (Eigen::Index p = 0; p + 1 < distances.rows(); ++p) best = std::max(best, distances(p, p + 1));
  return best;
}

// ---------------------------------------------------------------------------

void FrameLayout::validate() const {
  if (input.length == 0) throw LayoutError("input region is empty");
  if (reservoir.length == 0) throw LayoutError("reservoir region is empty");
  std::vector<Span> spans{input, reservoir, bias};
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.offset < b.offset; });
  std::size_t cursor = 0;
  for (const Span& s : spans) {
    if (s.length == 0) continue;
    if (s.offset != cursor) throw LayoutError("frame regions overlap or leave a gap");
    cursor = s.end();
  }
  if (cursor != total()) throw LayoutError("frame regions do not tile the frame");
}

FrameLayout FrameLayout::equal_thirds(std::size_t region) {
  return {{0, region}, {region, region}, {2 * region, region}};
}

FrameLayout FrameLayout::quarters_half(std::size_t quarter) {
  return {{0, quarter}, {quarter, quarter}, {2 * quarter, 2 * quarter}};
}

FrameMode frame_mode(const EncodingSpec& spec_in, const EncodingSpec& spec_res) {
  if (spec_in.kind == EncodingKind::phase || spec_res.kind == EncodingKind::phase) return FrameMode::phase;
  if (spec_in.is_binary() && spec_res.is_binary()) return FrameMode::binary;
  return FrameMode::amplitude;
}

Eigen::VectorXcd bias_pattern(FrameMode mode, std::size_t length, std::uint64_t bias_seed) {
  Eigen::VectorXcd bias(static_cast<Eigen::Index>(length));
  if (mode == FrameMode::phase) {
    bias.setConstant(std::polar(1.0, 0.5 * std::numbers::pi));
    return bias;
  }
  RandomStream rng(bias_seed);
  for (Eigen::Index k = 0; k < bias.size(); ++k) bias[k] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return bias;
}

EncodedFrame expand_frame(std::span<const double> input, std::span<const double> state,
                          const EncodingSpec& spec_in, const EncodingSpec& spec_res,
                          const FrameLayout& layout, std::uint64_t bias_seed) {
  if (input.empty()) throw ConfigError("expand_frame: input vector is empty");
  if (state.empty()) throw ConfigError("expand_frame: state vector is empty");
  spec_in.validate();
  spec_res.validate();
  layout.validate();
  const std::size_t encoded_in = input.size() * spec_in.encoded_length();
  const std::size_t encoded_res = state.size() * spec_res.encoded_length();
  check_span(layout.input, encoded_in, "input");
  check_span(layout.reservoir, encoded_res, "reservoir");

  EncodedFrame frame;
  frame.layout = layout;
  frame.mode = frame_mode(spec_in, spec_res);
  frame.data.resize(static_cast<Eigen::Index>(layout.total()));

  auto replicate = [&frame](const Eigen::VectorXcd& code, const Span& span) {
    const auto repeat = static_cast<Eigen::Index>(span.length / static_cast<std::size_t>(code.size()));
    for (Eigen::Index p = 0; p < code.size(); ++p)
      frame.data.segment(static_cast<Eigen::Index>(span.offset) + p * repeat, repeat).setConstant(code[p]);
  };
  replicate(encode(spec_in, input), layout.input);
  replicate(encode(spec_res, state), layout.reservoir);
  if (layout.bias.length > 0)
    frame.data.segment(static_cast<Eigen::Index>(layout.bias.offset),
                       static_cast<Eigen::Index>(layout.bias.length)) =
        bias_pattern(frame.mode, layout.bias.length, bias_seed);
  return frame;
}

}  // namespace optrc
