#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "optrc/encoding.hpp"
#include "optrc/error.hpp"

using namespace optrc;

namespace {

BinaryCode bits(const char* s) {
  BinaryCode code;
  for (; *s; ++s) code.push_back(*s == '1');
  return code;
}

std::size_t brute_force_codes(const EncodingSpec& spec, int points) {
  std::set<BinaryCode> seen;
  for (int k = 0; k <= points; ++k) {
    const double x = static_cast<double>(k) / points;
    switch (spec.kind) {
      case EncodingKind::basket: seen.insert(encode_basket(x, spec.n_bin)); break;
      case EncodingKind::threshold: seen.insert(encode_threshold(x, spec.n_bin)); break;
      default: seen.insert(encode_base2(x, spec.n_bin)); break;
    }
  }
  return seen.size();
}

}  // namespace

TEST_CASE("phase encoding") {
  const std::vector<double> x{0.0, 0.5, 1.0};
  const auto z = encode_phase(x);
  CHECK(std::abs(z[0] - std::complex<double>(1, 0)) < 1e-15);
  CHECK(std::abs(z[1] - std::complex<double>(0, 1)) < 1e-15);
  CHECK(std::abs(z[2] - std::complex<double>(-1, 0)) < 1e-15);
  for (auto v : z) CHECK(std::abs(v) == doctest::Approx(1.0));
  const std::vector<double> bad{1.2};
  CHECK_THROWS_AS(encode_phase(bad), RangeError);
  const std::vector<double> slack{1.0 + 1e-12};
  CHECK_NOTHROW(encode_phase(slack));
}

TEST_CASE("basket examples") {
  CHECK(encode_basket(0.0, 10) == bits("1100000000"));
  CHECK(encode_basket(0.5, 10) == bits("0001111000"));
  CHECK(encode_basket(1.0, 10) == bits("0000000011"));
  CHECK_THROWS_AS(encode_basket(0.5, 1), ConfigError);
  CHECK_THROWS_AS(encode_basket(-0.1, 10), RangeError);
}

TEST_CASE("threshold examples") {
  CHECK(encode_threshold(0.0, 10) == bits("0000000000"));
  CHECK(encode_threshold(0.55, 10) == bits("1111100000"));
  CHECK(encode_threshold(1.0, 10) == bits("1111111110"));
  for (int k = 0; k <= 100; ++k) {
    const double x = k / 100.0;
    if (std::abs(x * 10 - std::round(x * 10)) < 1e-9) continue;
    const auto code = encode_threshold(x, 10);
    int ones = 0;
    for (auto b : code) ones += b;
    CHECK(ones == std::max(0, static_cast<int>(std::floor(x * 10))));
  }
}

TEST_CASE("base2 examples") {
  CHECK(encode_base2(0.0, 3) == bits("000"));
  CHECK(encode_base2(0.3, 3) == bits("010"));
  CHECK(encode_base2(0.5, 3) == bits("100"));
  CHECK(encode_base2(1.0, 3) == bits("111"));
}

TEST_CASE("distinct code counts agree with a dense scan") {
  for (int n : {2, 3, 5, 10, 16}) {
    CHECK(distinct_code_count(EncodingSpec::basket(n)) == brute_force_codes(EncodingSpec::basket(n), 200000));
    CHECK(distinct_code_count(EncodingSpec::threshold(n)) == brute_force_codes(EncodingSpec::threshold(n), 200000));
  }
  CHECK(distinct_code_count(EncodingSpec::threshold(10)) == 10);
  for (int n : {1, 4, 8}) CHECK(distinct_code_count(EncodingSpec::base2(n)) == (1u << n));
  CHECK_THROWS_AS(distinct_code_count(EncodingSpec::phase()), ConfigError);
}

TEST_CASE("binary code distances are square roots of Hamming distances") {
  for (auto spec : {EncodingSpec::basket(10), EncodingSpec::threshold(10), EncodingSpec::base2(6)}) {
    const auto d = distance_matrix(spec, 101);
    CHECK(d.rows() == 101);
    CHECK(d.cols() == 101);
    CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index p = 0; p < d.rows(); ++p) {
      CHECK(d(p, p) == 0.0);
      for (Eigen::Index q = 0; q < d.cols(); ++q) {
        const double squared = d(p, q) * d(p, q);
        CHECK(std::abs(squared - std::round(squared)) < 1e-9);
        CHECK(squared <= spec.n_bin + 1e-9);
      }
    }
  }
}

TEST_CASE("phase distance matches the chord length") {
  const auto d = distance_matrix(EncodingSpec::phase(), 51);
  for (Eigen::Index p = 0; p < 51; ++p)
    for (Eigen::Index q = 0; q < 51; ++q)
      CHECK(d(p, q) == doctest::Approx(2.0 * std::sin(M_PI * std::abs(p - q) / 50.0 / 2.0)).epsilon(1e-12));
  CHECK(locality_violations(d) == 0);
}

TEST_CASE("threshold is monotone local") {
  CHECK(locality_violations(distance_matrix(EncodingSpec::threshold(10))) == 0);
}

TEST_CASE("basket is local only while codes overlap") {
  const int n_bin = 10;
  const auto d = distance_matrix(EncodingSpec::basket(n_bin), 101);
  auto overlap = [&](Eigen::Index p, Eigen::Index r) {
    const auto a = encode_basket(p / 100.0, n_bin), b = encode_basket(r / 100.0, n_bin);
    for (int i = 0; i < n_bin; ++i)
      if (a[i] && b[i]) return true;
    return false;
  };
  // Moving away from p, the distance grows monotonically for as long as the
  // two codes still share a bit.
  for (Eigen::Index p = 0; p < 101; ++p) {
    double running = 0.0;
    for (Eigen::Index r = p + 1; r < 101 && overlap(p, r); ++r) {
      CHECK(d(p, r) >= running - 1e-12);
      running = std::max(running, d(p, r));
    }
    running = 0.0;
    for (Eigen::Index r = p - 1; r >= 0 && overlap(p, r); --r) {
      CHECK(d(p, r) >= running - 1e-12);
      running = std::max(running, d(p, r));
    }
  }
  // Once codes are disjoint the distance depends only on their sizes.
  CHECK(locality_violations(d) > 0);
  CHECK(max_adjacent_distance(d) <= std::sqrt(2.0) + 1e-12);
}

TEST_CASE("spec validation and lengths") {
  CHECK(EncodingSpec::basket(10).encoded_length() == 10);
  CHECK(EncodingSpec::phase().encoded_length() == 1);
  CHECK_THROWS_AS(EncodingSpec::base2(31).validate(), ConfigError);
  EncodingSpec phase = EncodingSpec::phase();
  phase.n_bin = 2;
  CHECK_THROWS_AS(phase.validate(), ConfigError);
  CHECK(encoding_kind_from_string("basket") == EncodingKind::basket);
  CHECK_THROWS_AS(encoding_kind_from_string("gray"), ConfigError);
}

TEST_CASE("frame layouts") {
  CHECK_NOTHROW(FrameLayout::equal_thirds(8).validate());
  CHECK(FrameLayout::quarters_half(5).total() == 20);
  FrameLayout gap{{0, 4}, {5, 4}, {9, 4}};
  CHECK_THROWS_AS(gap.validate(), LayoutError);
  FrameLayout overlap{{0, 4}, {3, 4}, {8, 4}};
  CHECK_THROWS_AS(overlap.validate(), LayoutError);
  FrameLayout empty{{0, 0}, {0, 4}, {4, 4}};
  CHECK_THROWS_AS(empty.validate(), LayoutError);

  const std::vector<double> input{0.5};
  const std::vector<double> state{0.1, 0.9};
  CHECK_THROWS_AS(expand_frame(input, state, EncodingSpec::phase(), EncodingSpec::phase(),
                               FrameLayout::equal_thirds(3), 1),
                  LayoutError);
  CHECK_THROWS_AS(expand_frame(input, state, EncodingSpec::basket(10), EncodingSpec::basket(10),
                               FrameLayout::equal_thirds(15), 1),
                  LayoutError);
}

TEST_CASE("macro-pixels replicate codes contiguously") {
  const std::vector<double> input{0.5};
  const std::vector<double> state{0.0, 1.0};
  const auto frame = expand_frame(input, state, EncodingSpec::threshold(2), EncodingSpec::threshold(2),
                                  FrameLayout::quarters_half(8), 3);
  CHECK(frame.mode == FrameMode::binary);
  // input 0.5 -> code 00 with 2 bins? x*n = 1, bit 1 needs > 1
  for (int k = 0; k < 8; ++k) CHECK(frame.data[k] == std::complex<double>(0.0));
  // state 0.0 -> 00, state 1.0 -> 10; each bit fills 2 pixels
  const std::vector<double> expected_res{0, 0, 0, 0, 1, 1, 0, 0};
  for (int k = 0; k < 8; ++k) CHECK(frame.data[8 + k].real() == expected_res[k]);
}

TEST_CASE("bias region is fixed by the seed and independent of the inputs") {
  const auto layout = FrameLayout::equal_thirds(30);
  const std::vector<double> s1(30, 0.2), s2(30, 0.8);
  const std::vector<double> i1{0.1}, i2{0.7};
  const auto a = expand_frame(i1, s1, EncodingSpec::phase(), EncodingSpec::phase(), layout, 5);
  const auto b = expand_frame(i2, s2, EncodingSpec::phase(), EncodingSpec::phase(), layout, 5);
  CHECK(a.data.segment(60, 30) == b.data.segment(60, 30));
  for (Eigen::Index k = 60; k < 90; ++k) CHECK(std::abs(a.data[k] - std::complex<double>(0, 1)) < 1e-15);

  const auto p1 = bias_pattern(FrameMode::binary, 1000, 9);
  const auto p2 = bias_pattern(FrameMode::binary, 1000, 9);
  const auto p3 = bias_pattern(FrameMode::binary, 1000, 10);
  CHECK(p1 == p2);
  CHECK(p1 != p3);
  const double density = p1.real().sum() / 1000.0;
  CHECK(density > 0.44);
  CHECK(density < 0.56);
}
