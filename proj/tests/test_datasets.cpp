#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "asw/datasets.hpp"
#include "test_util.hpp"

using namespace asw;

namespace {

std::string idx_bytes(std::uint32_t magic, std::uint32_t n, std::uint32_t r, std::uint32_t c,
                      const std::vector<std::uint8_t>& px) {
  std::string s;
  for (std::uint32_t v : {magic, n, r, c}) {
    for (int k = 3; k >= 0; --k) s.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  s.append(px.begin(), px.end());
  return s;
}

}  // namespace

TEST(GaussianRing, ZeroNoiseHasEightModesOnCircle) {
  SyntheticSpec s;
  s.sigma = 0.0;
  s.n_samples = 500;
  const EmpiricalMeasure mu = generate(s);
  std::set<std::pair<double, double>> distinct;
  for (Eigen::Index i = 0; i < mu.m(); ++i) {
    distinct.insert({mu.points()(i, 0), mu.points()(i, 1)});
    EXPECT_NEAR(mu.points().row(i).norm(), 2.0, 1e-12);
  }
  EXPECT_EQ(distinct.size(), 8u);
}

TEST(GaussianRing, ModeCountsWithinFiveSigma) {
  SyntheticSpec s;
  s.n_samples = 10000;
  s.seed = 3;
  const EmpiricalMeasure mu = generate(s);
  std::vector<int> counts(8, 0);
  for (Eigen::Index i = 0; i < mu.m(); ++i) {
    double a = std::atan2(mu.points()(i, 1), mu.points()(i, 0));
    if (a < 0) a += 2 * std::numbers::pi;
    const int mode = static_cast<int>(std::lround(a / (2 * std::numbers::pi / 8))) % 8;
    ++counts[static_cast<std::size_t>(mode)];
  }
  const double n = 10000.0;
  const double sd = std::sqrt(n * (1.0 / 8) * (7.0 / 8));
  for (int c : counts) EXPECT_LE(std::abs(c - n / 8), 5 * sd);
}

TEST(Synthetic, DeterministicAndFiniteForAllKinds) {
  for (SyntheticKind kind : {SyntheticKind::kGaussianRing, SyntheticKind::kTwoMoons, SyntheticKind::kSwissRoll2d,
                             SyntheticKind::kCheckerboard}) {
    SyntheticSpec s;
    s.kind = kind;
    s.n_samples = 300;
    s.seed = 17;
    const EmpiricalMeasure a = generate(s);
    EXPECT_EQ(a, generate(s));
    EXPECT_TRUE(a.points().allFinite());
    EXPECT_EQ(a.m(), 300);
    EXPECT_EQ(synthetic_kind_from_string(to_string(kind)), kind);
    s.seed = 18;
    EXPECT_FALSE(a == generate(s));
  }
}

TEST(Synthetic, InvalidSpecsRejected) {
  SyntheticSpec s;
  s.n_samples = 0;
  EXPECT_THROW(s.validate(), ContractViolation);
  s = SyntheticSpec{};
  s.sigma = -1.0;
  EXPECT_THROW(s.validate(), ContractViolation);
  EXPECT_THROW(synthetic_kind_from_string("spiral"), ParseError);
}

TEST(Idx, MinimalFileScalesEndpoints) {
  std::stringstream in(idx_bytes(0x803, 1, 2, 2, {0, 255, 0, 255}));
  const EmpiricalMeasure mu = read_idx(in);
  ASSERT_EQ(mu.m(), 1);
  ASSERT_EQ(mu.d(), 4);
  EXPECT_EQ(mu.points().row(0), vec({-1, 1, -1, 1}).transpose());
}

TEST(Idx, LabelMagicRejected) {
  std::stringstream in(idx_bytes(0x801, 1, 2, 2, {0, 0, 0, 0}));
  EXPECT_THROW(read_idx(in), ParseError);
}

TEST(Idx, TruncatedFileNamesOffset) {
  std::stringstream in(idx_bytes(0x803, 2, 2, 2, {1, 2, 3, 4, 5}));
  try {
    read_idx(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("byte 21"), std::string::npos) << e.what();
  }
  std::stringstream header_only(idx_bytes(0x803, 1, 2, 2, {}).substr(0, 9));
  EXPECT_THROW(read_idx(header_only), ParseError);
}

TEST(Idx, RoundTripIsBitIdentical) {
  Rng rng(110);
  IdxImages img;
  img.rows = 5;
  img.cols = 3;
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 10 * 15; ++i) img.pixels.push_back(static_cast<std::uint8_t>(byte(rng)));
  std::stringstream s;
  write_idx(s, img);
  const std::string bytes = s.str();
  const IdxImages back = read_idx_raw(s);
  EXPECT_EQ(back.rows, 5u);
  EXPECT_EQ(back.cols, 3u);
  EXPECT_EQ(back.count(), 10u);
  EXPECT_EQ(back.pixels, img.pixels);
  std::stringstream again(bytes);
  const EmpiricalMeasure mu = read_idx(again);
  EXPECT_EQ(mu.d(), 15);
  EXPECT_LE(mu.points().cwiseAbs().maxCoeff(), 1.0);
}

TEST(Idx, MissingFileIsParseError) {
  EXPECT_THROW(load_idx("/nonexistent/images.idx"), ParseError);
}
