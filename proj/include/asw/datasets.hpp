#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "asw/common.hpp"
#include "asw/measures.hpp"

namespace asw {

enum class SyntheticKind { kGaussianRing, kTwoMoons, kSwissRoll2d, kCheckerboard };

std::string to_string(SyntheticKind kind);
SyntheticKind synthetic_kind_from_string(const std::string& name);

/// Desk-scale synthetic distribution. Only the fields of the chosen kind are read.
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kGaussianRing;
  Eigen::Index n_samples = 1000;
  std::uint64_t seed = 0;
  // gaussian_ring
  Eigen::Index n_modes = 8;
  double radius = 2.0;
  double sigma = 0.02;
  // two_moons, swiss_roll_2d
  double noise = 0.05;
  // checkerboard
  Eigen::Index cells = 4;

  void validate() const;
};

/// Deterministic given spec.seed. Ring modes sit at angles 2πj/n_modes; each
/// sample picks its mode uniformly at random.
EmpiricalMeasure generate(const SyntheticSpec& spec);

/// Parses an IDX3 image file (magic 0x00000803, big-endian counts, u8 pixels).
/// Rows are flattened images scaled to [−1, 1] by x/127.5 − 1.
EmpiricalMeasure load_idx(const std::filesystem::path& path);
EmpiricalMeasure read_idx(std::istream& in);

/// Raw IDX3 payload before scaling.
struct IdxImages {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // n·rows·cols
  std::size_t count() const { return rows * cols == 0 ? 0 : pixels.size() / (rows * cols); }
};

IdxImages read_idx_raw(std::istream& in);
void write_idx(std::ostream& out, const IdxImages& images);

}  // namespace asw
