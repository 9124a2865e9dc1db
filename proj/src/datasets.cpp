#include "asw/datasets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "binary_io.hpp"

namespace asw {
namespace {

std::uint32_t read_be32(io::Reader& r) {
  unsigned char b[4];
  r.read_raw(reinterpret_cast<char*>(b), 4);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

constexpr std::uint32_t kIdx3Magic = 0x00000803;

}  // namespace

std::string to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kGaussianRing:
      return "gaussian_ring";
    case SyntheticKind::kTwoMoons:
      return "two_moons";
    case SyntheticKind::kSwissRoll2d:
      return "swiss_roll_2d";
    case SyntheticKind::kCheckerboard:
      return "checkerboard";
  }
  return "unknown";
}

SyntheticKind synthetic_kind_from_string(const std::string& name) {
  if (name == "gaussian_ring") return SyntheticKind::kGaussianRing;
  if (name == "two_moons") return SyntheticKind::kTwoMoons;
  if (name == "swiss_roll_2d") return SyntheticKind::kSwissRoll2d;
  if (name == "checkerboard") return SyntheticKind::kCheckerboard;
  throw ParseError("unknown dataset kind \"" + name + "\"");
}

void SyntheticSpec::validate() const {
  if (n_samples < 1) throw ContractViolation("dataset: n_samples must be >= 1");
  if (!(sigma >= 0.0) || !(noise >= 0.0)) throw ContractViolation("dataset: sigma/noise must be >= 0");
  if (kind == SyntheticKind::kGaussianRing && n_modes < 1) {
    throw ContractViolation("dataset: n_modes must be >= 1");
  }
  if (kind == SyntheticKind::kCheckerboard && cells < 1) {
    throw ContractViolation("dataset: cells must be >= 1");
  }
}

EmpiricalMeasure generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index n = spec.n_samples;
  Matrix pts(n, 2);
  constexpr double kPi = std::numbers::pi;

  switch (spec.kind) {
    case SyntheticKind::kGaussianRing: {
      std::uniform_int_distribution<Eigen::Index> mode(0, spec.n_modes - 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double angle = 2.0 * kPi * static_cast<double>(mode(rng)) /
                             static_cast<double>(spec.n_modes);
        const double ex = n01(rng);
        const double ey = n01(rng);
        pts(i, 0) = spec.radius * std::cos(angle) + spec.sigma * ex;
        pts(i, 1) = spec.radius * std::sin(angle) + spec.sigma * ey;
      }
      break;
    }
    case SyntheticKind::kTwoMoons: {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = kPi * unit(rng);
        const bool upper = unit(rng) < 0.5;
        const double x = upper ? std::cos(t) : 1.0 - std::cos(t);
        const double y = upper ? std::sin(t) : 0.5 - std::sin(t);
        const double ex = n01(rng);
        const double ey = n01(rng);
        pts(i, 0) = x + spec.noise * ex;
        pts(i, 1) = y + spec.noise * ey;
      }
      break;
    }
    case SyntheticKind::kSwissRoll2d: {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = 1.5 * kPi * (1.0 + 2.0 * unit(rng));
        const double ex = n01(rng);
        const double ey = n01(rng);
        // Scaled so the roll fits roughly in [-1.5, 1.5]^2.
        pts(i, 0) = t * std::cos(t) / 10.0 + spec.noise * ex;
        pts(i, 1) = t * std::sin(t) / 10.0 + spec.noise * ey;
      }
      break;
    }
    case SyntheticKind::kCheckerboard: {
      // Uniform over the "black" cells of a cells×cells board on [-2, 2]^2.
      const double width = 4.0 / static_cast<double>(spec.cells);
      std::uniform_int_distribution<Eigen::Index> cell(0, spec.cells - 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index cx = 0;
        Eigen::Index cy = 0;
        do {
          cx = cell(rng);
          cy = cell(rng);
        } while ((cx + cy) % 2 != 0);
        pts(i, 0) = -2.0 + width * (static_cast<double>(cx) + unit(rng));
        pts(i, 1) = -2.0 + width * (static_cast<double>(cy) + unit(rng));
      }
      break;
    }
  }
  return EmpiricalMeasure(std::move(pts));
}

IdxImages read_idx_raw(std::istream& in) {
  io::Reader r(in);
  const std::uint32_t magic = read_be32(r);
  if (magic != kIdx3Magic) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw ParseError(std::string("IDX: bad magic ") + buf + " at byte 0 (expected 0x00000803)");
  }
  const std::uint32_t n = read_be32(r);
  IdxImages images;
  images.rows = read_be32(r);
  images.cols = read_be32(r);
  if (n == 0 || images.rows == 0 || images.cols == 0) {
    throw ParseError("IDX: empty dimensions in header at byte 4");
  }
  images.pixels.resize(std::size_t{n} * images.rows * images.cols);
  r.read_raw(reinterpret_cast<char*>(images.pixels.data()), images.pixels.size());
  return images;
}

void write_idx(std::ostream& out, const IdxImages& images) {
  write_be32(out, kIdx3Magic);
  write_be32(out, static_cast<std::uint32_t>(images.count()));
  write_be32(out, images.rows);
  write_be32(out, images.cols);
  out.write(reinterpret_cast<const char*>(images.pixels.data()),
            static_cast<std::streamsize>(images.pixels.size()));
}

EmpiricalMeasure read_idx(std::istream& in) {
  const IdxImages images = read_idx_raw(in);
  const auto dim = static_cast<Eigen::Index>(images.rows) * images.cols;
  const auto n = static_cast<Eigen::Index>(images.count());
  Matrix pts(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      pts(i, j) = static_cast<double>(images.pixels[static_cast<std::size_t>(i * dim + j)]) / 127.5 - 1.0;
    }
  }
  return EmpiricalMeasure(std::move(pts));
}

EmpiricalMeasure load_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return read_idx(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace asw
