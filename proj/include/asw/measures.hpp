#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "asw/common.hpp"

namespace asw {

/// Uniform empirical measure: m support points in R^d, each carrying mass 1/m.
/// Rows of `points()` are the support points.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(Matrix points);

  Eigen::Index m() const { return points_.rows(); }
  Eigen::Index d() const { return points_.cols(); }
  const Matrix& points() const { return points_; }
  auto point(Eigen::Index i) const { return points_.row(i); }

  friend bool operator==(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    return a.points_.rows() == b.points_.rows() && a.points_.cols() == b.points_.cols() &&
           a.points_ == b.points_;
  }

 private:
  Matrix points_;
};

/// Unit vector on S^{d-1}.
class Direction {
 public:
  /// Wraps `v`, which must already have unit norm (within 1e-12).
  explicit Direction(Vector v);
  /// Normalizes `v`; throws DegenerateDirection when ‖v‖ < 1e-30.
  static Direction normalized(const Vector& v);

  Eigen::Index d() const { return vec_.size(); }
  const Vector& vec() const { return vec_; }

 private:
  Vector vec_;
};

/// Projections θᵀx_i of a measure together with their ascending order.
struct ProjectedSamples {
  Vector values;
  // values[sort_ranks[i]] <= values[sort_ranks[i+1]]
  std::vector<Eigen::Index> sort_ranks;

  Eigen::Index m() const { return values.size(); }
};

/// Stable ascending argsort.
std::vector<Eigen::Index> stable_argsort(const Vector& values);

ProjectedSamples make_projected(Vector values);

ProjectedSamples project(const EmpiricalMeasure& mu, const Direction& theta);

/// p-th power of the 1-D Wasserstein distance between equal-size uniform measures.
double wasserstein_1d_pow(const ProjectedSamples& u, const ProjectedSamples& v, Order p);

double wasserstein_1d(const ProjectedSamples& u, const ProjectedSamples& v, Order p);

/// m_batch rows drawn i.i.d. uniformly with replacement.
EmpiricalMeasure sample_minibatch(const EmpiricalMeasure& mu, Eigen::Index m_batch, Rng& rng);

/// Uniform direction on S^{d-1} (normalized standard Gaussian).
Direction sample_sphere(Eigen::Index d, Rng& rng);

/// Matrix of i.i.d. standard normals.
Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

// Serialization. CSV: one point per line, comma separated, no header.
// Binary: "EMSR", u32 m, u32 d, m*d f64 (row-major), all little-endian.
void write_csv(std::ostream& out, const EmpiricalMeasure& mu);
EmpiricalMeasure read_csv(std::istream& in);
void write_binary(std::ostream& out, const EmpiricalMeasure& mu);
EmpiricalMeasure read_binary(std::istream& in);

/// Dispatches on extension: ".csv" is text, anything else must carry the EMSR magic.
EmpiricalMeasure load_measure(const std::filesystem::path& path);
void save_measure(const std::filesystem::path& path, const EmpiricalMeasure& mu);

}  // namespace asw
