#include "asw/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "binary_io.hpp"

namespace asw {

EmpiricalMeasure::EmpiricalMeasure(Matrix points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw ContractViolation("empirical measure needs m >= 1 and d >= 1");
  }
  if (!points_.allFinite()) {
    throw ContractViolation("empirical measure has non-finite entries");
  }
}

Direction::Direction(Vector v) : vec_(std::move(v)) {
  if (vec_.size() < 1) throw ContractViolation("direction needs d >= 1");
  if (std::abs(vec_.norm() - 1.0) > 1e-12) {
    throw ContractViolation("direction is not unit norm");
  }
}

Direction Direction::normalized(const Vector& v) {
  const double n = v.norm();
  if (!(n >= 1e-30) || !std::isfinite(n)) {
    throw DegenerateDirection("cannot normalize a vector of norm " + std::to_string(n));
  }
  return Direction(v / n);
}

std::vector<Eigen::Index> stable_argsort(const Vector& values) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  return idx;
}

ProjectedSamples make_projected(Vector values) {
  ProjectedSamples out;
  out.sort_ranks = stable_argsort(values);
  out.values = std::move(values);
  return out;
}

ProjectedSamples project(const EmpiricalMeasure& mu, const Direction& theta) {
  if (theta.d() != mu.d()) {
    throw ContractViolation("project: direction has d=" + std::to_string(theta.d()) +
                            " but measure has d=" + std::to_string(mu.d()));
  }
  return make_projected(mu.points() * theta.vec());
}

double wasserstein_1d_pow(const ProjectedSamples& u, const ProjectedSamples& v, Order p) {
  if (u.m() != v.m()) {
    throw Unsupported("1-D Wasserstein needs equal-size measures (" + std::to_string(u.m()) +
                      " vs " + std::to_string(v.m()) + ")");
  }
  const Eigen::Index m = u.m();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double c = std::abs(u.values[u.sort_ranks[i]] - v.values[v.sort_ranks[i]]);
    acc += p == Order::kOne ? c : c * c;
  }
  return acc / static_cast<double>(m);
}

double wasserstein_1d(const ProjectedSamples& u, const ProjectedSamples& v, Order p) {
  const double s = wasserstein_1d_pow(u, v, p);
  return p == Order::kOne ? s : std::sqrt(s);
}

EmpiricalMeasure sample_minibatch(const EmpiricalMeasure& mu, Eigen::Index m_batch, Rng& rng) {
  if (m_batch < 1) throw ContractViolation("sample_minibatch: m_batch must be >= 1");
  std::uniform_int_distribution<Eigen::Index> pick(0, mu.m() - 1);
  Matrix out(m_batch, mu.d());
  for (Eigen::Index i = 0; i < m_batch; ++i) out.row(i) = mu.point(pick(rng));
  return EmpiricalMeasure(std::move(out));
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix out(rows, cols);
  // Fill in row-major order so the draw sequence does not depend on storage order.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = n01(rng);
  }
  return out;
}

Direction sample_sphere(Eigen::Index d, Rng& rng) {
  if (d < 1) throw ContractViolation("sample_sphere: d must be >= 1");
  std::normal_distribution<double> n01(0.0, 1.0);
  Vector g(d);
  for (;;) {
    for (Eigen::Index j = 0; j < d; ++j) g[j] = n01(rng);
    const double n = g.norm();
    if (n >= 1e-30) return Direction(g / n);
  }
}

void write_csv(std::ostream& out, const EmpiricalMeasure& mu) {
  std::ostringstream line;
  line.precision(17);
  for (Eigen::Index i = 0; i < mu.m(); ++i) {
    line.str("");
    for (Eigen::Index j = 0; j < mu.d(); ++j) {
      if (j) line << ',';
      line << mu.points()(i, j);
    }
    out << line.str() << '\n';
  }
}

EmpiricalMeasure read_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError("csv line " + std::to_string(lineno) + ": cannot parse \"" + cell + "\"");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("csv line " + std::to_string(lineno) + ": expected " +
                       std::to_string(rows.front().size()) + " columns");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("csv input has no rows");
  Matrix pts(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return EmpiricalMeasure(std::move(pts));
}

void write_binary(std::ostream& out, const EmpiricalMeasure& mu) {
  io::write_magic(out, "EMSR");
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(mu.m()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(mu.d()));
  for (Eigen::Index i = 0; i < mu.m(); ++i) {
    for (Eigen::Index j = 0; j < mu.d(); ++j) io::write_le<double>(out, mu.points()(i, j));
  }
}

EmpiricalMeasure read_binary(std::istream& in) {
  io::Reader r(in);
  r.expect_magic("EMSR");
  const auto m = r.read_le<std::uint32_t>();
  const auto d = r.read_le<std::uint32_t>();
  if (m == 0 || d == 0) throw ParseError("EMSR header declares an empty measure");
  Matrix pts(m, d);
  for (std::uint32_t i = 0; i < m; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) pts(i, j) = r.read_le<double>();
  }
  return EmpiricalMeasure(std::move(pts));
}

EmpiricalMeasure load_measure(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    if (path.extension() == ".csv") return read_csv(in);
    return read_binary(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_measure(const std::filesystem::path& path, const EmpiricalMeasure& mu) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  if (path.extension() == ".csv") {
    write_csv(out, mu);
  } else {
    write_binary(out, mu);
  }
}

}  // namespace asw
