#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "asw/common.hpp"
#include "asw/trainer.hpp"

namespace asw {

struct BenchRecord {
  std::string method;  // sw, max_sw, la_sw, ga_sw, na_sw, prw, a_prw
  std::string param;   // "L=100", "T2=10", model kind, ...
  Eigen::Index m = 0;
  Eigen::Index d = 0;
  double iters_per_sec = 0.0;   // median over repetitions
  double median_seconds = 0.0;  // per iteration
  std::vector<double> rep_seconds;
  std::optional<std::int64_t> peak_bytes;
  std::uint64_t seed = 0;
};

struct BenchPoint {
  LossKind kind = LossKind::kSw;
  Eigen::Index L = 100;
  Eigen::Index T2 = 10;
  Eigen::Index k_sub = 1;
};

struct BenchGrid {
  std::vector<BenchPoint> points;
  Eigen::Index m = 128;
  Eigen::Index d = 2;
  int warmup = 3;        // discarded iterations
  int repetitions = 5;   // timed repetitions; the median is reported
  int iters_per_rep = 5; // loss iterations per repetition
  std::uint64_t seed = 0;
};

/// Times one loss-kernel iteration (slice search or amortized step, value and
/// gradient w.r.t. the fake batch) on fixed data batches, point by point.
std::vector<BenchRecord> bench_sweep(const BenchGrid& grid);

BenchRecord bench_point(const BenchPoint& point, const BenchGrid& grid);

void write_csv_header(std::ostream& out);
void write_csv(std::ostream& out, const BenchRecord& r);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y ≈ slope·x + intercept.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Peak-heap instrumentation. Executables that link the allocation tracker get
// real numbers; otherwise available() is false.
namespace alloc {
bool available();
void reset_peak();
std::int64_t peak_bytes();
}  // namespace alloc

}  // namespace asw
