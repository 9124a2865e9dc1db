#include "asw/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>


namespace asw {

namespace alloc {
// Overridden by alloc_tracker.cpp when it is linked into the executable.
__attribute__((weak)) bool available() { return false; }
__attribute__((weak)) void reset_peak() {}
__attribute__((weak)) std::int64_t peak_bytes() { return 0; }
}  // namespace alloc

namespace {

std::string param_label(const BenchPoint& p) {
  switch (p.kind) {
    case LossKind::kSw:
      return "L=" + std::to_string(p.L);
    case LossKind::kMaxSw:
      return "T2=" + std::to_string(p.T2);
    case LossKind::kPrw:
      return "T2=" + std::to_string(p.T2) + ";k=" + std::to_string(p.k_sub);
    case LossKind::kAPrw:
      return "k=" + std::to_string(p.k_sub);
    default:
      return to_string(model_kind_of(p.kind));
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BenchRecord bench_point(const BenchPoint& point, const BenchGrid& grid) {
  if (grid.repetitions < 5 || grid.warmup < 3 || grid.iters_per_rep < 1) {
    throw ContractViolation("bench: needs >= 5 repetitions, >= 3 warmup iterations");
  }
  TrainConfig cfg;
  cfg.loss_kind = point.kind;
  cfg.m = grid.m;
  cfg.L = point.L;
  cfg.T2 = point.T2;
  cfg.k_sub = point.k_sub;
  cfg.seed = grid.seed;

  // Fixed batches: two Gaussian clouds offset along the first axis.
  Rng rng = child_rng(grid.seed, 7);
  Matrix x = standard_normal(grid.m, grid.d, rng);
  Matrix y = standard_normal(grid.m, grid.d, rng);
  y.col(0).array() += 2.0;

  auto kernel = make_loss_kernel(cfg, grid.d);
  auto run_once = [&] {
    LossKernel::Output out = kernel->evaluate(x, y, 1.0);
    kernel->finish_iteration();
    return out.value;
  };

  const bool track = alloc::available();
  if (track) alloc::reset_peak();
  for (int i = 0; i < grid.warmup; ++i) run_once();

  BenchRecord rec;
  rec.method = to_string(point.kind);
  rec.param = param_label(point);
  rec.m = grid.m;
  rec.d = grid.d;
  rec.seed = grid.seed;
  double sink = 0.0;
  for (int r = 0; r < grid.repetitions; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < grid.iters_per_rep; ++i) sink += run_once();
    const auto t1 = std::chrono::steady_clock::now();
    rec.rep_seconds.push_back(std::chrono::duration<double>(t1 - t0).count() /
                              grid.iters_per_rep);
  }
  if (!std::isfinite(sink)) throw NumericalFailure("bench: non-finite loss");
  rec.median_seconds = median(rec.rep_seconds);
  rec.iters_per_sec = 1.0 / rec.median_seconds;
  if (track) rec.peak_bytes = alloc::peak_bytes();
  return rec;
}

std::vector<BenchRecord> bench_sweep(const BenchGrid& grid) {
  std::vector<BenchRecord> out;
  out.reserve(grid.points.size());
  for (const auto& p : grid.points) out.push_back(bench_point(p, grid));
  return out;
}

void write_csv_header(std::ostream& out) {
  out << "method,param,m,d,iters_per_sec,peak_bytes,seed\n";
}

void write_csv(std::ostream& out, const BenchRecord& r) {
  out << r.method << ',' << r.param << ',' << r.m << ',' << r.d << ',' << r.iters_per_sec << ',';
  if (r.peak_bytes) {
    out << *r.peak_bytes;
  } else {
    out << "unavailable";
  }
  out << ',' << r.seed << '\n';
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractViolation("linear_fit: need >= 2 points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ContractViolation("linear_fit: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

}  // namespace asw
