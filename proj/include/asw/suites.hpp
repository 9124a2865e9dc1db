#pragma once

#include <cstdint>
#include <vector>

#include "asw/amortized.hpp"
#include "asw/common.hpp"

namespace asw {

// Lower-bound check: a fitted amortized slicer's objective on a pair stream
// never beats grid-search mini-batch Max-SW on the same stream.
struct LowerBoundConfig {
  int instances = 20;
  std::uint64_t seed = 0;
  Eigen::Index support = 16;     // points per random measure
  Eigen::Index max_batch = 8;    // mini-batch size drawn from [2, max_batch]
  Eigen::Index n_pairs = 200;
  Eigen::Index n_angles = 10000;
  Eigen::Index fit_iters = 500;
  double fit_lr = 0.01;
  Order p = Order::kTwo;
  std::vector<ModelKind> kinds = {ModelKind::kLinear, ModelKind::kGeneralizedLinear,
                                  ModelKind::kNonlinear};
};

struct LowerBoundRow {
  int instance = 0;
  ModelKind kind = ModelKind::kLinear;
  Eigen::Index m = 0;
  double a_sw = 0.0;
  double a_sw_se = 0.0;
  double m_max_sw = 0.0;
  double m_max_sw_se = 0.0;
  double slack = 0.0;  // 2 standard errors of the oracle estimate
  bool pass = false;
};

std::vector<LowerBoundRow> lower_bound_suite(const LowerBoundConfig& cfg);

// Projection contraction: sampled slices, max_sw and prw never exceed exact W_p.
struct ContractionConfig {
  int instances = 100;
  std::uint64_t seed = 0;
  Eigen::Index n_slices = 50;
  double tol = 1e-9;
};

struct ContractionRow {
  int instance = 0;
  Order p = Order::kTwo;
  Eigen::Index m = 0;
  double exact = 0.0;
  double max_projected = 0.0;  // over the sampled slices
  double max_sw = 0.0;
  double prw = 0.0;            // largest over the frame widths checked
  bool pass = false;
};

std::vector<ContractionRow> contraction_suite(const ContractionConfig& cfg);

}  // namespace asw
