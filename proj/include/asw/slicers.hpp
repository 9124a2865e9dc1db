#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>

#include "asw/common.hpp"
#include "asw/frame.hpp"
#include "asw/measures.hpp"

namespace asw {

/// Settings for projected gradient ascent over directions (Max-SW) or frames (PRW).
struct SliceOptConfig {
  Eigen::Index max_iters = 100;   // T
  double learning_rate = 0.01;    // η
  std::uint64_t seed = 0;         // used when no initial direction/frame is given
  std::optional<Vector> init_direction;
  std::optional<Matrix> init_frame;
  /// Stop when ‖θ_{t+1} − θ_t‖ falls below this; 0 runs all max_iters steps.
  double stop_tol = 1e-7;
  /// Return the final iterate instead of the best one seen.
  bool return_last = false;
  /// Optional JSONL sink for {iter, objective, step_norm} records.
  std::ostream* trace = nullptr;
};

/// Monte Carlo sliced Wasserstein: ((1/L) Σ W_p^p(θ_l♯μ, θ_l♯ν))^{1/p}.
double sw_estimate(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, Eigen::Index n_projections,
                   Order p, Rng& rng);

/// Same estimator, also returning every per-direction W_p (for contraction checks).
struct SwSamples {
  double value = 0.0;
  std::vector<double> projected;  // W_p(θ_l♯μ, θ_l♯ν)
};
SwSamples sw_estimate_detailed(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                               Eigen::Index n_projections, Order p, Rng& rng);

struct MaxSwResult {
  double value = 0.0;
  Direction theta;
  Eigen::Index iterations = 0;  // ascent steps actually taken
  double initial_value = 0.0;
};

/// Max-SW by projected gradient ascent on the sphere.
MaxSwResult max_sw(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   const SliceOptConfig& cfg, Order p);

struct PrwResult {
  double value = 0.0;
  ProjectionFrame frame;
  Eigen::Index iterations = 0;
  double initial_value = 0.0;
  Eigen::Index reorthogonalizations = 0;  // rank-deficient iterates repaired
};

/// Projected robust Wasserstein by gradient ascent with QR retraction.
PrwResult prw(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, Eigen::Index k_sub,
              const SliceOptConfig& cfg, Order p);

}  // namespace asw
