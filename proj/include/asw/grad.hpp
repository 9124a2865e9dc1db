#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "asw/amortized.hpp"
#include "asw/common.hpp"
#include "asw/frame.hpp"
#include "asw/generator.hpp"
#include "asw/measures.hpp"

namespace asw {

/// Objective value with gradients keyed by parameter-block name.
struct ValueGrad {
  double value = 0.0;
  std::map<std::string, Matrix> grads;

  const Matrix& grad(const std::string& name) const;
};

/// Below this value of S = (1/m)Σ|c_i|^p the 1/p-root gradient is defined as zero.
inline constexpr double kZeroDistanceFloor = 1e-300;

/// W_p(θ♯P_X, θ♯P_Y) with its a.e. gradients, θ treated as a free vector in R^d.
/// With `root == false` the value is W_p^p and the gradients are those of W_p^p.
struct SliceGradient {
  double value = 0.0;
  Vector grad_theta;
  Matrix grad_x;
  Matrix grad_y;
};

SliceGradient slice_value_grad(const Matrix& x, const Matrix& y, const Vector& theta, Order p,
                               bool root = true);

/// W_p(U♯P_X, U♯P_Y) for a d×k frame, ground cost Σ_k |·|^p on the projections,
/// optimal matching from the exact assignment oracle.
struct FrameGradient {
  double value = 0.0;
  Matrix grad_frame;
  Matrix grad_x;
  Matrix grad_y;
};

FrameGradient frame_value_grad(const Matrix& x, const Matrix& y, const Matrix& frame, Order p);

ValueGrad grad_theta_w1d(const EmpiricalMeasure& x, const EmpiricalMeasure& y,
                         const Direction& theta, Order p);

/// Loss at the amortized slice with gradients w.r.t. ψ and both point sets.
/// `grad_y_direct` holds the part with the slice held fixed; `grad_y` adds the
/// path through f_ψ(X, Y).
struct AmortizedLossGrad {
  double value = 0.0;
  ValueGrad psi;
  Matrix grad_x;
  Matrix grad_y;
  Matrix grad_y_direct;
};

AmortizedLossGrad amortized_loss_grad(const AmortizedParams& psi, const Matrix& x,
                                      const Matrix& y, Order p);
AmortizedLossGrad amortized_loss_grad(const ProjectedAmortizedParams& psi, const Matrix& x,
                                      const Matrix& y, Order p);

ValueGrad grad_psi_loss(const AmortizedParams& psi, const EmpiricalMeasure& x,
                        const EmpiricalMeasure& y, Order p);
ValueGrad grad_psi_loss(const ProjectedAmortizedParams& psi, const EmpiricalMeasure& x,
                        const EmpiricalMeasure& y, Order p);

/// Source of the slicing direction for the generator loss.
using SliceSource = std::variant<Direction, const AmortizedParams*>;

/// Gradient of W_p(θ♯P_X, θ♯P_{G_φ(ε)}) w.r.t. φ, where θ is either fixed or
/// θ = f_ψ(X, G_φ(ε)). Blocks are named "layer<i>.weight" / "layer<i>.bias".
ValueGrad grad_phi_loss(const GeneratorParams& phi, const Matrix& noise, const EmpiricalMeasure& x,
                        const SliceSource& slice, Order p, bool detach_slice = false);

/// Flattens grads in the order of `names`.
Vector flatten_grads(const ValueGrad& vg, const std::vector<std::string>& names);

// ---------------------------------------------------------------------------
// Finite-difference verification.

struct FdOptions {
  double h = 1e-6;
  double tol = 1e-4;
  std::size_t max_coords = 200;  // coordinates sampled when the parameter vector is larger
  std::uint64_t seed = 0;        // for coordinate subsampling
};

struct FdCoordinate {
  Eigen::Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct FdReport {
  std::string op;
  std::uint64_t instance_seed = 0;
  double max_rel_err = 0.0;
  double mean_rel_err = 0.0;
  bool pass = false;
  std::vector<FdCoordinate> coords;  // sorted by index
};

/// Value and gradient of a scalar function of a flat parameter vector.
using FlatObjective = std::function<std::pair<double, Vector>(const Vector&)>;

/// Central differences per coordinate. Relative error per coordinate is
/// |a − n| / max(|a|, |n|, 1e-5·max(1, |f(x0)|)).
FdReport fd_check(const FlatObjective& f, const Vector& x0, const FdOptions& opts = {});

/// One JSONL line: {op, instance_seed, max_rel_err, mean_rel_err, pass}.
void write_jsonl(std::ostream& out, const FdReport& report);

}  // namespace asw
