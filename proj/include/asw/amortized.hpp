#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "asw/common.hpp"
#include "asw/frame.hpp"
#include "asw/measures.hpp"

namespace asw {

enum class ModelKind : std::uint8_t { kLinear = 0, kGeneralizedLinear = 1, kNonlinear = 2 };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// x ↦ W_b σ(W_a x) + b0 with σ the logistic sigmoid.
struct MlpBlock {
  Matrix w_a;  // d×d
  Matrix w_b;  // d×d
  Vector b0;   // d

  Eigen::Index d() const { return b0.size(); }
  Eigen::Index parameter_count() const { return 2 * d() * d() + d(); }
  /// Applies the block to every column of `cols`.
  Matrix apply_cols(const Matrix& cols) const;
};

/// ψ = (w0, w1, w2) of the linear model.
struct LinearAmortizedParams {
  Vector w0;  // d
  Vector w1;  // m
  Vector w2;  // m

  Eigen::Index parameter_count() const { return w0.size() + w1.size() + w2.size(); }
};

/// Parameters of a direction-valued amortized model. `mlp` holds ψ₁ (generalized
/// linear: applied to every support point) or ψ₂ (non-linear: applied to the
/// linear combination); it is present iff kind != kLinear.
struct AmortizedParams {
  ModelKind kind = ModelKind::kLinear;
  LinearAmortizedParams linear;
  std::optional<MlpBlock> mlp;

  Eigen::Index m() const { return linear.w1.size(); }
  Eigen::Index d() const { return linear.w0.size(); }

  /// w0, w1, w2 ~ N(0, 1/√d) (variance); MLP weights ~ N(0, 1/d); biases 0.
  static AmortizedParams init(ModelKind kind, Eigen::Index m, Eigen::Index d, Rng& rng);
  /// Redraws w0 only; used to escape a degenerate z.
  void reinit_w0(Rng& rng);
};

/// Frame-valued (A-PRW) model: Z = W0 + T(X)W1 + T(Y)W2 mapped to the Q of its QR.
struct ProjectedAmortizedParams {
  ModelKind kind = ModelKind::kLinear;
  Matrix w0;  // d×k
  Matrix w1;  // m×k
  Matrix w2;  // m×k
  std::optional<MlpBlock> mlp;

  Eigen::Index m() const { return w1.rows(); }
  Eigen::Index d() const { return w0.rows(); }
  Eigen::Index k() const { return w0.cols(); }

  static ProjectedAmortizedParams init(ModelKind kind, Eigen::Index m, Eigen::Index d,
                                       Eigen::Index k, Rng& rng);
  void reinit_w0(Rng& rng);
};

Direction forward_linear(const LinearAmortizedParams& psi, const EmpiricalMeasure& x,
                         const EmpiricalMeasure& y);
Direction forward_generalized(const AmortizedParams& psi, const EmpiricalMeasure& x,
                              const EmpiricalMeasure& y);
Direction forward_nonlinear(const AmortizedParams& psi, const EmpiricalMeasure& x,
                            const EmpiricalMeasure& y);
/// Dispatches on psi.kind.
Direction forward(const AmortizedParams& psi, const EmpiricalMeasure& x, const EmpiricalMeasure& y);
ProjectionFrame forward_projected(const ProjectedAmortizedParams& psi, const EmpiricalMeasure& x,
                                  const EmpiricalMeasure& y);

Eigen::Index parameter_count(const AmortizedParams& psi);
Eigen::Index parameter_count(const ProjectedAmortizedParams& psi);
Eigen::Index parameter_count(ModelKind kind, Eigen::Index m, Eigen::Index d);

/// Operation counts of one forward pass: (2m+1)d, 4md²+6md+d, 2md+2d²+3d.
std::int64_t flop_estimate(ModelKind kind, std::int64_t m, std::int64_t d);
std::int64_t flop_estimate(const AmortizedParams& psi);

// Checkpoint: "AMSW", u8 kind, u32 m, u32 d, then f64 w0, w1, w2 and, when
// present, W_a, W_b (row-major), b0. Little-endian.
void write_checkpoint(std::ostream& out, const AmortizedParams& psi);
AmortizedParams read_checkpoint(std::istream& in);
// Frame models use "APRW", u8 kind, u32 m, u32 d, u32 k, then W0, W1, W2 (row-major), MLP.
void write_checkpoint(std::ostream& out, const ProjectedAmortizedParams& psi);
ProjectedAmortizedParams read_projected_checkpoint(std::istream& in);

/// Named view of one parameter block, in declared field order.
struct ParamBlock {
  std::string name;
  Eigen::Map<Matrix> values;
};

std::vector<ParamBlock> param_blocks(AmortizedParams& psi);
std::vector<ParamBlock> param_blocks(ProjectedAmortizedParams& psi);

// ---------------------------------------------------------------------------
// Shared core: the pre-normalization map Z(ψ, X, Y) (d×k) and its
// vector-Jacobian product. Direction models use k = 1.

struct CoreView {
  ModelKind kind;
  Eigen::Ref<const Matrix> w0;
  Eigen::Ref<const Matrix> w1;
  Eigen::Ref<const Matrix> w2;
  const MlpBlock* mlp;
};

CoreView core_view(const AmortizedParams& psi);
CoreView core_view(const ProjectedAmortizedParams& psi);

struct CoreForward {
  Matrix z;  // d×k
  // Generalized linear: per-point sigmoid activations and features.
  Matrix act_x, act_y, feat_x, feat_y;
  // Non-linear: the linear combination and its sigmoid activation.
  Matrix lin, act;
};

CoreForward core_forward(const CoreView& psi, const Matrix& x, const Matrix& y);

struct CoreGrads {
  Matrix w0, w1, w2;
  Matrix w_a, w_b;
  Vector b0;
  Matrix x, y;  // gradient w.r.t. the support points (m×d)
};

CoreGrads core_backward(const CoreView& psi, const Matrix& x, const Matrix& y,
                        const CoreForward& fwd, const Matrix& grad_z);

}  // namespace asw
