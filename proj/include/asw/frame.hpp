#pragma once

#include "asw/common.hpp"

namespace asw {

/// Column-orthonormal d×k matrix (a point on the Stiefel manifold V_k(R^d)).
class ProjectionFrame {
 public:
  /// Throws ContractViolation unless ‖UᵀU − I‖_∞ ≤ 1e-10.
  explicit ProjectionFrame(Matrix cols);

  Eigen::Index d() const { return cols_.rows(); }
  Eigen::Index k() const { return cols_.cols(); }
  const Matrix& cols() const { return cols_; }

 private:
  Matrix cols_;
};

/// Max-abs deviation of UᵀU from the identity.
double orthonormality_error(const Matrix& u);

/// Thin QR with nonnegative R diagonal, so the factorization is unique.
struct ThinQr {
  Matrix q;  // d×k
  Matrix r;  // k×k upper triangular
};

ThinQr thin_qr(const Matrix& a);

/// Vector-Jacobian product of A ↦ Q for the thin QR above (full column rank).
Matrix thin_qr_backward(const ThinQr& qr, const Matrix& grad_q);

/// QR of a d×k standard-normal draw.
ProjectionFrame random_frame(Eigen::Index d, Eigen::Index k, Rng& rng);

}  // namespace asw
