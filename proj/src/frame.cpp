#include "asw/frame.hpp"

#include "asw/measures.hpp"

namespace asw {

double orthonormality_error(const Matrix& u) {
  const Matrix gram = u.transpose() * u;
  return (gram - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

ProjectionFrame::ProjectionFrame(Matrix cols) : cols_(std::move(cols)) {
  if (cols_.cols() < 1 || cols_.rows() < cols_.cols()) {
    throw ContractViolation("projection frame needs 1 <= k <= d");
  }
  if (!cols_.allFinite() || orthonormality_error(cols_) > 1e-10) {
    throw ContractViolation("projection frame columns are not orthonormal");
  }
}

ThinQr thin_qr(const Matrix& a) {
  const Eigen::Index d = a.rows();
  const Eigen::Index k = a.cols();
  Eigen::HouseholderQR<Matrix> qr(a);
  ThinQr out;
  out.q = qr.householderQ() * Matrix::Identity(d, k);
  out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (out.r(j, j) < 0.0) {
      out.q.col(j) *= -1.0;
      out.r.row(j) *= -1.0;
    }
  }
  return out;
}

Matrix thin_qr_backward(const ThinQr& qr, const Matrix& grad_q) {
  // dQ = Q C + (I − QQᵀ) dA R⁻¹ with C skew and tril_strict(C) = tril_strict(Qᵀ dA R⁻¹).
  const Matrix& q = qr.q;
  const Matrix b = q.transpose() * grad_q;
  Matrix skew = b - b.transpose();
  skew.triangularView<Eigen::Upper>().setZero();
  const Matrix lhs = grad_q - q * b + q * skew;
  // lhs · R⁻ᵀ, i.e. solve X Rᵀ = lhs.
  return qr.r.triangularView<Eigen::Upper>().solve(lhs.transpose()).transpose();
}

ProjectionFrame random_frame(Eigen::Index d, Eigen::Index k, Rng& rng) {
  return ProjectionFrame(thin_qr(standard_normal(d, k, rng)).q);
}

}  // namespace asw
