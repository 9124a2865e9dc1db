#include "asw/amortized.hpp"

#include <cmath>

#include "binary_io.hpp"

namespace asw {
namespace {

Matrix sigmoid(const Matrix& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

void check_inputs(Eigen::Index m, Eigen::Index d, const EmpiricalMeasure& x,
                  const EmpiricalMeasure& y) {
  if (x.m() != m || y.m() != m) {
    throw ContractViolation("amortized model expects mini-batches of size " + std::to_string(m));
  }
  if (x.d() != d || y.d() != d) {
    throw ContractViolation("amortized model expects dimension " + std::to_string(d));
  }
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  return stddev * standard_normal(rows, cols, rng);
}

MlpBlock init_mlp(Eigen::Index d, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  MlpBlock b;
  b.w_a = gaussian(d, d, s, rng);
  b.w_b = gaussian(d, d, s, rng);
  b.b0 = Vector::Zero(d);
  return b;
}

void write_row_major(std::ostream& out, const Matrix& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) io::write_le<double>(out, a(i, j));
  }
}

Matrix read_row_major(io::Reader& r, Eigen::Index rows, Eigen::Index cols) {
  Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = r.read_le<double>();
  }
  return a;
}

ModelKind read_kind(io::Reader& r) {
  const auto k = r.read_le<std::uint8_t>();
  if (k > 2) throw ParseError("unknown model kind " + std::to_string(k) + " at byte 4");
  return static_cast<ModelKind>(k);
}

void write_mlp(std::ostream& out, const std::optional<MlpBlock>& mlp) {
  if (!mlp) return;
  write_row_major(out, mlp->w_a);
  write_row_major(out, mlp->w_b);
  write_row_major(out, mlp->b0);
}

std::optional<MlpBlock> read_mlp(io::Reader& r, ModelKind kind, Eigen::Index d) {
  if (kind == ModelKind::kLinear) return std::nullopt;
  MlpBlock b;
  b.w_a = read_row_major(r, d, d);
  b.w_b = read_row_major(r, d, d);
  b.b0 = read_row_major(r, d, 1);
  return b;
}

Matrix normalize_or_throw(const Matrix& z) {
  const double n = z.norm();
  if (!(n >= 1e-30) || !std::isfinite(n)) {
    throw DegenerateDirection("amortized model produced a pre-normalization vector of norm " +
                              std::to_string(n));
  }
  return z / n;
}

Direction direction_from_core(const AmortizedParams& psi, const EmpiricalMeasure& x,
                              const EmpiricalMeasure& y) {
  check_inputs(psi.m(), psi.d(), x, y);
  const CoreForward fwd = core_forward(core_view(psi), x.points(), y.points());
  return Direction(normalize_or_throw(fwd.z).col(0));
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinear:
      return "linear";
    case ModelKind::kGeneralizedLinear:
      return "generalized_linear";
    case ModelKind::kNonlinear:
      return "nonlinear";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "linear") return ModelKind::kLinear;
  if (name == "generalized_linear" || name == "generalized") return ModelKind::kGeneralizedLinear;
  if (name == "nonlinear") return ModelKind::kNonlinear;
  throw ParseError("unknown amortized model kind \"" + name + "\"");
}

Matrix MlpBlock::apply_cols(const Matrix& cols) const {
  return (w_b * sigmoid(w_a * cols)).colwise() + b0;
}

AmortizedParams AmortizedParams::init(ModelKind kind, Eigen::Index m, Eigen::Index d, Rng& rng) {
  if (m < 1 || d < 1) throw ContractViolation("amortized model needs m >= 1 and d >= 1");
  const double s = std::pow(static_cast<double>(d), -0.25);
  AmortizedParams psi;
  psi.kind = kind;
  psi.linear.w0 = gaussian(d, 1, s, rng).col(0);
  psi.linear.w1 = gaussian(m, 1, s, rng).col(0);
  psi.linear.w2 = gaussian(m, 1, s, rng).col(0);
  if (kind != ModelKind::kLinear) psi.mlp = init_mlp(d, rng);
  return psi;
}

void AmortizedParams::reinit_w0(Rng& rng) {
  linear.w0 = gaussian(d(), 1, std::pow(static_cast<double>(d()), -0.25), rng).col(0);
}

ProjectedAmortizedParams ProjectedAmortizedParams::init(ModelKind kind, Eigen::Index m,
                                                        Eigen::Index d, Eigen::Index k, Rng& rng) {
  if (m < 1 || d < 1 || k < 1 || k > d) {
    throw ContractViolation("projected amortized model needs m >= 1 and 1 <= k <= d");
  }
  const double s = std::pow(static_cast<double>(d), -0.25);
  ProjectedAmortizedParams psi;
  psi.kind = kind;
  psi.w0 = gaussian(d, k, s, rng);
  psi.w1 = gaussian(m, k, s, rng);
  psi.w2 = gaussian(m, k, s, rng);
  if (kind != ModelKind::kLinear) psi.mlp = init_mlp(d, rng);
  return psi;
}

void ProjectedAmortizedParams::reinit_w0(Rng& rng) {
  w0 = gaussian(d(), k(), std::pow(static_cast<double>(d()), -0.25), rng);
}

CoreView core_view(const AmortizedParams& psi) {
  if ((psi.kind == ModelKind::kLinear) == psi.mlp.has_value()) {
    throw ContractViolation("amortized params: MLP block must be present iff kind is not linear");
  }
  if (psi.linear.w1.size() != psi.linear.w2.size()) {
    throw ContractViolation("amortized params: w1 and w2 differ in length");
  }
  return CoreView{psi.kind, psi.linear.w0, psi.linear.w1, psi.linear.w2,
                  psi.mlp ? &*psi.mlp : nullptr};
}

CoreView core_view(const ProjectedAmortizedParams& psi) {
  if ((psi.kind == ModelKind::kLinear) == psi.mlp.has_value()) {
    throw ContractViolation("amortized params: MLP block must be present iff kind is not linear");
  }
  if (psi.w1.rows() != psi.w2.rows() || psi.w1.cols() != psi.k() || psi.w2.cols() != psi.k()) {
    throw ContractViolation("projected amortized params: inconsistent block shapes");
  }
  return CoreView{psi.kind, psi.w0, psi.w1, psi.w2, psi.mlp ? &*psi.mlp : nullptr};
}

namespace {

// w0 + (T(X)w1 + T(Y)w2). The two data terms are formed separately and then
// added, so swapping (X, w1) with (Y, w2) gives bit-identical z.
Matrix linear_form(const CoreView& psi, const Matrix& fx, const Matrix& fy) {
  const Matrix a = fx.transpose() * psi.w1;
  const Matrix b = fy.transpose() * psi.w2;
  return psi.w0 + (a + b);
}

}  // namespace

CoreForward core_forward(const CoreView& psi, const Matrix& x, const Matrix& y) {
  CoreForward f;
  switch (psi.kind) {
    case ModelKind::kLinear:
      f.z = linear_form(psi, x, y);
      break;
    case ModelKind::kGeneralizedLinear: {
      const MlpBlock& g = *psi.mlp;
      // Rows are points: feat = σ(X W_aᵀ) W_bᵀ + 1 b0ᵀ.
      f.act_x = sigmoid(x * g.w_a.transpose());
      f.act_y = sigmoid(y * g.w_a.transpose());
      f.feat_x = (f.act_x * g.w_b.transpose()).rowwise() + g.b0.transpose();
      f.feat_y = (f.act_y * g.w_b.transpose()).rowwise() + g.b0.transpose();
      f.z = linear_form(psi, f.feat_x, f.feat_y);
      break;
    }
    case ModelKind::kNonlinear: {
      const MlpBlock& h = *psi.mlp;
      f.lin = linear_form(psi, x, y);
      f.act = sigmoid(h.w_a * f.lin);
      f.z = (h.w_b * f.act).colwise() + h.b0;
      break;
    }
  }
  return f;
}

CoreGrads core_backward(const CoreView& psi, const Matrix& x, const Matrix& y,
                        const CoreForward& fwd, const Matrix& grad_z) {
  CoreGrads g;
  const Eigen::Index d = x.cols();
  switch (psi.kind) {
    case ModelKind::kLinear:
      g.w0 = grad_z;
      g.w1 = x * grad_z;
      g.w2 = y * grad_z;
      g.x = psi.w1 * grad_z.transpose();
      g.y = psi.w2 * grad_z.transpose();
      break;
    case ModelKind::kGeneralizedLinear: {
      const MlpBlock& mlp = *psi.mlp;
      g.w0 = grad_z;
      g.w1 = fwd.feat_x * grad_z;
      g.w2 = fwd.feat_y * grad_z;
      g.w_a = Matrix::Zero(d, d);
      g.w_b = Matrix::Zero(d, d);
      g.b0 = Vector::Zero(d);
      auto through_features = [&](const Matrix& pts, const Matrix& act, const Matrix& grad_feat) {
        g.w_b.noalias() += grad_feat.transpose() * act;
        g.b0 += grad_feat.colwise().sum().transpose();
        const Matrix grad_pre =
            ((grad_feat * mlp.w_b).array() * act.array() * (1.0 - act.array())).matrix();
        g.w_a.noalias() += grad_pre.transpose() * pts;
        return Matrix(grad_pre * mlp.w_a);
      };
      g.x = through_features(x, fwd.act_x, psi.w1 * grad_z.transpose());
      g.y = through_features(y, fwd.act_y, psi.w2 * grad_z.transpose());
      break;
    }
    case ModelKind::kNonlinear: {
      const MlpBlock& mlp = *psi.mlp;
      g.w_b = grad_z * fwd.act.transpose();
      g.b0 = grad_z.rowwise().sum();
      const Matrix grad_pre =
          ((mlp.w_b.transpose() * grad_z).array() * fwd.act.array() * (1.0 - fwd.act.array()))
              .matrix();
      g.w_a = grad_pre * fwd.lin.transpose();
      const Matrix grad_lin = mlp.w_a.transpose() * grad_pre;
      g.w0 = grad_lin;
      g.w1 = x * grad_lin;
      g.w2 = y * grad_lin;
      g.x = psi.w1 * grad_lin.transpose();
      g.y = psi.w2 * grad_lin.transpose();
      break;
    }
  }
  return g;
}

Direction forward_linear(const LinearAmortizedParams& psi, const EmpiricalMeasure& x,
                         const EmpiricalMeasure& y) {
  AmortizedParams wrapped{ModelKind::kLinear, psi, std::nullopt};
  return direction_from_core(wrapped, x, y);
}

Direction forward_generalized(const AmortizedParams& psi, const EmpiricalMeasure& x,
                              const EmpiricalMeasure& y) {
  if (psi.kind != ModelKind::kGeneralizedLinear) {
    throw ContractViolation("forward_generalized called with a " + to_string(psi.kind) + " model");
  }
  return direction_from_core(psi, x, y);
}

Direction forward_nonlinear(const AmortizedParams& psi, const EmpiricalMeasure& x,
                            const EmpiricalMeasure& y) {
  if (psi.kind != ModelKind::kNonlinear) {
    throw ContractViolation("forward_nonlinear called with a " + to_string(psi.kind) + " model");
  }
  return direction_from_core(psi, x, y);
}

Direction forward(const AmortizedParams& psi, const EmpiricalMeasure& x, const EmpiricalMeasure& y) {
  return direction_from_core(psi, x, y);
}

ProjectionFrame forward_projected(const ProjectedAmortizedParams& psi, const EmpiricalMeasure& x,
                                  const EmpiricalMeasure& y) {
  check_inputs(psi.m(), psi.d(), x, y);
  const CoreForward fwd = core_forward(core_view(psi), x.points(), y.points());
  const ThinQr qr = thin_qr(fwd.z);
  const double scale = std::max(1.0, fwd.z.cwiseAbs().maxCoeff());
  if (!qr.r.allFinite() || qr.r.diagonal().minCoeff() < 1e-12 * scale) {
    throw DegenerateDirection("projected amortized model produced a rank-deficient frame");
  }
  return ProjectionFrame(qr.q);
}

Eigen::Index parameter_count(ModelKind kind, Eigen::Index m, Eigen::Index d) {
  if (kind == ModelKind::kLinear) return 2 * m + d;
  return 2 * (m + d * d + d);
}

Eigen::Index parameter_count(const AmortizedParams& psi) {
  return psi.linear.parameter_count() + (psi.mlp ? psi.mlp->parameter_count() : 0);
}

Eigen::Index parameter_count(const ProjectedAmortizedParams& psi) {
  return psi.w0.size() + psi.w1.size() + psi.w2.size() +
         (psi.mlp ? psi.mlp->parameter_count() : 0);
}

std::int64_t flop_estimate(ModelKind kind, std::int64_t m, std::int64_t d) {
  switch (kind) {
    case ModelKind::kLinear:
      return (2 * m + 1) * d;
    case ModelKind::kGeneralizedLinear:
      return 4 * m * d * d + 6 * m * d + d;
    case ModelKind::kNonlinear:
      return 2 * m * d + 2 * d * d + 3 * d;
  }
  return 0;
}

std::int64_t flop_estimate(const AmortizedParams& psi) {
  return flop_estimate(psi.kind, psi.m(), psi.d());
}

void write_checkpoint(std::ostream& out, const AmortizedParams& psi) {
  core_view(psi);
  io::write_magic(out, "AMSW");
  io::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(psi.kind));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(psi.m()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(psi.d()));
  write_row_major(out, psi.linear.w0);
  write_row_major(out, psi.linear.w1);
  write_row_major(out, psi.linear.w2);
  write_mlp(out, psi.mlp);
}

AmortizedParams read_checkpoint(std::istream& in) {
  io::Reader r(in);
  r.expect_magic("AMSW");
  AmortizedParams psi;
  psi.kind = read_kind(r);
  const auto m = static_cast<Eigen::Index>(r.read_le<std::uint32_t>());
  const auto d = static_cast<Eigen::Index>(r.read_le<std::uint32_t>());
  if (m == 0 || d == 0) throw ParseError("AMSW header declares m or d of zero");
  psi.linear.w0 = read_row_major(r, d, 1).col(0);
  psi.linear.w1 = read_row_major(r, m, 1).col(0);
  psi.linear.w2 = read_row_major(r, m, 1).col(0);
  psi.mlp = read_mlp(r, psi.kind, d);
  return psi;
}

void write_checkpoint(std::ostream& out, const ProjectedAmortizedParams& psi) {
  core_view(psi);
  io::write_magic(out, "APRW");
  io::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(psi.kind));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(psi.m()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(psi.d()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(psi.k()));
  write_row_major(out, psi.w0);
  write_row_major(out, psi.w1);
  write_row_major(out, psi.w2);
  write_mlp(out, psi.mlp);
}

ProjectedAmortizedParams read_projected_checkpoint(std::istream& in) {
  io::Reader r(in);
  r.expect_magic("APRW");
  ProjectedAmortizedParams psi;
  psi.kind = read_kind(r);
  const auto m = static_cast<Eigen::Index>(r.read_le<std::uint32_t>());
  const auto d = static_cast<Eigen::Index>(r.read_le<std::uint32_t>());
  const auto k = static_cast<Eigen::Index>(r.read_le<std::uint32_t>());
  if (m == 0 || d == 0 || k == 0 || k > d) throw ParseError("APRW header has invalid m, d or k");
  psi.w0 = read_row_major(r, d, k);
  psi.w1 = read_row_major(r, m, k);
  psi.w2 = read_row_major(r, m, k);
  psi.mlp = read_mlp(r, psi.kind, d);
  return psi;
}

namespace {

template <typename Derived>
ParamBlock block(std::string name, Eigen::PlainObjectBase<Derived>& a) {
  return ParamBlock{std::move(name), Eigen::Map<Matrix>(a.data(), a.rows(), a.cols())};
}

void append_mlp(std::vector<ParamBlock>& out, std::optional<MlpBlock>& mlp) {
  if (!mlp) return;
  out.push_back(block("w_a", mlp->w_a));
  out.push_back(block("w_b", mlp->w_b));
  out.push_back(block("b0", mlp->b0));
}

}  // namespace

std::vector<ParamBlock> param_blocks(AmortizedParams& psi) {
  std::vector<ParamBlock> out;
  out.push_back(block("w0", psi.linear.w0));
  out.push_back(block("w1", psi.linear.w1));
  out.push_back(block("w2", psi.linear.w2));
  append_mlp(out, psi.mlp);
  return out;
}

std::vector<ParamBlock> param_blocks(ProjectedAmortizedParams& psi) {
  std::vector<ParamBlock> out;
  out.push_back(block("w0", psi.w0));
  out.push_back(block("w1", psi.w1));
  out.push_back(block("w2", psi.w2));
  append_mlp(out, psi.mlp);
  return out;
}

}  // namespace asw
