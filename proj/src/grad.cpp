#include "asw/grad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "asw/eval.hpp"

namespace asw {
namespace {

double sign(double c) { return c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0); }

// d/dc of |c|^p, with sign(0) = 0.
double dpow(double c, Order p) { return p == Order::kOne ? sign(c) : 2.0 * c; }

double pow_abs(double c, Order p) { return p == Order::kOne ? std::abs(c) : c * c; }

// Chain factor of the outer root: d(S^{1/p})/dS.
double root_factor(double s, Order p) {
  if (s < kZeroDistanceFloor) return 0.0;
  return p == Order::kOne ? 1.0 : 0.5 / std::sqrt(s);
}

double root(double s, Order p) { return p == Order::kOne ? s : std::sqrt(s); }

void check_pair(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) throw Unsupported("mini-batches must have equal size");
  if (x.cols() != y.cols()) throw ContractViolation("mini-batches differ in dimension");
}

}  // namespace

const Matrix& ValueGrad::grad(const std::string& name) const {
  auto it = grads.find(name);
  if (it == grads.end()) throw ContractViolation("no gradient block named \"" + name + "\"");
  return it->second;
}

SliceGradient slice_value_grad(const Matrix& x, const Matrix& y, const Vector& theta, Order p,
                               bool root_value) {
  check_pair(x, y);
  if (theta.size() != x.cols()) throw ContractViolation("slice direction dimension mismatch");
  const Eigen::Index m = x.rows();
  const Vector u = x * theta;
  const Vector v = y * theta;
  const auto rx = stable_argsort(u);
  const auto ry = stable_argsort(v);

  const double inv_m = 1.0 / static_cast<double>(m);
  Vector c(m);
  double s = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) {
    c[r] = u[rx[r]] - v[ry[r]];
    s += pow_abs(c[r], p);
  }
  s *= inv_m;

  SliceGradient out;
  out.value = root_value ? root(s, p) : s;
  const double factor = root_value ? root_factor(s, p) : 1.0;
  out.grad_theta = Vector::Zero(theta.size());
  out.grad_x = Matrix::Zero(m, x.cols());
  out.grad_y = Matrix::Zero(m, y.cols());
  if (factor == 0.0) return out;
  for (Eigen::Index r = 0; r < m; ++r) {
    const double a = factor * inv_m * dpow(c[r], p);
    if (a == 0.0) continue;
    out.grad_theta += a * (x.row(rx[r]) - y.row(ry[r])).transpose();
    out.grad_x.row(rx[r]) = a * theta.transpose();
    out.grad_y.row(ry[r]) = -a * theta.transpose();
  }
  return out;
}

namespace {

Assignment sorted_assignment(const Vector& u, const Vector& v, Order p) {
  const auto ru = stable_argsort(u);
  const auto rv = stable_argsort(v);
  Assignment a;
  a.col_of_row.resize(static_cast<std::size_t>(u.size()));
  for (std::size_t k = 0; k < ru.size(); ++k) {
    const Eigen::Index i = ru[k];
    const Eigen::Index j = rv[k];
    a.col_of_row[static_cast<std::size_t>(i)] = j;
    a.cost += std::pow(std::abs(u[i] - v[j]), as_int(p));
  }
  return a;
}

}  // namespace

FrameGradient frame_value_grad(const Matrix& x, const Matrix& y, const Matrix& frame, Order p) {
  check_pair(x, y);
  if (frame.rows() != x.cols()) throw ContractViolation("frame dimension mismatch");
  const Eigen::Index m = x.rows();
  const Matrix px = x * frame;
  const Matrix py = y * frame;
  // One column: sorted matching is optimal, no need for the O(m^3) solver.
  const Assignment match =
      frame.cols() == 1 ? sorted_assignment(px.col(0), py.col(0), p) : solve_assignment(ground_cost(px, py, p));

  const double inv_m = 1.0 / static_cast<double>(m);
  const double s = std::max(0.0, match.cost * inv_m);
  FrameGradient out;
  out.value = root(s, p);
  out.grad_frame = Matrix::Zero(frame.rows(), frame.cols());
  out.grad_x = Matrix::Zero(m, x.cols());
  out.grad_y = Matrix::Zero(m, y.cols());
  const double factor = root_factor(s, p);
  if (factor == 0.0) return out;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = match.col_of_row[i];
    const Eigen::RowVectorXd r = px.row(i) - py.row(j);
    Eigen::RowVectorXd ds(r.size());
    for (Eigen::Index k = 0; k < r.size(); ++k) ds[k] = factor * inv_m * dpow(r[k], p);
    out.grad_frame += (x.row(i) - y.row(j)).transpose() * ds;
    const Eigen::RowVectorXd back = ds * frame.transpose();
    out.grad_x.row(i) = back;
    out.grad_y.row(j) = -back;
  }
  return out;
}

ValueGrad grad_theta_w1d(const EmpiricalMeasure& x, const EmpiricalMeasure& y,
                         const Direction& theta, Order p) {
  if (theta.d() != x.d()) throw ContractViolation("grad_theta_w1d: dimension mismatch");
  const SliceGradient sg = slice_value_grad(x.points(), y.points(), theta.vec(), p);
  ValueGrad vg;
  vg.value = sg.value;
  vg.grads["theta"] = sg.grad_theta;
  return vg;
}

namespace {

void store_core_grads(ValueGrad& vg, const CoreGrads& g, bool has_mlp) {
  vg.grads["w0"] = g.w0;
  vg.grads["w1"] = g.w1;
  vg.grads["w2"] = g.w2;
  if (has_mlp) {
    vg.grads["w_a"] = g.w_a;
    vg.grads["w_b"] = g.w_b;
    vg.grads["b0"] = g.b0;
  }
}

void check_batch(const CoreView& view, const Matrix& x, const Matrix& y) {
  if (x.rows() != view.w1.rows() || y.rows() != view.w1.rows()) {
    throw ContractViolation("amortized model expects mini-batches of size " +
                            std::to_string(view.w1.rows()));
  }
  if (x.cols() != view.w0.rows() || y.cols() != view.w0.rows()) {
    throw ContractViolation("amortized model dimension mismatch");
  }
}

}  // namespace

AmortizedLossGrad amortized_loss_grad(const AmortizedParams& psi, const Matrix& x,
                                      const Matrix& y, Order p) {
  const CoreView view = core_view(psi);
  check_batch(view, x, y);
  const CoreForward fwd = core_forward(view, x, y);
  const double n = fwd.z.norm();
  if (!(n >= 1e-30) || !std::isfinite(n)) {
    throw DegenerateDirection("amortized model produced a pre-normalization vector of norm " +
                              std::to_string(n));
  }
  const Vector theta = fwd.z.col(0) / n;
  const SliceGradient sg = slice_value_grad(x, y, theta, p);
  // θ = z/‖z‖  ⇒  ∂θ/∂z = (I − θθᵀ)/‖z‖.
  const Vector grad_z = (sg.grad_theta - theta * theta.dot(sg.grad_theta)) / n;
  const CoreGrads cg = core_backward(view, x, y, fwd, grad_z);

  AmortizedLossGrad out;
  out.value = sg.value;
  out.psi.value = sg.value;
  store_core_grads(out.psi, cg, psi.mlp.has_value());
  out.grad_x = sg.grad_x + cg.x;
  out.grad_y = sg.grad_y + cg.y;
  out.grad_y_direct = sg.grad_y;
  return out;
}

AmortizedLossGrad amortized_loss_grad(const ProjectedAmortizedParams& psi, const Matrix& x,
                                      const Matrix& y, Order p) {
  const CoreView view = core_view(psi);
  check_batch(view, x, y);
  const CoreForward fwd = core_forward(view, x, y);
  const ThinQr qr = thin_qr(fwd.z);
  const double scale = std::max(1.0, fwd.z.cwiseAbs().maxCoeff());
  if (!qr.r.allFinite() || qr.r.diagonal().minCoeff() < 1e-12 * scale) {
    throw DegenerateDirection("projected amortized model produced a rank-deficient frame");
  }
  const FrameGradient fg = frame_value_grad(x, y, qr.q, p);
  const Matrix grad_z = thin_qr_backward(qr, fg.grad_frame);
  const CoreGrads cg = core_backward(view, x, y, fwd, grad_z);

  AmortizedLossGrad out;
  out.value = fg.value;
  out.psi.value = fg.value;
  store_core_grads(out.psi, cg, psi.mlp.has_value());
  out.grad_x = fg.grad_x + cg.x;
  out.grad_y = fg.grad_y + cg.y;
  out.grad_y_direct = fg.grad_y;
  return out;
}

ValueGrad grad_psi_loss(const AmortizedParams& psi, const EmpiricalMeasure& x,
                        const EmpiricalMeasure& y, Order p) {
  return amortized_loss_grad(psi, x.points(), y.points(), p).psi;
}

ValueGrad grad_psi_loss(const ProjectedAmortizedParams& psi, const EmpiricalMeasure& x,
                        const EmpiricalMeasure& y, Order p) {
  return amortized_loss_grad(psi, x.points(), y.points(), p).psi;
}

ValueGrad grad_phi_loss(const GeneratorParams& phi, const Matrix& noise, const EmpiricalMeasure& x,
                        const SliceSource& slice, Order p, bool detach_slice) {
  const GeneratorTape tape = generator_tape(phi, noise);
  double value = 0.0;
  Matrix grad_y;
  if (const auto* theta = std::get_if<Direction>(&slice)) {
    SliceGradient sg = slice_value_grad(x.points(), tape.output, theta->vec(), p);
    value = sg.value;
    grad_y = std::move(sg.grad_y);
  } else {
    const AmortizedParams* psi = std::get<const AmortizedParams*>(slice);
    if (psi == nullptr) throw ContractViolation("grad_phi_loss: null amortized model");
    AmortizedLossGrad ag = amortized_loss_grad(*psi, x.points(), tape.output, p);
    value = ag.value;
    grad_y = detach_slice ? std::move(ag.grad_y_direct) : std::move(ag.grad_y);
  }
  const auto layer_grads = generator_backward(phi, tape, grad_y);
  ValueGrad vg;
  vg.value = value;
  for (std::size_t l = 0; l < layer_grads.size(); ++l) {
    vg.grads["layer" + std::to_string(l) + ".weight"] = layer_grads[l].weight;
    vg.grads["layer" + std::to_string(l) + ".bias"] = layer_grads[l].bias;
  }
  return vg;
}

Vector flatten_grads(const ValueGrad& vg, const std::vector<std::string>& names) {
  Eigen::Index n = 0;
  for (const auto& name : names) n += vg.grad(name).size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const auto& name : names) {
    const Matrix& g = vg.grad(name);
    out.segment(at, g.size()) = g.reshaped();
    at += g.size();
  }
  return out;
}

FdReport fd_check(const FlatObjective& f, const Vector& x0, const FdOptions& opts) {
  if (!(opts.h > 0.0)) throw ContractViolation("fd_check: h must be positive");
  const auto [f0, analytic] = f(x0);
  if (analytic.size() != x0.size()) throw ContractViolation("fd_check: gradient size mismatch");

  std::vector<Eigen::Index> coords(static_cast<std::size_t>(x0.size()));
  std::iota(coords.begin(), coords.end(), Eigen::Index{0});
  if (coords.size() > opts.max_coords) {
    Rng rng(opts.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(opts.max_coords);
    std::sort(coords.begin(), coords.end());
  }

  const double floor = 1e-5 * std::max(1.0, std::abs(f0));
  FdReport report;
  report.instance_seed = opts.seed;
  double sum = 0.0;
  Vector xp = x0;
  for (Eigen::Index i : coords) {
    xp[i] = x0[i] + opts.h;
    const double fp = f(xp).first;
    xp[i] = x0[i] - opts.h;
    const double fm = f(xp).first;
    xp[i] = x0[i];
    FdCoordinate c;
    c.index = i;
    c.analytic = analytic[i];
    c.numeric = (fp - fm) / (2.0 * opts.h);
    c.rel_err = std::abs(c.analytic - c.numeric) /
                std::max({std::abs(c.analytic), std::abs(c.numeric), floor});
    if (!std::isfinite(c.rel_err)) c.rel_err = std::numeric_limits<double>::infinity();
    report.max_rel_err = std::max(report.max_rel_err, c.rel_err);
    sum += c.rel_err;
    report.coords.push_back(c);
  }
  report.mean_rel_err = coords.empty() ? 0.0 : sum / static_cast<double>(coords.size());
  report.pass = report.max_rel_err < opts.tol;
  return report;
}

void write_jsonl(std::ostream& out, const FdReport& report) {
  nlohmann::json j{{"op", report.op},
                   {"instance_seed", report.instance_seed},
                   {"max_rel_err", report.max_rel_err},
                   {"mean_rel_err", report.mean_rel_err},
                   {"pass", report.pass}};
  out << j.dump() << '\n';
}

}  // namespace asw
