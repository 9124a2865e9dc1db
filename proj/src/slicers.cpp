#include "asw/slicers.hpp"

#include <cmath>
#include <ostream>

#include <json.hpp>

#include "asw/grad.hpp"

namespace asw {
namespace {

void check_measures(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.d() != nu.d()) {
    throw ContractViolation("measures differ in dimension (" + std::to_string(mu.d()) + " vs " +
                            std::to_string(nu.d()) + ")");
  }
  if (mu.m() != nu.m()) {
    throw Unsupported("measures differ in size (" + std::to_string(mu.m()) + " vs " +
                      std::to_string(nu.m()) + ")");
  }
}

void check_config(const SliceOptConfig& cfg) {
  if (cfg.max_iters < 1) throw ContractViolation("slice optimizer needs max_iters >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ContractViolation("slice optimizer needs learning_rate > 0");
}

void trace(const SliceOptConfig& cfg, Eigen::Index iter, double objective, double step_norm) {
  if (cfg.trace == nullptr) return;
  *cfg.trace << nlohmann::json{{"iter", iter}, {"objective", objective}, {"step_norm", step_norm}}.dump()
             << '\n';
}

// Replaces numerically dependent columns with fresh random ones until the
// QR is well conditioned.
ThinQr retract(const Matrix& a, Rng& rng, Eigen::Index& repairs) {
  Matrix work = a;
  for (int attempt = 0;; ++attempt) {
    ThinQr qr = thin_qr(work);
    const double scale = std::max(1.0, work.cwiseAbs().maxCoeff());
    Eigen::Index bad = -1;
    for (Eigen::Index j = 0; j < qr.r.cols(); ++j) {
      if (!(qr.r(j, j) >= 1e-12 * scale)) {
        bad = j;
        break;
      }
    }
    if (bad < 0 && qr.q.allFinite()) return qr;
    if (attempt > 16) throw NumericalFailure("PRW retraction failed to recover a full-rank frame");
    ++repairs;
    if (bad < 0) bad = 0;
    work.col(bad) = standard_normal(work.rows(), 1, rng).col(0);
  }
}

}  // namespace

SwSamples sw_estimate_detailed(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                               Eigen::Index n_projections, Order p, Rng& rng) {
  check_measures(mu, nu);
  if (n_projections < 1) throw ContractViolation("sw_estimate needs L >= 1");
  SwSamples out;
  out.projected.reserve(static_cast<std::size_t>(n_projections));
  double acc = 0.0;
  for (Eigen::Index l = 0; l < n_projections; ++l) {
    const Direction theta = sample_sphere(mu.d(), rng);
    const double wp = wasserstein_1d_pow(project(mu, theta), project(nu, theta), p);
    acc += wp;
    out.projected.push_back(p == Order::kOne ? wp : std::sqrt(wp));
  }
  const double mean = acc / static_cast<double>(n_projections);
  out.value = p == Order::kOne ? mean : std::sqrt(mean);
  return out;
}

double sw_estimate(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, Eigen::Index n_projections,
                   Order p, Rng& rng) {
  return sw_estimate_detailed(mu, nu, n_projections, p, rng).value;
}

MaxSwResult max_sw(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   const SliceOptConfig& cfg, Order p) {
  check_measures(mu, nu);
  check_config(cfg);
  Rng rng(cfg.seed);
  Vector theta = cfg.init_direction ? Direction::normalized(*cfg.init_direction).vec()
                                    : sample_sphere(mu.d(), rng).vec();
  if (theta.size() != mu.d()) throw ContractViolation("max_sw: initial direction dimension mismatch");

  SliceGradient sg = slice_value_grad(mu.points(), nu.points(), theta, p);
  MaxSwResult out{sg.value, Direction(theta), 0, sg.value};
  trace(cfg, 0, sg.value, 0.0);

  for (Eigen::Index t = 1; t <= cfg.max_iters; ++t) {
    Vector next = theta + cfg.learning_rate * sg.grad_theta;
    const double n = next.norm();
    if (!(n >= 1e-30) || !std::isfinite(n)) throw NumericalFailure("max_sw: iterate left the sphere");
    next /= n;
    const double step = (next - theta).norm();
    theta = std::move(next);
    out.iterations = t;
    sg = slice_value_grad(mu.points(), nu.points(), theta, p);
    trace(cfg, t, sg.value, step);
    if (cfg.return_last || sg.value > out.value) {
      out.value = sg.value;
      out.theta = Direction(theta);
    }
    if (step < cfg.stop_tol) break;
  }
  return out;
}

PrwResult prw(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, Eigen::Index k_sub,
              const SliceOptConfig& cfg, Order p) {
  check_measures(mu, nu);
  check_config(cfg);
  if (k_sub < 1 || k_sub > mu.d()) throw ContractViolation("prw needs 1 <= k_sub <= d");
  Rng rng(cfg.seed);
  Eigen::Index repairs = 0;
  Matrix frame;
  if (cfg.init_frame) {
    if (cfg.init_frame->rows() != mu.d() || cfg.init_frame->cols() != k_sub) {
      throw ContractViolation("prw: initial frame has the wrong shape");
    }
    frame = retract(*cfg.init_frame, rng, repairs).q;
  } else {
    frame = random_frame(mu.d(), k_sub, rng).cols();
  }

  FrameGradient fg = frame_value_grad(mu.points(), nu.points(), frame, p);
  PrwResult out{fg.value, ProjectionFrame(frame), 0, fg.value, 0};
  trace(cfg, 0, fg.value, 0.0);

  for (Eigen::Index t = 1; t <= cfg.max_iters; ++t) {
    const Matrix next = retract(frame + cfg.learning_rate * fg.grad_frame, rng, repairs).q;
    const double step = (next - frame).norm();
    frame = next;
    out.iterations = t;
    fg = frame_value_grad(mu.points(), nu.points(), frame, p);
    trace(cfg, t, fg.value, step);
    if (cfg.return_last || fg.value > out.value) {
      out.value = fg.value;
      out.frame = ProjectionFrame(frame);
    }
    if (step < cfg.stop_tol) break;
  }
  out.reorthogonalizations = repairs;
  if (repairs > 0 && cfg.trace != nullptr) {
    *cfg.trace << nlohmann::json{{"event", "warning"},
                                 {"message", "re-randomized rank-deficient frame columns"},
                                 {"count", repairs}}
                      .dump()
               << '\n';
  }
  return out;
}

}  // namespace asw
