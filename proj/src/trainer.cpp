#include "asw/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "asw/grad.hpp"
#include "asw/slicers.hpp"

namespace asw {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kSw:
      return "sw";
    case LossKind::kMaxSw:
      return "max_sw";
    case LossKind::kLaSw:
      return "la_sw";
    case LossKind::kGaSw:
      return "ga_sw";
    case LossKind::kNaSw:
      return "na_sw";
    case LossKind::kPrw:
      return "prw";
    case LossKind::kAPrw:
      return "a_prw";
  }
  return "unknown";
}

LossKind loss_kind_from_string(const std::string& name) {
  for (LossKind k : {LossKind::kSw, LossKind::kMaxSw, LossKind::kLaSw, LossKind::kGaSw,
                     LossKind::kNaSw, LossKind::kPrw, LossKind::kAPrw}) {
    if (to_string(k) == name) return k;
  }
  throw ParseError("unknown loss kind \"" + name + "\"");
}

bool is_amortized(LossKind kind) {
  return kind == LossKind::kLaSw || kind == LossKind::kGaSw || kind == LossKind::kNaSw;
}

ModelKind model_kind_of(LossKind kind) {
  switch (kind) {
    case LossKind::kLaSw:
      return ModelKind::kLinear;
    case LossKind::kGaSw:
      return ModelKind::kGeneralizedLinear;
    case LossKind::kNaSw:
      return ModelKind::kNonlinear;
    default:
      throw ContractViolation(to_string(kind) + " is not an amortized sliced loss");
  }
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ContractViolation(std::string("train config: ") + what);
  };
  require(m >= 1, "m must be >= 1");
  require(k_batches >= 1, "k_batches must be >= 1");
  require(T1 >= 0, "T1 must be >= 0");
  require(T2 >= 1, "T2 must be >= 1");
  require(L >= 1, "L must be >= 1");
  require(eta1 >= 0.0 && std::isfinite(eta1), "eta1 must be >= 0");
  require(eta2 >= 0.0 && std::isfinite(eta2), "eta2 must be >= 0");
  require(k_sub >= 1, "k_sub must be >= 1");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "adam betas must be in [0, 1)");
  require(noise_dim >= 1 && hidden_width >= 1 && hidden_layers >= 0, "invalid generator shape");
  require(eval_every >= 0 && eval_samples >= 1, "invalid evaluation settings");
  require(divergence_threshold > 0.0, "divergence_threshold must be positive");
  if (loss_kind == LossKind::kMaxSw || loss_kind == LossKind::kPrw) {
    require(eta2 > 0.0, "slice learning rate eta2 must be positive");
  }
}

void write_jsonl(std::ostream& out, const RunRecord& r) {
  nlohmann::json j{{"iteration", r.iteration}, {"loss", r.loss}, {"phi_norm", r.phi_norm}};
  if (r.exact_w2) j["exact_w2"] = *r.exact_w2;
  if (r.psi_norm) j["psi_norm"] = *r.psi_norm;
  out << j.dump() << '\n';
}

GeneratorParams init_generator(const TrainConfig& cfg, Eigen::Index out_dim) {
  Rng rng = stream_rng(cfg.seed, Stream::kGeneratorInit);
  return GeneratorParams::init(cfg.noise_dim, cfg.hidden_width, cfg.hidden_layers, out_dim, rng);
}

namespace {

Vector flatten_blocks(std::vector<ParamBlock> blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.values.size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.segment(at, b.values.size()) = b.values.reshaped();
    at += b.values.size();
  }
  return out;
}

void unflatten_blocks(std::vector<ParamBlock> blocks, const Vector& flat) {
  Eigen::Index at = 0;
  for (auto& b : blocks) {
    b.values.reshaped() = flat.segment(at, b.values.size());
    at += b.values.size();
  }
}

std::vector<std::string> block_names(std::vector<ParamBlock> blocks) {
  std::vector<std::string> names;
  for (const auto& b : blocks) names.push_back(b.name);
  return names;
}

// SW with L fresh directions; gradient of ((1/L)Σ W_p^p)^{1/p}.
class SwKernel final : public LossKernel {
 public:
  SwKernel(const TrainConfig& cfg, Eigen::Index d)
      : n_proj_(cfg.L), p_(cfg.p), d_(d), rng_(stream_rng(cfg.seed, Stream::kSlices)) {}

  Output evaluate(const Matrix& x, const Matrix& y, double) override {
    double acc = 0.0;
    Matrix grad = Matrix::Zero(y.rows(), y.cols());
    for (Eigen::Index l = 0; l < n_proj_; ++l) {
      const Direction theta = sample_sphere(d_, rng_);
      const SliceGradient sg = slice_value_grad(x, y, theta.vec(), p_, /*root=*/false);
      acc += sg.value;
      grad += sg.grad_y;
    }
    const double inv_l = 1.0 / static_cast<double>(n_proj_);
    const double mean = acc * inv_l;
    Output out;
    double factor = 0.0;
    if (p_ == Order::kOne) {
      out.value = mean;
      factor = inv_l;
    } else {
      out.value = std::sqrt(mean);
      factor = mean < kZeroDistanceFloor ? 0.0 : inv_l * 0.5 / out.value;
    }
    out.grad_y = factor * grad;
    return out;
  }

 private:
  Eigen::Index n_proj_;
  Order p_;
  Eigen::Index d_;
  Rng rng_;
};

// T2 projected-ascent steps per pair, then the gradient at the found slice.
class MaxSwKernel final : public LossKernel {
 public:
  MaxSwKernel(const TrainConfig& cfg, Eigen::Index d)
      : cfg_(cfg), d_(d), rng_(stream_rng(cfg.seed, Stream::kSlices)) {}

  Output evaluate(const Matrix& x, const Matrix& y, double) override {
    SliceOptConfig sc;
    sc.max_iters = cfg_.T2;
    sc.learning_rate = cfg_.eta2;
    sc.stop_tol = 0.0;
    sc.init_direction = cfg_.warm_start && last_ ? *last_ : sample_sphere(d_, rng_).vec();
    const MaxSwResult r = max_sw(EmpiricalMeasure(x), EmpiricalMeasure(y), sc, cfg_.p);
    counters.slice_updates += r.iterations;
    last_ = r.theta.vec();
    SliceGradient sg = slice_value_grad(x, y, r.theta.vec(), cfg_.p);
    return Output{sg.value, std::move(sg.grad_y)};
  }

 private:
  TrainConfig cfg_;
  Eigen::Index d_;
  Rng rng_;
  std::optional<Vector> last_;
};

class PrwKernel final : public LossKernel {
 public:
  PrwKernel(const TrainConfig& cfg, Eigen::Index d)
      : cfg_(cfg), d_(d), rng_(stream_rng(cfg.seed, Stream::kSlices)) {
    if (cfg.k_sub > d) throw ContractViolation("prw: k_sub exceeds the data dimension");
  }

  Output evaluate(const Matrix& x, const Matrix& y, double) override {
    SliceOptConfig sc;
    sc.max_iters = cfg_.T2;
    sc.learning_rate = cfg_.eta2;
    sc.stop_tol = 0.0;
    sc.seed = rng_();
    if (cfg_.warm_start && last_) sc.init_frame = *last_;
    const PrwResult r = prw(EmpiricalMeasure(x), EmpiricalMeasure(y), cfg_.k_sub, sc, cfg_.p);
    counters.slice_updates += r.iterations;
    last_ = r.frame.cols();
    FrameGradient fg = frame_value_grad(x, y, r.frame.cols(), cfg_.p);
    return Output{fg.value, std::move(fg.grad_y)};
  }

 private:
  TrainConfig cfg_;
  Eigen::Index d_;
  Rng rng_;
  std::optional<Matrix> last_;
};

// One ψ ascent step per outer iteration; ψ persists across iterations.
template <typename Params>
class AmortizedKernel final : public LossKernel {
 public:
  AmortizedKernel(const TrainConfig& cfg, Params psi)
      : psi_(std::move(psi)),
        p_(cfg.p),
        detach_(cfg.detach_slice),
        adam_{cfg.eta2, cfg.beta1, cfg.beta2, 1e-8},
        repair_rng_(stream_rng(cfg.seed, Stream::kRepair)),
        names_(block_names(param_blocks(psi_))),
        grad_acc_(Vector::Zero(flatten_blocks(param_blocks(psi_)).size())) {}

  Output evaluate(const Matrix& x, const Matrix& y, double weight) override {
    for (int attempt = 0;; ++attempt) {
      try {
        AmortizedLossGrad ag = amortized_loss_grad(psi_, x, y, p_);
        grad_acc_ += weight * flatten_grads(ag.psi, names_);
        return Output{ag.value, detach_ ? std::move(ag.grad_y_direct) : std::move(ag.grad_y)};
      } catch (const DegenerateDirection&) {
        if (attempt >= 8) throw;
        ++counters.degenerate_events;
        psi_.reinit_w0(repair_rng_);
      }
    }
  }

  void finish_iteration() override {
    Vector flat = flatten_blocks(param_blocks(psi_));
    // Ascent on the loss: descend on its negation.
    adam_step(flat, -grad_acc_, state_, adam_);
    unflatten_blocks(param_blocks(psi_), flat);
    grad_acc_.setZero();
    ++counters.psi_updates;
  }

  double psi_norm() const override {
    auto copy = psi_;
    return flatten_blocks(param_blocks(copy)).norm();
  }
  bool has_psi() const override { return true; }

  const Params& psi() const { return psi_; }

 private:
  Params psi_;
  Order p_;
  bool detach_;
  AdamConfig adam_;
  AdamState state_;
  Rng repair_rng_;
  std::vector<std::string> names_;
  Vector grad_acc_;
};

using SwAmortizedKernel = AmortizedKernel<AmortizedParams>;
using FrameAmortizedKernel = AmortizedKernel<ProjectedAmortizedParams>;

}  // namespace

std::unique_ptr<LossKernel> make_loss_kernel(const TrainConfig& cfg, Eigen::Index d,
                                             const TrainInit& init) {
  switch (cfg.loss_kind) {
    case LossKind::kSw:
      return std::make_unique<SwKernel>(cfg, d);
    case LossKind::kMaxSw:
      return std::make_unique<MaxSwKernel>(cfg, d);
    case LossKind::kPrw:
      return std::make_unique<PrwKernel>(cfg, d);
    case LossKind::kLaSw:
    case LossKind::kGaSw:
    case LossKind::kNaSw: {
      AmortizedParams psi;
      if (init.psi) {
        psi = *init.psi;
        if (psi.kind != model_kind_of(cfg.loss_kind) || psi.m() != cfg.m || psi.d() != d) {
          throw ContractViolation("initial amortized params do not match the config");
        }
      } else {
        Rng rng = stream_rng(cfg.seed, Stream::kPsiInit);
        psi = AmortizedParams::init(model_kind_of(cfg.loss_kind), cfg.m, d, rng);
      }
      return std::make_unique<SwAmortizedKernel>(cfg, std::move(psi));
    }
    case LossKind::kAPrw: {
      if (cfg.k_sub > d) throw ContractViolation("a_prw: k_sub exceeds the data dimension");
      ProjectedAmortizedParams psi;
      if (init.frame_psi) {
        psi = *init.frame_psi;
        if (psi.m() != cfg.m || psi.d() != d || psi.k() != cfg.k_sub) {
          throw ContractViolation("initial projected amortized params do not match the config");
        }
      } else {
        Rng rng = stream_rng(cfg.seed, Stream::kPsiInit);
        psi = ProjectedAmortizedParams::init(cfg.frame_model, cfg.m, d, cfg.k_sub, rng);
      }
      return std::make_unique<FrameAmortizedKernel>(cfg, std::move(psi));
    }
  }
  throw ContractViolation("unknown loss kind");
}

std::optional<AmortizedParams> kernel_psi(const LossKernel& kernel) {
  if (const auto* k = dynamic_cast<const SwAmortizedKernel*>(&kernel)) return k->psi();
  return std::nullopt;
}

std::optional<ProjectedAmortizedParams> kernel_frame_psi(const LossKernel& kernel) {
  if (const auto* k = dynamic_cast<const FrameAmortizedKernel*>(&kernel)) return k->psi();
  return std::nullopt;
}

double generator_exact_w2(const GeneratorParams& phi, const Matrix& noise,
                          const EmpiricalMeasure& heldout) {
  if (heldout.m() < noise.rows()) {
    throw ContractViolation("held-out set has fewer rows than the evaluation batch");
  }
  const EmpiricalMeasure fake = generator_forward(phi, noise);
  const EmpiricalMeasure real(heldout.points().topRows(noise.rows()));
  return exact_wasserstein(fake, real, Order::kTwo);
}

TrainResult train(const EmpiricalMeasure& data, const TrainConfig& cfg,
                  const EmpiricalMeasure* heldout, const TrainInit& init, const TrainHooks& hooks) {
  cfg.validate();
  const Eigen::Index d = data.d();
  if (heldout != nullptr && heldout->d() != d) {
    throw ContractViolation("held-out data dimension differs from training data");
  }

  TrainResult result;
  result.generator = init.generator ? *init.generator : init_generator(cfg, d);
  if (result.generator.noise_dim() != cfg.noise_dim || result.generator.out_dim() != d) {
    throw ContractViolation("initial generator does not match the config");
  }
  auto kernel = make_loss_kernel(cfg, d, init);

  Rng data_rng = stream_rng(cfg.seed, Stream::kData);
  Rng noise_rng = stream_rng(cfg.seed, Stream::kNoise);
  Matrix eval_noise;
  if (heldout != nullptr) {
    Rng eval_rng = stream_rng(cfg.seed, Stream::kEvalNoise);
    eval_noise = standard_normal(cfg.eval_samples, cfg.noise_dim, eval_rng);
    result.untrained_w2 = generator_exact_w2(result.generator, eval_noise, *heldout);
  }

  Vector phi_flat = flatten(result.generator);
  AdamState phi_state;
  const AdamConfig phi_adam{cfg.eta1, cfg.beta1, cfg.beta2, 1e-8};
  const double inv_k = 1.0 / static_cast<double>(cfg.k_batches);

  auto sync_outputs = [&] {
    result.counters.psi_updates = kernel->counters.psi_updates;
    result.counters.slice_updates = kernel->counters.slice_updates;
    result.counters.degenerate_events = kernel->counters.degenerate_events;
    result.psi = kernel_psi(*kernel);
    result.frame_psi = kernel_frame_psi(*kernel);
  };

  for (Eigen::Index it = 0; it < cfg.T1; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    Vector grad_phi = Vector::Zero(phi_flat.size());
    double loss = 0.0;
    for (Eigen::Index b = 0; b < cfg.k_batches; ++b) {
      const EmpiricalMeasure x = sample_minibatch(data, cfg.m, data_rng);
      const Matrix noise = standard_normal(cfg.m, cfg.noise_dim, noise_rng);
      const GeneratorTape tape = generator_tape(result.generator, noise);
      if (!tape.output.allFinite()) {
        result.failed = true;
        result.failure_reason = "generator output is not finite";
        break;
      }
      LossKernel::Output out = kernel->evaluate(x.points(), tape.output, inv_k);
      if (hooks.on_batch) hooks.on_batch(it, x.points(), tape.output, out.value);
      loss += inv_k * out.value;
      grad_phi += inv_k * flatten(generator_backward(result.generator, tape, out.grad_y));
    }
    if (!result.failed && (!std::isfinite(loss) || loss > cfg.divergence_threshold ||
                           !grad_phi.allFinite())) {
      result.failed = true;
      result.failure_reason = "divergence guard: loss " + std::to_string(loss);
    }
    if (result.failed) break;

    adam_step(phi_flat, grad_phi, phi_state, phi_adam);
    unflatten(result.generator, phi_flat);
    ++result.counters.phi_updates;
    kernel->finish_iteration();

    RunRecord rec;
    rec.iteration = it;
    rec.loss = loss;
    rec.phi_norm = phi_flat.norm();
    if (kernel->has_psi()) rec.psi_norm = kernel->psi_norm();
    if (heldout != nullptr && cfg.eval_every > 0 && (it + 1) % cfg.eval_every == 0) {
      rec.exact_w2 = generator_exact_w2(result.generator, eval_noise, *heldout);
    }
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(rec);
    result.iterations = it + 1;
    if (hooks.on_iteration) {
      sync_outputs();
      hooks.on_iteration(it, result);
    }
  }

  sync_outputs();
  if (heldout != nullptr) {
    result.final_w2 = generator_exact_w2(result.generator, eval_noise, *heldout);
  }
  return result;
}

TrainResult train_max_sw(const EmpiricalMeasure& data, const TrainConfig& cfg,
                         const EmpiricalMeasure* heldout, const TrainHooks& hooks) {
  if (cfg.loss_kind != LossKind::kMaxSw) throw ContractViolation("train_max_sw needs loss_kind max_sw");
  return train(data, cfg, heldout, {}, hooks);
}

TrainResult train_amortized(const EmpiricalMeasure& data, const TrainConfig& cfg,
                            const EmpiricalMeasure* heldout, const TrainInit& init,
                            const TrainHooks& hooks) {
  if (!is_amortized(cfg.loss_kind)) {
    throw ContractViolation("train_amortized needs loss_kind la_sw, ga_sw or na_sw");
  }
  return train(data, cfg, heldout, init, hooks);
}

TrainResult train_sw(const EmpiricalMeasure& data, const TrainConfig& cfg,
                     const EmpiricalMeasure* heldout, const TrainHooks& hooks) {
  if (cfg.loss_kind != LossKind::kSw) throw ContractViolation("train_sw needs loss_kind sw");
  return train(data, cfg, heldout, {}, hooks);
}

AswFit fit_amortized_slicer(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                            const AswFitConfig& cfg) {
  if (mu.d() != nu.d()) throw ContractViolation("fit_amortized_slicer: dimension mismatch");
  if (cfg.m < 1 || cfg.iters < 0) throw ContractViolation("fit_amortized_slicer: invalid config");
  Rng init_rng = child_rng(cfg.seed, 1);
  Rng pair_rng = child_rng(cfg.seed, 2);
  Rng repair_rng = child_rng(cfg.seed, 6);
  AswFit fit{AmortizedParams::init(cfg.kind, cfg.m, mu.d(), init_rng), {}, 0};
  const auto names = block_names(param_blocks(fit.psi));
  AdamState state;
  const AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, 1e-8};
  fit.objective_trace.reserve(static_cast<std::size_t>(cfg.iters));
  for (Eigen::Index it = 0; it < cfg.iters; ++it) {
    const EmpiricalMeasure x = sample_minibatch(mu, cfg.m, pair_rng);
    const EmpiricalMeasure y = sample_minibatch(nu, cfg.m, pair_rng);
    AmortizedLossGrad ag;
    for (int attempt = 0;; ++attempt) {
      try {
        ag = amortized_loss_grad(fit.psi, x.points(), y.points(), cfg.p);
        break;
      } catch (const DegenerateDirection&) {
        if (attempt >= 8) throw;
        ++fit.degenerate_events;
        fit.psi.reinit_w0(repair_rng);
      }
    }
    fit.objective_trace.push_back(ag.value);
    Vector flat = flatten_blocks(param_blocks(fit.psi));
    adam_step(flat, -flatten_grads(ag.psi, names), state, adam);
    unflatten_blocks(param_blocks(fit.psi), flat);
  }
  return fit;
}

MonteCarloEstimate asw_objective(const AmortizedParams& psi, const std::vector<MinibatchPair>& pairs,
                                 Order p) {
  std::vector<double> values;
  values.reserve(pairs.size());
  for (const auto& pair : pairs) {
    const Direction theta = forward(psi, pair.x, pair.y);
    values.push_back(wasserstein_1d(project(pair.x, theta), project(pair.y, theta), p));
  }
  return summarize(std::move(values));
}

}  // namespace asw
