#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "asw/amortized.hpp"
#include "asw/common.hpp"
#include "asw/eval.hpp"
#include "asw/generator.hpp"
#include "asw/measures.hpp"

namespace asw {

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  Vector first;   // m_t
  Vector second;  // v_t
  std::int64_t step = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

/// One descent step in place: params ← params − lr·m̂/(√v̂ + eps), bias-corrected.
void adam_step(Vector& params, const Vector& grads, AdamState& state, const AdamConfig& cfg);

// ---------------------------------------------------------------------------
// Configuration and logs

enum class LossKind { kSw, kMaxSw, kLaSw, kGaSw, kNaSw, kPrw, kAPrw };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);
bool is_amortized(LossKind kind);
/// Amortized model family behind la_sw / ga_sw / na_sw.
ModelKind model_kind_of(LossKind kind);

struct TrainConfig {
  LossKind loss_kind = LossKind::kLaSw;
  Eigen::Index m = 128;          // mini-batch size
  Eigen::Index k_batches = 1;    // mini-batch pairs per outer step
  Eigen::Index T1 = 1000;        // outer (model) iterations
  Eigen::Index T2 = 10;          // slice iterations (max_sw, prw)
  Eigen::Index L = 100;          // projections (sw)
  double eta1 = 2e-4;            // model learning rate
  double eta2 = 0.01;            // slice / amortized learning rate
  Order p = Order::kTwo;
  Eigen::Index k_sub = 1;        // frame width (prw, a_prw)
  ModelKind frame_model = ModelKind::kLinear;  // amortized family for a_prw
  std::uint64_t seed = 0;
  double beta1 = 0.0;
  double beta2 = 0.9;
  bool detach_slice = false;     // drop the gradient path through f_ψ(X, Y_φ)
  bool warm_start = false;       // reuse the previous θ / U as the next inner init
  // Generator architecture.
  Eigen::Index noise_dim = 16;
  Eigen::Index hidden_width = 128;
  Eigen::Index hidden_layers = 3;
  // Evaluation against held-out data: exact W2 every eval_every iterations
  // (0 = only before training and at the end).
  Eigen::Index eval_every = 0;
  Eigen::Index eval_samples = 512;
  double divergence_threshold = 1e6;

  void validate() const;
};

struct RunRecord {
  Eigen::Index iteration = 0;
  double loss = 0.0;
  double wall_ms = 0.0;
  std::optional<double> exact_w2;
  double phi_norm = 0.0;
  std::optional<double> psi_norm;
};

/// Deterministic part of a record (no wall-clock).
void write_jsonl(std::ostream& out, const RunRecord& record);

struct TrainCounters {
  std::int64_t phi_updates = 0;
  std::int64_t psi_updates = 0;
  std::int64_t slice_updates = 0;
  std::int64_t degenerate_events = 0;
};

struct TrainResult {
  GeneratorParams generator;
  std::optional<AmortizedParams> psi;
  std::optional<ProjectedAmortizedParams> frame_psi;
  std::vector<RunRecord> log;
  TrainCounters counters;
  bool failed = false;
  std::string failure_reason;
  std::optional<double> untrained_w2;
  std::optional<double> final_w2;
  Eigen::Index iterations = 0;  // completed outer iterations
};

struct TrainHooks {
  /// Called for every mini-batch pair with the loss value the trainer used.
  std::function<void(Eigen::Index iter, const Matrix& x, const Matrix& y, double value)> on_batch;
  /// Called after each outer iteration.
  std::function<void(Eigen::Index iter, const TrainResult& state)> on_iteration;
};

/// Optional initial state; otherwise parameters are drawn from the seed streams.
struct TrainInit {
  std::optional<GeneratorParams> generator;
  std::optional<AmortizedParams> psi;
  std::optional<ProjectedAmortizedParams> frame_psi;
};

// Seed-stream indices derived from TrainConfig::seed via child_seed.
enum class Stream : std::uint64_t {
  kGeneratorInit = 0,
  kPsiInit = 1,
  kData = 2,
  kNoise = 3,
  kSlices = 4,
  kEvalNoise = 5,
  kRepair = 6,
};

inline Rng stream_rng(std::uint64_t seed, Stream s) {
  return child_rng(seed, static_cast<std::uint64_t>(s));
}

/// Generator drawn from the kGeneratorInit stream with cfg's architecture.
GeneratorParams init_generator(const TrainConfig& cfg, Eigen::Index out_dim);

// ---------------------------------------------------------------------------
// Loss kernels: the per-iteration loss-side work (slice search, amortized
// forward/backward) for one loss kind. The trainer and the bench harness share them.

class LossKernel {
 public:
  struct Output {
    double value = 0.0;
    Matrix grad_y;  // ∂loss/∂Y
  };

  virtual ~LossKernel() = default;
  /// Loss and its gradient w.r.t. Y for one pair. Slice-parameter gradients are
  /// accumulated with the given weight.
  virtual Output evaluate(const Matrix& x, const Matrix& y, double weight) = 0;
  /// Applies accumulated slice-parameter updates (amortized kinds only).
  virtual void finish_iteration() {}
  virtual double psi_norm() const { return 0.0; }
  virtual bool has_psi() const { return false; }

  TrainCounters counters;
};

std::unique_ptr<LossKernel> make_loss_kernel(const TrainConfig& cfg, Eigen::Index d,
                                             const TrainInit& init = {});

/// Amortized parameters currently held by a kernel, if any.
std::optional<AmortizedParams> kernel_psi(const LossKernel& kernel);
std::optional<ProjectedAmortizedParams> kernel_frame_psi(const LossKernel& kernel);

// ---------------------------------------------------------------------------
// Training loops

/// Dispatches on cfg.loss_kind. `heldout`, when given, is the reference for exact-W2
/// evaluation (cfg.eval_samples rows are used).
TrainResult train(const EmpiricalMeasure& data, const TrainConfig& cfg,
                  const EmpiricalMeasure* heldout = nullptr, const TrainInit& init = {},
                  const TrainHooks& hooks = {});

/// Mini-batch Max-SW training: T2 ascent steps per pair from a fresh θ, then a φ step.
TrainResult train_max_sw(const EmpiricalMeasure& data, const TrainConfig& cfg,
                         const EmpiricalMeasure* heldout = nullptr, const TrainHooks& hooks = {});

/// Amortized training: one ψ ascent and one φ descent step per outer iteration.
TrainResult train_amortized(const EmpiricalMeasure& data, const TrainConfig& cfg,
                            const EmpiricalMeasure* heldout = nullptr, const TrainInit& init = {},
                            const TrainHooks& hooks = {});

/// Mini-batch SW training with L fresh directions per step.
TrainResult train_sw(const EmpiricalMeasure& data, const TrainConfig& cfg,
                     const EmpiricalMeasure* heldout = nullptr, const TrainHooks& hooks = {});

/// Exact W2 between G_φ(noise) and the first noise.rows() rows of `heldout`.
double generator_exact_w2(const GeneratorParams& phi, const Matrix& noise,
                          const EmpiricalMeasure& heldout);

// ---------------------------------------------------------------------------
// Amortized slicer fitting between two fixed measures: ascent on
// E_{X,Y}[W_p(f_ψ(X,Y)♯P_X, f_ψ(X,Y)♯P_Y)].

struct AswFitConfig {
  ModelKind kind = ModelKind::kLinear;
  Eigen::Index m = 4;
  Eigen::Index iters = 500;
  double lr = 0.01;
  Order p = Order::kTwo;
  std::uint64_t seed = 0;
  double beta1 = 0.0;
  double beta2 = 0.9;
};

struct AswFit {
  AmortizedParams psi;
  std::vector<double> objective_trace;
  std::int64_t degenerate_events = 0;
};

AswFit fit_amortized_slicer(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                            const AswFitConfig& cfg);

/// A-SW objective of a fixed ψ over a fixed pair stream.
MonteCarloEstimate asw_objective(const AmortizedParams& psi, const std::vector<MinibatchPair>& pairs,
                                 Order p);

}  // namespace asw
