#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "asw/datasets.hpp"
#include "asw/grad.hpp"
#include "asw/trainer.hpp"
#include "test_util.hpp"

using namespace asw;

namespace {

TrainConfig small_config(LossKind kind) {
  TrainConfig cfg;
  cfg.loss_kind = kind;
  cfg.m = 16;
  cfg.T1 = 15;
  cfg.T2 = 4;
  cfg.L = 8;
  cfg.eta1 = 1e-3;
  cfg.noise_dim = 4;
  cfg.hidden_width = 12;
  cfg.hidden_layers = 1;
  cfg.eval_samples = 32;
  cfg.seed = 5;
  return cfg;
}

EmpiricalMeasure ring(Eigen::Index n, std::uint64_t seed) {
  SyntheticSpec s;
  s.n_samples = n;
  s.seed = seed;
  return generate(s);
}

std::string log_text(const TrainResult& r) {
  std::stringstream s;
  for (const RunRecord& rec : r.log) write_jsonl(s, rec);
  return s.str();
}

const LossKind kAllLosses[] = {LossKind::kSw,   LossKind::kMaxSw, LossKind::kLaSw, LossKind::kGaSw,
                               LossKind::kNaSw, LossKind::kPrw,   LossKind::kAPrw};

}  // namespace

TEST(Adam, ZeroGradientLeavesParameters) {
  Vector p = vec({1, -2, 3});
  AdamState st;
  st.first = vec({0.5, 0.5, 0.5});
  st.second = vec({1, 1, 1});
  st.step = 3;
  adam_step(p, Vector::Zero(3), st, AdamConfig{0.1, 0.5, 0.9, 1e-8});
  // Moments decay; the step uses the decayed first moment, so it is not zero
  // unless the first moment is. With beta1 = 0 nothing moves.
  EXPECT_EQ(st.second, vec({0.9, 0.9, 0.9}));
  EXPECT_EQ(st.first, vec({0.25, 0.25, 0.25}));

  Vector q = vec({1, -2, 3});
  AdamState fresh;
  adam_step(q, Vector::Zero(3), fresh, AdamConfig{});
  EXPECT_EQ(q, vec({1, -2, 3}));
}

TEST(Adam, FirstStepIsSignScaled) {
  const Vector g = vec({3, -0.5, 1e-3});
  Vector p = Vector::Zero(3);
  AdamState st;
  const AdamConfig cfg{0.01, 0.0, 0.9, 1e-8};
  adam_step(p, g, st, cfg);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(p[i], -cfg.lr * g[i] / (std::abs(g[i]) + cfg.eps), 1e-15);
}

TEST(Adam, QuadraticBowlConverges) {
  const Vector target = vec({1.5, -0.7, 0.2});
  Vector p = Vector::Zero(3);
  AdamState st;
  const AdamConfig cfg{1e-2, 0.0, 0.9, 1e-8};
  int steps = 0;
  while (steps < 2000 && (p - target).cwiseAbs().maxCoeff() > 1e-3) {
    adam_step(p, 2.0 * (p - target), st, cfg);
    ++steps;
  }
  EXPECT_LE((p - target).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LE(steps, 2000);
}

TEST(Generator, ZeroWeightsEmitBias) {
  GeneratorParams g;
  g.layers.push_back({Matrix::Zero(4, 3), Vector::Zero(4)});
  g.layers.push_back({Matrix::Zero(2, 4), vec({0.5, -2})});
  Rng rng(100);
  const EmpiricalMeasure out = generator_forward(g, standard_normal(6, 3, rng));
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_EQ(out.points().row(i), vec({0.5, -2}).transpose());
}

TEST(Generator, IdentityLayerPassesNoiseThrough) {
  GeneratorParams g;
  g.layers.push_back({Matrix::Identity(3, 3), Vector::Zero(3)});
  Rng rng(101);
  const Matrix noise = standard_normal(5, 3, rng);
  EXPECT_EQ(generator_forward(g, noise).points(), noise);
}

TEST(Generator, CheckpointRoundTrip) {
  Rng rng(102);
  const GeneratorParams g = GeneratorParams::init(4, 8, 2, 2, rng);
  std::stringstream s;
  write_checkpoint(s, g);
  EXPECT_EQ(s.str().substr(0, 4), "GNSW");
  const GeneratorParams back = read_generator_checkpoint(s);
  EXPECT_EQ(flatten(back), flatten(g));
  EXPECT_EQ(back.parameter_count(), 4 * 8 + 8 + 8 * 8 + 8 + 8 * 2 + 2);
}

TEST(Trainer, SinglePointDataWithMatchedBiasHasZeroLoss) {
  const Vector pt = vec({1.0, -0.5});
  const EmpiricalMeasure data(pt.transpose().replicate(10, 1));
  for (LossKind kind : {LossKind::kSw, LossKind::kMaxSw, LossKind::kLaSw}) {
    TrainConfig cfg = small_config(kind);
    cfg.T1 = 1;
    GeneratorParams g = init_generator(cfg, 2);
    for (auto& layer : g.layers) {
      layer.weight.setZero();
      layer.bias.setZero();
    }
    g.layers.back().bias = pt;
    TrainInit init;
    init.generator = g;
    const TrainResult r = train(data, cfg, nullptr, init);
    ASSERT_EQ(r.log.size(), 1u);
    EXPECT_EQ(r.log[0].loss, 0.0) << to_string(kind);
    EXPECT_EQ(flatten(r.generator), flatten(g)) << to_string(kind);  // zero gradient, Adam leaves φ
  }
}

TEST(Trainer, DeterministicLogsForEveryLoss) {
  const EmpiricalMeasure data = ring(200, 1);
  for (LossKind kind : kAllLosses) {
    TrainConfig cfg = small_config(kind);
    if (kind == LossKind::kPrw || kind == LossKind::kAPrw) cfg.k_sub = 2;
    const TrainResult a = train(data, cfg);
    const TrainResult b = train(data, cfg);
    EXPECT_FALSE(a.failed) << a.failure_reason;
    EXPECT_EQ(log_text(a), log_text(b)) << to_string(kind);
    EXPECT_EQ(flatten(a.generator), flatten(b.generator));
  }
}

TEST(Trainer, LogExcludesWallClock) {
  RunRecord rec;
  rec.iteration = 3;
  rec.loss = 0.5;
  rec.wall_ms = 123.0;
  std::stringstream s;
  write_jsonl(s, rec);
  EXPECT_EQ(s.str().find("wall"), std::string::npos);
}

TEST(Trainer, LossesAreFiniteAndNonNegative) {
  const EmpiricalMeasure data = ring(200, 2);
  for (LossKind kind : kAllLosses) {
    const TrainResult r = train(data, small_config(kind));
    for (const RunRecord& rec : r.log) {
      EXPECT_TRUE(std::isfinite(rec.loss));
      EXPECT_GE(rec.loss, 0.0);
    }
    for (std::size_t i = 0; i < r.log.size(); ++i) EXPECT_EQ(r.log[i].iteration, static_cast<Eigen::Index>(i));
  }
}

TEST(Trainer, AmortizedCountersOneUpdateEach) {
  const EmpiricalMeasure data = ring(200, 3);
  for (LossKind kind : {LossKind::kLaSw, LossKind::kGaSw, LossKind::kNaSw}) {
    TrainConfig cfg = small_config(kind);
    cfg.k_batches = 3;
    const TrainResult r = train_amortized(data, cfg);
    EXPECT_EQ(r.counters.phi_updates, cfg.T1);
    EXPECT_EQ(r.counters.psi_updates, cfg.T1);
    EXPECT_EQ(r.counters.slice_updates, 0);
  }
}

TEST(Trainer, MaxSwRunsT2SliceStepsPerPair) {
  const EmpiricalMeasure data = ring(200, 4);
  TrainConfig cfg = small_config(LossKind::kMaxSw);
  cfg.k_batches = 2;
  cfg.T2 = 7;
  const TrainResult r = train_max_sw(data, cfg);
  EXPECT_EQ(r.counters.slice_updates, cfg.T1 * cfg.k_batches * cfg.T2);
  EXPECT_EQ(r.counters.phi_updates, cfg.T1);
}

TEST(Trainer, ZeroLearningRatesFreezeParameters) {
  const EmpiricalMeasure data = ring(200, 5);
  TrainConfig cfg = small_config(LossKind::kNaSw);
  Rng rng(103);
  TrainInit init;
  init.psi = AmortizedParams::init(ModelKind::kNonlinear, cfg.m, 2, rng);

  cfg.eta1 = 0.0;
  const TrainResult frozen_phi = train_amortized(data, cfg, nullptr, init);
  EXPECT_EQ(flatten(frozen_phi.generator), flatten(init_generator(cfg, 2)));

  cfg.eta1 = 1e-3;
  cfg.eta2 = 0.0;
  const TrainResult frozen_psi = train_amortized(data, cfg, nullptr, init);
  EXPECT_EQ(frozen_psi.psi->linear.w0, init.psi->linear.w0);
  EXPECT_EQ(frozen_psi.psi->linear.w1, init.psi->linear.w1);
  EXPECT_EQ(frozen_psi.psi->mlp->w_a, init.psi->mlp->w_a);
  EXPECT_NE(flatten(frozen_psi.generator), flatten(init_generator(cfg, 2)));
}

TEST(Trainer, FrozenBiasOnlySlicerEqualsFixedDirectionTraining) {
  const EmpiricalMeasure data = ring(300, 6);
  TrainConfig cfg = small_config(LossKind::kLaSw);
  cfg.eta2 = 0.0;
  TrainInit init;
  init.psi = AmortizedParams{};
  init.psi->kind = ModelKind::kLinear;
  init.psi->linear = {vec({0.3, -1.1}), Vector::Zero(cfg.m), Vector::Zero(cfg.m)};
  const TrainResult amortized = train_amortized(data, cfg, nullptr, init);

  // Reference: the same streams, slicing along w0/‖w0‖ throughout.
  const Direction theta = Direction::normalized(init.psi->linear.w0);
  GeneratorParams g = init_generator(cfg, 2);
  Rng data_rng = stream_rng(cfg.seed, Stream::kData);
  Rng noise_rng = stream_rng(cfg.seed, Stream::kNoise);
  Vector flat = flatten(g);
  AdamState st;
  std::vector<std::string> names;
  for (std::size_t l = 0; l < g.layers.size(); ++l) {
    names.push_back("layer" + std::to_string(l) + ".weight");
    names.push_back("layer" + std::to_string(l) + ".bias");
  }
  for (Eigen::Index it = 0; it < cfg.T1; ++it) {
    const EmpiricalMeasure x = sample_minibatch(data, cfg.m, data_rng);
    const Matrix noise = standard_normal(cfg.m, cfg.noise_dim, noise_rng);
    const ValueGrad vg = grad_phi_loss(g, noise, x, theta, cfg.p);
    EXPECT_NEAR(vg.value, amortized.log[static_cast<std::size_t>(it)].loss, 1e-12);
    adam_step(flat, flatten_grads(vg, names), st, AdamConfig{cfg.eta1, cfg.beta1, cfg.beta2, 1e-8});
    unflatten(g, flat);
  }
  EXPECT_LE((flatten(amortized.generator) - flat).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Trainer, AmortizedLossBelowGridMaxSwEveryPair) {
  const EmpiricalMeasure data = ring(300, 7);
  for (LossKind kind : {LossKind::kLaSw, LossKind::kGaSw, LossKind::kNaSw}) {
    TrainConfig cfg = small_config(kind);
    cfg.T1 = 10;
    int checked = 0;
    TrainHooks hooks;
    hooks.on_batch = [&](Eigen::Index, const Matrix& x, const Matrix& y, double value) {
      const double grid = grid_max_sw(EmpiricalMeasure(x), EmpiricalMeasure(y), cfg.p, 10000).value;
      // The 10^4-angle grid misses the continuous optimum by O(1e-7) relative.
      EXPECT_LE(value, grid * (1.0 + 1e-6) + 1e-12);
      ++checked;
    };
    train_amortized(data, cfg, nullptr, {}, hooks);
    EXPECT_EQ(checked, cfg.T1);
  }
}

TEST(Trainer, DegenerateSlicerIsRepaired) {
  const EmpiricalMeasure data = ring(100, 8);
  TrainConfig cfg = small_config(LossKind::kLaSw);
  cfg.T1 = 3;
  TrainInit init;
  init.psi = AmortizedParams{};
  init.psi->kind = ModelKind::kLinear;
  init.psi->linear = {Vector::Zero(2), Vector::Zero(cfg.m), Vector::Zero(cfg.m)};
  const TrainResult r = train_amortized(data, cfg, nullptr, init);
  EXPECT_FALSE(r.failed);
  EXPECT_GE(r.counters.degenerate_events, 1);
  EXPECT_GT(r.psi->linear.w0.norm(), 0.0);
}

TEST(Trainer, DivergenceGuardStopsRun) {
  const EmpiricalMeasure data(Matrix::Constant(50, 2, 1e4));
  TrainConfig cfg = small_config(LossKind::kSw);
  cfg.divergence_threshold = 1.0;
  const TrainResult r = train_sw(data, cfg);
  EXPECT_TRUE(r.failed);
  EXPECT_TRUE(r.log.empty());
  EXPECT_FALSE(r.failure_reason.empty());
}

TEST(Trainer, HeldOutEvaluationRecorded) {
  const EmpiricalMeasure data = ring(200, 9);
  const EmpiricalMeasure heldout = ring(64, 10);
  TrainConfig cfg = small_config(LossKind::kSw);
  cfg.eval_every = 5;
  const TrainResult r = train_sw(data, cfg, &heldout);
  ASSERT_TRUE(r.untrained_w2.has_value());
  ASSERT_TRUE(r.final_w2.has_value());
  int evals = 0;
  for (const RunRecord& rec : r.log) evals += rec.exact_w2.has_value() ? 1 : 0;
  EXPECT_EQ(evals, 3);
  EXPECT_EQ(*r.log.back().exact_w2, *r.final_w2);
}

TEST(Trainer, WrapperRejectsWrongKind) {
  const EmpiricalMeasure data = ring(50, 11);
  EXPECT_THROW(train_sw(data, small_config(LossKind::kMaxSw)), ContractViolation);
  EXPECT_THROW(train_max_sw(data, small_config(LossKind::kSw)), ContractViolation);
  EXPECT_THROW(train_amortized(data, small_config(LossKind::kPrw)), ContractViolation);
}

TEST(Trainer, ConfigValidation) {
  TrainConfig cfg = small_config(LossKind::kMaxSw);
  cfg.eta2 = 0.0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
  cfg = small_config(LossKind::kSw);
  cfg.m = 0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
  for (LossKind kind : kAllLosses) EXPECT_EQ(loss_kind_from_string(to_string(kind)), kind);
}

TEST(AswFit, ObjectiveImprovesOverInit) {
  Rng rng(104);
  const EmpiricalMeasure mu(standard_normal(16, 2, rng));
  Matrix y = standard_normal(16, 2, rng);
  y.col(0) *= 3.0;
  const EmpiricalMeasure nu(y);
  const std::vector<MinibatchPair> pairs = sample_pairs(mu, nu, 4, 2000, rng);
  for (ModelKind kind : {ModelKind::kLinear, ModelKind::kGeneralizedLinear, ModelKind::kNonlinear}) {
    AswFitConfig fc;
    fc.kind = kind;
    fc.m = 4;
    fc.iters = 1;
    const double before = asw_objective(fit_amortized_slicer(mu, nu, fc).psi, pairs, fc.p).mean;
    fc.iters = 500;
    const AswFit fit = fit_amortized_slicer(mu, nu, fc);
    ASSERT_EQ(fit.objective_trace.size(), 500u);
    EXPECT_GT(asw_objective(fit.psi, pairs, fc.p).mean, before) << to_string(kind);
  }
}
