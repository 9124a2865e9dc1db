#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "asw/grad.hpp"
#include "asw/gradcheck.hpp"
#include "test_util.hpp"

using namespace asw;

namespace {

GeneratorParams constant_generator(const Vector& bias, Eigen::Index noise_dim) {
  GeneratorParams g;
  g.layers.push_back({Matrix::Zero(bias.size(), noise_dim), bias});
  return g;
}

bool all_zero(const ValueGrad& vg) {
  for (const auto& [name, g] : vg.grads) {
    if (g.cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

}  // namespace

TEST(GradTheta, IdenticalSetsGiveZero) {
  Rng rng(90);
  const EmpiricalMeasure x(standard_normal(8, 3, rng));
  for (Order p : {Order::kOne, Order::kTwo}) {
    const ValueGrad vg = grad_theta_w1d(x, x, sample_sphere(3, rng), p);
    EXPECT_EQ(vg.value, 0.0);
    EXPECT_TRUE(all_zero(vg));
  }
}

TEST(GradTheta, HandExampleL1) {
  const EmpiricalMeasure x(mat({{0, 0}}));
  const EmpiricalMeasure y(mat({{1, 0}}));
  const ValueGrad vg = grad_theta_w1d(x, y, Direction(vec({1, 0})), Order::kOne);
  EXPECT_DOUBLE_EQ(vg.value, 1.0);
  EXPECT_EQ(vg.grad("theta").col(0), vec({1, 0}));
}

TEST(GradTheta, HandExampleL2) {
  // u = (0, 2), v = (1, 1) along e1: W2 = 1, dW2/dθ = (1/(2W)) (1/m) Σ 2 r_i (x_i − y_i).
  const EmpiricalMeasure x(mat({{0, 5}, {2, -1}}));
  const EmpiricalMeasure y(mat({{1, 0}, {1, 3}}));
  const ValueGrad vg = grad_theta_w1d(x, y, Direction(vec({1, 0})), Order::kTwo);
  EXPECT_DOUBLE_EQ(vg.value, 1.0);
  // Sorted matching pairs x0 with y0 (ties keep index order) and x1 with y1:
  // r = (−1, 1); Σ r_i (x_i − y_i) / m = ((−1)(−1, 5) + (1)(1, −4)) / 2 = (1, −4.5).
  const Vector g = vg.grad("theta").col(0);
  EXPECT_NEAR(g[0], 1.0, 1e-15);
  EXPECT_NEAR(g[1], -4.5, 1e-15);
}

TEST(GradTheta, TiesUseZeroSubgradient) {
  const EmpiricalMeasure x(mat({{1, 3}}));
  const EmpiricalMeasure y(mat({{1, -2}}));
  const ValueGrad vg = grad_theta_w1d(x, y, Direction(vec({1, 0})), Order::kOne);
  EXPECT_EQ(vg.value, 0.0);
  EXPECT_TRUE(all_zero(vg));
}

TEST(GradPsi, ZeroWeightsOnIdenticalSets) {
  Rng rng(91);
  const EmpiricalMeasure x(standard_normal(6, 2, rng));
  for (ModelKind kind : {ModelKind::kLinear, ModelKind::kGeneralizedLinear, ModelKind::kNonlinear}) {
    AmortizedParams psi = AmortizedParams::init(kind, 6, 2, rng);
    psi.linear.w1.setZero();
    psi.linear.w2.setZero();
    const ValueGrad vg = grad_psi_loss(psi, x, x, Order::kTwo);
    EXPECT_EQ(vg.value, 0.0);
    EXPECT_TRUE(all_zero(vg));
    EXPECT_EQ(vg.grad("w1").rows(), 6);
  }
}

TEST(GradPhi, MatchedGeneratorHasZeroLoss) {
  const Vector b = vec({0.5, -1.5});
  const GeneratorParams phi = constant_generator(b, 3);
  Rng rng(92);
  const Matrix noise = standard_normal(5, 3, rng);
  const EmpiricalMeasure x(b.transpose().replicate(5, 1));
  const ValueGrad fixed = grad_phi_loss(phi, noise, x, Direction(vec({0.6, 0.8})), Order::kTwo);
  EXPECT_EQ(fixed.value, 0.0);
  EXPECT_TRUE(all_zero(fixed));
}

TEST(GradPhi, BiasGradientOfConstantGenerator) {
  // Symmetric data around the bias: the loss is smooth in b and fd must agree.
  const GeneratorParams phi = constant_generator(vec({0.1, 0.2}), 2);
  const EmpiricalMeasure x(mat({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}));
  Rng rng(93);
  const Matrix noise = standard_normal(4, 2, rng);
  const Direction theta(vec({0.8, 0.6}));
  const ValueGrad vg = grad_phi_loss(phi, noise, x, theta, Order::kTwo);
  const FlatObjective f = [&](const Vector& b) {
    GeneratorParams g = phi;
    g.layers[0].bias = b;
    const ValueGrad r = grad_phi_loss(g, noise, x, theta, Order::kTwo);
    return std::make_pair(r.value, Vector(r.grad("layer0.bias").col(0)));
  };
  const FdReport rep = fd_check(f, phi.layers[0].bias);
  EXPECT_TRUE(rep.pass) << rep.max_rel_err;
  EXPECT_EQ(vg.grad("layer0.weight").rows(), 2);
  EXPECT_EQ(vg.grad("layer0.weight").cols(), 2);
}

TEST(GradPhi, DetachedSliceDiffersFromFullPath) {
  Rng rng(94);
  const GeneratorParams phi = GeneratorParams::init(2, 8, 1, 2, rng);
  const Matrix noise = standard_normal(6, 2, rng);
  const EmpiricalMeasure x(standard_normal(6, 2, rng).array() + 1.0);
  const AmortizedParams psi = AmortizedParams::init(ModelKind::kLinear, 6, 2, rng);
  const ValueGrad full = grad_phi_loss(phi, noise, x, &psi, Order::kTwo, false);
  const ValueGrad detached = grad_phi_loss(phi, noise, x, &psi, Order::kTwo, true);
  EXPECT_EQ(full.value, detached.value);
  EXPECT_GT((full.grad("layer0.weight") - detached.grad("layer0.weight")).norm(), 1e-8);
}

TEST(GradPhi, DetachedEqualsFixedDirectionAtForwardSlice) {
  Rng rng(95);
  const GeneratorParams phi = GeneratorParams::init(3, 8, 2, 2, rng);
  const Matrix noise = standard_normal(7, 3, rng);
  const EmpiricalMeasure x(standard_normal(7, 2, rng));
  const AmortizedParams psi = AmortizedParams::init(ModelKind::kNonlinear, 7, 2, rng);
  const Direction theta = forward(psi, x, generator_forward(phi, noise));
  const ValueGrad detached = grad_phi_loss(phi, noise, x, &psi, Order::kTwo, true);
  const ValueGrad fixed = grad_phi_loss(phi, noise, x, theta, Order::kTwo);
  for (const auto& [name, g] : fixed.grads) EXPECT_EQ(detached.grad(name), g) << name;
}

TEST(FdCheck, LinearFunctionIsExact) {
  const Vector a = vec({1.5, -2.0, 0.25, 3.0});
  const FlatObjective f = [&](const Vector& v) { return std::make_pair(a.dot(v), a); };
  const FdReport rep = fd_check(f, vec({0.1, 0.2, -0.3, 4.0}));
  EXPECT_TRUE(rep.pass);
  EXPECT_LT(rep.max_rel_err, 1e-8);
}

TEST(FdCheck, CorruptedGradientFails) {
  const FdReport good = gradcheck_instance("grad_theta_w1d", 7, FdOptions{});
  ASSERT_TRUE(good.pass);
  Rng rng(96);
  const EmpiricalMeasure x(standard_normal(8, 2, rng));
  const EmpiricalMeasure y(standard_normal(8, 2, rng).array() + 1.0);
  const FlatObjective f = [&](const Vector& t) {
    const SliceGradient sg = slice_value_grad(x.points(), y.points(), t, Order::kTwo);
    Vector g = sg.grad_theta;
    g[0] += 0.1;
    return std::make_pair(sg.value, g);
  };
  EXPECT_FALSE(fd_check(f, vec({0.6, 0.8})).pass);
}

TEST(FdCheck, JsonlRecord) {
  const FdReport rep = gradcheck_instance("grad_psi_loss.linear", 3, FdOptions{});
  std::stringstream s;
  write_jsonl(s, rep);
  const auto j = nlohmann::json::parse(s.str());
  EXPECT_EQ(j["op"], "grad_psi_loss.linear");
  EXPECT_EQ(j["pass"], true);
  EXPECT_TRUE(j.contains("max_rel_err"));
}

TEST(GradSuite, AllOpsPassOnFiftyInstances) {
  GradSuiteConfig cfg;
  cfg.instances = 50;
  const std::vector<FdReport> reports = gradcheck_suite(cfg);
  EXPECT_EQ(reports.size(), 50 * gradcheck_ops().size());
  for (const FdReport& r : reports) EXPECT_TRUE(r.pass) << r.op << " seed " << r.instance_seed << " " << r.max_rel_err;
}

TEST(GradSuite, Deterministic) {
  GradSuiteConfig cfg;
  cfg.instances = 3;
  cfg.seed = 11;
  const auto a = gradcheck_suite(cfg);
  const auto b = gradcheck_suite(cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].max_rel_err, b[i].max_rel_err);
}
