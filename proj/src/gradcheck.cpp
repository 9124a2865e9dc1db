#include "asw/gradcheck.hpp"

#include <algorithm>

#include "asw/amortized.hpp"
#include "asw/eval.hpp"
#include "asw/frame.hpp"
#include "asw/generator.hpp"

namespace asw {
namespace {

struct Instance {
  Rng rng;
  Eigen::Index m;
  Eigen::Index d;
  Order p;
  Matrix x;
  Matrix y;
};

Instance make_instance(std::uint64_t seed) {
  Instance in{Rng(seed), 0, 0, Order::kTwo, {}, {}};
  in.m = std::uniform_int_distribution<Eigen::Index>(3, 10)(in.rng);
  in.d = std::uniform_int_distribution<Eigen::Index>(2, 4)(in.rng);
  in.p = std::bernoulli_distribution(0.5)(in.rng) ? Order::kOne : Order::kTwo;
  in.x = standard_normal(in.m, in.d, in.rng);
  in.y = standard_normal(in.m, in.d, in.rng);
  in.y.col(0).array() += 1.0;
  return in;
}

double projected_distance(const Matrix& x, const Matrix& y, const Vector& theta, Order p) {
  return wasserstein_1d(make_projected(x * theta), make_projected(y * theta), p);
}

std::vector<std::string> names_of(AmortizedParams& psi) {
  std::vector<std::string> names;
  for (const auto& b : param_blocks(psi)) names.push_back(b.name);
  return names;
}

std::vector<std::string> names_of(ProjectedAmortizedParams& psi) {
  std::vector<std::string> names;
  for (const auto& b : param_blocks(psi)) names.push_back(b.name);
  return names;
}

template <typename Params>
Vector flat_params(Params& psi) {
  Eigen::Index n = 0;
  for (const auto& b : param_blocks(psi)) n += b.values.size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const auto& b : param_blocks(psi)) {
    out.segment(at, b.values.size()) = b.values.reshaped();
    at += b.values.size();
  }
  return out;
}

template <typename Params>
void set_params(Params& psi, const Vector& flat) {
  Eigen::Index at = 0;
  for (auto& b : param_blocks(psi)) {
    b.values.reshaped() = flat.segment(at, b.values.size());
    at += b.values.size();
  }
}

std::vector<std::string> generator_names(const GeneratorParams& phi) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < phi.layers.size(); ++i) {
    names.push_back("layer" + std::to_string(i) + ".weight");
    names.push_back("layer" + std::to_string(i) + ".bias");
  }
  return names;
}

FdReport check_theta(Instance in, const FdOptions& fd) {
  const Direction theta = sample_sphere(in.d, in.rng);
  const Vector g = grad_theta_w1d(EmpiricalMeasure(in.x), EmpiricalMeasure(in.y), theta, in.p)
                       .grad("theta")
                       .reshaped();
  const FlatObjective f = [&](const Vector& t) {
    return std::make_pair(projected_distance(in.x, in.y, t, in.p), g);
  };
  return fd_check(f, theta.vec(), fd);
}

FdReport check_psi(Instance in, ModelKind kind, const FdOptions& fd) {
  AmortizedParams psi = AmortizedParams::init(kind, in.m, in.d, in.rng);
  const EmpiricalMeasure x(in.x);
  const EmpiricalMeasure y(in.y);
  const Vector g = flatten_grads(grad_psi_loss(psi, x, y, in.p), names_of(psi));
  AmortizedParams work = psi;
  const FlatObjective f = [&](const Vector& flat) {
    set_params(work, flat);
    return std::make_pair(
        projected_distance(in.x, in.y, forward(work, x, y).vec(), in.p), g);
  };
  return fd_check(f, flat_params(psi), fd);
}

FdReport check_projected_psi(Instance in, ModelKind kind, const FdOptions& fd) {
  const Eigen::Index k = std::uniform_int_distribution<Eigen::Index>(1, in.d)(in.rng);
  ProjectedAmortizedParams psi = ProjectedAmortizedParams::init(kind, in.m, in.d, k, in.rng);
  const EmpiricalMeasure x(in.x);
  const EmpiricalMeasure y(in.y);
  const Vector g = flatten_grads(grad_psi_loss(psi, x, y, in.p), names_of(psi));
  ProjectedAmortizedParams work = psi;
  const FlatObjective f = [&](const Vector& flat) {
    set_params(work, flat);
    const Matrix u = forward_projected(work, x, y).cols();
    return std::make_pair(
        exact_wasserstein(EmpiricalMeasure(in.x * u), EmpiricalMeasure(in.y * u), in.p), g);
  };
  return fd_check(f, flat_params(psi), fd);
}

// slice: 0 = fixed direction, 1 = amortized full path, 2 = amortized detached.
FdReport check_phi(Instance in, int slice, ModelKind kind, const FdOptions& fd) {
  const Eigen::Index noise_dim = 3;
  GeneratorParams phi = GeneratorParams::init(noise_dim, 6, 2, in.d, in.rng);
  const Matrix noise = standard_normal(in.m, noise_dim, in.rng);
  const EmpiricalMeasure x(in.x);
  AmortizedParams psi = AmortizedParams::init(kind, in.m, in.d, in.rng);
  const Direction fixed = sample_sphere(in.d, in.rng);

  SliceSource source = fixed;
  if (slice != 0) source = &psi;
  const Vector g =
      flatten_grads(grad_phi_loss(phi, noise, x, source, in.p, slice == 2), generator_names(phi));
  const Vector detached_theta =
      forward(psi, x, generator_forward(phi, noise)).vec();

  GeneratorParams work = phi;
  const FlatObjective f = [&](const Vector& flat) {
    unflatten(work, flat);
    const EmpiricalMeasure y = generator_forward(work, noise);
    Vector theta = fixed.vec();
    if (slice == 1) theta = forward(psi, x, y).vec();
    if (slice == 2) theta = detached_theta;
    return std::make_pair(projected_distance(in.x, y.points(), theta, in.p), g);
  };
  return fd_check(f, flatten(phi), fd);
}

FdReport check_qr(Instance in, const FdOptions& fd) {
  const Eigen::Index k = std::uniform_int_distribution<Eigen::Index>(1, in.d)(in.rng);
  const Matrix a = standard_normal(in.d, k, in.rng);
  const Matrix weights = standard_normal(in.d, k, in.rng);
  const Vector g = thin_qr_backward(thin_qr(a), weights).reshaped();
  const FlatObjective f = [&](const Vector& flat) {
    const Matrix q = thin_qr(flat.reshaped(in.d, k)).q;
    return std::make_pair((q.array() * weights.array()).sum(), g);
  };
  return fd_check(f, a.reshaped(), fd);
}

}  // namespace

const std::vector<std::string>& gradcheck_ops() {
  static const std::vector<std::string> ops = {
      "grad_theta_w1d",
      "grad_psi_loss.linear",
      "grad_psi_loss.generalized_linear",
      "grad_psi_loss.nonlinear",
      "grad_psi_loss.projected_linear",
      "grad_psi_loss.projected_nonlinear",
      "grad_phi_loss.direction",
      "grad_phi_loss.linear",
      "grad_phi_loss.generalized_linear",
      "grad_phi_loss.nonlinear",
      "grad_phi_loss.linear_detached",
      "thin_qr_backward",
  };
  return ops;
}

FdReport gradcheck_instance(const std::string& op, std::uint64_t instance_seed,
                            const FdOptions& fd_in) {
  FdOptions fd = fd_in;
  fd.seed = instance_seed;
  Instance in = make_instance(instance_seed);
  FdReport r;
  if (op == "grad_theta_w1d") {
    r = check_theta(std::move(in), fd);
  } else if (op == "grad_psi_loss.linear") {
    r = check_psi(std::move(in), ModelKind::kLinear, fd);
  } else if (op == "grad_psi_loss.generalized_linear") {
    r = check_psi(std::move(in), ModelKind::kGeneralizedLinear, fd);
  } else if (op == "grad_psi_loss.nonlinear") {
    r = check_psi(std::move(in), ModelKind::kNonlinear, fd);
  } else if (op == "grad_psi_loss.projected_linear") {
    r = check_projected_psi(std::move(in), ModelKind::kLinear, fd);
  } else if (op == "grad_psi_loss.projected_nonlinear") {
    r = check_projected_psi(std::move(in), ModelKind::kNonlinear, fd);
  } else if (op == "grad_phi_loss.direction") {
    r = check_phi(std::move(in), 0, ModelKind::kLinear, fd);
  } else if (op == "grad_phi_loss.linear") {
    r = check_phi(std::move(in), 1, ModelKind::kLinear, fd);
  } else if (op == "grad_phi_loss.generalized_linear") {
    r = check_phi(std::move(in), 1, ModelKind::kGeneralizedLinear, fd);
  } else if (op == "grad_phi_loss.nonlinear") {
    r = check_phi(std::move(in), 1, ModelKind::kNonlinear, fd);
  } else if (op == "grad_phi_loss.linear_detached") {
    r = check_phi(std::move(in), 2, ModelKind::kLinear, fd);
  } else if (op == "thin_qr_backward") {
    r = check_qr(std::move(in), fd);
  } else {
    throw ContractViolation("gradcheck: unknown op \"" + op + "\"");
  }
  r.op = op;
  r.instance_seed = instance_seed;
  return r;
}

std::vector<FdReport> gradcheck_suite(const GradSuiteConfig& cfg) {
  const auto& ops = cfg.ops.empty() ? gradcheck_ops() : cfg.ops;
  std::vector<FdReport> out;
  for (std::size_t o = 0; o < ops.size(); ++o) {
    // Seeded by position in the canonical list, so filtering does not change instances.
    const auto& all = gradcheck_ops();
    const auto pos = static_cast<std::uint64_t>(std::find(all.begin(), all.end(), ops[o]) - all.begin());
    const std::uint64_t op_seed = child_seed(cfg.seed, pos);
    for (int i = 0; i < cfg.instances; ++i) {
      out.push_back(gradcheck_instance(ops[o], child_seed(op_seed, static_cast<std::uint64_t>(i)),
                                       cfg.fd));
    }
  }
  return out;
}

}  // namespace asw
