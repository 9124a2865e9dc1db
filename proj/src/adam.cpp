#include <cmath>

#include "asw/trainer.hpp"

namespace asw {

void adam_step(Vector& params, const Vector& grads, AdamState& state, const AdamConfig& cfg) {
  if (grads.size() != params.size()) throw ContractViolation("adam_step: gradient size mismatch");
  if (state.step == 0) {
    state.first = Vector::Zero(params.size());
    state.second = Vector::Zero(params.size());
  } else if (state.first.size() != params.size()) {
    throw ContractViolation("adam_step: optimizer state does not match parameters");
  }
  ++state.step;
  state.first = cfg.beta1 * state.first + (1.0 - cfg.beta1) * grads;
  state.second = cfg.beta2 * state.second + (1.0 - cfg.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  params.array() -= cfg.lr * (state.first.array() / c1) /
                    ((state.second.array() / c2).sqrt() + cfg.eps);
}

}  // namespace asw
