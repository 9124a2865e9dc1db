#pragma once

#include <iosfwd>
#include <vector>

#include "asw/common.hpp"
#include "asw/measures.hpp"

namespace asw {

/// Fully connected push-forward network G_φ: leaky-ReLU(0.2) hidden layers,
/// identity output.
struct GeneratorParams {
  struct Layer {
    Matrix weight;  // out×in
    Vector bias;    // out
  };
  std::vector<Layer> layers;

  Eigen::Index noise_dim() const { return layers.front().weight.cols(); }
  Eigen::Index out_dim() const { return layers.back().bias.size(); }
  Eigen::Index parameter_count() const;

  /// Weights ~ N(0, 2/fan_in) for hidden layers and N(0, 1/fan_in) for the output layer.
  static GeneratorParams init(Eigen::Index noise_dim, Eigen::Index hidden_width,
                              Eigen::Index hidden_layers, Eigen::Index out_dim, Rng& rng);
};

inline constexpr double kLeakySlope = 0.2;

/// Forward pass keeping pre-activations for the backward pass.
struct GeneratorTape {
  std::vector<Matrix> inputs;  // input to each layer (n×in)
  std::vector<Matrix> pre;     // pre-activation of each layer (n×out)
  Matrix output;
};

GeneratorTape generator_tape(const GeneratorParams& phi, const Matrix& noise);

EmpiricalMeasure generator_forward(const GeneratorParams& phi, const Matrix& noise);

/// Gradient of a scalar loss w.r.t. φ given its gradient w.r.t. the output rows.
/// Returned layout matches phi.layers.
std::vector<GeneratorParams::Layer> generator_backward(const GeneratorParams& phi,
                                                       const GeneratorTape& tape,
                                                       const Matrix& grad_output);

/// Flat parameter vector (layer by layer, weight then bias, column-major storage order).
Vector flatten(const GeneratorParams& phi);
void unflatten(GeneratorParams& phi, const Vector& flat);
Vector flatten(const std::vector<GeneratorParams::Layer>& grads);

// "GNSW", u32 n_layers, then per layer u32 out, u32 in, f64 weight (row-major), f64 bias.
void write_checkpoint(std::ostream& out, const GeneratorParams& phi);
GeneratorParams read_generator_checkpoint(std::istream& in);

}  // namespace asw
