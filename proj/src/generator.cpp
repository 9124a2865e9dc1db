#include "asw/generator.hpp"

#include <cmath>

#include "binary_io.hpp"

namespace asw {
namespace {

Matrix leaky(const Matrix& a) { return a.array().max(kLeakySlope * a.array()).matrix(); }

}  // namespace

Eigen::Index GeneratorParams::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

GeneratorParams GeneratorParams::init(Eigen::Index noise_dim, Eigen::Index hidden_width,
                                      Eigen::Index hidden_layers, Eigen::Index out_dim, Rng& rng) {
  if (noise_dim < 1 || out_dim < 1 || hidden_layers < 0 || (hidden_layers > 0 && hidden_width < 1)) {
    throw ContractViolation("generator: invalid layer sizes");
  }
  GeneratorParams phi;
  Eigen::Index in = noise_dim;
  for (Eigen::Index l = 0; l <= hidden_layers; ++l) {
    const bool last = l == hidden_layers;
    const Eigen::Index out = last ? out_dim : hidden_width;
    const double gain = last ? 1.0 : 2.0;
    GeneratorParams::Layer layer;
    layer.weight = std::sqrt(gain / static_cast<double>(in)) * standard_normal(out, in, rng);
    layer.bias = Vector::Zero(out);
    phi.layers.push_back(std::move(layer));
    in = out;
  }
  return phi;
}

GeneratorTape generator_tape(const GeneratorParams& phi, const Matrix& noise) {
  if (phi.layers.empty()) throw ContractViolation("generator has no layers");
  if (noise.cols() != phi.noise_dim()) {
    throw ContractViolation("generator: noise has " + std::to_string(noise.cols()) +
                            " columns, expected " + std::to_string(phi.noise_dim()));
  }
  GeneratorTape tape;
  Matrix h = noise;
  for (std::size_t l = 0; l < phi.layers.size(); ++l) {
    const auto& layer = phi.layers[l];
    Matrix pre = (h * layer.weight.transpose()).rowwise() + layer.bias.transpose();
    tape.inputs.push_back(std::move(h));
    h = l + 1 < phi.layers.size() ? leaky(pre) : pre;
    tape.pre.push_back(std::move(pre));
  }
  tape.output = std::move(h);
  return tape;
}

EmpiricalMeasure generator_forward(const GeneratorParams& phi, const Matrix& noise) {
  return EmpiricalMeasure(generator_tape(phi, noise).output);
}

std::vector<GeneratorParams::Layer> generator_backward(const GeneratorParams& phi,
                                                       const GeneratorTape& tape,
                                                       const Matrix& grad_output) {
  const std::size_t n_layers = phi.layers.size();
  std::vector<GeneratorParams::Layer> grads(n_layers);
  Matrix g = grad_output;
  for (std::size_t l = n_layers; l-- > 0;) {
    if (l + 1 < n_layers) {
      g = (tape.pre[l].array() > 0.0).select(g.array(), kLeakySlope * g.array()).matrix();
    }
    grads[l].weight = g.transpose() * tape.inputs[l];
    grads[l].bias = g.colwise().sum().transpose();
    if (l > 0) g = g * phi.layers[l].weight;
  }
  return grads;
}

Vector flatten(const std::vector<GeneratorParams::Layer>& layers) {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    out.segment(at, l.weight.size()) = l.weight.reshaped();
    at += l.weight.size();
    out.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return out;
}

Vector flatten(const GeneratorParams& phi) { return flatten(phi.layers); }

void unflatten(GeneratorParams& phi, const Vector& flat) {
  if (flat.size() != phi.parameter_count()) throw ContractViolation("generator: flat size mismatch");
  Eigen::Index at = 0;
  for (auto& l : phi.layers) {
    l.weight.reshaped() = flat.segment(at, l.weight.size());
    at += l.weight.size();
    l.bias = flat.segment(at, l.bias.size());
    at += l.bias.size();
  }
}

void write_checkpoint(std::ostream& out, const GeneratorParams& phi) {
  io::write_magic(out, "GNSW");
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(phi.layers.size()));
  for (const auto& l : phi.layers) {
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.weight.rows()));
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.weight.cols()));
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) io::write_le<double>(out, l.weight(i, j));
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) io::write_le<double>(out, l.bias[i]);
  }
}

GeneratorParams read_generator_checkpoint(std::istream& in) {
  io::Reader r(in);
  r.expect_magic("GNSW");
  const auto n_layers = r.read_le<std::uint32_t>();
  if (n_layers == 0) throw ParseError("GNSW declares zero layers");
  GeneratorParams phi;
  for (std::uint32_t k = 0; k < n_layers; ++k) {
    const auto rows = r.read_le<std::uint32_t>();
    const auto cols = r.read_le<std::uint32_t>();
    if (!phi.layers.empty() && phi.layers.back().weight.rows() != cols) {
      throw ParseError("GNSW layer " + std::to_string(k) + " does not chain, at byte " +
                       std::to_string(r.offset()));
    }
    GeneratorParams::Layer l;
    l.weight.resize(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) l.weight(i, j) = r.read_le<double>();
    }
    l.bias.resize(rows);
    for (std::uint32_t i = 0; i < rows; ++i) l.bias[i] = r.read_le<double>();
    phi.layers.push_back(std::move(l));
  }
  return phi;
}

}  // namespace asw
