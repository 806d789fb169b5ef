// SPDX-License-Identifier: Apache-2.0
#include "ltlab/network.hpp"

#include <cmath>
#include <random>

#include "ltlab/error.hpp"
#include "ltlab/random.hpp"

namespace ltlab {

Backbone::Backbone(std::size_t input_dim, std::vector<DenseLayer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  require(input_dim_ >= 1, "backbone: input_dim must be >= 1");
  std::size_t in = input_dim_;
  for (const auto& layer : layers_) {
    require(layer.weight.cols() == in && layer.bias.size() == layer.weight.rows(),
            "backbone: inconsistent layer shapes");
    in = layer.weight.rows();
  }
}

Backbone Backbone::identity(std::size_t input_dim) { return Backbone(input_dim, {}); }

Backbone Backbone::mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                       std::uint64_t seed) {
  Rng rng(derive_seed(seed, {7}));
  std::vector<DenseLayer> layers;
  std::size_t in = input_dim;
  for (std::size_t width : hidden) {
    require(width >= 1, "backbone: hidden width must be >= 1");
    const double a = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-a, a);
    DenseLayer layer{Matrix(width, in), std::vector<double>(width, 0.0)};
    for (auto& w : layer.weight.values()) w = dist(rng);
    layers.push_back(std::move(layer));
    in = width;
  }
  return Backbone(input_dim, std::move(layers));
}

std::size_t Backbone::output_dim() const noexcept {
  return layers_.empty() ? input_dim_ : layers_.back().weight.rows();
}

std::size_t Backbone::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<DenseLayer>& Backbone::trainable_layers() {
  if (frozen_) fail(ErrorCode::State, "backbone is frozen");
  return layers_;
}

Matrix Backbone::forward(const Matrix& x) const {
  Trace trace;
  return forward(x, trace);
}

Matrix Backbone::forward(const Matrix& x, Trace& trace) const {
  require(x.cols() == input_dim_, "backbone: feature dimension mismatch (expected " +
                                      std::to_string(input_dim_) + ", got " +
                                      std::to_string(x.cols()) + ")");
  trace.activations.clear();
  trace.activations.push_back(x);
  for (const auto& layer : layers_) {
    Matrix z = matmul_bt(trace.activations.back(), layer.weight);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto row = z.row(i);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = std::max(0.0, row[k] + layer.bias[k]);
    }
    trace.activations.push_back(std::move(z));
  }
  return trace.activations.back();
}

std::vector<DenseLayer> Backbone::backward(const Trace& trace, const Matrix& grad_out) const {
  require(trace.activations.size() == layers_.size() + 1, "backbone: stale trace");
  std::vector<DenseLayer> grads(layers_.size());
  Matrix g = grad_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Matrix& out = trace.activations[l + 1];
    // ReLU gate: the derivative is taken as 0 at exactly 0.
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (out.values()[i] <= 0.0) g.values()[i] = 0.0;
    }
    grads[l].weight = matmul_at(g, trace.activations[l]);
    grads[l].bias.assign(g.cols(), 0.0);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t k = 0; k < g.cols(); ++k) grads[l].bias[k] += g(i, k);
    }
    if (l > 0) g = matmul(g, layers_[l].weight);
  }
  return grads;
}

ClassifierHead ClassifierHead::random(std::size_t outputs, std::size_t input_dim,
                                      std::uint64_t seed) {
  require(outputs >= 1 && input_dim >= 1, "head: dimensions must be >= 1");
  Rng rng(derive_seed(seed, {8}));
  const double a = 1.0 / std::sqrt(static_cast<double>(input_dim));
  std::uniform_real_distribution<double> dist(-a, a);
  ClassifierHead head{Matrix(outputs, input_dim), std::vector<double>(outputs, 0.0)};
  for (auto& w : head.weight.values()) w = dist(rng);
  return head;
}

Matrix ClassifierHead::logits(const Matrix& features) const {
  require(features.cols() == input_dim(), "head: feature dimension mismatch");
  Matrix z = matmul_bt(features, weight);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] += bias[k];
  }
  return z;
}

HeadGradients head_backward(const ClassifierHead& head, const Matrix& features,
                            const Matrix& grad_logits) {
  require(grad_logits.cols() == head.outputs() && grad_logits.rows() == features.rows(),
          "head_backward: shape mismatch");
  HeadGradients g;
  g.weight = matmul_at(grad_logits, features);
  g.bias.assign(head.outputs(), 0.0);
  for (std::size_t i = 0; i < grad_logits.rows(); ++i) {
    for (std::size_t k = 0; k < grad_logits.cols(); ++k) g.bias[k] += grad_logits(i, k);
  }
  g.input = matmul(grad_logits, head.weight);
  return g;
}

}  // namespace ltlab
