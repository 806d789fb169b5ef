// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ltlab/linalg.hpp"

namespace ltlab {

struct DenseLayer {
  Matrix weight;  // out x in
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Stack of fully connected ReLU layers. No layers means the identity map.
class Backbone {
 public:
  struct Trace {
    std::vector<Matrix> activations;  // [input, relu(layer 0), ...]
  };

  Backbone() = default;
  Backbone(std::size_t input_dim, std::vector<DenseLayer> layers);

  static Backbone identity(std::size_t input_dim);
  /// He-uniform initialized MLP with the given hidden widths.
  static Backbone mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                      std::uint64_t seed);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept;
  bool is_identity() const noexcept { return layers_.empty(); }
  std::size_t parameter_count() const noexcept;

  bool frozen() const noexcept { return frozen_; }
  void freeze() noexcept { frozen_ = true; }
  void set_frozen(bool f) noexcept { frozen_ = f; }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  /// Mutable access for the optimizer. Throws Error(State) when frozen.
  std::vector<DenseLayer>& trainable_layers();

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, Trace& trace) const;
  /// Gradients for every layer given d loss / d output.
  std::vector<DenseLayer> backward(const Trace& trace, const Matrix& grad_out) const;

  friend bool operator==(const Backbone&, const Backbone&) = default;

 private:
  std::size_t input_dim_ = 0;
  std::vector<DenseLayer> layers_;
  bool frozen_ = false;
};

/// Linear softmax classifier: logits = h W^T + b.
struct ClassifierHead {
  Matrix weight;  // outputs x input_dim
  std::vector<double> bias;

  /// Weights uniform in [-a, a], a = 1/sqrt(input_dim); bias zero.
  static ClassifierHead random(std::size_t outputs, std::size_t input_dim, std::uint64_t seed);

  std::size_t outputs() const noexcept { return weight.rows(); }
  std::size_t input_dim() const noexcept { return weight.cols(); }

  Matrix logits(const Matrix& features) const;

  friend bool operator==(const ClassifierHead&, const ClassifierHead&) = default;
};

struct HeadGradients {
  Matrix weight;
  std::vector<double> bias;
  Matrix input;  // d loss / d features
};

HeadGradients head_backward(const ClassifierHead& head, const Matrix& features,
                            const Matrix& grad_logits);

}  // namespace ltlab
