// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ltlab {

struct OptimSpec {
  double lr_init = 1e-2;
  double weight_decay = 1e-7;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  std::size_t warmup_epochs = 2;
  std::uint64_t seed = 0;

  // Full-model training: 30 epochs, 2 warmup.
  static OptimSpec stage1_defaults() { return {}; }
  // Classifier-only training: 12 epochs, 1 warmup.
  static OptimSpec stage2_defaults() {
    OptimSpec s;
    s.epochs = 12;
    s.warmup_epochs = 1;
    return s;
  }

  void validate() const;
};

/// Linear warmup 0 -> lr_init over [0, warmup_steps], then half-cosine decay
/// to 0 at total_steps.
double lr_at(std::size_t step, std::size_t total_steps, std::size_t warmup_steps, double lr_init);

/// AdamW moments, one slot per parameter tensor.
struct OptimState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
};

struct ParamRef {
  std::string name;
  std::span<double> values;
  std::span<const double> grads;
};

/// One AdamW update over every tensor in `params` (order must be stable
/// between calls). Weight decay is applied to the parameters directly,
/// p *= (1 - lr * weight_decay), before the bias-corrected adaptive step.
void optimizer_step(std::span<const ParamRef> params, OptimState& state, const OptimSpec& spec,
                    double lr);

}  // namespace ltlab
