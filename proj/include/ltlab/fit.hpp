// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ltlab/data.hpp"
#include "ltlab/losses.hpp"
#include "ltlab/network.hpp"
#include "ltlab/optim.hpp"

namespace ltlab {

struct EpochLog {
  double mean_loss = 0.0;
  double lr = 0.0;  // learning rate of the epoch's last step

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

/// Per-step schedule for one training run. An epoch is N draws regardless of
/// the sampler, so step counts match across methods.
struct Schedule {
  std::size_t steps_per_epoch = 0;
  std::size_t total_steps = 0;
  std::size_t warmup_steps = 0;

  static Schedule make(std::size_t epoch_len, const OptimSpec& optim);
  double lr(std::size_t step, double lr_init) const;
};

struct FitOptions {
  double q = 1.0;
  LossSpec loss;
  OptimSpec optim;
  std::uint64_t seed = 0;
};

/// Mini-batch training of `head` (and of `backbone` when train_backbone) on
/// `data`, with batches drawn from the q-exponent sampler. `counts` are the
/// class counts handed to the loss. Throws Error(Numeric) naming the epoch on
/// a non-finite loss.
std::vector<EpochLog> fit_classifier(Backbone& backbone, bool train_backbone,
                                     ClassifierHead& head, const Dataset& data,
                                     std::span<const std::size_t> counts,
                                     const FitOptions& options);

/// Mean-loss gradients for one batch; used by training and by gradient checks.
struct Gradients {
  double loss = 0.0;
  std::vector<DenseLayer> backbone;
  Matrix head_weight;
  std::vector<double> head_bias;
};

Gradients compute_gradients(const Backbone& backbone, const ClassifierHead& head,
                            const Matrix& inputs, std::span<const int> labels,
                            std::span<const std::size_t> counts, const LossSpec& loss);

}  // namespace ltlab
