// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ltlab/linalg.hpp"

namespace ltlab {

inline constexpr double kProbabilityFloor = 1e-12;

/// Max-subtracted softmax. Throws on non-finite input.
std::vector<double> softmax(std::span<const double> logits);
void softmax_into(std::span<const double> logits, std::span<double> out);

/// (1 - p)^gamma * -log(max(p, 1e-12)).
double focal_loss(double p, double gamma);

/// Inverse effective number of samples: (1 - beta) / (1 - beta^n).
double cb_weight(std::size_t n, double beta);

enum class LossKind { cross_entropy, focal, cb_focal };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

struct LossSpec {
  LossKind kind = LossKind::cross_entropy;
  double gamma = 0.0;    // focal, cb_focal
  double cb_beta = 0.0;  // cb_focal
  // Optional extra per-class factor, multiplied into every instance's loss.
  std::vector<double> class_weights;

  static LossSpec cross_entropy() { return {}; }
  static LossSpec focal(double gamma) { return {LossKind::focal, gamma, 0.0, {}}; }
  static LossSpec cb_focal(double cb_beta, double gamma) {
    return {LossKind::cb_focal, gamma, cb_beta, {}};
  }

  void validate(std::size_t num_classes) const;
};

struct LossValue {
  double total = 0.0;  // mean of per_instance
  std::vector<double> per_instance;
  Matrix grad_logits;  // d total / d logits
};

/// `counts` are training-partition class counts (only read for cb_focal).
LossValue batch_loss(const Matrix& logits, std::span<const int> labels,
                     std::span<const std::size_t> counts, const LossSpec& spec);

}  // namespace ltlab
