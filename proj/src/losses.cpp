// SPDX-License-Identifier: Apache-2.0
#include "ltlab/losses.hpp"

#include <algorithm>
#include <cmath>

#include "ltlab/error.hpp"

namespace ltlab {

void softmax_into(std::span<const double> logits, std::span<double> out) {
  require(!logits.empty(), "softmax: empty input");
  require(out.size() == logits.size(), "softmax: output size mismatch");
  double hi = logits[0];
  for (double z : logits) {
    if (!std::isfinite(z)) fail(ErrorCode::Numeric, "softmax: non-finite logit");
    hi = std::max(hi, z);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - hi);
    sum += out[k];
  }
  for (auto& v : out) v /= sum;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  softmax_into(logits, out);
  return out;
}

double focal_loss(double p, double gamma) {
  require(p > 0.0 && p <= 1.0, "focal_loss: p must lie in (0,1]");
  require(gamma >= 0.0, "focal_loss: gamma must be >= 0");
  const double nll = -std::log(std::max(p, kProbabilityFloor));
  return gamma == 0.0 ? nll : std::pow(1.0 - p, gamma) * nll;
}

double cb_weight(std::size_t n, double beta) {
  require(n >= 1, "cb_weight: n must be >= 1");
  require(beta >= 0.0 && beta < 1.0, "cb_weight: beta must lie in [0,1)");
  return (1.0 - beta) / (1.0 - std::pow(beta, static_cast<double>(n)));
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::focal: return "focal";
    case LossKind::cb_focal: return "cb_focal";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "cross_entropy") return LossKind::cross_entropy;
  if (name == "focal") return LossKind::focal;
  if (name == "cb_focal") return LossKind::cb_focal;
  fail(ErrorCode::InvalidArgument, "unknown loss kind '" + name + "'");
}

void LossSpec::validate(std::size_t num_classes) const {
  require(std::isfinite(gamma) && gamma >= 0.0, "loss: gamma must be >= 0");
  require(kind != LossKind::cross_entropy || gamma == 0.0, "loss: gamma set for cross_entropy");
  require(cb_beta >= 0.0 && cb_beta < 1.0, "loss: cb_beta must lie in [0,1)");
  require(kind == LossKind::cb_focal || cb_beta == 0.0, "loss: cb_beta set for non-cb loss");
  if (!class_weights.empty()) {
    require(class_weights.size() == num_classes, "loss: class_weights length must equal C");
    for (double w : class_weights) require(w > 0.0, "loss: class weights must be > 0");
  }
}

LossValue batch_loss(const Matrix& logits, std::span<const int> labels,
                     std::span<const std::size_t> counts, const LossSpec& spec) {
  const std::size_t batch = logits.rows();
  const std::size_t c = logits.cols();
  require(batch >= 1, "batch_loss: empty batch");
  require(labels.size() == batch, "batch_loss: label count mismatch");
  spec.validate(c);
  if (spec.kind == LossKind::cb_focal) {
    require(counts.size() == c, "batch_loss: counts length must equal C");
  }

  LossValue out;
  out.per_instance.resize(batch);
  out.grad_logits = Matrix(batch, c);
  std::vector<double> p(c);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const double gamma = spec.kind == LossKind::cross_entropy ? 0.0 : spec.gamma;

  for (std::size_t i = 0; i < batch; ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= c) {
      fail(ErrorCode::InvalidArgument,
           "batch_loss: label " + std::to_string(label) + " out of range at row " +
               std::to_string(i));
    }
    const auto y = static_cast<std::size_t>(label);
    softmax_into(logits.row(i), p);

    double weight = 1.0;
    if (spec.kind == LossKind::cb_focal) weight = cb_weight(counts[y], spec.cb_beta);
    if (!spec.class_weights.empty()) weight *= spec.class_weights[y];

    const double py = p[y];
    // 1 - p_y summed from the other classes keeps precision when p_y ~ 1.
    double rest = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      if (k != y) rest += p[k];
    }
    const double log_py = std::log(std::max(py, kProbabilityFloor));

    double modulator = 1.0;  // (1 - p_y)^gamma
    double slope = 0.0;      // gamma (1 - p_y)^(gamma - 1) p_y log p_y
    if (gamma != 0.0) {
      modulator = std::pow(rest, gamma);
      if (rest > 0.0) slope = gamma * std::pow(rest, gamma - 1.0) * py * log_py;
    }
    out.per_instance[i] = weight * modulator * -log_py;

    // dL/dz_k = w * (slope - modulator) * (delta_ky - p_k)
    const double a = weight * (slope - modulator) * inv_batch;
    auto g = out.grad_logits.row(i);
    for (std::size_t k = 0; k < c; ++k) {
      g[k] = a * ((k == y ? 1.0 : 0.0) - p[k]);
    }
  }
  double sum = 0.0;
  for (double v : out.per_instance) sum += v;
  out.total = sum * inv_batch;
  return out;
}

}  // namespace ltlab
