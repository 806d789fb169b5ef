// SPDX-License-Identifier: Apache-2.0
#include "ltlab/fit.hpp"

#include <cmath>

#include "ltlab/error.hpp"
#include "ltlab/random.hpp"
#include "ltlab/sampling.hpp"

namespace ltlab {

Schedule Schedule::make(std::size_t epoch_len, const OptimSpec& optim) {
  Schedule s;
  s.steps_per_epoch = (epoch_len + optim.batch_size - 1) / optim.batch_size;
  s.total_steps = s.steps_per_epoch * optim.epochs;
  s.warmup_steps = s.steps_per_epoch * optim.warmup_epochs;
  return s;
}

double Schedule::lr(std::size_t step, double lr_init) const {
  return lr_at(step, total_steps, warmup_steps, lr_init);
}

Gradients compute_gradients(const Backbone& backbone, const ClassifierHead& head,
                            const Matrix& inputs, std::span<const int> labels,
                            std::span<const std::size_t> counts, const LossSpec& loss) {
  Backbone::Trace trace;
  const Matrix features = backbone.forward(inputs, trace);
  const LossValue value = batch_loss(head.logits(features), labels, counts, loss);
  HeadGradients hg = head_backward(head, features, value.grad_logits);
  Gradients g;
  g.loss = value.total;
  g.head_weight = std::move(hg.weight);
  g.head_bias = std::move(hg.bias);
  if (!backbone.is_identity()) g.backbone = backbone.backward(trace, hg.input);
  return g;
}

std::vector<EpochLog> fit_classifier(Backbone& backbone, bool train_backbone,
                                     ClassifierHead& head, const Dataset& data,
                                     std::span<const std::size_t> counts,
                                     const FitOptions& options) {
  const auto& optim = options.optim;
  optim.validate();
  data.validate();
  require(head.outputs() == data.num_classes(), "fit: head arity must equal C");
  require(head.input_dim() == backbone.output_dim(), "fit: head input must match backbone");
  std::vector<EpochLog> log;
  if (optim.epochs == 0) return log;

  const bool update_backbone = train_backbone && !backbone.is_identity();
  if (update_backbone && backbone.frozen()) fail(ErrorCode::State, "fit: backbone is frozen");
  // Frozen features are computed once.
  const Matrix frozen_features = update_backbone ? Matrix{} : backbone.forward(data.features);

  const auto sampler = SamplerSpec::from_counts(data.class_counts(), options.q, options.seed);
  const Schedule schedule = Schedule::make(data.size(), optim);
  OptimState state;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < optim.epochs; ++epoch) {
    SamplerSpec epoch_sampler = sampler;
    epoch_sampler.seed = derive_seed(options.seed, {9, epoch});
    const auto stream = make_epoch_stream(data.labels, epoch_sampler, data.size());
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t b = 0; b < schedule.steps_per_epoch; ++b, ++step) {
      const std::size_t begin = b * optim.batch_size;
      const std::size_t end = std::min(begin + optim.batch_size, stream.indices.size());
      const std::span<const std::size_t> rows(stream.indices.data() + begin, end - begin);
      std::vector<int> labels;
      labels.reserve(rows.size());
      for (auto r : rows) labels.push_back(data.labels[r]);

      Gradients g;
      if (update_backbone) {
        g = compute_gradients(backbone, head, gather_rows(data.features, rows), labels, counts,
                              options.loss);
      } else {
        g = compute_gradients(Backbone::identity(frozen_features.cols()), head,
                              gather_rows(frozen_features, rows), labels, counts, options.loss);
      }
      if (!std::isfinite(g.loss)) {
        fail(ErrorCode::Numeric, "training diverged (non-finite loss) at epoch " +
                                     std::to_string(epoch));
      }
      loss_sum += g.loss;
      lr = schedule.lr(step, optim.lr_init);

      std::vector<ParamRef> params;
      params.push_back({"head.weight", head.weight.values(), g.head_weight.values()});
      params.push_back({"head.bias", head.bias, g.head_bias});
      if (update_backbone) {
        auto& layers = backbone.trainable_layers();
        for (std::size_t l = 0; l < layers.size(); ++l) {
          params.push_back({"backbone." + std::to_string(l) + ".weight",
                            layers[l].weight.values(), g.backbone[l].weight.values()});
          params.push_back(
              {"backbone." + std::to_string(l) + ".bias", layers[l].bias, g.backbone[l].bias});
        }
      }
      optimizer_step(params, state, optim, lr);
    }
    log.push_back({loss_sum / static_cast<double>(schedule.steps_per_epoch), lr});
  }
  return log;
}

}  // namespace ltlab
