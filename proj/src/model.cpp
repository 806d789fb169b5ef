// SPDX-License-Identifier: Apache-2.0
#include "ltlab/model.hpp"

#include <algorithm>

#include "ltlab/error.hpp"
#include "ltlab/random.hpp"

namespace ltlab {

std::string to_string(Method method) {
  switch (method) {
    case Method::baseline: return "baseline";
    case Method::sqrt_samp: return "sqrt_samp";
    case Method::cb_focal: return "cb_focal";
    case Method::bags: return "bags";
    case Method::ssb: return "ssb";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods()) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorCode::InvalidArgument, "unknown method tag '" + name + "'");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::baseline, Method::sqrt_samp,
                                           Method::cb_focal, Method::bags, Method::ssb};
  return methods;
}

TrainedModel train_stage1(const Dataset& dataset, const Stage1Options& options) {
  dataset.validate();
  TrainedModel model;
  model.stats = compute_class_stats(dataset);
  model.method = options.tag;
  model.backbone =
      options.arch.hidden.empty()
          ? Backbone::identity(dataset.dim())
          : Backbone::mlp(dataset.dim(), options.arch.hidden, derive_seed(options.seed, {20}));
  model.heads.push_back(ClassifierHead::random(dataset.num_classes(), model.backbone.output_dim(),
                                               derive_seed(options.seed, {21})));
  FitOptions fit{options.q, options.loss, options.optim, derive_seed(options.seed, {22})};
  model.log = fit_classifier(model.backbone, true, model.heads[0], dataset, model.stats.counts, fit);
  return model;
}

namespace {

// sqrt_samp and SSB's f_sqrt share this recipe and seed, so SSB's second
// head equals the standalone square-root-sampled head.
ClassifierHead train_sqrt_head(TrainedModel& model, const Dataset& dataset,
                               const Stage2Options& options, std::vector<EpochLog>& log) {
  auto head = ClassifierHead::random(dataset.num_classes(), model.backbone.output_dim(),
                                     derive_seed(options.seed, {30}));
  FitOptions fit{0.5, LossSpec::cross_entropy(), options.optim, derive_seed(options.seed, {31})};
  log = fit_classifier(model.backbone, false, head, dataset, model.stats.counts, fit);
  return head;
}

}  // namespace

TrainedModel train_stage2(const TrainedModel& stage1, const Dataset& dataset, Method method,
                          const Stage2Options& options) {
  dataset.validate();
  require(stage1.heads.size() == 1 && stage1.method == Method::baseline,
          "stage 2 needs a single-head stage-1 model");
  require(stage1.backbone.input_dim() == dataset.dim(), "stage 2: feature dimension mismatch");
  TrainedModel model;
  model.backbone = stage1.backbone;
  model.backbone.freeze();
  model.stats = compute_class_stats(dataset);
  model.method = method;

  switch (method) {
    case Method::sqrt_samp:
      model.heads.push_back(train_sqrt_head(model, dataset, options, model.log));
      break;
    case Method::cb_focal: {
      auto head = ClassifierHead::random(dataset.num_classes(), model.backbone.output_dim(),
                                         derive_seed(options.seed, {32}));
      FitOptions fit{1.0, LossSpec::cb_focal(options.cb_beta, options.focal_gamma),
                     options.optim, derive_seed(options.seed, {33})};
      model.log = fit_classifier(model.backbone, false, head, dataset, model.stats.counts, fit);
      model.heads.push_back(std::move(head));
      break;
    }
    case Method::ssb:
      model.heads.push_back(stage1.heads[0]);
      model.heads.push_back(train_sqrt_head(model, dataset, options, model.log));
      model.layout = build_group_layout(model.stats, dataset.background_class, LayoutMode::ssb);
      break;
    case Method::bags: {
      const auto mode = dataset.background_class ? LayoutMode::bags_with_background
                                                 : LayoutMode::bags;
      model.layout = build_group_layout(model.stats, dataset.background_class, mode);
      auto trained = bags_train_heads(model.backbone, dataset, *model.layout, options.optim,
                                      options.bags_beta, derive_seed(options.seed, {34}));
      model.heads = std::move(trained.heads.heads);
      model.head_groups = std::move(trained.heads.groups);
      model.log = std::move(trained.log);
      break;
    }
    case Method::baseline:
      fail(ErrorCode::InvalidArgument, "stage 2: 'baseline' is not a balancing method");
  }
  return model;
}

Matrix forward(const TrainedModel& model, const Matrix& features) {
  require(model.method != Method::bags, "forward: BAGS models have no single C-way head");
  require(!model.heads.empty(), "forward: model has no head");
  return model.heads[0].logits(model.backbone.forward(features));
}

int argmax(std::span<const double> scores) {
  require(!scores.empty(), "argmax: empty score vector");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return static_cast<int>(best);
}

Prediction predict(const TrainedModel& model, const Matrix& features) {
  require(!model.heads.empty(), "predict: model has no head");
  const Matrix h = model.backbone.forward(features);
  const std::size_t n = h.rows();
  const std::size_t c = model.num_classes();
  Prediction out;
  out.scores = Matrix(n, c);
  out.labels.resize(n);

  std::vector<Matrix> logits;
  for (const auto& head : model.heads) logits.push_back(head.logits(h));

  std::optional<SSBMask> mask;
  if (model.method == Method::ssb) {
    require(model.layout && model.heads.size() == 2, "predict: malformed SSB model");
    mask = SSBMask::from_layout(*model.layout);
  }
  if (model.method == Method::bags) {
    require(model.layout && model.head_groups.size() == model.heads.size(),
            "predict: malformed BAGS model");
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.scores.row(i);
    std::vector<double> scores;
    if (model.method == Method::ssb) {
      scores = ssb_aggregate(softmax(logits[0].row(i)), softmax(logits[1].row(i)), *mask);
    } else if (model.method == Method::bags) {
      std::vector<std::vector<double>> group_logits;
      for (const auto& z : logits) group_logits.emplace_back(z.row(i).begin(), z.row(i).end());
      scores = bags_infer(*model.layout, model.head_groups, group_logits);
    } else {
      scores = softmax(logits[0].row(i));
    }
    std::ranges::copy(scores, row.begin());
    out.labels[i] = argmax(row);
  }
  return out;
}

}  // namespace ltlab
