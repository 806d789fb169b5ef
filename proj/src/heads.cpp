// SPDX-License-Identifier: Apache-2.0
#include "ltlab/heads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ltlab/error.hpp"
#include "ltlab/losses.hpp"
#include "ltlab/random.hpp"
#include "ltlab/sampling.hpp"

namespace ltlab {

std::vector<GroupLimit> default_group_limits() {
  return {{0.0, 10.0}, {10.0, 100.0}, {100.0, 1000.0},
          {1000.0, std::numeric_limits<double>::infinity()}};
}

std::vector<int> GroupLayout::active_groups() const {
  std::vector<int> out;
  for (std::size_t g = 0; g < members.size(); ++g) {
    if (!members[g].empty()) out.push_back(static_cast<int>(g));
  }
  return out;
}

GroupLayout build_group_layout(const ClassStats& stats, std::optional<int> background_class,
                               LayoutMode mode, std::span<const GroupLimit> limits) {
  require(stats.num_classes() >= 1, "layout: no classes");
  GroupLayout layout;
  if (limits.empty()) {
    layout.limits = default_group_limits();
  } else {
    layout.limits.assign(limits.begin(), limits.end());
  }
  for (std::size_t k = 0; k < layout.limits.size(); ++k) {
    require(layout.limits[k].low < layout.limits[k].high, "layout: empty group interval");
    if (k > 0) {
      require(layout.limits[k].low == layout.limits[k - 1].high,
              "layout: group limits must be contiguous");
    }
  }
  const auto c = static_cast<int>(stats.num_classes());
  if (background_class) require(*background_class >= 0 && *background_class < c,
                                "layout: background class out of range");
  if (mode == LayoutMode::bags_with_background && !background_class) {
    fail(ErrorCode::InvalidArgument,
         "layout: background group requested but no background class is designated");
  }
  layout.has_background_group = mode == LayoutMode::bags_with_background;
  layout.background_class = background_class;
  layout.members.resize(layout.limits.size() + 1);
  layout.class_group.assign(stats.num_classes(), -1);

  for (int j = 0; j < c; ++j) {
    int group = -1;
    if (layout.has_background_group && j == *background_class) {
      group = 0;
    } else {
      const auto n = static_cast<double>(stats.counts[static_cast<std::size_t>(j)]);
      for (std::size_t k = 0; k < layout.limits.size(); ++k) {
        if (layout.limits[k].low <= n && n < layout.limits[k].high) {
          group = static_cast<int>(k) + 1;
          break;
        }
      }
      require(group > 0, "layout: class " + std::to_string(j) + " count outside every group");
    }
    layout.class_group[static_cast<std::size_t>(j)] = group;
    layout.members[static_cast<std::size_t>(group)].push_back(j);
  }
  return layout;
}

SSBMask SSBMask::from_layout(const GroupLayout& layout) {
  SSBMask mask;
  mask.keep.resize(layout.num_classes());
  for (std::size_t a = 0; a < layout.num_classes(); ++a) {
    mask.keep[a] = layout.class_group[a] == layout.top_group() ? 1 : 0;
  }
  return mask;
}

std::size_t SSBMask::trace() const noexcept {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{1}));
}

Matrix SSBMask::dense() const {
  Matrix q(keep.size(), keep.size());
  for (std::size_t a = 0; a < keep.size(); ++a) q(a, a) = keep[a] ? 1.0 : 0.0;
  return q;
}

std::vector<double> ssb_aggregate(std::span<const double> p_i, std::span<const double> p_sqrt,
                                  const SSBMask& mask) {
  require(p_i.size() == p_sqrt.size() && p_i.size() == mask.keep.size(),
          "ssb_aggregate: length mismatch");
  std::vector<double> out(p_i.size());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = mask.keep[a] ? p_i[a] : p_sqrt[a];
  return out;
}

std::size_t group_head_arity(const GroupLayout& layout, int group) {
  if (group == 0) return 2;
  return layout.members.at(static_cast<std::size_t>(group)).size() + 1;
}

std::vector<double> bags_remap(const GroupLayout& layout, std::span<const int> groups,
                               const std::vector<std::vector<double>>& group_probs) {
  require(groups.size() == group_probs.size(), "bags_remap: one probability vector per group");
  std::vector<double> scores(layout.num_classes(), 0.0);
  double foreground = 1.0;
  for (std::size_t h = 0; h < groups.size(); ++h) {
    const int g = groups[h];
    const auto& probs = group_probs[h];
    require(probs.size() == group_head_arity(layout, g), "bags_remap: group arity mismatch");
    if (g == 0) {
      scores[static_cast<std::size_t>(*layout.background_class)] = probs[0];
      foreground = probs[1];
      continue;
    }
    const auto& members = layout.members[static_cast<std::size_t>(g)];
    for (std::size_t i = 0; i < members.size(); ++i) {
      scores[static_cast<std::size_t>(members[i])] = probs[i];
    }
  }
  if (layout.has_background_group) {
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (layout.class_group[j] != 0) scores[j] *= foreground;
    }
  }
  return scores;
}

std::vector<double> bags_infer(const GroupLayout& layout, std::span<const int> groups,
                               const std::vector<std::vector<double>>& group_logits) {
  std::vector<std::vector<double>> probs;
  probs.reserve(group_logits.size());
  for (const auto& z : group_logits) probs.push_back(softmax(z));
  return bags_remap(layout, groups, probs);
}

namespace {

// Local target index of class y for the head of `group`.
int local_target(const GroupLayout& layout, int group, int y) {
  if (group == 0) return layout.class_group[static_cast<std::size_t>(y)] == 0 ? 0 : 1;
  const auto& members = layout.members[static_cast<std::size_t>(group)];
  const auto it = std::ranges::find(members, y);
  return static_cast<int>(it == members.end() ? members.size() : it - members.begin());
}

}  // namespace

BagsTraining bags_train_heads(const Backbone& backbone, const Dataset& dataset,
                              const GroupLayout& layout, const OptimSpec& optim,
                              double bags_beta, std::uint64_t seed) {
  optim.validate();
  dataset.validate();
  require(bags_beta > 0.0, "bags: beta must be > 0");
  require(layout.num_classes() == dataset.num_classes(), "bags: layout/dataset class mismatch");

  BagsTraining out;
  for (std::size_t g = 1; g < layout.members.size(); ++g) {
    if (layout.members[g].empty()) {
      out.warnings.push_back("bags: group G" + std::to_string(g) + " has no classes, skipped");
    }
  }
  const Matrix features = backbone.forward(dataset.features);
  const auto groups = layout.active_groups();
  const Schedule schedule = Schedule::make(dataset.size(), optim);
  const auto counts = dataset.class_counts();
  const auto sampler = SamplerSpec::from_counts(counts, 1.0, seed);
  const auto loss = LossSpec::cross_entropy();
  std::vector<double> epoch_loss(optim.epochs, 0.0);
  std::vector<double> epoch_lr(optim.epochs, 0.0);

  // Heads never share parameters or filter state, so training them one after
  // another equals training them concurrently.
  for (int group : groups) {
    auto head = ClassifierHead::random(group_head_arity(layout, group), features.cols(),
                                       derive_seed(seed, {10, static_cast<std::uint64_t>(group)}));
    OptimState state;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < optim.epochs; ++epoch) {
      SamplerSpec epoch_sampler = sampler;
      epoch_sampler.seed = derive_seed(seed, {11, epoch});
      const auto stream = make_epoch_stream(dataset.labels, epoch_sampler, dataset.size());
      double loss_sum = 0.0;
      for (std::size_t b = 0; b < schedule.steps_per_epoch; ++b, ++step) {
        const std::size_t begin = b * optim.batch_size;
        const std::size_t end = std::min(begin + optim.batch_size, stream.indices.size());
        std::vector<int> batch_labels;
        for (std::size_t t = begin; t < end; ++t) {
          batch_labels.push_back(dataset.labels[stream.indices[t]]);
        }
        std::vector<std::size_t> kept(batch_labels.size());
        if (group == 0) {
          for (std::size_t t = 0; t < kept.size(); ++t) kept[t] = t;
        } else {
          kept = bags_filter_batch(batch_labels, group, layout.class_group, bags_beta,
                                   derive_seed(seed, {12, static_cast<std::uint64_t>(group), step}));
        }
        std::vector<std::size_t> rows;
        std::vector<int> targets;
        for (auto k : kept) {
          rows.push_back(stream.indices[begin + k]);
          targets.push_back(local_target(layout, group, batch_labels[k]));
        }
        const Matrix h = gather_rows(features, rows);
        const LossValue value = batch_loss(head.logits(h), targets, {}, loss);
        if (!std::isfinite(value.total)) {
          fail(ErrorCode::Numeric, "bags: group G" + std::to_string(group) +
                                       " diverged at epoch " + std::to_string(epoch));
        }
        loss_sum += value.total;
        const HeadGradients grad = head_backward(head, h, value.grad_logits);
        const double lr = schedule.lr(step, optim.lr_init);
        epoch_lr[epoch] = lr;
        const ParamRef params[] = {
            {"bags.G" + std::to_string(group) + ".weight", head.weight.values(),
             grad.weight.values()},
            {"bags.G" + std::to_string(group) + ".bias", head.bias, grad.bias},
        };
        optimizer_step(params, state, optim, lr);
      }
      epoch_loss[epoch] += loss_sum / static_cast<double>(schedule.steps_per_epoch);
    }
    out.heads.groups.push_back(group);
    out.heads.heads.push_back(std::move(head));
  }
  for (std::size_t e = 0; e < optim.epochs; ++e) {
    out.log.push_back({epoch_loss[e] / static_cast<double>(groups.size()), epoch_lr[e]});
  }
  return out;
}

}  // namespace ltlab
