// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ltlab/data.hpp"
#include "ltlab/fit.hpp"
#include "ltlab/network.hpp"
#include "ltlab/optim.hpp"

namespace ltlab {

/// Half-open count interval [low, high).
struct GroupLimit {
  double low = 0.0;
  double high = 0.0;

  friend bool operator==(const GroupLimit&, const GroupLimit&) = default;
};

/// (0,10), (10,100), (100,1000), (1000,+inf).
std::vector<GroupLimit> default_group_limits();

enum class LayoutMode {
  ssb,                   // no background group; background placed by count
  bags,                  // count groups only
  bags_with_background,  // plus G0: background vs foreground
};

struct GroupLayout {
  std::vector<GroupLimit> limits;  // group k (1-based) uses limits[k-1]
  bool has_background_group = false;
  std::optional<int> background_class;
  std::vector<int> class_group;             // per class; 0 means G0
  std::vector<std::vector<int>> members;    // indexed by group id 0..limits.size()

  std::size_t num_classes() const noexcept { return class_group.size(); }
  /// Group holding the most frequent classes (G4 with default limits).
  int top_group() const noexcept { return static_cast<int>(limits.size()); }
  /// Groups that get a head, in training order: G0 first when present, then
  /// non-empty count groups ascending.
  std::vector<int> active_groups() const;

  friend bool operator==(const GroupLayout&, const GroupLayout&) = default;
};

GroupLayout build_group_layout(const ClassStats& stats, std::optional<int> background_class,
                               LayoutMode mode, std::span<const GroupLimit> limits = {});

/// Diagonal mask selecting top-group classes.
struct SSBMask {
  std::vector<std::uint8_t> keep;  // keep[a] == 1 iff class a is in the top group

  static SSBMask from_layout(const GroupLayout& layout);
  std::size_t trace() const noexcept;
  Matrix dense() const;
};

/// p_r[a] = p_i[a] for top-group classes, p_sqrt[a] otherwise.
std::vector<double> ssb_aggregate(std::span<const double> p_i, std::span<const double> p_sqrt,
                                  const SSBMask& mask);

struct BagsHeads {
  std::vector<int> groups;  // group id served by heads[i]
  std::vector<ClassifierHead> heads;
};

/// Local output index of each class within its group head; "others" is the
/// last output. For G0 the outputs are [background, foreground].
std::size_t group_head_arity(const GroupLayout& layout, int group);

/// Maps per-group softmax outputs back to class order. Others outputs are
/// dropped; when G0 exists, foreground classes are scaled by its foreground
/// probability and the background class takes G0's background probability.
std::vector<double> bags_remap(const GroupLayout& layout, std::span<const int> groups,
                               const std::vector<std::vector<double>>& group_probs);

/// Softmax within each group head's logits, then bags_remap.
std::vector<double> bags_infer(const GroupLayout& layout, std::span<const int> groups,
                               const std::vector<std::vector<double>>& group_logits);

struct BagsTraining {
  BagsHeads heads;
  std::vector<EpochLog> log;
  std::vector<std::string> warnings;
};

/// Trains one fresh head per active group on frozen backbone features.
/// Batches come from instance-balanced epochs; each group head sees its
/// in-group rows plus undersampled "others".
BagsTraining bags_train_heads(const Backbone& backbone, const Dataset& dataset,
                              const GroupLayout& layout, const OptimSpec& optim,
                              double bags_beta, std::uint64_t seed);

}  // namespace ltlab
