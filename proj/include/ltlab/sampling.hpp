// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ltlab/data.hpp"

namespace ltlab {

/// p_j = n_j^q / sum_i n_i^q. q=1 is instance-balanced, q=0 class-balanced,
/// q=1/2 square-root sampling.
std::vector<double> sampling_weights(std::span<const std::size_t> counts, double q);

struct SamplerSpec {
  double q = 1.0;
  std::vector<double> class_probs;
  std::uint64_t seed = 0;

  static SamplerSpec from_counts(std::span<const std::size_t> counts, double q,
                                 std::uint64_t seed);
};

/// Instance indices for one epoch.
struct EpochStream {
  std::vector<std::size_t> indices;
};

/// q == 1: seeded permutations of [0, N), concatenated up to epoch_len.
/// q < 1: draw a class by class_probs, then an instance of that class
/// uniformly, with replacement.
EpochStream make_epoch_stream(std::span<const int> labels, const SamplerSpec& sampler,
                              std::size_t epoch_len);

/// Positions (sorted, into batch_labels) kept when training the head of
/// `group`. In-group rows are always kept; out-of-group rows are subsampled
/// to ceil(beta * n_k), or to ceil(beta) when the batch has no in-group row.
/// class_groups[j] is the group id of class j.
std::vector<std::size_t> bags_filter_batch(std::span<const int> batch_labels, int group,
                                           std::span<const int> class_groups, double beta,
                                           std::uint64_t seed);

inline std::vector<std::size_t> bags_filter_batch(std::span<const int> batch_labels, int group,
                                                  const ClassStats& stats, double beta,
                                                  std::uint64_t seed) {
  return bags_filter_batch(batch_labels, group, stats.groups, beta, seed);
}

}  // namespace ltlab
