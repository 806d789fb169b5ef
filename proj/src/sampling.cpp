// SPDX-License-Identifier: Apache-2.0
#include "ltlab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ltlab/error.hpp"
#include "ltlab/random.hpp"

namespace ltlab {

std::vector<double> sampling_weights(std::span<const std::size_t> counts, double q) {
  require(!counts.empty(), "sampling_weights: no classes");
  require(q >= 0.0 && q <= 1.0, "sampling_weights: q must lie in [0,1]");
  std::vector<double> p(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    require(counts[j] >= 1, "sampling_weights: class " + std::to_string(j) + " has zero count");
    p[j] = std::pow(static_cast<double>(counts[j]), q);
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= total;
  return p;
}

SamplerSpec SamplerSpec::from_counts(std::span<const std::size_t> counts, double q,
                                     std::uint64_t seed) {
  return {q, sampling_weights(counts, q), seed};
}

EpochStream make_epoch_stream(std::span<const int> labels, const SamplerSpec& sampler,
                              std::size_t epoch_len) {
  require(epoch_len >= 1, "epoch stream: epoch_len must be >= 1");
  require(!labels.empty(), "epoch stream: empty dataset");
  Rng rng(derive_seed(sampler.seed, {5}));
  EpochStream stream;
  stream.indices.reserve(epoch_len);

  if (sampler.q == 1.0) {
    std::vector<std::size_t> perm(labels.size());
    while (stream.indices.size() < epoch_len) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      const auto take = std::min(perm.size(), epoch_len - stream.indices.size());
      stream.indices.insert(stream.indices.end(), perm.begin(),
                            perm.begin() + static_cast<std::ptrdiff_t>(take));
    }
    return stream;
  }

  const auto c = sampler.class_probs.size();
  std::vector<std::vector<std::size_t>> members(c);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    require(y < c, "epoch stream: label outside sampler's class range");
    members[y].push_back(i);
  }
  for (std::size_t j = 0; j < c; ++j) {
    require(members[j].empty() == (sampler.class_probs[j] == 0.0),
            "epoch stream: class " + std::to_string(j) +
                " has positive probability but no instances (or vice versa)");
  }
  std::discrete_distribution<std::size_t> pick_class(sampler.class_probs.begin(),
                                                      sampler.class_probs.end());
  for (std::size_t t = 0; t < epoch_len; ++t) {
    const auto& m = members[pick_class(rng)];
    std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
    stream.indices.push_back(m[pick(rng)]);
  }
  return stream;
}

std::vector<std::size_t> bags_filter_batch(std::span<const int> batch_labels, int group,
                                           std::span<const int> class_groups, double beta,
                                           std::uint64_t seed) {
  require(beta > 0.0, "bags filter: beta must be > 0");
  std::vector<std::size_t> kept, others;
  for (std::size_t i = 0; i < batch_labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(batch_labels[i]);
    require(y < class_groups.size(), "bags filter: label outside group table");
    (class_groups[y] == group ? kept : others).push_back(i);
  }
  const double n_k = static_cast<double>(kept.size());
  const auto quota = static_cast<std::size_t>(std::ceil(kept.empty() ? beta : beta * n_k));
  const auto take = std::min(quota, others.size());

  // Partial Fisher-Yates: the first `take` slots become a uniform subset.
  Rng rng(derive_seed(seed, {6}));
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, others.size() - 1);
    std::swap(others[i], others[pick(rng)]);
  }
  kept.insert(kept.end(), others.begin(), others.begin() + static_cast<std::ptrdiff_t>(take));
  std::ranges::sort(kept);
  return kept;
}

}  // namespace ltlab
