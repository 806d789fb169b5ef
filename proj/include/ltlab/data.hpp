// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ltlab/linalg.hpp"

namespace ltlab {

/// Feature rows with integer class labels.
struct Dataset {
  Matrix features;                  // N x D
  std::vector<int> labels;          // N, each in [0, C)
  std::vector<std::string> class_names;  // C
  std::optional<int> background_class;
  // Per-row detector-crop flag from the embedding file; empty when absent.
  // Carried through for bookkeeping only, training ignores it.
  std::vector<std::uint8_t> crop;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }
  std::size_t num_classes() const noexcept { return class_names.size(); }

  /// Throws Error(InvalidArgument) when any Dataset invariant is broken.
  void validate() const;

  Dataset subset(std::span<const std::size_t> rows) const;
  std::vector<std::size_t> class_counts() const;
};

/// Count-decade index in {1,2,3,4}: [1,10) -> 1, [10,100) -> 2,
/// [100,1000) -> 3, [1000, inf) -> 4. Lower bound inclusive.
int count_decade(std::size_t n);

struct ClassStats {
  std::vector<std::size_t> counts;
  std::vector<int> bins;    // 1..4
  std::vector<int> groups;  // 1..4

  std::size_t num_classes() const noexcept { return counts.size(); }
  friend bool operator==(const ClassStats&, const ClassStats&) = default;
};

ClassStats compute_class_stats(const Dataset& dataset);
ClassStats class_stats_from_counts(std::span<const std::size_t> counts);

struct SyntheticSpec {
  std::size_t num_classes = 20;
  std::size_t feature_dim = 16;
  std::size_t head_count = 1000;
  double imbalance_factor = 200.0;
  double class_separation = 3.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-class counts of the geometric long-tail profile:
/// round(head_count * imbalance_factor^(-j/(C-1))).
std::vector<std::size_t> synthetic_counts(const SyntheticSpec& spec);

/// Class j gets synthetic_counts(spec)[j] rows drawn from an isotropic
/// Gaussian around a class centroid. Centroids are random directions scaled by
/// class_separation; both centroids and samples are fixed by spec.seed.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Extra rows from the same class-conditional distributions as
/// generate_synthetic(spec) (same centroids), independent samples.
Dataset generate_holdout(const SyntheticSpec& spec, std::span<const std::size_t> per_class,
                         std::uint64_t stream);

struct SplitSpec {
  double train_fraction = 0.7;
  double val_fraction = 0.1;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  bool stratified = true;

  void validate() const;
};

struct DataSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Stratified: classes with >= 3 rows land in all three partitions, smaller
/// classes go entirely to train.
DataSplit split_dataset(const Dataset& dataset, const SplitSpec& spec);

// Embedding text format:
//   C=<int> D=<int>
//   name_0,name_1,...
//   <label>,<f_1>,...,<f_D>[,crop=<0|1>]
Dataset read_embeddings(std::istream& in);
Dataset load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const Dataset& dataset);
void save_embeddings(const std::filesystem::path& path, const Dataset& dataset);

/// Content digest over features, labels and class names.
std::string dataset_digest(const Dataset& dataset);

}  // namespace ltlab
