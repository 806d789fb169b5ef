// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ltlab/data.hpp"
#include "ltlab/fit.hpp"
#include "ltlab/heads.hpp"
#include "ltlab/losses.hpp"
#include "ltlab/network.hpp"
#include "ltlab/optim.hpp"

namespace ltlab {

enum class Method { baseline, sqrt_samp, cb_focal, bags, ssb };

std::string to_string(Method method);
Method parse_method(const std::string& name);
const std::vector<Method>& all_methods();

struct Architecture {
  std::vector<std::size_t> hidden;  // empty: identity backbone

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// A trained classifier. Head layout by method:
///   baseline, sqrt_samp, cb_focal: heads = {f}
///   ssb:  heads = {f_i (stage-1 head), f_sqrt}, layout without G0
///   bags: heads[i] serves group head_groups[i] of layout
struct TrainedModel {
  Backbone backbone;
  std::vector<ClassifierHead> heads;
  std::vector<int> head_groups;
  std::optional<GroupLayout> layout;
  std::vector<EpochLog> log;
  ClassStats stats;
  Method method = Method::baseline;

  std::size_t num_classes() const noexcept { return stats.num_classes(); }
  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

struct Stage1Options {
  Architecture arch;
  OptimSpec optim = OptimSpec::stage1_defaults();
  LossSpec loss;
  double q = 1.0;
  Method tag = Method::baseline;
  std::uint64_t seed = 0;
};

/// Joint backbone + head training from scratch. Defaults give the
/// instance-sampled cross-entropy baseline; other q/loss settings give the
/// one-stage variants.
TrainedModel train_stage1(const Dataset& dataset, const Stage1Options& options);

struct Stage2Options {
  OptimSpec optim = OptimSpec::stage2_defaults();
  double focal_gamma = 2.0;
  double cb_beta = 0.9;
  double bags_beta = 8.0;
  std::uint64_t seed = 0;
};

/// Freezes the backbone and retrains the classifier with a balancing method.
TrainedModel train_stage2(const TrainedModel& stage1, const Dataset& dataset, Method method,
                          const Stage2Options& options);

/// Logits of the first head over backbone features. Not defined for BAGS.
Matrix forward(const TrainedModel& model, const Matrix& features);

struct Prediction {
  std::vector<int> labels;
  Matrix scores;  // N x C final score vectors
};

/// Argmax of the method's final score vector, ties toward the lowest index.
Prediction predict(const TrainedModel& model, const Matrix& features);

/// Index of the maximum; the first one on ties.
int argmax(std::span<const double> scores);

// Binary checkpoint, little-endian, versioned; round trip is bit-exact.
void write_model(std::ostream& out, const TrainedModel& model);
TrainedModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace ltlab
