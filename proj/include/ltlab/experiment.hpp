// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ltlab/data.hpp"
#include "ltlab/metrics.hpp"
#include "ltlab/model.hpp"
#include "ltlab/optim.hpp"

namespace ltlab {

inline constexpr const char* kToolVersion = "ltlab 0.1.0";

enum class DataSource { synthetic, embeddings };

/// Full description of one comparison run. Serialized as a JSON document with
/// nested sections; unknown keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "ltlab_out";
  std::vector<Method> methods{Method::baseline, Method::sqrt_samp, Method::cb_focal,
                              Method::bags, Method::ssb};
  bool one_stage = false;      // sqrt_samp and cb_focal trained from scratch
  bool shared_stage1 = true;   // one stage-1 model for every two-stage method
  std::size_t jobs = 1;        // concurrent stage-2 runs
  bool emit_plots = true;

  struct Data {
    DataSource source = DataSource::synthetic;
    SyntheticSpec synthetic;           // seed field ignored; derived from top-level seed
    std::filesystem::path embeddings;  // source == embeddings
    std::optional<int> background_class;
    // Synthetic held-out set: max(min_per_class, round(fraction * n_j)) rows per class.
    double holdout_fraction = 0.2;
    std::size_t holdout_min_per_class = 10;
    SplitSpec split;                   // embeddings only; seed derived
  } data;

  Architecture arch;
  OptimSpec stage1 = OptimSpec::stage1_defaults();
  OptimSpec stage2 = OptimSpec::stage2_defaults();
  double focal_gamma = 2.0;
  double cb_beta = 0.9;
  double bags_beta = 8.0;

  void validate() const;

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Override one field by dotted key, e.g. "stage1.lr_init" = "0.001".
  /// The value is parsed as JSON when possible, otherwise taken as a string.
  void set(const std::string& key, const std::string& value);

  /// "<data>-<run>": the first part covers the data source alone, the second
  /// every result-affecting field. output_dir, jobs and emit_plots are excluded.
  std::string digest() const;
};

struct MethodArtifacts {
  std::string method;
  std::string regime;
  std::filesystem::path checkpoint;
  std::filesystem::path report;
  double seconds = 0.0;
  bool ok = true;
  std::string failed_step;
  std::string error;
};

struct RunManifest {
  std::string config_digest;
  std::string dataset_digest;
  std::string tool_version = kToolVersion;
  std::vector<MethodArtifacts> methods;
  std::vector<std::filesystem::path> files;  // every other artifact
  bool ok = true;

  std::string to_json() const;
};

struct PreparedData {
  Dataset train;
  Dataset test;
  std::string digest;
};

PreparedData prepare_data(const ExperimentConfig& config);

/// Trains and evaluates every configured method and writes checkpoints,
/// reports (JSON), comparison tables (CSV and text), per-class F1 deltas and
/// plot data under config.output_dir, then manifest.json. On a failed method
/// the manifest is still written, with the failure recorded, and Error is
/// thrown naming the method and step.
RunManifest run_experiment(const ExperimentConfig& config);

/// Writes the per-class F1 delta table of each non-baseline report against
/// the baseline report into dir; returns the written paths.
std::vector<std::filesystem::path> emit_f1_delta(const EvalReport& baseline,
                                                 const std::vector<EvalReport>& reports,
                                                 const std::filesystem::path& dir);

EvalReport load_report(const std::filesystem::path& path);

}  // namespace ltlab
