// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ltlab/data.hpp"

namespace ltlab {

struct EvalReport {
  std::map<int, double> acc_bins;             // bin -> accuracy; empty bins omitted
  std::map<int, std::size_t> bin_instances;   // bin -> test instances
  double acc_all = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
  std::vector<std::size_t> confusion;  // C x C row-major; row = true, col = predicted
  std::vector<std::size_t> train_counts;
  std::vector<std::string> class_names;
  std::string method;
  std::string regime;  // "two_stage" or "one_stage"
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string dataset_digest;

  std::size_t num_classes() const noexcept { return per_class_f1.size(); }
  std::size_t confusion_at(std::size_t truth, std::size_t predicted) const {
    return confusion[truth * num_classes() + predicted];
  }
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Binned top-1 accuracy (bins from training counts), overall accuracy and
/// macro F1. Precision or recall of 0/0 gives F1 = 0.
EvalReport evaluate(std::span<const int> predictions, std::span<const int> truth,
                    const ClassStats& stats);

enum class Rank { none, best, second };

inline constexpr std::size_t kComparisonColumns = 6;  // Acc1..Acc4, Acc_all, F1m

struct ComparisonRow {
  std::string method;
  std::array<std::optional<double>, kComparisonColumns> values;
  std::array<Rank, kComparisonColumns> ranks{};
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  static const std::array<const char*, kComparisonColumns>& column_names();
};

/// One row per report. With two or more rows, each column flags the highest
/// value as best and the next distinct value as second (ties share a flag).
ComparisonTable compare_methods(std::span<const EvalReport> reports);

/// Aligned text: percentages, best marked '*', second marked '+'.
std::string render_text(const ComparisonTable& table);
/// method,acc_bin1,acc_bin1_rank,...,macro_f1,macro_f1_rank ; empty cell for absent bins.
std::string render_csv(const ComparisonTable& table);

struct F1DeltaRow {
  std::size_t class_index = 0;
  std::string class_name;
  std::size_t train_count = 0;
  double baseline_f1 = 0.0;
  double method_f1 = 0.0;
  double delta = 0.0;
};

/// Per-class F1(method) - F1(baseline), sorted by training count descending
/// (ties by class index).
std::vector<F1DeltaRow> f1_delta(const EvalReport& baseline, const EvalReport& method);
std::string render_f1_delta_csv(const std::vector<F1DeltaRow>& rows);

// JSON persistence of reports (lossless for doubles).
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

}  // namespace ltlab
