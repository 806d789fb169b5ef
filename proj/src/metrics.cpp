// SPDX-License-Identifier: Apache-2.0
#include "ltlab/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ltlab/error.hpp"

namespace ltlab {

EvalReport evaluate(std::span<const int> predictions, std::span<const int> truth,
                    const ClassStats& stats) {
  require(predictions.size() == truth.size(), "evaluate: prediction/label length mismatch");
  require(!truth.empty(), "evaluate: empty test set");
  const std::size_t c = stats.num_classes();
  EvalReport r;
  r.confusion.assign(c * c, 0);
  r.train_counts = stats.counts;

  std::map<int, std::size_t> bin_correct;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int y = truth[i];
    const int p = predictions[i];
    require(y >= 0 && static_cast<std::size_t>(y) < c, "evaluate: true label out of range");
    require(p >= 0 && static_cast<std::size_t>(p) < c, "evaluate: prediction out of range");
    ++r.confusion[static_cast<std::size_t>(y) * c + static_cast<std::size_t>(p)];
    const int bin = stats.bins[static_cast<std::size_t>(y)];
    ++r.bin_instances[bin];
    if (y == p) {
      ++correct;
      ++bin_correct[bin];
    }
  }
  r.acc_all = static_cast<double>(correct) / static_cast<double>(truth.size());
  for (const auto& [bin, n] : r.bin_instances) {
    r.acc_bins[bin] = static_cast<double>(bin_correct[bin]) / static_cast<double>(n);
  }

  r.per_class_f1.assign(c, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    const double tp = static_cast<double>(r.confusion[k * c + k]);
    double fp = 0.0, fn = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (j == k) continue;
      fp += static_cast<double>(r.confusion[j * c + k]);
      fn += static_cast<double>(r.confusion[k * c + j]);
    }
    if (tp + fp == 0.0 || tp + fn == 0.0) continue;
    const double precision = tp / (tp + fp);
    const double recall = tp / (tp + fn);
    if (precision + recall > 0.0) {
      r.per_class_f1[k] = 2.0 * precision * recall / (precision + recall);
    }
  }
  r.macro_f1 = std::accumulate(r.per_class_f1.begin(), r.per_class_f1.end(), 0.0) /
               static_cast<double>(c);
  return r;
}

const std::array<const char*, kComparisonColumns>& ComparisonTable::column_names() {
  static const std::array<const char*, kComparisonColumns> names{
      "acc_bin1", "acc_bin2", "acc_bin3", "acc_bin4", "acc_all", "macro_f1"};
  return names;
}

ComparisonTable compare_methods(std::span<const EvalReport> reports) {
  require(!reports.empty(), "compare: no reports");
  for (const auto& r : reports) {
    if (r.dataset_digest != reports.front().dataset_digest) {
      fail(ErrorCode::InvalidArgument, "compare: reports come from different datasets (" +
                                           reports.front().dataset_digest + " vs " +
                                           r.dataset_digest + ")");
    }
  }
  ComparisonTable table;
  for (const auto& r : reports) {
    ComparisonRow row;
    row.method = r.regime == "one_stage" ? r.method + "(1-stage)" : r.method;
    for (int bin = 1; bin <= 4; ++bin) {
      if (auto it = r.acc_bins.find(bin); it != r.acc_bins.end()) {
        row.values[static_cast<std::size_t>(bin - 1)] = it->second;
      }
    }
    row.values[4] = r.acc_all;
    row.values[5] = r.macro_f1;
    table.rows.push_back(std::move(row));
  }
  if (table.rows.size() < 2) return table;
  for (std::size_t col = 0; col < kComparisonColumns; ++col) {
    std::set<double, std::greater<>> distinct;
    for (const auto& row : table.rows) {
      if (row.values[col]) distinct.insert(*row.values[col]);
    }
    if (distinct.empty()) continue;
    const double best = *distinct.begin();
    const bool has_second = distinct.size() > 1;
    const double second = has_second ? *std::next(distinct.begin()) : best;
    for (auto& row : table.rows) {
      if (!row.values[col]) continue;
      if (*row.values[col] == best) {
        row.ranks[col] = Rank::best;
      } else if (has_second && *row.values[col] == second) {
        row.ranks[col] = Rank::second;
      }
    }
  }
  return table;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* rank_name(Rank r) {
  switch (r) {
    case Rank::best: return "best";
    case Rank::second: return "second";
    case Rank::none: return "";
  }
  return "";
}

}  // namespace

std::string render_text(const ComparisonTable& table) {
  static const std::array<const char*, kComparisonColumns> headers{
      "Acc1", "Acc2", "Acc3", "Acc4", "Acc_all", "F1_m"};
  std::size_t method_width = 6;
  for (const auto& row : table.rows) method_width = std::max(method_width, row.method.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(method_width)) << "Method";
  for (const char* h : headers) out << "  " << std::right << std::setw(8) << h;
  out << '\n';
  for (const auto& row : table.rows) {
    out << std::left << std::setw(static_cast<int>(method_width)) << row.method;
    for (std::size_t col = 0; col < kComparisonColumns; ++col) {
      std::string cell = "-";
      if (row.values[col]) {
        // F1 is shown as a fraction, accuracies as percentages.
        cell = col == 5 ? fixed(*row.values[col], 4) : fixed(100.0 * *row.values[col], 2);
        if (row.ranks[col] == Rank::best) cell += '*';
        if (row.ranks[col] == Rank::second) cell += '+';
      }
      out << "  " << std::right << std::setw(8) << cell;
    }
    out << '\n';
  }
  return out.str();
}

std::string render_csv(const ComparisonTable& table) {
  std::ostringstream out;
  out << "method";
  for (const char* name : ComparisonTable::column_names()) out << ',' << name << ',' << name << "_rank";
  out << '\n';
  for (const auto& row : table.rows) {
    out << row.method;
    for (std::size_t col = 0; col < kComparisonColumns; ++col) {
      out << ',' << (row.values[col] ? exact(*row.values[col]) : "") << ','
          << rank_name(row.ranks[col]);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<F1DeltaRow> f1_delta(const EvalReport& baseline, const EvalReport& method) {
  if (baseline.dataset_digest != method.dataset_digest) {
    fail(ErrorCode::InvalidArgument, "f1delta: reports come from different datasets");
  }
  require(baseline.num_classes() == method.num_classes(), "f1delta: class count mismatch");
  std::vector<F1DeltaRow> rows;
  for (std::size_t k = 0; k < baseline.num_classes(); ++k) {
    F1DeltaRow row;
    row.class_index = k;
    row.class_name = k < baseline.class_names.size() ? baseline.class_names[k] : "";
    row.train_count = k < baseline.train_counts.size() ? baseline.train_counts[k] : 0;
    row.baseline_f1 = baseline.per_class_f1[k];
    row.method_f1 = method.per_class_f1[k];
    row.delta = row.method_f1 - row.baseline_f1;
    rows.push_back(std::move(row));
  }
  std::ranges::stable_sort(rows, [](const F1DeltaRow& a, const F1DeltaRow& b) {
    return a.train_count > b.train_count;
  });
  return rows;
}

std::string render_f1_delta_csv(const std::vector<F1DeltaRow>& rows) {
  std::ostringstream out;
  out << "class_index,class_name,train_count,baseline_f1,method_f1,delta\n";
  for (const auto& r : rows) {
    out << r.class_index << ',' << r.class_name << ',' << r.train_count << ','
        << exact(r.baseline_f1) << ',' << exact(r.method_f1) << ',' << exact(r.delta) << '\n';
  }
  return out.str();
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["format"] = "ltlab-report";
  j["version"] = 1;
  j["method"] = r.method;
  j["regime"] = r.regime;
  j["seed"] = r.seed;
  j["config_digest"] = r.config_digest;
  j["dataset_digest"] = r.dataset_digest;
  j["acc_all"] = r.acc_all;
  j["macro_f1"] = r.macro_f1;
  auto bins = nlohmann::ordered_json::object();
  for (const auto& [bin, acc] : r.acc_bins) {
    bins[std::to_string(bin)] = {{"accuracy", acc}, {"instances", r.bin_instances.at(bin)}};
  }
  j["acc_bins"] = bins;
  j["per_class_f1"] = r.per_class_f1;
  j["train_counts"] = r.train_counts;
  j["class_names"] = r.class_names;
  j["confusion"] = r.confusion;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "ltlab-report") {
      fail(ErrorCode::Parse, "report: not an ltlab report document");
    }
    EvalReport r;
    r.method = j.at("method").get<std::string>();
    r.regime = j.at("regime").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.dataset_digest = j.at("dataset_digest").get<std::string>();
    r.acc_all = j.at("acc_all").get<double>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    for (const auto& [key, value] : j.at("acc_bins").items()) {
      const int bin = std::stoi(key);
      r.acc_bins[bin] = value.at("accuracy").get<double>();
      r.bin_instances[bin] = value.at("instances").get<std::size_t>();
    }
    r.per_class_f1 = j.at("per_class_f1").get<std::vector<double>>();
    r.train_counts = j.at("train_counts").get<std::vector<std::size_t>>();
    r.class_names = j.at("class_names").get<std::vector<std::string>>();
    r.confusion = j.at("confusion").get<std::vector<std::size_t>>();
    if (r.confusion.size() != r.per_class_f1.size() * r.per_class_f1.size()) {
      fail(ErrorCode::Parse, "report: confusion matrix size does not match class count");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("report: ") + e.what());
  }
}

}  // namespace ltlab
