// SPDX-License-Identifier: Apache-2.0
#include "ltlab/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "ltlab/digest.hpp"
#include "ltlab/error.hpp"
#include "ltlab/random.hpp"

namespace ltlab {

void Dataset::validate() const {
  require(!class_names.empty(), "dataset has no classes");
  require(!labels.empty(), "no instances");
  require(features.cols() >= 1, "feature dimension must be >= 1");
  require(features.rows() == labels.size(), "feature rows and labels disagree in length");
  require(crop.empty() || crop.size() == labels.size(), "crop flags disagree in length");
  const auto c = static_cast<int>(class_names.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < c,
            "row " + std::to_string(i) + ": label " + std::to_string(labels[i]) +
                " out of range for C=" + std::to_string(c));
  }
  for (double v : features.values()) require(std::isfinite(v), "non-finite feature value");
  if (background_class) {
    require(*background_class >= 0 && *background_class < c, "background class out of range");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features = gather_rows(features, rows);
  out.labels.reserve(rows.size());
  for (auto r : rows) out.labels.push_back(labels[r]);
  if (!crop.empty()) {
    for (auto r : rows) out.crop.push_back(crop[r]);
  }
  out.class_names = class_names;
  out.background_class = background_class;
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes(), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

int count_decade(std::size_t n) {
  require(n >= 1, "count_decade: count must be >= 1");
  if (n < 10) return 1;
  if (n < 100) return 2;
  if (n < 1000) return 3;
  return 4;
}

ClassStats class_stats_from_counts(std::span<const std::size_t> counts) {
  require(!counts.empty(), "class stats: no classes");
  ClassStats stats;
  stats.counts.assign(counts.begin(), counts.end());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) {
      fail(ErrorCode::InvalidArgument,
           "class " + std::to_string(j) + " has zero training instances");
    }
    // Bins and groups share the same half-open decade boundaries.
    const int d = count_decade(counts[j]);
    stats.bins.push_back(d);
    stats.groups.push_back(d);
  }
  return stats;
}

ClassStats compute_class_stats(const Dataset& dataset) {
  require(dataset.size() > 0, "class stats: empty dataset");
  const auto counts = dataset.class_counts();
  return class_stats_from_counts(counts);
}

void SyntheticSpec::validate() const {
  require(num_classes >= 2, "synthetic: need at least 2 classes");
  require(feature_dim >= 1, "synthetic: feature_dim must be >= 1");
  require(std::isfinite(imbalance_factor) && imbalance_factor > 1.0,
          "synthetic: imbalance_factor must be > 1");
  require(static_cast<double>(head_count) / imbalance_factor >= 1.0,
          "synthetic: head_count / imbalance_factor must be >= 1");
  require(std::isfinite(class_separation) && class_separation > 0.0,
          "synthetic: class_separation must be > 0");
  require(std::isfinite(noise_sigma) && noise_sigma > 0.0, "synthetic: noise_sigma must be > 0");
}

std::vector<std::size_t> synthetic_counts(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<std::size_t> counts(spec.num_classes);
  const double last = static_cast<double>(spec.num_classes - 1);
  for (std::size_t j = 0; j < spec.num_classes; ++j) {
    const double n = static_cast<double>(spec.head_count) *
                     std::pow(spec.imbalance_factor, -static_cast<double>(j) / last);
    counts[j] = static_cast<std::size_t>(std::llround(n));
    require(counts[j] >= 1, "synthetic: class " + std::to_string(j) + " rounds to 0 instances");
  }
  return counts;
}

namespace {

Matrix class_centroids(const SyntheticSpec& spec) {
  Rng rng(derive_seed(spec.seed, {1}));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix centroids(spec.num_classes, spec.feature_dim);
  for (std::size_t j = 0; j < spec.num_classes; ++j) {
    auto row = centroids.row(j);
    double norm = 0.0;
    do {
      for (auto& v : row) v = normal(rng);
      norm = std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
    } while (norm == 0.0);
    for (auto& v : row) v *= spec.class_separation / norm;
  }
  return centroids;
}

std::vector<std::string> default_class_names(std::size_t c) {
  std::vector<std::string> names;
  names.reserve(c);
  for (std::size_t j = 0; j < c; ++j) names.push_back("class_" + std::to_string(j));
  return names;
}

Dataset sample_classes(const SyntheticSpec& spec, std::span<const std::size_t> per_class,
                       std::uint64_t stream_seed) {
  require(per_class.size() == spec.num_classes, "synthetic: per-class count length mismatch");
  const Matrix centroids = class_centroids(spec);
  const std::size_t total = std::accumulate(per_class.begin(), per_class.end(), std::size_t{0});
  Rng rng(stream_seed);
  std::normal_distribution<double> normal(0.0, spec.noise_sigma);

  Dataset out;
  out.features = Matrix(total, spec.feature_dim);
  out.labels.reserve(total);
  out.class_names = default_class_names(spec.num_classes);
  std::size_t r = 0;
  for (std::size_t j = 0; j < spec.num_classes; ++j) {
    const auto centroid = centroids.row(j);
    for (std::size_t i = 0; i < per_class[j]; ++i, ++r) {
      auto row = out.features.row(r);
      for (std::size_t d = 0; d < spec.feature_dim; ++d) row[d] = centroid[d] + normal(rng);
      out.labels.push_back(static_cast<int>(j));
    }
  }
  return out;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  const auto counts = synthetic_counts(spec);
  return sample_classes(spec, counts, derive_seed(spec.seed, {2}));
}

Dataset generate_holdout(const SyntheticSpec& spec, std::span<const std::size_t> per_class,
                         std::uint64_t stream) {
  spec.validate();
  return sample_classes(spec, per_class, derive_seed(spec.seed, {3, stream}));
}

void SplitSpec::validate() const {
  for (double f : {train_fraction, val_fraction, test_fraction}) {
    require(f > 0.0 && f < 1.0, "split: each fraction must lie in (0,1)");
  }
  require(std::abs(train_fraction + val_fraction + test_fraction - 1.0) < 1e-9,
          "split: fractions must sum to 1");
}

DataSplit split_dataset(const Dataset& dataset, const SplitSpec& spec) {
  spec.validate();
  dataset.validate();
  Rng rng(derive_seed(spec.seed, {4}));
  std::vector<std::size_t> train, val, test;

  auto cut = [&](std::vector<std::size_t>& idx, bool keep_small_in_train) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n = idx.size();
    if (keep_small_in_train && n < 3) {
      train.insert(train.end(), idx.begin(), idx.end());
      return;
    }
    auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.val_fraction));
    auto n_test =
        static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.test_fraction));
    if (keep_small_in_train) {
      n_val = std::max<std::size_t>(n_val, 1);
      n_test = std::max<std::size_t>(n_test, 1);
      while (n_val + n_test > n - 1) {
        if (n_val >= n_test) --n_val; else --n_test;
      }
    }
    const std::size_t n_train = n - n_val - n_test;
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    val.insert(val.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train),
               idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                idx.end());
  };

  if (spec.stratified) {
    std::vector<std::vector<std::size_t>> by_class(dataset.num_classes());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
    }
    for (auto& idx : by_class) cut(idx, true);
  } else {
    std::vector<std::size_t> idx(dataset.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    cut(idx, false);
  }
  std::ranges::sort(train);
  std::ranges::sort(val);
  std::ranges::sort(test);
  return {dataset.subset(train), dataset.subset(val), dataset.subset(test)};
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  fail(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + what);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

Dataset read_embeddings(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) fail(ErrorCode::Parse, "embedding file: missing header");
  ++line_no;
  long long c = -1, d = -1;
  {
    std::istringstream header{std::string(trim(line))};
    std::string tok;
    while (header >> tok) {
      if (tok.rfind("C=", 0) == 0 && parse_number(std::string_view(tok).substr(2), c)) continue;
      if (tok.rfind("D=", 0) == 0 && parse_number(std::string_view(tok).substr(2), d)) continue;
      parse_fail(line_no, "malformed header token '" + tok + "'");
    }
  }
  if (c < 1 || d < 1) parse_fail(line_no, "header must declare C=<int> D=<int> with both >= 1");

  if (!std::getline(in, line)) parse_fail(line_no + 1, "missing class-name line");
  ++line_no;
  Dataset ds;
  for (auto name : split_commas(trim(line))) ds.class_names.emplace_back(name);
  if (ds.class_names.size() != static_cast<std::size_t>(c)) {
    parse_fail(line_no, "expected " + std::to_string(c) + " class names, found " +
                            std::to_string(ds.class_names.size()));
  }

  std::vector<double> values;
  bool any_crop = false;
  std::vector<std::uint8_t> crop;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    auto fields = split_commas(body);
    std::uint8_t crop_flag = 0;
    if (!fields.empty() && fields.back().rfind("crop=", 0) == 0) {
      const auto v = fields.back().substr(5);
      if (v == "1") {
        crop_flag = 1;
      } else if (v != "0") {
        parse_fail(line_no, "crop flag must be 0 or 1");
      }
      any_crop = true;
      fields.pop_back();
    }
    if (fields.size() != static_cast<std::size_t>(d) + 1) {
      parse_fail(line_no, "expected " + std::to_string(d + 1) + " fields, found " +
                              std::to_string(fields.size()));
    }
    long long label = -1;
    if (!parse_number(fields[0], label)) parse_fail(line_no, "malformed label");
    if (label < 0 || label >= c) {
      parse_fail(line_no, "label " + std::to_string(label) + " out of range for C=" +
                              std::to_string(c));
    }
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double v = 0.0;
      if (!parse_number(fields[k], v)) parse_fail(line_no, "malformed feature value");
      if (!std::isfinite(v)) parse_fail(line_no, "non-finite feature value");
      values.push_back(v);
    }
    ds.labels.push_back(static_cast<int>(label));
    crop.push_back(crop_flag);
  }
  if (ds.labels.empty()) fail(ErrorCode::Parse, "embedding file: no instances");
  ds.features = Matrix(ds.labels.size(), static_cast<std::size_t>(d));
  std::ranges::copy(values, ds.features.values().begin());
  if (any_crop) ds.crop = std::move(crop);
  return ds;
}

Dataset load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open embedding file " + path.string());
  return read_embeddings(in);
}

void write_embeddings(std::ostream& out, const Dataset& dataset) {
  dataset.validate();
  out << "C=" << dataset.num_classes() << " D=" << dataset.dim() << '\n';
  for (std::size_t j = 0; j < dataset.num_classes(); ++j) {
    if (j) out << ',';
    out << dataset.class_names[j];
  }
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.labels[i];
    for (double v : dataset.features.row(i)) {
      // Shortest representation that round-trips exactly.
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    if (!dataset.crop.empty()) out << ",crop=" << static_cast<int>(dataset.crop[i]);
    out << '\n';
  }
}

void save_embeddings(const std::filesystem::path& path, const Dataset& dataset) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write embedding file " + path.string());
  write_embeddings(out, dataset);
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

std::string dataset_digest(const Dataset& dataset) {
  Fnv1a h;
  h.update_u64(dataset.size());
  h.update_u64(dataset.dim());
  for (const auto& name : dataset.class_names) {
    h.update(name);
    h.update_u64(0);
  }
  for (int y : dataset.labels) h.update_u64(static_cast<std::uint64_t>(y));
  for (double v : dataset.features.values()) h.update_f64(v);
  return h.hex();
}

}  // namespace ltlab
