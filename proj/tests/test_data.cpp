// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ltlab/data.hpp"
#include "ltlab/error.hpp"

using namespace ltlab;

namespace {

SyntheticSpec small_spec(std::size_t c, std::size_t head, double imbalance) {
  SyntheticSpec s;
  s.num_classes = c;
  s.feature_dim = 4;
  s.head_count = head;
  s.imbalance_factor = imbalance;
  s.seed = 7;
  return s;
}

}  // namespace

TEST_CASE("synthetic counts follow the geometric profile") {
  CHECK(synthetic_counts(small_spec(2, 100, 100.0)) == std::vector<std::size_t>{100, 1});
  CHECK(synthetic_counts(small_spec(3, 100, 100.0)) == std::vector<std::size_t>{100, 10, 1});
}

TEST_CASE("synthetic spec rejects a smallest class that rounds to zero") {
  // 10 / 20 < 1
  CHECK_THROWS_AS(synthetic_counts(small_spec(3, 10, 20.0)), Error);
  CHECK_THROWS_AS(synthetic_counts(small_spec(1, 10, 2.0)), Error);
}

TEST_CASE("generate_synthetic is a pure function of its spec") {
  const auto spec = small_spec(3, 100, 100.0);
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  std::ostringstream sa, sb;
  write_embeddings(sa, a);
  write_embeddings(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(a.class_counts() == std::vector<std::size_t>{100, 10, 1});

  auto other = spec;
  other.seed = 8;
  CHECK_FALSE(generate_synthetic(other).features == a.features);
}

TEST_CASE("holdout shares centroids but not samples") {
  const auto spec = small_spec(3, 100, 100.0);
  const std::vector<std::size_t> per_class{400, 400, 400};
  const auto train = generate_synthetic(spec);
  const auto held = generate_holdout(spec, per_class, 1);
  CHECK(held.size() == 1200);
  // Class means of a large holdout sit near the training class-0 mean.
  std::vector<double> mean_train(4, 0.0), mean_held(4, 0.0);
  for (std::size_t i = 0; i < 100; ++i) {
    for (std::size_t d = 0; d < 4; ++d) mean_train[d] += train.features(i, d) / 100.0;
  }
  for (std::size_t i = 0; i < 400; ++i) {
    for (std::size_t d = 0; d < 4; ++d) mean_held[d] += held.features(i, d) / 400.0;
  }
  for (std::size_t d = 0; d < 4; ++d) CHECK(std::abs(mean_train[d] - mean_held[d]) < 0.5);
}

TEST_CASE("class stats use half-open decade boundaries") {
  const std::vector<std::size_t> counts{5, 10, 999, 1000, 1, 9, 99, 100};
  const auto stats = class_stats_from_counts(counts);
  CHECK(stats.groups == std::vector<int>{1, 2, 3, 4, 1, 1, 2, 3});
  CHECK(stats.bins == stats.groups);
}

TEST_CASE("class stats reject empty classes") {
  const std::vector<std::size_t> counts{5, 0, 3};
  CHECK_THROWS_AS(class_stats_from_counts(counts), Error);

  Dataset ds;
  ds.features = Matrix(2, 1);
  ds.labels = {0, 0};
  ds.class_names = {"a", "b"};
  CHECK_THROWS_AS(compute_class_stats(ds), Error);
}

TEST_CASE("class stats counts sum to the partition size") {
  const auto ds = generate_synthetic(small_spec(5, 300, 50.0));
  const auto stats = compute_class_stats(ds);
  std::size_t total = 0;
  for (auto n : stats.counts) total += n;
  CHECK(total == ds.size());
}

TEST_CASE("embedding reader accepts a well formed file") {
  std::istringstream in(
      "C=2 D=3\n"
      "cat,dog\n"
      "0,1.5,2,-3\n"
      "1,0,0,0\n"
      "1,1e-3,2.5,4,crop=1\n");
  const auto ds = read_embeddings(in);
  CHECK(ds.size() == 3);
  CHECK(ds.dim() == 3);
  CHECK(ds.class_names == std::vector<std::string>{"cat", "dog"});
  CHECK(ds.labels == std::vector<int>{0, 1, 1});
  CHECK(ds.features(2, 0) == 1e-3);
  CHECK(ds.crop == std::vector<std::uint8_t>{0, 0, 1});
}

TEST_CASE("embedding reader reports the offending row") {
  auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      (void)read_embeddings(in);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string header = "C=5 D=2\na,b,c,d,e\n";
  CHECK(message(header + "0,1,2\n7,1,2\n").find("line 4") != std::string::npos);
  CHECK(message(header + "0,1,2\n7,1,2\n").find("label 7") != std::string::npos);
  CHECK(message(header + "0,1\n").find("line 3") != std::string::npos);
  CHECK(message(header + "0,1,nan\n").find("non-finite") != std::string::npos);
  CHECK(message(header + "0,1,x\n").find("malformed") != std::string::npos);
  CHECK(message(header).find("no instances") != std::string::npos);
  CHECK(message("C=2\na,b\n0\n").find("header") != std::string::npos);
}

TEST_CASE("embedding files round trip exactly") {
  auto ds = generate_synthetic(small_spec(3, 50, 10.0));
  std::stringstream buf;
  write_embeddings(buf, ds);
  const auto back = read_embeddings(buf);
  CHECK(back.features == ds.features);
  CHECK(back.labels == ds.labels);
  CHECK(back.class_names == ds.class_names);
}

TEST_CASE("stratified split keeps classes with three or more rows in every partition") {
  const auto ds = generate_synthetic(small_spec(8, 200, 100.0));  // smallest class: 2
  SplitSpec split;
  split.seed = 3;
  const auto parts = split_dataset(ds, split);
  CHECK(parts.train.size() + parts.val.size() + parts.test.size() == ds.size());
  const auto all = ds.class_counts();
  const auto tr = parts.train.class_counts();
  const auto va = parts.val.class_counts();
  const auto te = parts.test.class_counts();
  for (std::size_t j = 0; j < all.size(); ++j) {
    CHECK(tr[j] >= 1);
    if (all[j] >= 3) {
      CHECK(va[j] >= 1);
      CHECK(te[j] >= 1);
    } else {
      CHECK(tr[j] == all[j]);
    }
  }
  const auto again = split_dataset(ds, split);
  CHECK(again.test.features == parts.test.features);
}

TEST_CASE("split spec validation") {
  SplitSpec bad;
  bad.train_fraction = 0.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.train_fraction = 1.0;
  bad.val_fraction = 0.0;
  bad.test_fraction = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
