// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "ltlab/error.hpp"
#include "ltlab/metrics.hpp"
#include "oracles.hpp"

using namespace ltlab;

namespace {

struct Case {
  std::vector<std::size_t> counts;
  std::vector<int> truth;
  std::vector<int> pred;
};

Case random_case(std::mt19937_64& rng) {
  Case c;
  std::uniform_int_distribution<std::size_t> n(1, 3000);
  std::uniform_int_distribution<std::size_t> classes(2, 8);
  c.counts.resize(classes(rng));
  for (auto& v : c.counts) v = n(rng);
  std::uniform_int_distribution<int> label(0, static_cast<int>(c.counts.size()) - 1);
  std::bernoulli_distribution right(0.6);
  const std::size_t m = 5 + rng() % 60;
  for (std::size_t i = 0; i < m; ++i) {
    const int y = label(rng);
    c.truth.push_back(y);
    c.pred.push_back(right(rng) ? y : label(rng));
  }
  return c;
}

EvalReport make_report(const std::string& method, double acc_all, std::uint64_t seed) {
  EvalReport r;
  r.method = method;
  r.regime = "two_stage";
  r.acc_all = acc_all;
  r.macro_f1 = acc_all / 2.0;
  r.acc_bins = {{1, acc_all / 3.0}, {4, 1.0 - acc_all}};
  r.per_class_f1 = {0.5, 0.25};
  r.seed = seed;
  r.dataset_digest = "d";
  return r;
}

}  // namespace

TEST_CASE("evaluate: all correct") {
  const auto stats = class_stats_from_counts(std::vector<std::size_t>{2000, 30, 4});
  const std::vector<int> y{0, 1, 2, 2, 0};
  const auto r = evaluate(y, y, stats);
  CHECK(r.acc_all == 1.0);
  CHECK(r.macro_f1 == 1.0);
  CHECK(r.acc_bins.size() == 3);
  for (const auto& [bin, acc] : r.acc_bins) CHECK(acc == 1.0);
  CHECK_FALSE(r.acc_bins.contains(3));
}

TEST_CASE("evaluate: two-class hand example") {
  const auto stats = class_stats_from_counts(std::vector<std::size_t>{5, 5});
  // true A predicted A; true B predicted A; true B predicted B
  const std::vector<int> truth{0, 1, 1}, pred{0, 0, 1};
  const auto r = evaluate(pred, truth, stats);
  CHECK(r.per_class_f1[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.per_class_f1[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.macro_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.confusion_at(0, 0) == 1);
  CHECK(r.confusion_at(1, 0) == 1);
  CHECK(r.confusion_at(1, 1) == 1);
  CHECK(r.confusion_at(0, 1) == 0);
}

TEST_CASE("evaluate: bins come from training counts") {
  const auto stats = class_stats_from_counts(std::vector<std::size_t>{500, 5});
  const std::vector<int> truth{0, 0, 1}, pred{0, 1, 1};
  const auto r = evaluate(pred, truth, stats);
  CHECK(r.bin_instances.at(3) == 2);
  CHECK(r.acc_bins.at(3) == 0.5);
  CHECK(r.acc_bins.at(1) == 1.0);
}

TEST_CASE("evaluate: absent classes score zero and errors are raised") {
  const auto stats = class_stats_from_counts(std::vector<std::size_t>{5, 5, 5});
  const std::vector<int> truth{0, 0}, pred{0, 0};
  const auto r = evaluate(pred, truth, stats);
  CHECK(r.per_class_f1 == std::vector<double>{1.0, 0.0, 0.0});
  const std::vector<int> empty;
  CHECK_THROWS_AS(evaluate(empty, empty, stats), Error);
  const std::vector<int> bad{3, 0};
  CHECK_THROWS_AS(evaluate(bad, truth, stats), Error);
  const std::vector<int> shorter{0};
  CHECK_THROWS_AS(evaluate(shorter, truth, stats), Error);
}

TEST_CASE("evaluate: properties against the per-instance oracle") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 200; ++t) {
    const auto c = random_case(rng);
    const auto r = evaluate(c.pred, c.truth, class_stats_from_counts(c.counts));
    const auto ref = oracle::evaluate(c.pred, c.truth, c.counts);
    CHECK(std::abs(r.acc_all - ref.acc_all) < 1e-12);
    CHECK(std::abs(r.macro_f1 - ref.macro_f1) < 1e-12);
    for (int b = 1; b <= 4; ++b) {
      if (std::isnan(ref.acc_bin[static_cast<std::size_t>(b)])) {
        CHECK_FALSE(r.acc_bins.contains(b));
      } else {
        CHECK(std::abs(r.acc_bins.at(b) - ref.acc_bin[static_cast<std::size_t>(b)]) < 1e-12);
      }
    }
    // Reconciliation.
    double weighted = 0.0;
    std::size_t total = 0;
    for (const auto& [b, acc] : r.acc_bins) {
      weighted += acc * static_cast<double>(r.bin_instances.at(b));
      total += r.bin_instances.at(b);
    }
    CHECK(total == c.truth.size());
    CHECK(std::abs(weighted / static_cast<double>(total) - r.acc_all) < 1e-12);
    const double mean = std::accumulate(r.per_class_f1.begin(), r.per_class_f1.end(), 0.0) /
                        static_cast<double>(r.per_class_f1.size());
    CHECK(std::abs(mean - r.macro_f1) < 1e-12);
    CHECK(r.macro_f1 <= *std::ranges::max_element(r.per_class_f1));
    for (double f : r.per_class_f1) CHECK((f >= 0.0 && f <= 1.0));
    // Confusion sums.
    const std::size_t k = c.counts.size();
    std::size_t trace = 0;
    for (std::size_t a = 0; a < k; ++a) {
      std::size_t row = 0, col = 0;
      for (std::size_t b = 0; b < k; ++b) {
        row += r.confusion_at(a, b);
        col += r.confusion_at(b, a);
      }
      CHECK(row == static_cast<std::size_t>(std::ranges::count(c.truth, static_cast<int>(a))));
      CHECK(col == static_cast<std::size_t>(std::ranges::count(c.pred, static_cast<int>(a))));
      trace += r.confusion_at(a, a);
    }
    CHECK(static_cast<double>(trace) / static_cast<double>(c.truth.size()) == r.acc_all);

    // Relabeling invariance of macro F1.
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> counts2(k);
    for (std::size_t a = 0; a < k; ++a) counts2[static_cast<std::size_t>(perm[a])] = c.counts[a];
    std::vector<int> truth2, pred2;
    for (int y : c.truth) truth2.push_back(perm[static_cast<std::size_t>(y)]);
    for (int y : c.pred) pred2.push_back(perm[static_cast<std::size_t>(y)]);
    const auto r2 = evaluate(pred2, truth2, class_stats_from_counts(counts2));
    CHECK(std::abs(r2.macro_f1 - r.macro_f1) < 1e-12);
  }
}

TEST_CASE("compare: flags") {
  const std::vector<EvalReport> one{make_report("baseline", 0.8, 1)};
  const auto single = compare_methods(one);
  REQUIRE(single.rows.size() == 1);
  for (Rank r : single.rows[0].ranks) CHECK(r == Rank::none);

  const std::vector<EvalReport> two{make_report("baseline", 0.8, 1), make_report("ssb", 0.9, 1)};
  const auto t = compare_methods(two);
  std::size_t best = 0;
  for (const auto& row : t.rows) best += row.ranks[4] == Rank::best;
  CHECK(best == 1);
  CHECK(t.rows[1].ranks[4] == Rank::best);
  CHECK(t.rows[0].ranks[4] == Rank::second);

  auto other = two;
  other[1].dataset_digest = "e";
  CHECK_THROWS_AS(compare_methods(other), Error);

  auto one_stage = two;
  one_stage[1].regime = "one_stage";
  CHECK(compare_methods(one_stage).rows[1].method == "ssb(1-stage)");
}

TEST_CASE("compare: flags agree with an independent re-sort") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> grid(0, 6);
  for (int t = 0; t < 100; ++t) {
    std::vector<EvalReport> reports;
    const std::size_t n = 2 + static_cast<std::size_t>(t % 5);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = make_report("m" + std::to_string(i), grid(rng) / 6.0, 1);
      r.macro_f1 = grid(rng) / 6.0;
      if (grid(rng) == 0) r.acc_bins.erase(1);
      reports.push_back(r);
    }
    const auto table = compare_methods(reports);
    for (std::size_t col = 0; col < kComparisonColumns; ++col) {
      std::set<double, std::greater<>> distinct;
      for (const auto& row : table.rows) {
        if (row.values[col]) distinct.insert(*row.values[col]);
      }
      std::vector<double> order(distinct.begin(), distinct.end());
      for (const auto& row : table.rows) {
        Rank expect = Rank::none;
        if (row.values[col] && !order.empty() && *row.values[col] == order[0]) expect = Rank::best;
        if (row.values[col] && order.size() > 1 && *row.values[col] == order[1]) {
          expect = Rank::second;
        }
        CHECK(row.ranks[col] == expect);
      }
    }
  }
}

TEST_CASE("compare: rendering") {
  std::vector<EvalReport> reports{make_report("baseline", 0.8, 1), make_report("ssb", 0.9, 1)};
  reports[0].acc_bins.erase(1);
  const auto table = compare_methods(reports);
  const auto csv = render_csv(table);
  CHECK(csv.rfind("method,acc_bin1,acc_bin1_rank,", 0) == 0);
  CHECK(csv.find("\nbaseline,,,") != std::string::npos);
  const auto text = render_text(table);
  CHECK(text.find("ssb") != std::string::npos);
  CHECK(text.find('*') != std::string::npos);
  CHECK(render_csv(compare_methods(reports)) == csv);
}

TEST_CASE("f1 delta") {
  EvalReport base;
  base.per_class_f1 = {0.5, 0.25, 0.0};
  base.train_counts = {10, 300, 10};
  base.class_names = {"a", "b", "c"};
  base.dataset_digest = "d";
  EvalReport m = base;
  m.per_class_f1 = {0.75, 0.125, 0.5};

  const auto self = f1_delta(base, base);
  CHECK(self.size() == 3);
  for (const auto& row : self) CHECK(row.delta == 0.0);

  const auto rows = f1_delta(base, m);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].class_index == 1);
  CHECK(rows[1].class_index == 0);
  CHECK(rows[2].class_index == 2);
  for (const auto& row : rows) {
    CHECK(row.delta == m.per_class_f1[row.class_index] - base.per_class_f1[row.class_index]);
  }
  const auto csv = render_f1_delta_csv(rows);
  CHECK(std::ranges::count(csv, '\n') == 4);

  m.dataset_digest = "x";
  CHECK_THROWS_AS(f1_delta(base, m), Error);
}

TEST_CASE("reports round trip through json") {
  std::mt19937_64 rng(3);
  const auto c = random_case(rng);
  auto r = evaluate(c.pred, c.truth, class_stats_from_counts(c.counts));
  r.method = "ssb";
  r.regime = "two_stage";
  r.seed = 99;
  r.config_digest = "abc";
  r.dataset_digest = "def";
  r.class_names.assign(c.counts.size(), "x");
  const auto text = report_to_json(r);
  const auto back = report_from_json(text);
  CHECK(back == r);
  CHECK(report_to_json(back) == text);
  CHECK_THROWS_AS(report_from_json("{}"), Error);
  CHECK_THROWS_AS(report_from_json("not json"), Error);
}
