// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>
#include <sstream>

#include "ltlab/error.hpp"
#include "ltlab/fit.hpp"
#include "ltlab/model.hpp"
#include "ltlab/random.hpp"
#include "oracles.hpp"

using namespace ltlab;

namespace {

Dataset blobs(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  Dataset ds;
  ds.class_names = {"left", "right"};
  ds.features = Matrix(2 * per_class, 2);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int y = i < per_class ? 0 : 1;
    ds.features(i, 0) = (y == 0 ? -3.0 : 3.0) + noise(rng);
    ds.features(i, 1) = noise(rng);
    ds.labels.push_back(y);
  }
  return ds;
}

Dataset small_long_tail(std::uint64_t seed) {
  SyntheticSpec s;
  s.num_classes = 6;
  s.feature_dim = 5;
  s.head_count = 1200;
  s.imbalance_factor = 200.0;
  s.seed = seed;
  return generate_synthetic(s);
}

OptimSpec quick(std::size_t epochs, std::size_t warmup) {
  OptimSpec o;
  o.epochs = epochs;
  o.warmup_epochs = warmup;
  return o;
}

double accuracy(const Prediction& p, const std::vector<int>& labels) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) ok += p.labels[i] == labels[i];
  return static_cast<double>(ok) / static_cast<double>(labels.size());
}

}  // namespace

TEST_CASE("forward: zero head gives uniform scores") {
  TrainedModel m;
  m.backbone = Backbone::identity(3);
  m.heads.push_back({Matrix(4, 3), std::vector<double>(4, 0.0)});
  m.stats = class_stats_from_counts(std::vector<std::size_t>{1, 1, 1, 1});
  Matrix x(2, 3, 1.7);
  const auto z = forward(m, x);
  for (double v : z.values()) CHECK(v == 0.0);
  const auto pred = predict(m, x);
  for (double s : pred.scores.values()) CHECK(s == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("forward: identity head passes features through") {
  TrainedModel m;
  m.backbone = Backbone::identity(3);
  Matrix w(3, 3);
  for (std::size_t k = 0; k < 3; ++k) w(k, k) = 1.0;
  m.heads.push_back({w, std::vector<double>(3, 0.0)});
  m.stats = class_stats_from_counts(std::vector<std::size_t>{1, 1, 1});
  Matrix x(2, 3);
  x(0, 1) = 4.0;
  x(1, 2) = -1.5;
  CHECK(forward(m, x) == x);
  Matrix wrong(1, 2);
  CHECK_THROWS_AS(forward(m, wrong), Error);
}

TEST_CASE("head and backbone gradients agree with central differences") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::vector<std::size_t> hidden{6, 5};
  const auto backbone = Backbone::mlp(4, hidden, 9);
  const auto head = ClassifierHead::random(3, 5, 10);
  Matrix x(5, 4);
  for (auto& v : x.values()) v = n(rng);
  const std::vector<int> labels{0, 1, 2, 1, 0};
  const std::vector<std::size_t> counts{50, 5, 2};
  for (const auto& spec : {LossSpec::cross_entropy(), LossSpec::cb_focal(0.9, 2.0)}) {
    const auto g = compute_gradients(backbone, head, x, labels, counts, spec);

    const auto fd_head = oracle::finite_difference(
        [&](const Matrix& w) {
          ClassifierHead h = head;
          h.weight = w;
          return compute_gradients(backbone, h, x, labels, counts, spec).loss;
        },
        head.weight, 1e-5);
    CHECK(oracle::max_relative_error(g.head_weight, fd_head) < 1e-5);

    const auto fd_layer = oracle::finite_difference(
        [&](const Matrix& w) {
          auto layers = backbone.layers();
          layers[0].weight = w;
          const Backbone b(4, layers);
          return compute_gradients(b, head, x, labels, counts, spec).loss;
        },
        backbone.layers()[0].weight, 1e-5);
    CHECK(oracle::max_relative_error(g.backbone[0].weight, fd_layer) < 1e-5);
  }
}

TEST_CASE("stage 1 separates linearly separable blobs") {
  const auto ds = blobs(200, 1);
  Stage1Options o;
  o.seed = 3;
  const auto m = train_stage1(ds, o);
  CHECK(m.log.size() == 30);
  CHECK(accuracy(predict(m, ds.features), ds.labels) >= 0.99);

  const std::vector<std::size_t> hidden{8};
  o.arch.hidden = hidden;
  const auto mlp = train_stage1(ds, o);
  CHECK(accuracy(predict(mlp, ds.features), ds.labels) >= 0.99);
}

TEST_CASE("stage 1 with zero epochs returns the initial model") {
  const auto ds = blobs(20, 2);
  Stage1Options o;
  o.optim = quick(0, 0);
  o.seed = 5;
  const auto m = train_stage1(ds, o);
  CHECK(m.log.empty());
  CHECK(m.heads[0] == ClassifierHead::random(2, 2, derive_seed(5, {21})));
}

TEST_CASE("training is deterministic per seed") {
  const auto ds = small_long_tail(8);
  Stage1Options o;
  o.optim = quick(3, 1);
  o.arch.hidden = {7};
  o.seed = 12;
  const auto a = train_stage1(ds, o);
  const auto b = train_stage1(ds, o);
  CHECK(a == b);
  o.seed = 13;
  CHECK_FALSE(train_stage1(ds, o) == a);
}

TEST_CASE("stage 2 keeps the backbone bit-identical for every method") {
  const auto ds = small_long_tail(6);
  Stage1Options o;
  o.optim = quick(3, 1);
  o.arch.hidden = {8};
  o.seed = 1;
  const auto base = train_stage1(ds, o);
  Stage2Options s2;
  s2.optim = quick(2, 1);
  s2.seed = 2;
  for (Method m : {Method::sqrt_samp, Method::cb_focal, Method::bags, Method::ssb}) {
    const auto out = train_stage2(base, ds, m, s2);
    CHECK(out.backbone.layers() == base.backbone.layers());
    CHECK(out.backbone.frozen());
    CHECK(out.method == m);
    CHECK(out.log.size() == 2);
  }
  CHECK_THROWS_AS(train_stage2(base, ds, Method::baseline, s2), Error);
}

TEST_CASE("stage 2 ssb keeps the stage-1 head and adds the sqrt head") {
  const auto ds = small_long_tail(7);
  Stage1Options o;
  o.optim = quick(2, 1);
  o.seed = 4;
  const auto base = train_stage1(ds, o);
  Stage2Options s2;
  s2.optim = quick(2, 1);
  s2.seed = 9;
  const auto ssb = train_stage2(base, ds, Method::ssb, s2);
  REQUIRE(ssb.heads.size() == 2);
  CHECK(ssb.heads[0] == base.heads[0]);
  CHECK(ssb.heads[1] == train_stage2(base, ds, Method::sqrt_samp, s2).heads[0]);
  REQUIRE(ssb.layout);
  CHECK_FALSE(ssb.layout->has_background_group);
}

TEST_CASE("stage 2 on an identity backbone equals direct linear training") {
  const auto ds = small_long_tail(3);
  Stage1Options o;
  o.optim = quick(2, 1);
  o.seed = 1;
  const auto base = train_stage1(ds, o);
  REQUIRE(base.backbone.is_identity());
  Stage2Options s2;
  s2.optim = quick(3, 1);
  s2.seed = 77;
  const auto staged = train_stage2(base, ds, Method::sqrt_samp, s2);

  Backbone id = Backbone::identity(ds.dim());
  auto head = ClassifierHead::random(ds.num_classes(), ds.dim(), derive_seed(77, {30}));
  const auto counts = ds.class_counts();
  const FitOptions fit{0.5, LossSpec::cross_entropy(), s2.optim, derive_seed(77, {31})};
  const auto log = fit_classifier(id, false, head, ds, counts, fit);
  CHECK(staged.heads[0] == head);
  CHECK(staged.log == log);
}

TEST_CASE("argmax tie-break and scale invariance") {
  const std::vector<double> a{0.2, 0.7, 0.1};
  CHECK(argmax(a) == 1);
  const std::vector<double> tie{0.5, 0.5};
  CHECK(argmax(tie) == 0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> s(5);
    for (auto& v : s) v = std::round(u(rng) * 4.0) / 4.0;  // frequent ties
    auto scaled = s;
    const double k = 0.1 + 10.0 * u(rng);
    for (auto& v : scaled) v *= k;
    CHECK(argmax(s) == argmax(scaled));
  }
}

TEST_CASE("method tags") {
  for (Method m : all_methods()) CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("mixup"), Error);
}

TEST_CASE("checkpoints round trip bit-exactly") {
  const auto ds = small_long_tail(2);
  Stage1Options o;
  o.optim = quick(2, 1);
  o.arch.hidden = {4, 3};
  o.seed = 8;
  const auto base = train_stage1(ds, o);
  Stage2Options s2;
  s2.optim = quick(2, 1);
  std::vector<TrainedModel> models{base};
  for (Method m : {Method::sqrt_samp, Method::cb_focal, Method::bags, Method::ssb}) {
    models.push_back(train_stage2(base, ds, m, s2));
  }
  for (const auto& m : models) {
    std::stringstream buf;
    write_model(buf, m);
    const auto bytes = buf.str();
    const auto back = read_model(buf);
    CHECK(back == m);
    std::stringstream again;
    write_model(again, back);
    CHECK(again.str() == bytes);
    CHECK(predict(back, ds.features).scores == predict(m, ds.features).scores);
  }

  std::stringstream junk("not a checkpoint");
  CHECK_THROWS_AS(read_model(junk), Error);
  std::stringstream buf;
  write_model(buf, base);
  auto bytes = buf.str();
  bytes.resize(bytes.size() / 2);
  std::stringstream truncated(bytes);
  CHECK_THROWS_AS(read_model(truncated), Error);
}

TEST_CASE("bags model predicts with remapped scores") {
  Dataset ds = small_long_tail(5);
  ds.background_class = 0;
  Stage1Options o;
  o.optim = quick(3, 1);
  const auto base = train_stage1(ds, o);
  Stage2Options s2;
  s2.optim = quick(3, 1);
  const auto bags = train_stage2(base, ds, Method::bags, s2);
  REQUIRE(bags.layout);
  CHECK(bags.layout->has_background_group);
  CHECK(bags.head_groups.front() == 0);
  const auto pred = predict(bags, ds.features);
  CHECK(pred.scores.cols() == ds.num_classes());
  CHECK_THROWS_AS(forward(bags, ds.features), Error);
}
