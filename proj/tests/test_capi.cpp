// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "ltlab/ltlab.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  ltlab_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::string(ltlab_version()).find("ltlab") == 0);
  CHECK(std::string(ltlab_status_string(LTLAB_OK)) == "ok");
  CHECK(std::strlen(ltlab_status_string(LTLAB_ERR_PARSE)) > 0);
}

TEST_CASE("formula entry points") {
  const uint64_t counts[] = {100, 4};
  double p[2];
  REQUIRE(ltlab_sampling_weights(counts, 2, 0.5, p) == LTLAB_OK);
  CHECK(p[0] == doctest::Approx(10.0 / 12.0));
  const uint64_t bad[] = {3, 0};
  CHECK(ltlab_sampling_weights(bad, 2, 0.5, p) == LTLAB_ERR_INVALID_ARGUMENT);
  CHECK(std::string(ltlab_last_error()).size() > 0);
  CHECK(ltlab_sampling_weights(nullptr, 2, 0.5, p) == LTLAB_ERR_INVALID_ARGUMENT);

  double v = 0;
  REQUIRE(ltlab_focal_loss(0.9, 2.0, &v) == LTLAB_OK);
  CHECK(v == doctest::Approx(0.001053605156578263));
  REQUIRE(ltlab_cb_weight(2, 0.9, &v) == LTLAB_OK);
  CHECK(v == doctest::Approx(0.5263157894736842));
  REQUIRE(ltlab_lr_at(1000, 1000, 100, 0.01, &v) == LTLAB_OK);
  CHECK(v == 0.0);
  CHECK(ltlab_lr_at(1001, 1000, 100, 0.01, &v) == LTLAB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config handle") {
  ltlab_config* c = nullptr;
  REQUIRE(ltlab_config_create(&c) == LTLAB_OK);
  CHECK(ltlab_config_set(c, "stage1.epochs", "4") == LTLAB_OK);
  CHECK(ltlab_config_set(c, "stage1.nope", "4") == LTLAB_ERR_INVALID_ARGUMENT);
  CHECK(std::string(ltlab_last_error()).find("stage1.nope") != std::string::npos);
  char* json = nullptr;
  REQUIRE(ltlab_config_to_json(c, &json) == LTLAB_OK);
  const auto text = take(json);
  CHECK(text.find("\"epochs\": 4") != std::string::npos);

  ltlab_config* d = nullptr;
  REQUIRE(ltlab_config_parse(text.c_str(), &d) == LTLAB_OK);
  char* da = nullptr;
  char* db = nullptr;
  REQUIRE(ltlab_config_digest(c, &da) == LTLAB_OK);
  REQUIRE(ltlab_config_digest(d, &db) == LTLAB_OK);
  CHECK(take(da) == take(db));
  ltlab_config_destroy(d);
  ltlab_config_destroy(c);
  ltlab_config_destroy(nullptr);

  ltlab_config* e = nullptr;
  CHECK(ltlab_config_parse("{\"bogus\": 1}", &e) == LTLAB_ERR_PARSE);
  CHECK(e == nullptr);
  CHECK(ltlab_config_load("/nonexistent/ltlab.json", &e) == LTLAB_ERR_IO);
}

TEST_CASE("end to end through the C interface") {
  const auto dir = fs::temp_directory_path() / "ltlab_capi";
  fs::remove_all(dir);
  fs::create_directories(dir);

  ltlab_synthetic_spec spec;
  ltlab_synthetic_spec_default(&spec);
  CHECK(spec.num_classes == 20);
  spec.num_classes = 5;
  spec.feature_dim = 3;
  spec.head_count = 200;
  spec.imbalance_factor = 20.0;
  ltlab_dataset* ds = nullptr;
  REQUIRE(ltlab_dataset_generate(&spec, &ds) == LTLAB_OK);
  size_t rows = 0, dim = 0, classes = 0;
  REQUIRE(ltlab_dataset_shape(ds, &rows, &dim, &classes) == LTLAB_OK);
  CHECK(dim == 3);
  CHECK(classes == 5);
  std::vector<uint64_t> counts(5);
  REQUIRE(ltlab_dataset_class_counts(ds, counts.data(), counts.size()) == LTLAB_OK);
  CHECK(counts[0] == 200);
  CHECK(counts[4] == 10);
  const auto data_path = (dir / "data.txt").string();
  REQUIRE(ltlab_dataset_save(ds, data_path.c_str()) == LTLAB_OK);
  ltlab_dataset* loaded = nullptr;
  REQUIRE(ltlab_dataset_load(data_path.c_str(), &loaded) == LTLAB_OK);

  ltlab_config* c = nullptr;
  REQUIRE(ltlab_config_create(&c) == LTLAB_OK);
  REQUIRE(ltlab_config_set(c, "output_dir", (dir / "run").string().c_str()) == LTLAB_OK);
  REQUIRE(ltlab_config_set(c, "data.source", "embeddings") == LTLAB_OK);
  REQUIRE(ltlab_config_set(c, "data.embeddings", data_path.c_str()) == LTLAB_OK);
  REQUIRE(ltlab_config_set(c, "methods", "baseline,ssb") == LTLAB_OK);
  REQUIRE(ltlab_config_set(c, "stage1.epochs", "3") == LTLAB_OK);
  REQUIRE(ltlab_config_set(c, "stage1.warmup_epochs", "1") == LTLAB_OK);
  REQUIRE(ltlab_config_set(c, "stage2.epochs", "2") == LTLAB_OK);
  char* manifest = nullptr;
  REQUIRE(ltlab_run_experiment(c, &manifest) == LTLAB_OK);
  CHECK(take(manifest).find("\"status\": \"ok\"") != std::string::npos);

  ltlab_model* m = nullptr;
  REQUIRE(ltlab_model_load((dir / "run" / "checkpoints" / "ssb.ckpt").string().c_str(), &m) ==
          LTLAB_OK);
  CHECK(std::string(ltlab_model_method(m)) == "ssb");
  CHECK(ltlab_model_num_classes(m) == 5);
  std::vector<int32_t> labels(rows);
  std::vector<double> scores(rows * 5);
  REQUIRE(ltlab_model_predict(m, loaded, labels.data(), scores.data(), rows) == LTLAB_OK);
  for (size_t i = 0; i < rows; ++i) {
    CHECK(labels[i] >= 0);
    CHECK(labels[i] < 5);
  }
  CHECK(ltlab_model_predict(m, loaded, labels.data(), nullptr, rows - 1) ==
        LTLAB_ERR_INVALID_ARGUMENT);
  REQUIRE(ltlab_model_save(m, (dir / "copy.ckpt").string().c_str()) == LTLAB_OK);
  ltlab_model_destroy(m);

  ltlab_report* r[2] = {nullptr, nullptr};
  REQUIRE(ltlab_report_load((dir / "run" / "reports" / "baseline.json").string().c_str(), &r[0]) ==
          LTLAB_OK);
  REQUIRE(ltlab_report_load((dir / "run" / "reports" / "ssb.json").string().c_str(), &r[1]) ==
          LTLAB_OK);
  double acc = -1;
  REQUIRE(ltlab_report_metric(r[0], "acc_all", &acc) == LTLAB_OK);
  CHECK((acc >= 0.0 && acc <= 1.0));
  CHECK(ltlab_report_metric(r[0], "top5", &acc) == LTLAB_ERR_INVALID_ARGUMENT);
  char* csv = nullptr;
  REQUIRE(ltlab_reports_render(r, 2, LTLAB_FORMAT_CSV, &csv) == LTLAB_OK);
  const auto table = take(csv);
  CHECK(table.rfind("method,", 0) == 0);
  CHECK(table.find("ssb,") != std::string::npos);
  char* delta = nullptr;
  REQUIRE(ltlab_f1_delta(r[0], r[1], &delta) == LTLAB_OK);
  CHECK(!take(delta).empty());
  ltlab_report_destroy(r[0]);
  ltlab_report_destroy(r[1]);

  ltlab_config_destroy(c);
  ltlab_dataset_destroy(loaded);
  ltlab_dataset_destroy(ds);
  fs::remove_all(dir);
}
