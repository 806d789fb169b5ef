// SPDX-License-Identifier: Apache-2.0
#include "ltlab/ltlab.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "ltlab/data.hpp"
#include "ltlab/error.hpp"
#include "ltlab/experiment.hpp"
#include "ltlab/losses.hpp"
#include "ltlab/metrics.hpp"
#include "ltlab/model.hpp"
#include "ltlab/optim.hpp"
#include "ltlab/sampling.hpp"

struct ltlab_config {
  ltlab::ExperimentConfig value;
};
struct ltlab_dataset {
  ltlab::Dataset value;
};
struct ltlab_model {
  ltlab::TrainedModel value;
  std::string method;
};
struct ltlab_report {
  ltlab::EvalReport value;
};

namespace {

thread_local std::string g_last_error;

ltlab_status status_of(ltlab::ErrorCode code) {
  switch (code) {
    case ltlab::ErrorCode::InvalidArgument: return LTLAB_ERR_INVALID_ARGUMENT;
    case ltlab::ErrorCode::Io: return LTLAB_ERR_IO;
    case ltlab::ErrorCode::Parse: return LTLAB_ERR_PARSE;
    case ltlab::ErrorCode::Numeric: return LTLAB_ERR_NUMERIC;
    case ltlab::ErrorCode::State: return LTLAB_ERR_STATE;
  }
  return LTLAB_ERR_INTERNAL;
}

template <typename F>
ltlab_status guarded(F&& body) noexcept {
  try {
    body();
    return LTLAB_OK;
  } catch (const ltlab::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return LTLAB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LTLAB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LTLAB_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) ltlab::fail(ltlab::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* ltlab_version(void) { return ltlab::kToolVersion; }

const char* ltlab_last_error(void) { return g_last_error.c_str(); }

const char* ltlab_status_string(ltlab_status status) {
  switch (status) {
    case LTLAB_OK: return "ok";
    case LTLAB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case LTLAB_ERR_IO: return "i/o error";
    case LTLAB_ERR_PARSE: return "parse error";
    case LTLAB_ERR_NUMERIC: return "numeric error";
    case LTLAB_ERR_STATE: return "state error";
    case LTLAB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void ltlab_string_free(char* s) { std::free(s); }

ltlab_status ltlab_config_create(ltlab_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ltlab_config{};
  });
}

ltlab_status ltlab_config_load(const char* path, ltlab_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ltlab_config{ltlab::ExperimentConfig::load(path)};
  });
}

ltlab_status ltlab_config_parse(const char* json, ltlab_config** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new ltlab_config{ltlab::ExperimentConfig::from_json(json)};
  });
}

ltlab_status ltlab_config_set(ltlab_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    config->value.set(key, value);
  });
}

ltlab_status ltlab_config_to_json(const ltlab_config* config, char** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = dup_string(config->value.to_json());
  });
}

ltlab_status ltlab_config_digest(const ltlab_config* config, char** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = dup_string(config->value.digest());
  });
}

void ltlab_config_destroy(ltlab_config* config) { delete config; }

ltlab_status ltlab_run_experiment(const ltlab_config* config, char** manifest_json) {
  return guarded([&] {
    need(config, "config");
    const auto manifest = ltlab::run_experiment(config->value);
    if (manifest_json) *manifest_json = dup_string(manifest.to_json());
  });
}

void ltlab_synthetic_spec_default(ltlab_synthetic_spec* spec) {
  if (!spec) return;
  const ltlab::SyntheticSpec d;
  spec->num_classes = static_cast<uint32_t>(d.num_classes);
  spec->feature_dim = static_cast<uint32_t>(d.feature_dim);
  spec->head_count = d.head_count;
  spec->imbalance_factor = d.imbalance_factor;
  spec->class_separation = d.class_separation;
  spec->noise_sigma = d.noise_sigma;
  spec->seed = d.seed;
}

ltlab_status ltlab_dataset_generate(const ltlab_synthetic_spec* spec, ltlab_dataset** out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    ltlab::SyntheticSpec s;
    s.num_classes = spec->num_classes;
    s.feature_dim = spec->feature_dim;
    s.head_count = spec->head_count;
    s.imbalance_factor = spec->imbalance_factor;
    s.class_separation = spec->class_separation;
    s.noise_sigma = spec->noise_sigma;
    s.seed = spec->seed;
    *out = new ltlab_dataset{ltlab::generate_synthetic(s)};
  });
}

ltlab_status ltlab_dataset_load(const char* path, ltlab_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ltlab_dataset{ltlab::load_embeddings(path)};
  });
}

ltlab_status ltlab_dataset_save(const ltlab_dataset* dataset, const char* path) {
  return guarded([&] {
    need(dataset, "dataset");
    need(path, "path");
    ltlab::save_embeddings(path, dataset->value);
  });
}

ltlab_status ltlab_dataset_shape(const ltlab_dataset* dataset, size_t* rows, size_t* dim,
                                 size_t* classes) {
  return guarded([&] {
    need(dataset, "dataset");
    if (rows) *rows = dataset->value.size();
    if (dim) *dim = dataset->value.dim();
    if (classes) *classes = dataset->value.num_classes();
  });
}

ltlab_status ltlab_dataset_class_counts(const ltlab_dataset* dataset, uint64_t* counts,
                                        size_t capacity) {
  return guarded([&] {
    need(dataset, "dataset");
    need(counts, "counts");
    const auto c = dataset->value.class_counts();
    for (size_t j = 0; j < c.size() && j < capacity; ++j) counts[j] = c[j];
  });
}

void ltlab_dataset_destroy(ltlab_dataset* dataset) { delete dataset; }

ltlab_status ltlab_model_load(const char* path, ltlab_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto model = ltlab::load_model(path);
    auto method = ltlab::to_string(model.method);
    *out = new ltlab_model{std::move(model), std::move(method)};
  });
}

ltlab_status ltlab_model_save(const ltlab_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    ltlab::save_model(path, model->value);
  });
}

const char* ltlab_model_method(const ltlab_model* model) {
  return model ? model->method.c_str() : "";
}

size_t ltlab_model_num_classes(const ltlab_model* model) {
  return model ? model->value.num_classes() : 0;
}

ltlab_status ltlab_model_predict(const ltlab_model* model, const ltlab_dataset* dataset,
                                 int32_t* labels, double* scores, size_t rows) {
  return guarded([&] {
    need(model, "model");
    need(dataset, "dataset");
    need(labels, "labels");
    ltlab::require(rows == dataset->value.size(), "predict: rows must equal dataset size");
    const auto pred = ltlab::predict(model->value, dataset->value.features);
    for (size_t i = 0; i < rows; ++i) labels[i] = pred.labels[i];
    if (scores) std::memcpy(scores, pred.scores.values().data(), pred.scores.size() * sizeof(double));
  });
}

void ltlab_model_destroy(ltlab_model* model) { delete model; }

ltlab_status ltlab_report_load(const char* path, ltlab_report** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ltlab_report{ltlab::load_report(path)};
  });
}

ltlab_status ltlab_report_metric(const ltlab_report* report, const char* name, double* value) {
  return guarded([&] {
    need(report, "report");
    need(name, "name");
    need(value, "value");
    const auto& r = report->value;
    const std::string n = name;
    if (n == "acc_all") {
      *value = r.acc_all;
    } else if (n == "macro_f1") {
      *value = r.macro_f1;
    } else if (n.rfind("acc_bin", 0) == 0 && n.size() == 8 && n[7] >= '1' && n[7] <= '4') {
      const auto it = r.acc_bins.find(n[7] - '0');
      if (it == r.acc_bins.end()) ltlab::fail(ltlab::ErrorCode::State, "bin absent from report");
      *value = it->second;
    } else {
      ltlab::fail(ltlab::ErrorCode::InvalidArgument, "unknown metric '" + n + "'");
    }
  });
}

ltlab_status ltlab_reports_render(const ltlab_report* const* reports, size_t count,
                                  ltlab_format format, char** out) {
  return guarded([&] {
    need(reports, "reports");
    need(out, "out");
    std::vector<ltlab::EvalReport> list;
    for (size_t i = 0; i < count; ++i) {
      need(reports[i], "report");
      list.push_back(reports[i]->value);
    }
    const auto table = ltlab::compare_methods(list);
    *out = dup_string(format == LTLAB_FORMAT_CSV ? ltlab::render_csv(table)
                                                 : ltlab::render_text(table));
  });
}

ltlab_status ltlab_f1_delta(const ltlab_report* baseline, const ltlab_report* method,
                            char** csv_out) {
  return guarded([&] {
    need(baseline, "baseline");
    need(method, "method");
    need(csv_out, "csv_out");
    *csv_out = dup_string(
        ltlab::render_f1_delta_csv(ltlab::f1_delta(baseline->value, method->value)));
  });
}

void ltlab_report_destroy(ltlab_report* report) { delete report; }

ltlab_status ltlab_sampling_weights(const uint64_t* counts, size_t n, double q, double* out) {
  return guarded([&] {
    need(counts, "counts");
    need(out, "out");
    std::vector<std::size_t> c(counts, counts + n);
    const auto p = ltlab::sampling_weights(c, q);
    std::memcpy(out, p.data(), p.size() * sizeof(double));
  });
}

ltlab_status ltlab_focal_loss(double p, double gamma, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = ltlab::focal_loss(p, gamma);
  });
}

ltlab_status ltlab_cb_weight(uint64_t n, double beta, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = ltlab::cb_weight(n, beta);
  });
}

ltlab_status ltlab_lr_at(uint64_t step, uint64_t total_steps, uint64_t warmup_steps,
                         double lr_init, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = ltlab::lr_at(step, total_steps, warmup_steps, lr_init);
  });
}

}  // extern "C"
