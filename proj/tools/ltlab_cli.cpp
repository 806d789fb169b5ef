// SPDX-License-Identifier: Apache-2.0
// Command-line front end; talks to the library only through the C API.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ltlab/ltlab.h"

namespace fs = std::filesystem;

namespace {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(ltlab_status status, const std::string& what) {
  if (status != LTLAB_OK) {
    throw CliError(what + ": " + ltlab_status_string(status) + ": " + ltlab_last_error());
  }
}

struct StringDeleter {
  void operator()(char* s) const { ltlab_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct ConfigDeleter {
  void operator()(ltlab_config* c) const { ltlab_config_destroy(c); }
};
struct ReportDeleter {
  void operator()(ltlab_report* r) const { ltlab_report_destroy(r); }
};
using ReportPtr = std::unique_ptr<ltlab_report, ReportDeleter>;

// Config overrides in the order they appear on the command line.
struct ExperimentFlags {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  void add(CLI::App* app, bool with_methods) {
    app->add_option("--config", config_path, "JSON experiment config; flags override it");
    auto bind = [&](const char* flag, const char* key, const char* help) {
      app->add_option_function<std::string>(
          flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
    };
    bind("--seed", "seed", "Experiment seed");
    bind("--out", "output_dir", "Output directory");
    bind("--jobs", "jobs", "Concurrent stage-2 runs");
    bind("--embeddings", "data.embeddings", "Embedding file (switches the data source)");
    bind("--background-class", "data.background_class", "Background class index");
    bind("--classes", "data.synthetic.num_classes", "Synthetic: number of classes");
    bind("--dim", "data.synthetic.feature_dim", "Synthetic: feature dimension");
    bind("--head-count", "data.synthetic.head_count", "Synthetic: largest class size");
    bind("--imbalance", "data.synthetic.imbalance_factor", "Synthetic: imbalance factor");
    bind("--separation", "data.synthetic.class_separation", "Synthetic: centroid scale");
    bind("--noise", "data.synthetic.noise_sigma", "Synthetic: noise sigma");
    bind("--hidden", "arch.hidden", "Backbone hidden widths, comma separated (empty: identity)");
    bind("--stage1-epochs", "stage1.epochs", "Stage-1 epochs");
    bind("--stage2-epochs", "stage2.epochs", "Stage-2 epochs");
    bind("--stage1-lr", "stage1.lr_init", "Stage-1 initial learning rate");
    bind("--stage2-lr", "stage2.lr_init", "Stage-2 initial learning rate");
    bind("--batch-size", "stage1.batch_size", "Stage-1 batch size");
    bind("--focal-gamma", "loss.focal_gamma", "Focal gamma");
    bind("--cb-beta", "loss.cb_beta", "Class-balanced beta");
    bind("--bags-beta", "loss.bags_beta", "BAGS others undersampling factor");
    if (with_methods) bind("--methods", "methods", "Comma-separated method list");
    app->add_flag_callback("--one-stage", [this] { overrides.emplace_back("one_stage", "true"); },
                           "Train sqrt_samp and cb_focal in a single stage");
    app->add_flag_callback("--independent-stage1",
                           [this] { overrides.emplace_back("shared_stage1", "false"); },
                           "Train a separate stage-1 model per method");
    app->add_flag_callback("--no-plots", [this] { overrides.emplace_back("emit_plots", "false"); },
                           "Skip plot data files");
    app->add_option_function<std::vector<std::string>>(
           "--set",
           [this](const std::vector<std::string>& kvs) {
             for (const auto& kv : kvs) {
               const auto eq = kv.find('=');
               if (eq == std::string::npos) throw CliError("--set expects key=value, got " + kv);
               overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
             }
           },
           "Override any config key, e.g. --set stage2.warmup_epochs=0")
        ->allow_extra_args(false);
  }

  std::unique_ptr<ltlab_config, ConfigDeleter> build() const {
    ltlab_config* raw = nullptr;
    if (config_path.empty()) {
      check(ltlab_config_create(&raw), "config");
    } else {
      check(ltlab_config_load(config_path.c_str(), &raw), "config " + config_path);
    }
    std::unique_ptr<ltlab_config, ConfigDeleter> cfg(raw);
    for (const auto& [key, value] : overrides) {
      if (key == "data.embeddings") {
        check(ltlab_config_set(cfg.get(), "data.source", "embeddings"), "--embeddings");
      }
      check(ltlab_config_set(cfg.get(), key.c_str(), value.c_str()), "option " + key);
    }
    return cfg;
  }
};

void run(const ltlab_config* cfg) {
  char* manifest = nullptr;
  const auto status = ltlab_run_experiment(cfg, &manifest);
  OwnedString owned(manifest);
  check(status, "run");
  std::cout << manifest;
}

std::vector<ReportPtr> load_reports(const std::vector<std::string>& inputs) {
  std::vector<std::string> paths;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<std::string> found;
      for (const auto& entry : fs::directory_iterator(in)) {
        if (entry.path().extension() == ".json") found.push_back(entry.path().string());
      }
      std::sort(found.begin(), found.end());
      paths.insert(paths.end(), found.begin(), found.end());
    } else {
      paths.push_back(in);
    }
  }
  if (paths.empty()) throw CliError("no report files found");
  std::vector<ReportPtr> reports;
  for (const auto& p : paths) {
    ltlab_report* r = nullptr;
    check(ltlab_report_load(p.c_str(), &r), "report " + p);
    reports.emplace_back(r);
  }
  return reports;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw CliError("cannot write " + out_path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-tail classification lab"};
  app.set_version_flag("--version", std::string(ltlab_version()));
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Write a synthetic long-tail dataset (embedding format)");
  ltlab_synthetic_spec spec;
  ltlab_synthetic_spec_default(&spec);
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output embedding file")->required();
  gen->add_option("--classes", spec.num_classes, "Number of classes")->capture_default_str();
  gen->add_option("--dim", spec.feature_dim, "Feature dimension")->capture_default_str();
  gen->add_option("--head-count", spec.head_count, "Largest class size")->capture_default_str();
  gen->add_option("--imbalance", spec.imbalance_factor, "Largest/smallest class ratio")
      ->capture_default_str();
  gen->add_option("--separation", spec.class_separation, "Centroid scale")->capture_default_str();
  gen->add_option("--noise", spec.noise_sigma, "Noise sigma")->capture_default_str();
  gen->add_option("--seed", spec.seed, "Seed")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train and evaluate a single method");
  ExperimentFlags train_flags;
  std::string train_method;
  train->add_option("--method", train_method, "baseline|sqrt_samp|cb_focal|bags|ssb")->required();
  train_flags.add(train, false);

  // compare
  auto* compare = app.add_subcommand("compare", "Train and evaluate the full method matrix");
  ExperimentFlags compare_flags;
  compare_flags.add(compare, true);

  // report
  auto* report = app.add_subcommand("report", "Render comparison tables from stored reports");
  std::vector<std::string> report_inputs;
  std::string report_format = "text";
  std::string report_out;
  report->add_option("reports", report_inputs, "Report files or directories")->required();
  report->add_option("--format", report_format, "text or csv")
      ->check(CLI::IsMember({"text", "csv"}));
  report->add_option("--out", report_out, "Write to file instead of stdout");

  // f1delta
  auto* f1delta = app.add_subcommand("f1delta", "Per-class F1 change of a method over baseline");
  std::string delta_baseline, delta_method, delta_out;
  f1delta->add_option("--baseline", delta_baseline, "Baseline report")->required();
  f1delta->add_option("--method", delta_method, "Method report")->required();
  f1delta->add_option("--out", delta_out, "Write CSV to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) {
      ltlab_dataset* raw = nullptr;
      check(ltlab_dataset_generate(&spec, &raw), "gen");
      const std::unique_ptr<ltlab_dataset, void (*)(ltlab_dataset*)> ds(raw, ltlab_dataset_destroy);
      check(ltlab_dataset_save(ds.get(), gen_out.c_str()), "gen " + gen_out);
      size_t rows = 0, dim = 0, classes = 0;
      check(ltlab_dataset_shape(ds.get(), &rows, &dim, &classes), "gen");
      std::cout << "wrote " << rows << " rows, C=" << classes << " D=" << dim << " to " << gen_out
                << '\n';
    } else if (*train) {
      auto cfg = train_flags.build();
      check(ltlab_config_set(cfg.get(), "methods", train_method.c_str()), "--method");
      run(cfg.get());
    } else if (*compare) {
      auto cfg = compare_flags.build();
      run(cfg.get());
    } else if (*report) {
      const auto reports = load_reports(report_inputs);
      std::vector<const ltlab_report*> raw;
      for (const auto& r : reports) raw.push_back(r.get());
      char* text = nullptr;
      const auto status = ltlab_reports_render(
          raw.data(), raw.size(), report_format == "csv" ? LTLAB_FORMAT_CSV : LTLAB_FORMAT_TEXT,
          &text);
      OwnedString owned(text);
      check(status, "report");
      emit(text, report_out);
    } else if (*f1delta) {
      const auto base = load_reports({delta_baseline});
      const auto method = load_reports({delta_method});
      char* csv = nullptr;
      const auto status = ltlab_f1_delta(base.front().get(), method.front().get(), &csv);
      OwnedString owned(csv);
      check(status, "f1delta");
      emit(csv, delta_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "ltlab: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
