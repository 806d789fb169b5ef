// SPDX-License-Identifier: Apache-2.0
#include "ltlab/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ltlab/digest.hpp"
#include "ltlab/error.hpp"
#include "ltlab/random.hpp"

namespace ltlab {

using ojson = nlohmann::ordered_json;

namespace {

ojson optim_to_json(const OptimSpec& o) {
  return {{"lr_init", o.lr_init},       {"weight_decay", o.weight_decay},
          {"beta1", o.beta1},           {"beta2", o.beta2},
          {"eps", o.eps},               {"batch_size", o.batch_size},
          {"epochs", o.epochs},         {"warmup_epochs", o.warmup_epochs}};
}

// Reads `j` as an object whose keys must all be in `allowed`.
void check_keys(const nlohmann::json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(ErrorCode::Parse, "config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) {
      fail(ErrorCode::Parse,
           "config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

OptimSpec optim_from_json(const nlohmann::json& j, const std::string& where, OptimSpec o) {
  check_keys(j, where, {"lr_init", "weight_decay", "beta1", "beta2", "eps", "batch_size",
                        "epochs", "warmup_epochs"});
  read(j, "lr_init", o.lr_init);
  read(j, "weight_decay", o.weight_decay);
  read(j, "beta1", o.beta1);
  read(j, "beta2", o.beta2);
  read(j, "eps", o.eps);
  read(j, "batch_size", o.batch_size);
  read(j, "epochs", o.epochs);
  read(j, "warmup_epochs", o.warmup_epochs);
  return o;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

std::string hash_hex(const std::string& text) {
  Fnv1a h;
  h.update(text);
  return h.hex();
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!methods.empty(), "config: at least one method is required");
  std::set<Method> seen;
  for (Method m : methods) require(seen.insert(m).second, "config: duplicate method " + to_string(m));
  require(jobs >= 1, "config: jobs must be >= 1");
  if (data.source == DataSource::synthetic) {
    data.synthetic.validate();
    require(data.holdout_fraction >= 0.0, "config: holdout_fraction must be >= 0");
    require(data.holdout_fraction > 0.0 || data.holdout_min_per_class > 0,
            "config: held-out set would be empty");
  } else {
    require(!data.embeddings.empty(), "config: embeddings source needs data.embeddings");
    data.split.validate();
  }
  if (data.background_class) require(*data.background_class >= 0, "config: bad background_class");
  for (auto w : arch.hidden) require(w >= 1, "config: hidden widths must be >= 1");
  stage1.validate();
  stage2.validate();
  require(focal_gamma >= 0.0, "config: focal_gamma must be >= 0");
  require(cb_beta >= 0.0 && cb_beta < 1.0, "config: cb_beta must lie in [0,1)");
  require(bags_beta > 0.0, "config: bags_beta must be > 0");
}

std::string ExperimentConfig::to_json() const {
  ojson j;
  j["seed"] = seed;
  j["output_dir"] = output_dir.string();
  auto ms = ojson::array();
  for (Method m : methods) ms.push_back(to_string(m));
  j["methods"] = ms;
  j["one_stage"] = one_stage;
  j["shared_stage1"] = shared_stage1;
  j["jobs"] = jobs;
  j["emit_plots"] = emit_plots;
  j["data"] = {
      {"source", data.source == DataSource::synthetic ? "synthetic" : "embeddings"},
      {"synthetic",
       {{"num_classes", data.synthetic.num_classes},
        {"feature_dim", data.synthetic.feature_dim},
        {"head_count", data.synthetic.head_count},
        {"imbalance_factor", data.synthetic.imbalance_factor},
        {"class_separation", data.synthetic.class_separation},
        {"noise_sigma", data.synthetic.noise_sigma}}},
      {"embeddings", data.embeddings.string()},
      {"background_class", data.background_class ? ojson(*data.background_class) : ojson()},
      {"holdout_fraction", data.holdout_fraction},
      {"holdout_min_per_class", data.holdout_min_per_class},
      {"split",
       {{"train_fraction", data.split.train_fraction},
        {"val_fraction", data.split.val_fraction},
        {"test_fraction", data.split.test_fraction},
        {"stratified", data.split.stratified}}}};
  j["arch"] = {{"hidden", arch.hidden}};
  j["stage1"] = optim_to_json(stage1);
  j["stage2"] = optim_to_json(stage2);
  j["loss"] = {{"focal_gamma", focal_gamma}, {"cb_beta", cb_beta}, {"bags_beta", bags_beta}};
  return j.dump(2) + "\n";
}

namespace {

// Parses without cross-field validation so overrides can be applied in any order.
ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    check_keys(j, "", {"seed", "output_dir", "methods", "one_stage", "shared_stage1", "jobs",
                       "emit_plots", "data", "arch", "stage1", "stage2", "loss"});
    read(j, "seed", c.seed);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    read(j, "one_stage", c.one_stage);
    read(j, "shared_stage1", c.shared_stage1);
    read(j, "jobs", c.jobs);
    read(j, "emit_plots", c.emit_plots);
    if (j.contains("data")) {
      const auto& d = j.at("data");
      check_keys(d, "data", {"source", "synthetic", "embeddings", "background_class",
                             "holdout_fraction", "holdout_min_per_class", "split"});
      if (d.contains("source")) {
        const auto s = d.at("source").get<std::string>();
        if (s == "synthetic") {
          c.data.source = DataSource::synthetic;
        } else if (s == "embeddings") {
          c.data.source = DataSource::embeddings;
        } else {
          fail(ErrorCode::Parse, "config: data.source must be 'synthetic' or 'embeddings'");
        }
      }
      if (d.contains("synthetic")) {
        const auto& s = d.at("synthetic");
        check_keys(s, "data.synthetic", {"num_classes", "feature_dim", "head_count",
                                         "imbalance_factor", "class_separation", "noise_sigma"});
        read(s, "num_classes", c.data.synthetic.num_classes);
        read(s, "feature_dim", c.data.synthetic.feature_dim);
        read(s, "head_count", c.data.synthetic.head_count);
        read(s, "imbalance_factor", c.data.synthetic.imbalance_factor);
        read(s, "class_separation", c.data.synthetic.class_separation);
        read(s, "noise_sigma", c.data.synthetic.noise_sigma);
      }
      if (d.contains("embeddings")) c.data.embeddings = d.at("embeddings").get<std::string>();
      if (d.contains("background_class")) {
        const auto& b = d.at("background_class");
        if (b.is_null()) {
          c.data.background_class.reset();
        } else {
          c.data.background_class = b.get<int>();
        }
      }
      read(d, "holdout_fraction", c.data.holdout_fraction);
      read(d, "holdout_min_per_class", c.data.holdout_min_per_class);
      if (d.contains("split")) {
        const auto& s = d.at("split");
        check_keys(s, "data.split", {"train_fraction", "val_fraction", "test_fraction",
                                     "stratified"});
        read(s, "train_fraction", c.data.split.train_fraction);
        read(s, "val_fraction", c.data.split.val_fraction);
        read(s, "test_fraction", c.data.split.test_fraction);
        read(s, "stratified", c.data.split.stratified);
      }
    }
    if (j.contains("arch")) {
      check_keys(j.at("arch"), "arch", {"hidden"});
      read(j.at("arch"), "hidden", c.arch.hidden);
    }
    if (j.contains("stage1")) c.stage1 = optim_from_json(j.at("stage1"), "stage1", c.stage1);
    if (j.contains("stage2")) c.stage2 = optim_from_json(j.at("stage2"), "stage2", c.stage2);
    if (j.contains("loss")) {
      const auto& l = j.at("loss");
      check_keys(l, "loss", {"focal_gamma", "cb_beta", "bags_beta"});
      read(l, "focal_gamma", c.focal_gamma);
      read(l, "cb_beta", c.cb_beta);
      read(l, "bags_beta", c.bags_beta);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  return c;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  ExperimentConfig c = parse_config(text);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_json(read_file(path));
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  auto j = nlohmann::json::parse(to_json());
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!node->is_object() || !node->contains(part)) {
      fail(ErrorCode::InvalidArgument, "config: unknown key '" + key + "'");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  auto parsed = nlohmann::json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;
  // Comma lists are accepted for array fields, e.g. methods=baseline,ssb.
  if (node->is_array() && parsed.is_string()) {
    auto arr = nlohmann::json::array();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      auto v = nlohmann::json::parse(item, nullptr, false);
      arr.push_back(v.is_discarded() ? nlohmann::json(item) : v);
    }
    parsed = arr;
  } else if (node->is_array() && !parsed.is_array()) {
    parsed = nlohmann::json::array({parsed});
  }
  if (node->is_string() && !parsed.is_string()) parsed = value;
  *node = parsed;
  *this = parse_config(j.dump());
}

std::string ExperimentConfig::digest() const {
  auto j = nlohmann::json::parse(to_json());
  ojson data_part = {{"seed", seed}, {"data", j.at("data")}};
  j.erase("output_dir");
  j.erase("jobs");
  j.erase("emit_plots");
  return hash_hex(data_part.dump()) + "-" + hash_hex(j.dump());
}

std::string RunManifest::to_json() const {
  ojson j;
  j["tool_version"] = tool_version;
  j["config_digest"] = config_digest;
  j["dataset_digest"] = dataset_digest;
  j["status"] = ok ? "ok" : "failed";
  auto ms = ojson::array();
  for (const auto& m : methods) {
    ojson e;
    e["method"] = m.method;
    e["regime"] = m.regime;
    e["status"] = m.ok ? "ok" : "failed";
    if (!m.checkpoint.empty()) e["checkpoint"] = m.checkpoint.string();
    if (!m.report.empty()) e["report"] = m.report.string();
    e["seconds"] = m.seconds;
    if (!m.ok) {
      e["failed_step"] = m.failed_step;
      e["error"] = m.error;
    }
    ms.push_back(e);
  }
  j["methods"] = ms;
  auto files = ojson::array();
  for (const auto& f : this->files) files.push_back(f.string());
  j["files"] = files;
  return j.dump(2) + "\n";
}

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData out;
  if (config.data.source == DataSource::synthetic) {
    SyntheticSpec spec = config.data.synthetic;
    spec.seed = derive_seed(config.seed, {100});
    out.train = generate_synthetic(spec);
    const auto counts = out.train.class_counts();
    std::vector<std::size_t> held(counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j) {
      held[j] = std::max<std::size_t>(
          config.data.holdout_min_per_class,
          static_cast<std::size_t>(
              std::llround(config.data.holdout_fraction * static_cast<double>(counts[j]))));
    }
    out.test = generate_holdout(spec, held, 1);
    out.train.background_class = config.data.background_class;
    out.test.background_class = config.data.background_class;
  } else {
    Dataset all = load_embeddings(config.data.embeddings);
    all.background_class = config.data.background_class;
    all.validate();
    SplitSpec split = config.data.split;
    split.seed = derive_seed(config.seed, {101});
    auto parts = split_dataset(all, split);
    out.train = std::move(parts.train);
    out.test = std::move(parts.test);
  }
  out.train.validate();
  require(out.test.size() > 0, "experiment: empty test partition");
  Fnv1a h;
  h.update(dataset_digest(out.train));
  h.update(dataset_digest(out.test));
  out.digest = h.hex();
  return out;
}

std::vector<std::filesystem::path> emit_f1_delta(const EvalReport& baseline,
                                                 const std::vector<EvalReport>& reports,
                                                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& r : reports) {
    if (r.method == baseline.method && r.regime == baseline.regime) continue;
    const auto name = r.regime == "one_stage" ? r.method + "_one_stage" : r.method;
    const auto path = dir / (name + ".csv");
    write_file(path, render_f1_delta_csv(f1_delta(baseline, r)));
    written.push_back(path);
  }
  return written;
}

EvalReport load_report(const std::filesystem::path& path) {
  return report_from_json(read_file(path));
}

namespace {

struct MethodOutcome {
  MethodArtifacts artifacts;
  std::optional<EvalReport> report;
};

using Clock = std::chrono::steady_clock;

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  const fs::path out_dir = config.output_dir;
  fs::create_directories(out_dir / "checkpoints");
  fs::create_directories(out_dir / "reports");

  RunManifest manifest;
  manifest.config_digest = config.digest();
  const PreparedData data = prepare_data(config);
  manifest.dataset_digest = data.digest;
  const ClassStats stats = compute_class_stats(data.train);

  auto is_one_stage = [&](Method m) {
    return config.one_stage && (m == Method::sqrt_samp || m == Method::cb_focal);
  };

  Stage1Options s1;
  s1.arch = config.arch;
  s1.optim = config.stage1;
  s1.seed = derive_seed(config.seed, {102});
  Stage2Options s2;
  s2.optim = config.stage2;
  s2.focal_gamma = config.focal_gamma;
  s2.cb_beta = config.cb_beta;
  s2.bags_beta = config.bags_beta;
  s2.seed = derive_seed(config.seed, {103});

  // Shared stage 1; also the baseline model.
  std::optional<TrainedModel> shared;
  std::string shared_error;
  bool need_shared = false;
  for (Method m : config.methods) {
    need_shared = need_shared || m == Method::baseline ||
                  (config.shared_stage1 && !is_one_stage(m));
  }
  if (need_shared) {
    try {
      shared = train_stage1(data.train, s1);
    } catch (const std::exception& e) {
      shared_error = e.what();
    }
  }

  auto run_method = [&](Method m) -> MethodOutcome {
    MethodOutcome outcome;
    auto& a = outcome.artifacts;
    a.method = to_string(m);
    a.regime = is_one_stage(m) ? "one_stage" : "two_stage";
    const auto t0 = Clock::now();
    std::string step = "stage1";
    try {
      TrainedModel model;
      if (is_one_stage(m)) {
        Stage1Options opt = s1;
        opt.tag = m;
        opt.seed = derive_seed(config.seed, {104, static_cast<std::uint64_t>(m)});
        if (m == Method::sqrt_samp) {
          opt.q = 0.5;
        } else {
          opt.loss = LossSpec::cb_focal(config.cb_beta, config.focal_gamma);
        }
        model = train_stage1(data.train, opt);
      } else {
        const TrainedModel* base = shared ? &*shared : nullptr;
        std::optional<TrainedModel> own;
        if (m != Method::baseline && !config.shared_stage1) {
          Stage1Options opt = s1;
          opt.seed = derive_seed(config.seed, {105, static_cast<std::uint64_t>(m)});
          own = train_stage1(data.train, opt);
          base = &*own;
        }
        if (!base) fail(ErrorCode::State, "shared stage 1 failed: " + shared_error);
        if (m == Method::baseline) {
          model = *base;
        } else {
          step = "stage2";
          model = train_stage2(*base, data.train, m, s2);
        }
      }
      step = "evaluate";
      const Prediction pred = predict(model, data.test.features);
      EvalReport report = evaluate(pred.labels, data.test.labels, stats);
      report.method = a.method;
      report.regime = a.regime;
      report.seed = config.seed;
      report.config_digest = manifest.config_digest;
      report.dataset_digest = data.digest;
      report.class_names = data.train.class_names;

      step = "save";
      const auto stem = a.regime == "one_stage" ? a.method + "_one_stage" : a.method;
      a.checkpoint = out_dir / "checkpoints" / (stem + ".ckpt");
      save_model(a.checkpoint, model);
      a.report = out_dir / "reports" / (stem + ".json");
      write_file(a.report, report_to_json(report));
      outcome.report = std::move(report);
    } catch (const std::exception& e) {
      a.ok = false;
      a.failed_step = step;
      a.error = e.what();
      if (!a.checkpoint.empty() && !fs::exists(a.checkpoint)) a.checkpoint.clear();
      if (!a.report.empty() && !fs::exists(a.report)) a.report.clear();
    }
    a.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return outcome;
  };

  std::vector<MethodOutcome> outcomes;
  if (config.jobs <= 1) {
    for (Method m : config.methods) outcomes.push_back(run_method(m));
  } else {
    // Methods only read the shared stage-1 model and write distinct files.
    std::vector<std::future<MethodOutcome>> pending;
    std::size_t next = 0;
    while (next < config.methods.size() || !pending.empty()) {
      while (next < config.methods.size() && pending.size() < config.jobs) {
        pending.push_back(std::async(std::launch::async, run_method, config.methods[next++]));
      }
      outcomes.push_back(pending.front().get());
      pending.erase(pending.begin());
    }
  }

  std::vector<EvalReport> reports;
  const EvalReport* baseline = nullptr;
  for (auto& o : outcomes) {
    manifest.methods.push_back(o.artifacts);
    manifest.ok = manifest.ok && o.artifacts.ok;
    if (o.report) reports.push_back(*o.report);
  }
  for (const auto& r : reports) {
    if (r.method == "baseline") baseline = &r;
  }

  auto add_file = [&](const fs::path& p, const std::string& text) {
    write_file(p, text);
    manifest.files.push_back(p);
  };
  if (!reports.empty()) {
    const auto table = compare_methods(reports);
    add_file(out_dir / "comparison.csv", render_csv(table));
    add_file(out_dir / "comparison.txt", render_text(table));
  }
  if (baseline) {
    for (const auto& p : emit_f1_delta(*baseline, reports, out_dir / "f1delta")) {
      manifest.files.push_back(p);
    }
  }
  if (config.emit_plots) {
    fs::create_directories(out_dir / "plots");
    std::ostringstream counts;
    counts << "# class_index train_count bin\n";
    for (std::size_t j = 0; j < stats.num_classes(); ++j) {
      counts << j << ' ' << stats.counts[j] << ' ' << stats.bins[j] << '\n';
    }
    add_file(out_dir / "plots" / "class_counts.dat", counts.str());
    std::ostringstream bins;
    bins << "# method bin accuracy instances\n";
    for (const auto& r : reports) {
      for (const auto& [bin, acc] : r.acc_bins) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", acc);
        bins << (r.regime == "one_stage" ? r.method + "(1-stage)" : r.method) << ' ' << bin
             << ' ' << buf << ' ' << r.bin_instances.at(bin) << '\n';
      }
    }
    add_file(out_dir / "plots" / "bin_accuracy.dat", bins.str());
  }

  const auto manifest_path = out_dir / "manifest.json";
  write_file(manifest_path, manifest.to_json());
  if (!manifest.ok) {
    for (const auto& m : manifest.methods) {
      if (!m.ok) {
        fail(ErrorCode::State, "method '" + m.method + "' failed at step '" + m.failed_step +
                                   "': " + m.error);
      }
    }
  }
  return manifest;
}

}  // namespace ltlab
