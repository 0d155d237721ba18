// Copyright 2026 The rumorgraph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command implementations behind the rumorgraph executable. Each command
// returns its process exit code and reports through the given streams.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rumorgraph/rumorgraph.hpp"

namespace rumorgraph::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kConfigError = 2,
  kTrainingAborted = 3,
  kDegenerateData = 4,
};

inline constexpr int kSchemaVersion = 1;

enum class Precision { kF64, kF32 };

inline Precision parse_precision(const std::string& s) {
  if (s == "f64") return Precision::kF64;
  if (s == "f32") return Precision::kF32;
  throw ConfigError("precision must be f32 or f64, got '" + s + "'");
}

inline std::string to_string(Precision p) { return p == Precision::kF64 ? "f64" : "f32"; }

enum class RunMode { kCrossValidate, kFit };

/// Everything cmd_train needs. Relative paths are resolved against the
/// directory holding the config file.
struct RunConfig {
  TrainConfig train;
  std::string source_events;
  std::string target_events;
  std::string embeddings = "hashed:64";
  std::string output_dir = "out";
  RunMode mode = RunMode::kCrossValidate;
  std::size_t folds = 5;
  std::optional<CheckpointSpec> checkpoints;
  Precision precision = Precision::kF64;
  std::size_t threads = 1;  // folds trained concurrently; never changes results
  bool d_in_given = false;
};

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename V>
void read(const json& j, const char* key, V& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

inline std::string resolve(const std::string& p, const fs::path& base) {
  if (p.empty() || p.rfind("hashed:", 0) == 0) return p;
  fs::path path(p.rfind("file:", 0) == 0 ? p.substr(5) : p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal().string();
}

inline CheckpointSpec parse_checkpoint_mode_values(const std::string& mode,
                                                   const std::vector<double>& values) {
  CheckpointSpec spec;
  if (mode == "count" || mode == "post_count") spec.mode = CheckpointMode::kPostCount;
  else if (mode == "time" || mode == "elapsed_time") spec.mode = CheckpointMode::kElapsedTime;
  else throw ConfigError("checkpoint mode must be 'count' or 'time', got '" + mode + "'");
  spec.values = values;
  if (spec.values.empty()) throw ConfigError("checkpoint list is empty");
  spec.validate();
  return spec;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace detail

/// Parses "1,2,5,inf" into ascending checkpoint values.
inline CheckpointSpec parse_checkpoints(const std::string& list, const std::string& mode) {
  std::vector<double> values;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item == "inf" || item == "INF" || item == "Inf") {
      values.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("bad checkpoint value '" + item + "'");
    }
  }
  return detail::parse_checkpoint_mode_values(mode, values);
}

inline RunConfig parse_run_config(const json& j, const fs::path& base_dir = ".") {
  detail::reject_unknown(
      j,
      {"source_events", "target_events", "embeddings", "output_dir", "mode", "folds",
       "checkpoints", "seed", "precision", "threads", "alpha", "tau", "learning_rate",
       "weight_decay", "source_batch_size", "target_batch_size", "max_epochs", "patience",
       "validation_fraction", "contrastive", "target_contrastive", "tcl_include_positive",
       "model", "augmentation"},
      "config");
  RunConfig rc;
  TrainConfig& t = rc.train;
  const std::string w = "config";
  detail::read(j, "source_events", rc.source_events, w);
  detail::read(j, "target_events", rc.target_events, w);
  detail::read(j, "embeddings", rc.embeddings, w);
  detail::read(j, "output_dir", rc.output_dir, w);
  detail::read(j, "folds", rc.folds, w);
  detail::read(j, "threads", rc.threads, w);
  detail::read(j, "seed", t.seed, w);
  detail::read(j, "alpha", t.alpha, w);
  detail::read(j, "tau", t.tau, w);
  detail::read(j, "learning_rate", t.learning_rate, w);
  detail::read(j, "weight_decay", t.weight_decay, w);
  detail::read(j, "source_batch_size", t.source_batch_size, w);
  detail::read(j, "target_batch_size", t.target_batch_size, w);
  detail::read(j, "max_epochs", t.max_epochs, w);
  detail::read(j, "patience", t.patience, w);
  detail::read(j, "validation_fraction", t.validation_fraction, w);
  detail::read(j, "contrastive", t.contrastive, w);
  detail::read(j, "target_contrastive", t.target_contrastive, w);
  detail::read(j, "tcl_include_positive", t.tcl_include_positive, w);
  if (j.contains("mode")) {
    std::string m;
    detail::read(j, "mode", m, w);
    if (m == "cross_validate") rc.mode = RunMode::kCrossValidate;
    else if (m == "fit") rc.mode = RunMode::kFit;
    else throw ConfigError("config.mode must be 'cross_validate' or 'fit'");
  }
  if (j.contains("precision")) {
    std::string p;
    detail::read(j, "precision", p, w);
    rc.precision = parse_precision(p);
  }
  if (j.contains("model")) {
    const json& m = j["model"];
    detail::reject_unknown(m, {"d_in", "d_hidden", "d_out", "dropout", "layer_norm_eps"},
                           "config.model");
    rc.d_in_given = m.contains("d_in");
    detail::read(m, "d_in", t.model.d_in, "config.model");
    detail::read(m, "d_hidden", t.model.d_hidden, "config.model");
    detail::read(m, "d_out", t.model.d_out, "config.model");
    detail::read(m, "dropout", t.model.dropout, "config.model");
    detail::read(m, "layer_norm_eps", t.model.layer_norm_eps, "config.model");
  }
  if (j.contains("augmentation")) {
    const json& a = j["augmentation"];
    detail::reject_unknown(a, {"kind", "epsilon", "feature_dropout", "dropedge"},
                           "config.augmentation");
    std::string kind = to_string(t.augment.kind);
    detail::read(a, "kind", kind, "config.augmentation");
    t.augment.kind = parse_augment_kind(kind);
    detail::read(a, "epsilon", t.augment.epsilon, "config.augmentation");
    detail::read(a, "feature_dropout", t.augment.feature_dropout, "config.augmentation");
    detail::read(a, "dropedge", t.augment.dropedge, "config.augmentation");
  }
  if (j.contains("checkpoints")) {
    const json& c = j["checkpoints"];
    detail::reject_unknown(c, {"mode", "values"}, "config.checkpoints");
    std::string mode = "count";
    detail::read(c, "mode", mode, "config.checkpoints");
    std::vector<double> values;
    if (!c.contains("values") || !c["values"].is_array())
      throw ConfigError("config.checkpoints.values must be a list");
    for (const auto& v : c["values"]) {
      if (v.is_string() && v.get<std::string>() == "inf")
        values.push_back(std::numeric_limits<double>::infinity());
      else if (v.is_number()) values.push_back(v.get<double>());
      else throw ConfigError("config.checkpoints.values entries must be numbers or \"inf\"");
    }
    rc.checkpoints = detail::parse_checkpoint_mode_values(mode, values);
  }
  if (rc.source_events.empty()) throw ConfigError("config.source_events is required");
  if (rc.target_events.empty()) throw ConfigError("config.target_events is required");
  if (rc.folds < 2) throw ConfigError("config.folds must be >= 2");
  if (rc.threads < 1) throw ConfigError("config.threads must be >= 1");
  if (rc.mode == RunMode::kFit && rc.checkpoints)
    throw ConfigError("checkpoints need a held-out test set (mode cross_validate)");
  rc.source_events = detail::resolve(rc.source_events, base_dir);
  rc.target_events = detail::resolve(rc.target_events, base_dir);
  rc.embeddings = detail::resolve(rc.embeddings, base_dir);
  rc.output_dir = detail::resolve(rc.output_dir, base_dir);
  t.validate();
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return parse_run_config(j, fs::path(path).parent_path());
}

/// The experiment-defining part of a config: output location and thread
/// count are excluded so they do not change the hash.
inline json experiment_json(const RunConfig& rc) {
  const TrainConfig& t = rc.train;
  json j = {{"source_events", rc.source_events},
            {"target_events", rc.target_events},
            {"embeddings", rc.embeddings},
            {"mode", rc.mode == RunMode::kFit ? "fit" : "cross_validate"},
            {"folds", rc.folds},
            {"precision", to_string(rc.precision)},
            {"seed", t.seed},
            {"alpha", t.alpha},
            {"tau", t.tau},
            {"learning_rate", t.learning_rate},
            {"weight_decay", t.weight_decay},
            {"source_batch_size", t.source_batch_size},
            {"target_batch_size", t.target_batch_size},
            {"max_epochs", t.max_epochs},
            {"patience", t.patience},
            {"validation_fraction", t.validation_fraction},
            {"contrastive", t.contrastive},
            {"target_contrastive", t.target_contrastive},
            {"tcl_include_positive", t.tcl_include_positive},
            {"model", to_json(t.model)},
            {"augmentation",
             {{"kind", to_string(t.augment.kind)},
              {"epsilon", t.augment.epsilon},
              {"feature_dropout", t.augment.feature_dropout},
              {"dropedge", t.augment.dropedge}}}};
  if (rc.checkpoints) {
    json values = json::array();
    for (double v : rc.checkpoints->values) {
      if (std::isinf(v)) values.push_back("inf");
      else values.push_back(v);
    }
    j["checkpoints"] = {
        {"mode", rc.checkpoints->mode == CheckpointMode::kPostCount ? "count" : "time"},
        {"values", values}};
  }
  return j;
}

inline std::string config_hash(const RunConfig& rc) {
  return detail::hex64(fnv1a64(experiment_json(rc).dump()));
}

/// manifest.json: every produced file with its size and content hash.
inline void write_manifest(const fs::path& dir, const std::string& command,
                           const std::vector<std::string>& files, const std::string& hash = "") {
  json j = {{"schema_version", kSchemaVersion}, {"command", command}, {"files", json::array()}};
  if (!hash.empty()) j["config_hash"] = hash;
  for (const auto& f : files) {
    const std::string bytes = detail::read_file(dir / f);
    j["files"].push_back(
        {{"path", f}, {"bytes", bytes.size()}, {"fnv1a64", detail::hex64(fnv1a64(bytes))}});
  }
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << '\n';
}

inline void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw FormatError("cannot write '" + p.string() + "'");
  out << j.dump(2) << '\n';
}

inline json history_json(const std::vector<EpochRecord>& h) {
  json a = json::array();
  for (const auto& e : h)
    a.push_back({{"epoch", e.epoch}, {"val_macro_f1", e.score}, {"mean_loss", e.mean_loss},
                 {"steps", e.steps}});
  return a;
}

inline json curve_json(const EarlyDetectionCurve& c) {
  json rows = json::array();
  for (std::size_t i = 0; i < c.rows.size(); ++i)
    rows.push_back({{"checkpoint", format_checkpoint(c.spec.values[i])}, {"metrics", to_json(c.rows[i])}});
  return rows;
}

// --- train -------------------------------------------------------------------

template <typename T>
int run_training(const RunConfig& rc, std::ostream& out) {
  auto provider = make_provider(rc.embeddings);
  TrainConfig cfg = rc.train;
  if (rc.d_in_given && cfg.model.d_in != provider->dimension()) {
    throw ConfigError("config.model.d_in = " + std::to_string(cfg.model.d_in) +
                      " but the embeddings have dimension " +
                      std::to_string(provider->dimension()));
  }
  cfg.model.d_in = provider->dimension();
  RunConfig resolved = rc;
  resolved.train.model.d_in = cfg.model.d_in;
  const std::string hash = config_hash(resolved);

  const Dataset source = parse_events(rc.source_events, DatasetRole::kSource);
  const Dataset target = parse_events(rc.target_events, DatasetRole::kTarget);
  const auto src = prepare_events<T>(source.events, *provider);
  const auto tgt = prepare_events<T>(target.events, *provider);

  const fs::path dir(rc.output_dir);
  fs::create_directories(dir);
  std::vector<std::string> files;
  std::ofstream log_file(dir / "train_log.jsonl");
  files.push_back("train_log.jsonl");

  json metrics = {{"schema_version", kSchemaVersion},
                  {"config_hash", hash},
                  {"mode", rc.mode == RunMode::kFit ? "fit" : "cross_validate"},
                  {"precision", to_string(rc.precision)},
                  {"param_count", param_count(cfg.model)}};
  const SnapshotHeader header_base{cfg.model, cfg.seed, provider->describe()};

  if (rc.mode == RunMode::kFit) {
    const TrainLogger log = [&](const json& r) { log_file << r.dump() << '\n'; };
    Trainer<T> trainer(src, tgt, cfg, log);
    auto state = initial_state<T>(cfg);
    const auto result = trainer.run(state);
    write_snapshot((dir / "model.snapshot").string(), header_base, result.params);
    files.push_back("model.snapshot");
    metrics["train_events"] = trainer.train_size();
    metrics["validation_events"] = trainer.validation().size();
    metrics["best_validation"] = result.best_score;
    metrics["epochs"] = result.history.size();
    metrics["history"] = history_json(result.history);
    out << "fit: " << result.history.size() << " epochs, best validation "
        << std::setprecision(4) << result.best_score << '\n';
  } else {
    const FoldPlan plan = split_folds(target, rc.folds, cfg.seed);
    struct FoldRun {
      std::vector<std::string> log;
      FitResult<T> fit;
      Metrics metrics;
      std::size_t train_events = 0, test_events = 0;
      std::optional<EarlyDetectionCurve> curve;
    };
    std::vector<FoldRun> runs(rc.folds);
    auto run_fold = [&](std::size_t f) {
      FoldRun& run = runs[f];
      std::vector<PreparedEvent<T>> train, test;
      std::vector<Event> test_events;
      for (std::size_t i = 0; i < tgt.size(); ++i) {
        if (plan.assignment.at(tgt[i].event_id) == f) {
          train.push_back(tgt[i]);
        } else {
          test.push_back(tgt[i]);
          test_events.push_back(target.events[i]);
        }
      }
      TrainConfig fcfg = cfg;
      fcfg.seed = fold_seed(cfg.seed, f);
      const TrainLogger log = [&run, f](const json& r) {
        json rec = r;
        rec["fold"] = f;
        run.log.push_back(rec.dump());
      };
      run.train_events = train.size();
      run.test_events = test.size();
      run.fit = fit<T>(src, train, fcfg, log);
      run.metrics = evaluate<T>(run.fit.params, cfg.model, test);
      if (rc.checkpoints)
        run.curve = early_detection<T>(run.fit.params, cfg.model, test_events, *rc.checkpoints,
                                       *provider);
    };
    if (rc.threads <= 1) {
      for (std::size_t f = 0; f < rc.folds; ++f) run_fold(f);
    } else {
      for (std::size_t f0 = 0; f0 < rc.folds; f0 += rc.threads) {
        std::vector<std::future<void>> jobs;
        for (std::size_t f = f0; f < std::min(rc.folds, f0 + rc.threads); ++f)
          jobs.push_back(std::async(std::launch::async, run_fold, f));
        for (auto& j : jobs) j.get();
      }
    }
    json folds = json::array();
    std::vector<Metrics> per_fold;
    for (std::size_t f = 0; f < rc.folds; ++f) {
      FoldRun& run = runs[f];
      for (const auto& line : run.log) log_file << line << '\n';
      const std::string snap = "fold" + std::to_string(f) + ".snapshot";
      SnapshotHeader h = header_base;
      h.seed = fold_seed(cfg.seed, f);
      write_snapshot((dir / snap).string(), h, run.fit.params);
      files.push_back(snap);
      json fj = {{"fold", f},
                 {"train_events", run.train_events},
                 {"test_events", run.test_events},
                 {"epochs", run.fit.history.size()},
                 {"best_validation", run.fit.best_score},
                 {"metrics", to_json(run.metrics)}};
      if (run.curve) {
        const std::string csv = "early_detection_fold" + std::to_string(f) + ".csv";
        std::ofstream c(dir / csv);
        write_curve_csv(c, *run.curve);
        files.push_back(csv);
        fj["early_detection"] = curve_json(*run.curve);
      }
      folds.push_back(fj);
      per_fold.push_back(run.metrics);
      out << "fold " << f << ": " << format_metrics(run.metrics) << '\n';
    }
    const Metrics mean = mean_metrics(per_fold);
    metrics["folds"] = folds;
    metrics["mean"] = to_json(mean);
    out << "mean:   " << format_metrics(mean) << '\n';
  }
  log_file.close();
  write_json(dir / "metrics.json", metrics);
  files.push_back("metrics.json");
  write_json(dir / "config.json", experiment_json(resolved));
  files.push_back("config.json");
  write_manifest(dir, "train", files, hash);
  return kOk;
}

struct TrainOptions {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> precision;
  std::optional<double> alpha;
};

/// Runs a guarded command body, mapping library errors to exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const TrainingError& e) {
    err << "error: training aborted: " << e.what() << '\n';
    return kTrainingAborted;
  } catch (const DegenerateDataError& e) {
    err << "error: " << e.what() << '\n';
    return kDegenerateData;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

inline int cmd_train(const TrainOptions& o, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  RunConfig rc;
  if (int code = guarded(err, [&] {
        rc = load_run_config(o.config);
        if (o.out) rc.output_dir = *o.out;
        if (o.seed) rc.train.seed = *o.seed;
        if (o.precision) rc.precision = parse_precision(*o.precision);
        if (o.alpha) rc.train.alpha = *o.alpha;
        rc.train.validate();
        return kOk;
      });
      code != kOk) {
    return code;
  }
  return guarded(err, [&] {
    return rc.precision == Precision::kF64 ? run_training<double>(rc, out)
                                           : run_training<float>(rc, out);
  });
}

// --- validate ----------------------------------------------------------------

inline int cmd_validate(const std::vector<std::string>& paths, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    std::vector<std::pair<std::string, DatasetStats>> rows;
    for (const auto& p : paths) rows.emplace_back(p, dataset_stats(parse_events(p)));
    std::size_t w = 7;
    for (const auto& r : rows) w = std::max(w, r.first.size());
    out << std::left << std::setw(static_cast<int>(w)) << "dataset" << std::right
        << std::setw(9) << "events" << std::setw(12) << "tree_nodes" << std::setw(9) << "rumors"
        << std::setw(12) << "non_rumors" << std::setw(11) << "avg_depth" << std::setw(11)
        << "avg_posts" << '\n';
    for (const auto& [name, s] : rows) {
      out << std::left << std::setw(static_cast<int>(w)) << name << std::right << std::setw(9)
          << s.events << std::setw(12) << s.tree_nodes << std::setw(9) << s.rumors
          << std::setw(12) << s.non_rumors << std::fixed << std::setprecision(2) << std::setw(11)
          << s.avg_depth << std::setw(11) << s.avg_posts << '\n';
      out.unsetf(std::ios::fixed);
    }
    return kOk;
  });
}

// --- snapshot-driven commands ------------------------------------------------

struct SnapshotOptions {
  std::string snapshot;
  std::string events;
  std::optional<std::string> embeddings;
  std::optional<std::string> out;
  std::string precision = "f64";
};

namespace detail {

template <typename T>
struct Loaded {
  Snapshot<T> snap;
  std::unique_ptr<EmbeddingProvider> provider;
  Dataset data;
};

template <typename T>
Loaded<T> load_for_eval(const SnapshotOptions& o) {
  if (!fs::exists(o.snapshot)) throw ResolutionError("snapshot '" + o.snapshot + "' not found");
  Loaded<T> l{read_snapshot<T>(o.snapshot), nullptr, {}};
  l.provider = make_provider(o.embeddings ? *o.embeddings : l.snap.header.embedding);
  if (l.provider->dimension() != l.snap.header.config.d_in) {
    throw ConfigError("embedding dimension " + std::to_string(l.provider->dimension()) +
                      " does not match the snapshot's d_in " +
                      std::to_string(l.snap.header.config.d_in));
  }
  l.data = parse_events(o.events);
  return l;
}

template <typename F>
int with_precision(const std::string& precision, F&& body) {
  return parse_precision(precision) == Precision::kF64 ? body(double{}) : body(float{});
}

}  // namespace detail

inline int cmd_eval(const SnapshotOptions& o, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    return detail::with_precision(o.precision, [&](auto tag) {
      using T = decltype(tag);
      auto l = detail::load_for_eval<T>(o);
      const auto prepared = prepare_events<T>(l.data.events, *l.provider);
      const Metrics m = evaluate<T>(l.snap.params, l.snap.header.config, prepared);
      json j = {{"schema_version", kSchemaVersion}, {"metrics", to_json(m)}};
      if (o.out) {
        fs::create_directories(*o.out);
        write_json(fs::path(*o.out) / "metrics.json", j);
        write_manifest(*o.out, "eval", {"metrics.json"});
      }
      out << j.dump(2) << '\n';
      return kOk;
    });
  });
}

struct EarlyDetectOptions : SnapshotOptions {
  std::string checkpoints;
  std::string mode = "count";
};

inline int cmd_earlydetect(const EarlyDetectOptions& o, std::ostream& out = std::cout,
                           std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const CheckpointSpec spec = parse_checkpoints(o.checkpoints, o.mode);
    return detail::with_precision(o.precision, [&](auto tag) {
      using T = decltype(tag);
      auto l = detail::load_for_eval<T>(o);
      const auto curve =
          early_detection<T>(l.snap.params, l.snap.header.config, l.data.events, spec, *l.provider);
      if (o.out) {
        fs::create_directories(*o.out);
        std::ofstream csv(fs::path(*o.out) / "early_detection.csv");
        write_curve_csv(csv, curve);
        csv.close();
        write_manifest(*o.out, "earlydetect", {"early_detection.csv"});
      } else {
        write_curve_csv(out, curve);
      }
      return kOk;
    });
  });
}

inline int cmd_export_features(const SnapshotOptions& o, std::ostream& out = std::cout,
                               std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    if (!o.out) throw ConfigError("export-features needs --out");
    return detail::with_precision(o.precision, [&](auto tag) {
      using T = decltype(tag);
      auto l = detail::load_for_eval<T>(o);
      const auto prepared = prepare_events<T>(l.data.events, *l.provider);
      const auto& mc = l.snap.header.config;
      Tensor<double> reps(prepared.size(), mc.representation_dim());
      std::vector<std::string> ids;
      std::vector<int> labels;
      for (std::size_t i = 0; i < prepared.size(); ++i) {
        const auto r = forward(l.snap.params, mc, prepared[i].x, prepared[i].a_hat);
        for (std::size_t c = 0; c < reps.cols(); ++c)
          reps(i, c) = static_cast<double>(r.representation(0, c));
        ids.push_back(prepared[i].event_id);
        labels.push_back(prepared[i].label);
      }
      const auto proj = pca_project(reps, 2);
      const fs::path dir(*o.out);
      fs::create_directories(dir);
      {
        std::ofstream csv(dir / "features.csv");
        write_pca_csv(csv, proj, ids, labels);
      }
      write_json(dir / "features.json", pca_sidecar(proj));
      write_manifest(dir, "export-features", {"features.csv", "features.json"});
      out << "wrote " << ids.size() << " projected events to " << (dir / "features.csv").string()
          << '\n';
      return kOk;
    });
  });
}

// --- synth -------------------------------------------------------------------

inline int cmd_synth(const std::string& spec_path, const std::string& out_dir,
                     std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  SynthSpec spec;
  if (int code = guarded(err, [&] {
        std::ifstream in(spec_path);
        if (!in) throw ConfigError("cannot open synth spec '" + spec_path + "'");
        json j;
        try {
          j = json::parse(in);
        } catch (const json::parse_error& e) {
          throw ConfigError(spec_path + ": invalid JSON: " + e.what());
        }
        spec = synth_spec_from_json(j);
        return kOk;
      });
      code != kOk) {
    return code;
  }
  return guarded(err, [&] {
    const auto data = generate_synthetic(spec);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_events((dir / "source.jsonl").string(), data.source);
    write_events((dir / "target.jsonl").string(), data.target);
    write_json(dir / "spec.json", to_json(spec));
    write_manifest(dir, "synth", {"source.jsonl", "target.jsonl", "spec.json"});
    out << "wrote " << data.source.events.size() << " source and " << data.target.events.size()
        << " target events to " << dir.string() << '\n';
    return kOk;
  });
}

}  // namespace rumorgraph::cli
