// Copyright 2026 The spwnn Authors. All Rights Reserved.
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
// =============================================================================

#pragma once

// Batch-job front end: resolved run configuration, the metrics log, and one
// function per subcommand. The executable in tools/ only parses flags.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "spwnn/data.hpp"
#include "spwnn/metrics.hpp"
#include "spwnn/model_io.hpp"
#include "spwnn/streaming.hpp"
#include "spwnn/text.hpp"
#include "spwnn/trainer.hpp"
#include "spwnn/wnn.hpp"

namespace spwnn::cli {

using KeyValues = std::map<std::string, std::string>;

/// Raised for a failure inside one pipeline stage; the CLI reports the stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

/// T_S / T_P.
inline double speedup(double sequential_s, double parallel_s) {
  if (!(parallel_s > 0.0)) throw std::invalid_argument("speedup: parallel time must be positive");
  return sequential_s / parallel_s;
}

// ---------------------------------------------------------------------------
// Configuration

/// Hyperparameter defaults per (mode, task), from the tuned static and
/// streaming configurations.
inline Hyperparams default_hyperparams(bool streaming, Task task) {
  Hyperparams hp;
  hp.momentum = 0.999;
  hp.partitions = 1;
  hp.seed = 42;
  if (task == Task::Classification) {
    hp.hidden = 150;
    hp.lr = streaming ? 0.2 : 0.45;
    hp.batch_size = streaming ? 16 : 32;
    hp.epochs = 100;
  } else {
    hp.hidden = 10;
    hp.lr = streaming ? 0.2 : 0.45;
    hp.batch_size = streaming ? 512 : 2048;
    hp.epochs = streaming ? 100 : 1000;
  }
  return hp;
}

struct RunConfig {
  std::string mode;
  std::string data;
  std::string target;
  std::optional<std::string> positive_label;
  std::vector<std::string> drop;
  char delimiter = ',';
  Task task = Task::Classification;
  Activation activation = Activation::Morlet;
  Hyperparams hp;
  std::size_t threads = 0;
  double split_ratio = 0.8;
  std::size_t top_k = 0;  ///< 0: keep every feature
  std::size_t window_size = 2;
  std::size_t num_batches = 10;
  std::size_t pace_ms = 0;
  std::vector<std::size_t> bench_partitions;
  std::size_t samples = 2000;
  double noise = 0.01;
  double separation = 4.0;
  std::string model_out, model_in, metrics_out, test_out, data_out, predictions_out;

  /// Every resolved setting as key=value pairs; feeding them back through
  /// resolve_config reproduces this configuration.
  KeyValues to_key_values() const {
    KeyValues kv;
    kv["mode"] = mode;
    kv["data"] = data;
    kv["target"] = target;
    if (positive_label) kv["positive-label"] = *positive_label;
    std::string joined;
    for (const auto& d : drop) joined += (joined.empty() ? "" : ",") + d;
    kv["drop"] = joined;
    kv["delimiter"] = delimiter == '\t' ? std::string("tab") : std::string(1, delimiter);
    kv["task"] = std::string(to_string(task));
    kv["activation"] = std::string(to_string(activation));
    kv["hidden"] = std::to_string(hp.hidden);
    kv["lr"] = format_double(hp.lr);
    kv["momentum"] = format_double(hp.momentum);
    kv["batch-size"] = std::to_string(hp.batch_size);
    kv["epochs"] = std::to_string(hp.epochs);
    if (mode == "bench") {
      std::string parts;
      for (auto p : bench_partitions) parts += (parts.empty() ? "" : ",") + std::to_string(p);
      kv["partitions"] = parts;
    } else {
      kv["partitions"] = std::to_string(hp.partitions);
    }
    kv["threads"] = std::to_string(threads);
    kv["seed"] = std::to_string(hp.seed);
    kv["split"] = format_double(split_ratio);
    kv["top-k"] = std::to_string(top_k);
    kv["window-size"] = std::to_string(window_size);
    kv["num-batches"] = std::to_string(num_batches);
    kv["pace-ms"] = std::to_string(pace_ms);
    kv["samples"] = std::to_string(samples);
    kv["noise"] = format_double(noise);
    kv["separation"] = format_double(separation);
    kv["model-out"] = model_out;
    kv["model-in"] = model_in;
    kv["metrics-out"] = metrics_out;
    kv["test-out"] = test_out;
    kv["data-out"] = data_out;
    kv["predictions-out"] = predictions_out;
    return kv;
  }

  std::string echo() const {
    std::string line = "record=config";
    for (const auto& [k, v] : to_key_values()) {
      if (v.empty()) continue;
      line += ' ' + k + '=' + v;
    }
    return line;
  }
};

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "data",       "target",      "positive-label", "drop",      "delimiter",  "task",      "activation",
      "hidden",     "lr",          "momentum",       "batch-size", "epochs",    "partitions", "threads",
      "seed",       "split",       "top-k",          "window-size", "num-batches", "pace-ms", "model-out",
      "model-in",   "metrics-out", "test-out",       "data-out",  "predictions-out", "samples", "noise",
      "separation", "mode",        "config"};
  return keys;
}

/// Flat key=value text: whitespace separates pairs, '#' starts a comment.
/// A line carrying record=<x> other than record=config is skipped, so a
/// metrics log can be passed back as a config file.
inline KeyValues parse_config_text(std::string_view text) {
  KeyValues kv;
  for (auto raw_line : split(text, '\n')) {
    auto line = trim(raw_line);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    KeyValues line_kv;
    for (auto tok : split_ws(line)) {
      const auto eq = tok.find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw std::runtime_error("config: expected key=value, got '" + std::string(tok) + "'");
      line_kv[std::string(tok.substr(0, eq))] = std::string(tok.substr(eq + 1));
    }
    if (auto rec = line_kv.find("record"); rec != line_kv.end()) {
      if (rec->second != "config") continue;
      line_kv.erase(rec);
    }
    for (auto& [k, v] : line_kv) {
      if (std::find(known_keys().begin(), known_keys().end(), k) == known_keys().end())
        throw std::runtime_error("config: unknown key '" + k + "'");
      kv[k] = v;
    }
  }
  return kv;
}

inline KeyValues read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

namespace detail {

inline std::size_t to_count(const std::string& key, const std::string& v) {
  auto n = parse_u64(v);
  if (!n) throw std::invalid_argument("--" + key + ": expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(*n);
}

inline double to_real(const std::string& key, const std::string& v) {
  auto d = parse_double(v);
  if (!d) throw std::invalid_argument("--" + key + ": expected a number, got '" + v + "'");
  return *d;
}

}  // namespace detail

/// Merges config-file values under command-line values and fills the
/// remaining settings with per-mode/task defaults.
inline RunConfig resolve_config(const std::string& mode, const KeyValues& flags) {
  KeyValues kv;
  if (auto c = flags.find("config"); c != flags.end()) kv = read_config_file(c->second);
  for (const auto& [k, v] : flags) kv[k] = v;
  kv.erase("config");

  auto get = [&](const std::string& k) -> std::optional<std::string> {
    auto it = kv.find(k);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };

  RunConfig cfg;
  cfg.mode = mode;
  if (auto v = get("task")) cfg.task = parse_task(*v);
  if (auto v = get("activation")) cfg.activation = parse_activation(*v);
  const bool streaming = mode == "stream";
  cfg.hp = default_hyperparams(streaming, cfg.task);
  cfg.num_batches = cfg.task == Task::Classification ? 10 : 20;

  using detail::to_count;
  using detail::to_real;
  if (auto v = get("data")) cfg.data = *v;
  if (auto v = get("target")) cfg.target = *v;
  if (auto v = get("positive-label"); v && !v->empty()) cfg.positive_label = *v;
  if (auto v = get("drop"))
    for (auto d : split(*v, ','))
      if (!trim(d).empty()) cfg.drop.emplace_back(trim(d));
  if (auto v = get("delimiter")) {
    if (*v == "tab" || *v == "\\t") cfg.delimiter = '\t';
    else if (v->size() == 1) cfg.delimiter = (*v)[0];
    else throw std::invalid_argument("--delimiter: expected a single character");
  }
  if (auto v = get("hidden")) cfg.hp.hidden = to_count("hidden", *v);
  if (auto v = get("lr")) cfg.hp.lr = to_real("lr", *v);
  if (auto v = get("momentum")) cfg.hp.momentum = to_real("momentum", *v);
  if (auto v = get("batch-size")) cfg.hp.batch_size = to_count("batch-size", *v);
  if (auto v = get("epochs")) cfg.hp.epochs = to_count("epochs", *v);
  if (auto v = get("partitions")) {
    for (auto p : split(*v, ',')) cfg.bench_partitions.push_back(to_count("partitions", std::string(trim(p))));
    if (cfg.bench_partitions.empty()) throw std::invalid_argument("--partitions: empty");
    if (mode != "bench" && cfg.bench_partitions.size() != 1)
      throw std::invalid_argument("--partitions: a list is only accepted by bench");
    cfg.hp.partitions = cfg.bench_partitions.front();
  }
  if (mode == "bench" && cfg.bench_partitions.empty()) {
    const auto cores = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    cfg.bench_partitions = {std::max<std::size_t>(cores, 2)};
  }
  if (mode == "bench") cfg.hp.partitions = 1;
  if (auto v = get("threads")) cfg.threads = to_count("threads", *v);
  if (auto v = get("seed")) cfg.hp.seed = to_count("seed", *v);
  if (auto v = get("split")) cfg.split_ratio = to_real("split", *v);
  if (auto v = get("top-k")) cfg.top_k = to_count("top-k", *v);
  if (auto v = get("window-size")) cfg.window_size = to_count("window-size", *v);
  if (auto v = get("num-batches")) cfg.num_batches = to_count("num-batches", *v);
  if (auto v = get("pace-ms")) cfg.pace_ms = to_count("pace-ms", *v);
  if (auto v = get("samples")) cfg.samples = to_count("samples", *v);
  if (auto v = get("noise")) cfg.noise = to_real("noise", *v);
  if (auto v = get("separation")) cfg.separation = to_real("separation", *v);
  if (auto v = get("model-out")) cfg.model_out = *v;
  if (auto v = get("model-in")) cfg.model_in = *v;
  if (auto v = get("metrics-out")) cfg.metrics_out = *v;
  if (auto v = get("test-out")) cfg.test_out = *v;
  if (auto v = get("data-out")) cfg.data_out = *v;
  if (auto v = get("predictions-out")) cfg.predictions_out = *v;
  cfg.hp.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Output

/// Line-oriented record sink (file or stdout). Every line is flushed; a run
/// that finishes normally ends with record=completed, so an interrupted run
/// is recognisable by its missing last line.
class MetricsLog {
 public:
  explicit MetricsLog(const std::string& path, std::ostream& fallback = std::cout) {
    if (path.empty() || path == "-") {
      out_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot open metrics file '" + path + "'");
      out_ = file_.get();
    }
  }

  void line(const std::string& text) {
    *out_ << text << '\n';
    out_->flush();
  }
  void completed() { line("record=completed"); }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_ = nullptr;
};

/// Writes via a sibling temporary and renames, so the target is either the
/// old file or the complete new one.
template <typename Writer>
void write_atomically(const std::string& path, Writer&& writer) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    writer(os);
    if (!os.flush()) throw std::runtime_error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string norm_path(const std::string& model_path) { return model_path + ".norm"; }

/// Normalization sidecar: feature order, per-column min/max and the target
/// scaling, so a saved model can score raw CSV rows on its own.
inline void save_norm(std::ostream& os, const Dataset& ds, Task task) {
  os << "SPWNN-NORM v1\n" << "task " << to_string(task) << '\n';
  os << "target ";
  if (ds.norm.target)
    os << format_double(ds.norm.target->min) << ' ' << format_double(ds.norm.target->max);
  else
    os << "none none";
  os << ' ' << ds.target_name << '\n';
  os << "features " << ds.dims() << '\n';
  for (std::size_t c = 0; c < ds.dims(); ++c)
    os << format_double(ds.norm.features[c].min) << ' ' << format_double(ds.norm.features[c].max) << ' '
       << ds.feature_names[c] << '\n';
}

struct NormFile {
  Task task = Task::Regression;
  std::string target_name;
  std::vector<std::string> feature_names;
  NormStats stats;
};

inline NormFile load_norm(std::istream& is) {
  NormFile nf;
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(is, line)) throw std::runtime_error(std::string("normalization file truncated at ") + what);
    return std::string_view(line);
  };
  if (trim(next("header")) != "SPWNN-NORM v1") throw std::runtime_error("not a normalization file");
  {
    auto tok = split_ws(next("task"));
    if (tok.size() != 2 || tok[0] != "task") throw std::runtime_error("normalization file: bad task line");
    nf.task = parse_task(tok[1]);
  }
  // "<min> <max> <name...>": names may contain spaces, so they come last.
  auto split3 = [](std::string_view s, std::string_view& a, std::string_view& b, std::string_view& rest) {
    const auto p1 = s.find(' ');
    const auto p2 = p1 == std::string_view::npos ? p1 : s.find(' ', p1 + 1);
    if (p2 == std::string_view::npos) throw std::runtime_error("normalization file: malformed line");
    a = s.substr(0, p1);
    b = s.substr(p1 + 1, p2 - p1 - 1);
    rest = s.substr(p2 + 1);
  };
  {
    auto l = next("target");
    if (l.substr(0, 7) != "target ") throw std::runtime_error("normalization file: bad target line");
    std::string_view lo, hi, name;
    split3(l.substr(7), lo, hi, name);
    nf.target_name = std::string(name);
    if (lo != "none") {
      auto a = parse_double(lo), b = parse_double(hi);
      if (!a || !b) throw std::runtime_error("normalization file: bad target range");
      nf.stats.target = MinMax{*a, *b};
    }
  }
  auto tok = split_ws(next("features"));
  std::optional<std::uint64_t> d;
  if (tok.size() != 2 || tok[0] != "features" || !(d = parse_u64(tok[1])))
    throw std::runtime_error("normalization file: bad features line");
  for (std::uint64_t c = 0; c < *d; ++c) {
    std::string_view lo, hi, name;
    split3(next("feature"), lo, hi, name);
    auto a = parse_double(lo), b = parse_double(hi);
    if (!a || !b) throw std::runtime_error("normalization file: bad feature range");
    nf.stats.features.push_back(MinMax{*a, *b});
    nf.feature_names.emplace_back(name);
  }
  return nf;
}

inline std::uint64_t model_digest(const WnnModel& m) {
  // FNV-1a over the serialized text.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : model_to_string(m)) h = (h ^ c) * 0x100000001b3ull;
  return h;
}

inline std::string epoch_line(const EpochRecord& e) {
  return "record=epoch epoch=" + std::to_string(e.epoch) + " loss=" + format_double(e.loss) +
         " elapsed_s=" + format_double(e.elapsed_s);
}

inline std::string window_line(const WindowReport& w) {
  std::string trained;
  for (auto id : w.trained_on) trained += (trained.empty() ? "" : ",") + std::to_string(id);
  auto metrics = w.metrics;
  metrics.elapsed_s = w.elapsed_s;
  return "record=window window=" + std::to_string(w.window_index) + " trained_on=" + trained +
         " tested_on=" + std::to_string(w.tested_on) + ' ' + render(metrics);
}

inline std::string average_line(const StreamAverage& a) {
  auto metrics = a.metrics;
  metrics.elapsed_s = a.elapsed_s;
  metrics.vacuous_sensitivity = metrics.vacuous_specificity = metrics.auc_omitted = false;
  return "record=average windows=" + std::to_string(a.windows) + ' ' + render(metrics);
}

// ---------------------------------------------------------------------------
// Subcommands

namespace detail {

inline CsvOptions csv_options(const RunConfig& cfg) {
  if (cfg.target.empty()) throw std::invalid_argument("--target is required");
  CsvOptions o;
  o.target = cfg.target;
  o.drop = cfg.drop;
  o.positive_label = cfg.positive_label;
  o.delimiter = cfg.delimiter;
  return o;
}

inline Dataset load_for(const RunConfig& cfg) {
  if (cfg.data.empty()) throw std::invalid_argument("--data is required");
  auto ds = load_csv(cfg.data, csv_options(cfg));
  if (cfg.task == Task::Classification) {
    for (double y : ds.target)
      if (y != 0.0 && y != 1.0)
        throw std::runtime_error("classification target must be 0/1; pass --positive-label to map labels");
  }
  return ds;
}

inline void save_model_with_norm(const RunConfig& cfg, const WnnModel& model, const Dataset& train) {
  if (cfg.model_out.empty()) return;
  write_atomically(cfg.model_out, [&](std::ostream& os) { save_model(os, model); });
  write_atomically(norm_path(cfg.model_out), [&](std::ostream& os) { save_norm(os, train, cfg.task); });
}

}  // namespace detail

/// load, split, normalize, optional t-selection, train, evaluate on the
/// held-out split, save.
inline int cmd_train(const RunConfig& cfg, std::ostream& out = std::cout) {
  MetricsLog log(cfg.metrics_out, out);
  log.line(cfg.echo());

  auto ds = stage("load", [&] { return detail::load_for(cfg); });
  if (ds.rejected_rows) log.line("record=ingest rejected_rows=" + std::to_string(ds.rejected_rows));
  auto parts = stage("split", [&] { return split(ds, cfg.split_ratio, cfg.hp.seed, true); });
  auto [train_ds, test_ds] = stage("normalize", [&] { return normalize(parts.train, parts.test, cfg.task); });
  Dataset raw_test = parts.test;

  if (cfg.top_k > 0) {
    stage("select-features", [&] {
      if (cfg.task != Task::Classification) throw std::invalid_argument("--top-k needs a classification task");
      auto [selected, ranked] = t_value_select(train_ds, std::min(cfg.top_k, train_ds.dims()));
      std::vector<std::size_t> cols;
      for (std::size_t i = 0; i < selected.dims(); ++i) cols.push_back(ranked[i].column);
      train_ds = std::move(selected);
      test_ds = test_ds.select_cols(cols);
      raw_test = raw_test.select_cols(cols);
    });
  }

  TrainOptions topts;
  topts.threads = cfg.threads;
  topts.on_epoch = [&](const EpochRecord& e) { log.line(epoch_line(e)); };
  auto report = stage("train", [&] {
    return train(train_ds.features, train_ds.target, cfg.hp, cfg.activation, cfg.task, topts);
  });
  log.line("record=train epochs=" + std::to_string(report.epochs_run) + " wall_time_s=" +
           format_double(report.wall_time_s) + " final_loss=" + format_double(report.per_epoch_loss.back()));

  auto eval = stage("evaluate", [&] { return evaluate(report.final_model, test_ds.features, test_ds.target); });
  log.line("record=eval split=test " + render(eval));

  stage("save", [&] {
    detail::save_model_with_norm(cfg, report.final_model, train_ds);
    if (!cfg.test_out.empty()) write_csv(cfg.test_out, raw_test, cfg.delimiter);
  });
  log.completed();
  return 0;
}

/// Scores raw rows with a saved model and its normalization sidecar.
inline int cmd_predict(const RunConfig& cfg, std::ostream& out = std::cout) {
  if (cfg.model_in.empty()) throw StageError("load", "--model-in is required");
  if (cfg.data.empty()) throw StageError("load", "--data is required");
  auto model = stage("load-model", [&] { return load_model(cfg.model_in); });

  std::optional<NormFile> norm;
  if (std::filesystem::exists(norm_path(cfg.model_in))) {
    norm = stage("load-model", [&] {
      std::ifstream is(norm_path(cfg.model_in));
      return load_norm(is);
    });
    if (norm->feature_names.size() != model.inputs())
      throw StageError("load-model", "normalization file does not match model nin");
  }

  auto ds = stage("load", [&] {
    CsvOptions o;
    o.delimiter = cfg.delimiter;
    o.positive_label = cfg.positive_label;
    o.allow_empty = true;
    o.target_optional = true;
    o.target = !cfg.target.empty() ? cfg.target : (norm ? norm->target_name : std::string());
    o.drop = cfg.drop;
    if (norm) o.feature_columns = norm->feature_names;
    auto d = load_csv(cfg.data, o);
    if (d.rows() > 0 && d.dims() != model.inputs()) {
      throw std::runtime_error("schema mismatch: data has " + std::to_string(d.dims()) +
                               " feature columns, model expects nin=" + std::to_string(model.inputs()));
    }
    return d;
  });
  const bool has_target = !ds.target_name.empty();
  if (norm && ds.rows() > 0) {
    NormStats stats = norm->stats;
    if (!has_target) stats.target.reset();
    ds = apply_norm(std::move(ds), stats);
  }

  MetricsLog log(cfg.metrics_out, out);
  log.line(cfg.echo());
  const auto scores = stage("predict", [&] { return predict(model, ds.features); });
  {
    std::unique_ptr<std::ofstream> file;
    std::ostream* pout = &out;
    if (!cfg.predictions_out.empty()) {
      file = std::make_unique<std::ofstream>(cfg.predictions_out);
      if (!*file) throw StageError("predict", "cannot open '" + cfg.predictions_out + "'");
      pout = file.get();
    }
    for (double s : scores) {
      *pout << format_double(s);
      if (model.task == Task::Classification) *pout << ' ' << (s >= kDecisionThreshold ? 1 : 0);
      *pout << '\n';
    }
    pout->flush();
  }
  if (has_target && ds.rows() > 0) {
    auto eval = stage("evaluate", [&] { return evaluate(model, ds.features, ds.target); });
    log.line("record=eval split=input " + render(eval));
  }
  log.completed();
  return 0;
}

/// Order-preserving replay of a file as B micro-batches through a sliding
/// window. Normalization uses only the first ws-1 batches.
inline int cmd_stream(const RunConfig& cfg, std::ostream& out = std::cout) {
  MetricsLog log(cfg.metrics_out, out);
  log.line(cfg.echo());
  auto ds = stage("load", [&] { return detail::load_for(cfg); });

  auto batches = stage("normalize", [&] {
    if (cfg.window_size < 2) throw std::invalid_argument("--window-size must be >= 2");
    if (cfg.num_batches < cfg.window_size) {
      throw std::invalid_argument("--num-batches (" + std::to_string(cfg.num_batches) +
                                  ") must be >= --window-size (" + std::to_string(cfg.window_size) + ")");
    }
    auto raw = split_into_batches(ds.features, ds.target, cfg.num_batches);
    std::size_t prefix_rows = 0;
    for (std::size_t b = 0; b + 1 < cfg.window_size; ++b) prefix_rows += raw[b].size();
    std::vector<std::size_t> prefix(prefix_rows);
    std::iota(prefix.begin(), prefix.end(), std::size_t{0});
    auto normalized = apply_norm(ds, compute_norm_stats(ds.select_rows(prefix), cfg.task));
    if (cfg.top_k > 0) {
      if (cfg.task != Task::Classification) throw std::invalid_argument("--top-k needs a classification task");
      auto ranked = t_value_select(normalized.select_rows(prefix), std::min(cfg.top_k, ds.dims())).second;
      std::vector<std::size_t> cols;
      for (std::size_t i = 0; i < std::min(cfg.top_k, ds.dims()); ++i) cols.push_back(ranked[i].column);
      normalized = normalized.select_cols(cols);
    }
    return split_into_batches(normalized.features, normalized.target, cfg.num_batches);
  });

  StreamOptions sopts;
  sopts.threads = cfg.threads;
  sopts.pace_ms = cfg.pace_ms;
  sopts.on_window = [&](const WindowReport& w) { log.line(window_line(w)); };
  auto result = stage("stream", [&] {
    return run_stream(batches, cfg.window_size, cfg.hp, cfg.activation, cfg.task, sopts);
  });
  log.line(average_line(average_reports(result.reports)));
  stage("save", [&] {
    if (!cfg.model_out.empty())
      write_atomically(cfg.model_out, [&](std::ostream& os) { save_model(os, result.final_model); });
  });
  log.completed();
  return 0;
}

/// Times train() at P=1 and at each requested P with identical settings.
inline int cmd_bench(const RunConfig& cfg, std::ostream& out = std::cout) {
  MetricsLog log(cfg.metrics_out, out);
  log.line(cfg.echo());
  auto ds = stage("load", [&] { return detail::load_for(cfg); });
  auto parts = stage("split", [&] { return split(ds, cfg.split_ratio, cfg.hp.seed, true); });
  auto train_ds = stage("normalize", [&] { return normalize(parts.train, parts.test, cfg.task).first; });

  auto run = [&](std::size_t p) {
    Hyperparams hp = cfg.hp;
    hp.partitions = p;
    TrainOptions topts;
    topts.threads = cfg.threads;
    return stage("train", [&] { return train(train_ds.features, train_ds.target, hp, cfg.activation, cfg.task, topts); });
  };
  auto emit = [&](std::size_t p, const TrainReport& r, double t_seq) {
    log.line("record=bench partitions=" + std::to_string(p) + " threads=" +
             std::to_string(resolve_threads(cfg.threads, p)) + " wall_s=" + format_double(r.wall_time_s) +
             " speedup=" + format_double(speedup(t_seq, r.wall_time_s)) +
             " final_loss=" + format_double(r.per_epoch_loss.back()) + " model_digest=" +
             std::to_string(model_digest(r.final_model)));
  };
  const auto baseline = run(1);
  emit(1, baseline, baseline.wall_time_s);
  for (auto p : cfg.bench_partitions) emit(p, run(p), baseline.wall_time_s);
  log.completed();
  return 0;
}

/// Ranks features by |Welch t| on the normalized data.
inline int cmd_select_features(const RunConfig& cfg, std::ostream& out = std::cout) {
  MetricsLog log(cfg.metrics_out, out);
  log.line(cfg.echo());
  if (cfg.task != Task::Classification) throw StageError("select-features", "needs --task classification");
  auto ds = stage("load", [&] { return detail::load_for(cfg); });
  auto normalized = stage("normalize", [&] { return apply_norm(ds, compute_norm_stats(ds, cfg.task)); });
  const std::size_t k = cfg.top_k > 0 ? std::min(cfg.top_k, ds.dims()) : std::min<std::size_t>(100, ds.dims());
  auto [selected, ranked] = stage("select-features", [&] { return t_value_select(normalized, k); });
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    log.line("record=feature rank=" + std::to_string(i + 1) + " t=" + format_double(ranked[i].t_value) +
             " selected=" + (i < k ? "1" : "0") + " name=" + ranked[i].name);
  }
  if (!cfg.data_out.empty()) {
    stage("save", [&] {
      std::vector<std::size_t> cols;
      for (std::size_t i = 0; i < k; ++i) cols.push_back(ranked[i].column);
      write_csv(cfg.data_out, ds.select_cols(cols), cfg.delimiter);
    });
  }
  log.completed();
  return 0;
}

inline int cmd_synth(const RunConfig& cfg, std::ostream& out = std::cout) {
  auto ds = stage("synth", [&] {
    return cfg.task == Task::Regression ? synth_regression(cfg.samples, cfg.noise, cfg.hp.seed)
                                        : synth_classification(cfg.samples, cfg.separation, cfg.hp.seed);
  });
  if (cfg.data_out.empty() || cfg.data_out == "-") {
    write_csv(out, ds, cfg.delimiter);
  } else {
    stage("save", [&] { write_csv(cfg.data_out, ds, cfg.delimiter); });
  }
  return 0;
}

inline int dispatch(const RunConfig& cfg, std::ostream& out = std::cout) {
  if (cfg.mode == "train") return cmd_train(cfg, out);
  if (cfg.mode == "predict") return cmd_predict(cfg, out);
  if (cfg.mode == "stream") return cmd_stream(cfg, out);
  if (cfg.mode == "bench") return cmd_bench(cfg, out);
  if (cfg.mode == "select-features") return cmd_select_features(cfg, out);
  if (cfg.mode == "synth") return cmd_synth(cfg, out);
  throw std::invalid_argument("unknown subcommand '" + cfg.mode + "'");
}

}  // namespace spwnn::cli
