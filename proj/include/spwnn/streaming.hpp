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

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "spwnn/matrix.hpp"
#include "spwnn/metrics.hpp"
#include "spwnn/trainer.hpp"
#include "spwnn/wnn.hpp"

namespace spwnn {

struct MicroBatch {
  std::uint64_t id = 0;
  Matrix rows;
  Vector targets;

  std::size_t size() const noexcept { return targets.size(); }
};

/// Contiguous, order-preserving blocks; the first (n mod B) batches get one
/// extra row. Ids run 1..B.
inline std::vector<MicroBatch> split_into_batches(const Matrix& xs, std::span<const double> ys,
                                                  std::size_t num_batches) {
  if (xs.rows() != ys.size()) throw std::invalid_argument("split_into_batches: xs and ys differ in length");
  if (num_batches == 0 || num_batches > xs.rows()) {
    throw std::invalid_argument("split_into_batches: cannot cut " + std::to_string(xs.rows()) + " rows into " +
                                std::to_string(num_batches) + " batches");
  }
  const std::size_t base = xs.rows() / num_batches;
  const std::size_t extra = xs.rows() % num_batches;
  std::vector<MicroBatch> out;
  out.reserve(num_batches);
  std::size_t start = 0;
  for (std::size_t b = 0; b < num_batches; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    std::vector<std::size_t> idx(len);
    for (std::size_t k = 0; k < len; ++k) idx[k] = start + k;
    out.push_back(MicroBatch{b + 1, xs.select_rows(idx), select(ys, idx)});
    start += len;
  }
  return out;
}

/// Fixed-capacity buffer of the most recent micro-batches, oldest first.
/// Batches leave only through slide().
class StreamWindow {
 public:
  explicit StreamWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity < 2) throw std::invalid_argument("window size must be >= 2");
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return buffer_.size(); }
  bool full() const noexcept { return buffer_.size() == capacity_; }
  const std::deque<MicroBatch>& batches() const noexcept { return buffer_; }

  void enqueue(MicroBatch batch) {
    if (full()) throw std::logic_error("enqueue on a full window; slide first");
    if (batch.size() == 0 || batch.rows.rows() != batch.size())
      throw std::invalid_argument("malformed micro-batch " + std::to_string(batch.id));
    if (last_id_ && batch.id <= *last_id_)
      throw std::invalid_argument("micro-batch ids must strictly increase");
    last_id_ = batch.id;
    buffer_.push_back(std::move(batch));
  }

  void slide() {
    if (!full()) throw std::logic_error("slide on a window that is not full");
    buffer_.pop_front();
  }

  /// Rows and targets of every batch except the newest.
  std::pair<Matrix, Vector> training_rows() const {
    if (!full()) throw std::logic_error("window not full");
    Matrix xs(0, buffer_.front().rows.cols());
    Vector ys;
    for (std::size_t b = 0; b + 1 < buffer_.size(); ++b) {
      for (std::size_t r = 0; r < buffer_[b].rows.rows(); ++r) xs.append_row(buffer_[b].rows.row(r));
      ys.insert(ys.end(), buffer_[b].targets.begin(), buffer_[b].targets.end());
    }
    return {std::move(xs), std::move(ys)};
  }

  const MicroBatch& newest() const { return buffer_.back(); }

 private:
  std::size_t capacity_;
  std::deque<MicroBatch> buffer_;
  std::optional<std::uint64_t> last_id_;
};

struct WindowReport {
  std::size_t window_index = 0;  ///< 1-based
  EvalReport metrics;
  std::vector<std::uint64_t> trained_on;
  std::uint64_t tested_on = 0;
  double elapsed_s = 0.0;  ///< training plus evaluation
};

struct StreamOptions {
  std::size_t threads = 0;
  /// Sleep between arrivals. Affects wall time only.
  std::size_t pace_ms = 0;
  std::function<void(const WindowReport&)> on_window;
};

struct StreamResult {
  std::vector<WindowReport> reports;
  WnnModel final_model;
};

/// Prequential replay: one persistent model; whenever the window fills it
/// trains on the older ws-1 batches (warm start, hp.epochs epochs), then
/// scores the newest batch, then slides by one.
inline StreamResult run_stream(std::span<const MicroBatch> batches, std::size_t ws, const Hyperparams& hp,
                               Activation act, Task task, const StreamOptions& opts = {}) {
  hp.validate();
  if (ws < 2) throw std::invalid_argument("window size must be >= 2");
  if (batches.size() < ws) {
    throw std::invalid_argument("stream has " + std::to_string(batches.size()) + " batches, fewer than window size " +
                                std::to_string(ws));
  }
  StreamResult result;
  WnnModel model = init_model(batches.front().rows.cols(), hp, act, task);
  MomentumState mom = zero_momentum(model);
  StreamWindow window(ws);

  for (const auto& batch : batches) {
    if (opts.pace_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(opts.pace_ms));
    window.enqueue(batch);
    if (!window.full()) continue;

    const auto t0 = std::chrono::steady_clock::now();
    WindowReport rep;
    rep.window_index = result.reports.size() + 1;
    for (std::size_t b = 0; b + 1 < window.size(); ++b) rep.trained_on.push_back(window.batches()[b].id);
    rep.tested_on = window.newest().id;

    auto [xs, ys] = window.training_rows();
    Hyperparams window_hp = hp;
    window_hp.partitions = std::min(hp.partitions, xs.rows());
    TrainOptions topts;
    topts.threads = opts.threads;
    topts.schedule_salt = rep.window_index;
    auto trained = train_from(std::move(model), std::move(mom), xs, ys, window_hp, topts);
    model = std::move(trained.final_model);
    mom = std::move(trained.final_momentum);

    rep.metrics = evaluate(model, window.newest().rows, window.newest().targets);
    rep.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opts.on_window) opts.on_window(rep);
    result.reports.push_back(std::move(rep));
    window.slide();
  }
  result.final_model = std::move(model);
  return result;
}

/// Per-metric mean over the windows that report it; n is the total tested rows.
struct StreamAverage {
  std::size_t windows = 0;
  EvalReport metrics;
  double elapsed_s = 0.0;
};

inline StreamAverage average_reports(std::span<const WindowReport> reports) {
  StreamAverage avg;
  avg.windows = reports.size();
  if (reports.empty()) return avg;
  avg.metrics.task = reports.front().metrics.task;
  auto mean_of = [&](auto member) -> std::optional<double> {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : reports) {
      if (const auto& v = r.metrics.*member) {
        sum += *v;
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  };
  avg.metrics.mse = mean_of(&EvalReport::mse);
  avg.metrics.sensitivity = mean_of(&EvalReport::sensitivity);
  avg.metrics.specificity = mean_of(&EvalReport::specificity);
  avg.metrics.auc = mean_of(&EvalReport::auc);
  double elapsed = 0.0, eval_elapsed = 0.0;
  for (const auto& r : reports) {
    avg.metrics.n += r.metrics.n;
    elapsed += r.elapsed_s;
    eval_elapsed += r.metrics.elapsed_s;
  }
  avg.elapsed_s = elapsed / static_cast<double>(reports.size());
  avg.metrics.elapsed_s = eval_elapsed / static_cast<double>(reports.size());
  return avg;
}

}  // namespace spwnn
