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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "spwnn/matrix.hpp"
#include "spwnn/random.hpp"
#include "spwnn/wnn.hpp"

namespace spwnn {

/// One data-parallel shard of the training set.
struct Partition {
  Matrix rows;
  Vector targets;
  std::size_t index = 0;
  std::uint64_t seed = 0;  ///< global seed the per-epoch shuffle seed is derived from

  std::size_t size() const noexcept { return targets.size(); }
  std::uint64_t local_seed(std::size_t epoch) const noexcept { return derive_seed(seed, index + 1, epoch); }
};

/// Seeded shuffle, then P contiguous blocks; the first (n mod P) blocks get
/// one extra row.
inline std::vector<Partition> partition_data(const Matrix& xs, std::span<const double> ys, std::size_t parts,
                                             std::uint64_t seed) {
  if (xs.rows() != ys.size()) throw std::invalid_argument("partition_data: xs and ys differ in length");
  if (parts == 0) throw std::invalid_argument("partition_data: need at least one partition");
  if (parts > xs.rows()) {
    throw std::invalid_argument("partition_data: " + std::to_string(parts) + " partitions for only " +
                                std::to_string(xs.rows()) + " rows");
  }
  const auto order = shuffled_indices(xs.rows(), derive_seed(seed, 0x9A27));
  const std::size_t base = xs.rows() / parts;
  const std::size_t extra = xs.rows() % parts;

  std::vector<Partition> out;
  out.reserve(parts);
  std::size_t start = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    std::span<const std::size_t> idx(order.data() + start, len);
    out.push_back(Partition{xs.select_rows(idx), select(ys, idx), p, seed});
    start += len;
  }
  return out;
}

inline Vector predict(const WnnModel& model, const Matrix& xs) {
  Vector out;
  out.reserve(xs.rows());
  if (xs.rows() == 0) return out;
  detail::check_row(model, xs.cols());
  Vector args(model.hidden()), hidden(model.hidden());
  for (std::size_t r = 0; r < xs.rows(); ++r)
    out.push_back(detail::squash(model.task, detail::forward_into(model, xs.row(r), args, hidden)));
  return out;
}

inline double dataset_loss(const WnnModel& model, const Matrix& xs, std::span<const double> ys) {
  return loss(model.task, predict(model, xs), ys);
}

struct LocalResult {
  WnnModel model;
  MomentumState momentum;
  double loss = 0.0;
  std::size_t steps = 0;
};

/// One pass of shuffled mini-batches over a partition, starting from the
/// broadcast state. The final short batch is used as-is.
inline LocalResult local_epoch(const WnnModel& model, const MomentumState& mom, const Partition& part,
                               const Hyperparams& hp, std::size_t epoch) {
  LocalResult r{model, mom, 0.0, 0};
  auto order = shuffled_indices(part.size(), part.local_seed(epoch));
  for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
    const std::size_t len = std::min(hp.batch_size, order.size() - start);
    std::span<const std::size_t> batch(order.data() + start, len);
    auto grads = backward(r.model, part.rows, part.targets, batch);
    apply_update(r.model, r.momentum, grads, hp);
    ++r.steps;
  }
  r.loss = dataset_loss(r.model, part.rows, part.targets);
  return r;
}

/// Unweighted element-wise mean of parameters and momentum.
inline std::pair<WnnModel, MomentumState> average_models(std::span<const WnnModel> models,
                                                         std::span<const MomentumState> moms) {
  if (models.empty()) throw std::invalid_argument("average_models: no models");
  if (models.size() != moms.size()) throw std::invalid_argument("average_models: model/momentum count mismatch");
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (!models[k].same_config(models[0]) || !moms[k].same_shape(models[0].params))
      throw std::invalid_argument("average_models: shape or configuration mismatch");
  }
  std::pair<WnnModel, MomentumState> out{models[0], moms[0]};
  if (models.size() == 1) return out;

  const double inv = 1.0 / static_cast<double>(models.size());
  auto accumulate = [&](auto&& dst_groups, auto&& get_groups) {
    for (std::size_t g = 0; g < dst_groups.size(); ++g) {
      for (std::size_t e = 0; e < dst_groups[g].size(); ++e) {
        double sum = 0.0;
        for (std::size_t k = 0; k < models.size(); ++k) sum += get_groups(k)[g][e];
        dst_groups[g][e] = sum * inv;
      }
    }
  };
  accumulate(out.first.params.groups(), [&](std::size_t k) { return models[k].params.groups(); });
  accumulate(out.second.groups(), [&](std::size_t k) { return moms[k].groups(); });
  clamp_dilations(out.first.params.dilation);
  return out;
}

struct EpochRecord {
  std::size_t epoch = 0;  ///< 1-based
  double loss = 0.0;
  double elapsed_s = 0.0;
};

struct TrainOptions {
  /// OS threads running partitions; 0 picks min(P, hardware cores).
  std::size_t threads = 0;
  /// Distinguishes repeated training calls sharing one seed (stream windows).
  std::uint64_t schedule_salt = 0;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainReport {
  Vector per_epoch_loss;
  double wall_time_s = 0.0;
  std::size_t epochs_run = 0;
  WnnModel final_model;
  MomentumState final_momentum;
};

inline std::size_t resolve_threads(std::size_t requested, std::size_t parts) {
  std::size_t t = requested;
  if (t == 0) t = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return std::clamp<std::size_t>(t, 1, parts);
}

/// Epoch-synchronous model averaging, continuing from a given state: every
/// partition runs local_epoch from the same broadcast (model, momentum), a
/// barrier collects the results, their mean becomes the next broadcast.
inline TrainReport train_from(WnnModel model, MomentumState mom, const Matrix& xs, std::span<const double> ys,
                              const Hyperparams& hp, const TrainOptions& opts = {}) {
  hp.validate();
  if (xs.rows() != ys.size()) throw std::invalid_argument("train: xs and ys differ in length");
  if (xs.rows() == 0) throw std::invalid_argument("train: empty training set");
  detail::check_row(model, xs.cols());
  if (!mom.same_shape(model.params)) throw std::invalid_argument("train: momentum shape mismatch");

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const auto parts = partition_data(xs, ys, hp.partitions, derive_seed(hp.seed, opts.schedule_salt));
  const std::size_t threads = resolve_threads(opts.threads, parts.size());

  TrainReport report;
  report.per_epoch_loss.reserve(hp.epochs);
  std::vector<WnnModel> local_models(parts.size());
  std::vector<MomentumState> local_moms(parts.size());
  std::vector<std::exception_ptr> errors(parts.size());

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    auto work = [&](std::size_t worker) {
      for (std::size_t p = worker; p < parts.size(); p += threads) {
        try {
          auto r = local_epoch(model, mom, parts[p], hp, epoch);
          local_models[p] = std::move(r.model);
          local_moms[p] = std::move(r.momentum);
        } catch (...) {
          errors[p] = std::current_exception();
        }
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(threads);
      for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t);
    }  // barrier: jthreads join here

    for (auto& e : errors) {
      if (!e) continue;
      try {
        std::rethrow_exception(e);
      } catch (const DivergenceError& d) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1) + ": " + d.what());
      }
    }

    std::tie(model, mom) = average_models(local_models, local_moms);
    const double epoch_loss = dataset_loss(model, xs, ys);
    if (!std::isfinite(epoch_loss))
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1) + ": non-finite loss");
    report.per_epoch_loss.push_back(epoch_loss);
    if (opts.on_epoch) opts.on_epoch(EpochRecord{epoch + 1, epoch_loss, elapsed()});
  }

  report.epochs_run = hp.epochs;
  report.final_model = std::move(model);
  report.final_momentum = std::move(mom);
  report.wall_time_s = elapsed();
  return report;
}

/// Fresh model from hp.seed, then train_from.
inline TrainReport train(const Matrix& xs, std::span<const double> ys, const Hyperparams& hp, Activation act,
                         Task task, const TrainOptions& opts = {}) {
  auto model = init_model(xs.cols(), hp, act, task);
  auto mom = zero_momentum(model);
  return train_from(std::move(model), std::move(mom), xs, ys, hp, opts);
}

}  // namespace spwnn
