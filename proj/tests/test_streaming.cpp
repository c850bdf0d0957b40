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

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spwnn/data.hpp"
#include "spwnn/streaming.hpp"

using namespace spwnn;

namespace {

MicroBatch make_batch(std::uint64_t id, std::size_t rows = 2) {
  MicroBatch b;
  b.id = id;
  b.rows = Matrix(rows, 1);
  b.targets.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) b.rows(r, 0) = static_cast<double>(id);
  return b;
}

Hyperparams stream_hp() {
  Hyperparams hp;
  hp.hidden = 5;
  hp.lr = 0.05;
  hp.momentum = 0.6;
  hp.batch_size = 16;
  hp.epochs = 3;
  hp.partitions = 2;
  hp.seed = 31;
  return hp;
}

std::vector<MicroBatch> regression_batches(std::size_t n, std::size_t b, std::uint64_t seed) {
  const auto ds = synth_regression(n, 0.05, seed);
  return split_into_batches(ds.features, ds.target, b);
}

}  // namespace

TEST(StreamWindow, EnqueueFillsToCapacity) {
  StreamWindow w(2);
  w.enqueue(make_batch(1));
  EXPECT_EQ(w.size(), 1u);
  EXPECT_FALSE(w.full());
  w.enqueue(make_batch(2));
  EXPECT_TRUE(w.full());
  EXPECT_THROW(w.enqueue(make_batch(3)), std::logic_error);
  EXPECT_THROW(StreamWindow(1), std::invalid_argument);
}

TEST(StreamWindow, SlideEvictsOldest) {
  StreamWindow w(2);
  w.enqueue(make_batch(1));
  EXPECT_THROW(w.slide(), std::logic_error);
  w.enqueue(make_batch(2));
  w.slide();
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w.batches().front().id, 2u);

  StreamWindow w3(3);
  for (std::uint64_t id : {3, 4, 5}) w3.enqueue(make_batch(id));
  w3.slide();
  ASSERT_EQ(w3.size(), 2u);
  EXPECT_EQ(w3.batches()[0].id, 4u);
  EXPECT_EQ(w3.batches()[1].id, 5u);
  EXPECT_EQ(w3.newest().id, 5u);
}

TEST(StreamWindow, IdsMustIncrease) {
  StreamWindow w(3);
  w.enqueue(make_batch(4));
  EXPECT_THROW(w.enqueue(make_batch(4)), std::invalid_argument);
  EXPECT_THROW(w.enqueue(make_batch(2)), std::invalid_argument);
}

TEST(StreamWindow, TrainingRowsExcludeNewest) {
  StreamWindow w(3);
  for (std::uint64_t id : {1, 2, 3}) w.enqueue(make_batch(id, id));
  const auto [xs, ys] = w.training_rows();
  ASSERT_EQ(xs.rows(), 3u);
  EXPECT_EQ(xs(0, 0), 1.0);
  EXPECT_EQ(xs(1, 0), 2.0);
  EXPECT_EQ(xs(2, 0), 2.0);
  EXPECT_EQ(ys.size(), 3u);
}

TEST(SplitIntoBatches, Sizes) {
  auto sizes = [](std::size_t n, std::size_t b) {
    Matrix xs(n, 1);
    for (std::size_t r = 0; r < n; ++r) xs(r, 0) = static_cast<double>(r);
    std::vector<std::size_t> out;
    double next = 0;
    std::uint64_t id = 1;
    for (const auto& mb : split_into_batches(xs, Vector(n, 0.0), b)) {
      EXPECT_EQ(mb.id, id++);
      for (std::size_t r = 0; r < mb.size(); ++r) EXPECT_EQ(mb.rows(r, 0), next++);
      out.push_back(mb.size());
    }
    return out;
  };
  EXPECT_EQ(sizes(100, 10), std::vector<std::size_t>(10, 10));
  auto s = sizes(101, 10);
  EXPECT_EQ(s.front(), 11u);
  EXPECT_EQ(std::vector<std::size_t>(s.begin() + 1, s.end()), std::vector<std::size_t>(9, 10));
  EXPECT_EQ(sizes(5, 1), std::vector<std::size_t>{5});
  EXPECT_THROW(split_into_batches(Matrix(3, 1), Vector(3, 0.0), 4), std::invalid_argument);
  EXPECT_THROW(split_into_batches(Matrix(3, 1), Vector(3, 0.0), 0), std::invalid_argument);
}

TEST(RunStream, ReportCounts) {
  const auto hp = stream_hp();
  for (auto [b, ws, expected] : {std::tuple{10u, 2u, 9u}, {20u, 2u, 19u}, {2u, 2u, 1u}, {6u, 3u, 4u}}) {
    const auto batches = regression_batches(200, b, 1);
    const auto res = run_stream(batches, ws, hp, Activation::Morlet, Task::Regression);
    ASSERT_EQ(res.reports.size(), expected);
    for (std::size_t i = 0; i < res.reports.size(); ++i) {
      const auto& r = res.reports[i];
      EXPECT_EQ(r.window_index, i + 1);
      EXPECT_EQ(r.tested_on, i + ws);
      ASSERT_EQ(r.trained_on.size(), ws - 1);
      for (std::size_t k = 0; k < ws - 1; ++k) EXPECT_EQ(r.trained_on[k], i + 1 + k);
      EXPECT_TRUE(r.metrics.mse.has_value());
    }
  }
  const auto batches = regression_batches(50, 3, 1);
  EXPECT_THROW(run_stream(batches, 4, hp, Activation::Morlet, Task::Regression), std::invalid_argument);
  EXPECT_THROW(run_stream(batches, 1, hp, Activation::Morlet, Task::Regression), std::invalid_argument);
}

TEST(RunStream, ReplaysWarmStartedTraining) {
  const auto hp = stream_hp();
  const auto batches = regression_batches(300, 10, 4);
  const auto res = run_stream(batches, 2, hp, Activation::Gaussian, Task::Regression);

  // Reference: one model, trained on batch i with salt i, tested on batch i+1.
  auto model = init_model(1, hp, Activation::Gaussian, Task::Regression);
  auto mom = zero_momentum(model);
  for (std::size_t i = 0; i + 1 < batches.size(); ++i) {
    TrainOptions opts;
    opts.schedule_salt = i + 1;
    auto r = train_from(model, mom, batches[i].rows, batches[i].targets, hp, opts);
    model = r.final_model;
    mom = r.final_momentum;
    const auto scores = predict(model, batches[i + 1].rows);
    EXPECT_EQ(*res.reports[i].metrics.mse, loss(Task::Regression, scores, batches[i + 1].targets)) << i;
  }
  EXPECT_EQ(res.final_model, model);
}

TEST(RunStream, DeterministicAndPaceIndependent) {
  const auto hp = stream_hp();
  const auto ds = synth_classification(240, 3.0, 6);
  const auto batches = split_into_batches(ds.features, ds.target, 6);
  const auto a = run_stream(batches, 2, hp, Activation::Morlet, Task::Classification);
  StreamOptions opts;
  opts.pace_ms = 1;
  opts.threads = 1;
  const auto b = run_stream(batches, 2, hp, Activation::Morlet, Task::Classification, opts);
  ASSERT_EQ(a.reports.size(), b.reports.size());
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    EXPECT_EQ(a.reports[i].metrics.auc, b.reports[i].metrics.auc);
    EXPECT_EQ(a.reports[i].metrics.sensitivity, b.reports[i].metrics.sensitivity);
    EXPECT_EQ(a.reports[i].metrics.specificity, b.reports[i].metrics.specificity);
  }
  EXPECT_EQ(a.final_model, b.final_model);
}

TEST(RunStream, TinyWindowClampsPartitions) {
  auto hp = stream_hp();
  hp.partitions = 8;
  const auto batches = regression_batches(20, 10, 2);  // 2 rows per batch
  std::size_t seen = 0;
  StreamOptions opts;
  opts.on_window = [&](const WindowReport&) { ++seen; };
  const auto res = run_stream(batches, 2, hp, Activation::Morlet, Task::Regression, opts);
  EXPECT_EQ(res.reports.size(), 9u);
  EXPECT_EQ(seen, 9u);
}

TEST(AverageReports, MeanOfEachMetric) {
  std::vector<WindowReport> reps(3);
  const double aucs[] = {0.5, 0.75, 1.0};
  for (std::size_t i = 0; i < 3; ++i) {
    reps[i].metrics.task = Task::Classification;
    reps[i].metrics.auc = aucs[i];
    reps[i].metrics.sensitivity = 1.0;
    reps[i].metrics.specificity = 0.1 * static_cast<double>(i);
    reps[i].metrics.n = 10;
  }
  reps[1].metrics.auc.reset();
  const auto avg = average_reports(reps);
  EXPECT_EQ(avg.windows, 3u);
  EXPECT_EQ(*avg.metrics.auc, 0.75);
  EXPECT_EQ(*avg.metrics.sensitivity, 1.0);
  EXPECT_NEAR(*avg.metrics.specificity, 0.1, 1e-15);
  EXPECT_EQ(avg.metrics.n, 30u);
  EXPECT_FALSE(avg.metrics.mse.has_value());
}
