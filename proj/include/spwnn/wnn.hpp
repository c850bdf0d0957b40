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
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spwnn/matrix.hpp"
#include "spwnn/random.hpp"

namespace spwnn {

/// Smallest admissible |dilation|. Every hidden unit divides by its dilation.
inline constexpr double kEpsDilation = 1e-6;
/// Predictions are clamped to [kEpsLog, 1 - kEpsLog] before taking logs.
inline constexpr double kEpsLog = 1e-12;

enum class Activation { Morlet, Gaussian };
enum class Task { Regression, Classification };

/// Thrown when training produces a non-finite gradient or loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string_view to_string(Activation a) noexcept {
  return a == Activation::Morlet ? "morlet" : "gaussian";
}
inline std::string_view to_string(Task t) noexcept {
  return t == Task::Regression ? "regression" : "classification";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "morlet") return Activation::Morlet;
  if (s == "gaussian") return Activation::Gaussian;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "' (expected morlet|gaussian)");
}
inline Task parse_task(std::string_view s) {
  if (s == "regression") return Task::Regression;
  if (s == "classification") return Task::Classification;
  throw std::invalid_argument("unknown task '" + std::string(s) +
                              "' (expected regression|classification)");
}

struct Hyperparams {
  double lr = 0.45;
  double momentum = 0.999;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::size_t hidden = 150;
  std::size_t partitions = 1;
  std::uint64_t seed = 42;

  void validate() const {
    // lr = 0 is accepted: it freezes the model, which is a useful fixed point.
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("lr must be finite and >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
    if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
    if (hidden == 0) throw std::invalid_argument("hidden must be >= 1");
    if (partitions == 0) throw std::invalid_argument("partitions must be >= 1");
  }
};

/// One tensor per learnable parameter group: input weights [nin x nhn],
/// output weights, dilations and translations [nhn].
struct ParamTensors {
  Matrix input_weights;
  Vector output_weights;
  Vector dilation;
  Vector translation;

  ParamTensors() = default;
  ParamTensors(std::size_t nin, std::size_t nhn)
      : input_weights(nin, nhn), output_weights(nhn), dilation(nhn), translation(nhn) {}

  std::size_t inputs() const noexcept { return input_weights.rows(); }
  std::size_t hidden() const noexcept { return output_weights.size(); }

  bool same_shape(const ParamTensors& o) const noexcept {
    return inputs() == o.inputs() && hidden() == o.hidden() && input_weights.cols() == hidden() &&
           o.input_weights.cols() == o.hidden() && dilation.size() == hidden() &&
           translation.size() == hidden() && o.dilation.size() == o.hidden() &&
           o.translation.size() == o.hidden();
  }

  std::array<std::span<double>, 4> groups() noexcept {
    return {input_weights.flat(), std::span<double>(output_weights), std::span<double>(dilation),
            std::span<double>(translation)};
  }
  std::array<std::span<const double>, 4> groups() const noexcept {
    return {input_weights.flat(), std::span<const double>(output_weights),
            std::span<const double>(dilation), std::span<const double>(translation)};
  }

  bool all_finite() const noexcept {
    for (auto g : groups())
      for (double v : g)
        if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const ParamTensors&) const = default;
};

/// dE/dtheta for every parameter, averaged over a batch.
struct GradientSet : ParamTensors {
  using ParamTensors::ParamTensors;
};

/// The previous step's Delta-theta per parameter. Zero before the first update.
struct MomentumState : ParamTensors {
  using ParamTensors::ParamTensors;
};

/// Single-hidden-layer wavelet network with one output node.
struct WnnModel {
  ParamTensors params;
  Activation activation = Activation::Morlet;
  Task task = Task::Regression;

  WnnModel() = default;
  /// Zero weights, unit dilations.
  WnnModel(std::size_t nin, std::size_t nhn, Activation act, Task t)
      : params(nin, nhn), activation(act), task(t) {
    if (nin == 0 || nhn == 0) throw std::invalid_argument("model needs nin >= 1 and nhn >= 1");
    std::fill(params.dilation.begin(), params.dilation.end(), 1.0);
  }

  std::size_t inputs() const noexcept { return params.inputs(); }
  std::size_t hidden() const noexcept { return params.hidden(); }

  bool same_config(const WnnModel& o) const noexcept {
    return activation == o.activation && task == o.task && params.same_shape(o.params) &&
           inputs() == o.inputs() && hidden() == o.hidden();
  }

  bool operator==(const WnnModel&) const = default;
};

inline double activate(Activation kind, double t) noexcept {
  if (kind == Activation::Morlet) return std::cos(1.75 * t) * std::exp(-0.5 * t * t);
  return std::exp(-t * t);
}

inline double activate_deriv(Activation kind, double t) noexcept {
  if (kind == Activation::Morlet)
    return std::exp(-0.5 * t * t) * (-1.75 * std::sin(1.75 * t) - t * std::cos(1.75 * t));
  return -2.0 * t * std::exp(-t * t);
}

inline double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Keeps |a| >= kEpsDilation, preserving sign (zero maps to +eps).
inline void clamp_dilations(std::span<double> dilation) noexcept {
  for (double& a : dilation) {
    if (std::abs(a) < kEpsDilation) a = std::signbit(a) && a != 0.0 ? -kEpsDilation : kEpsDilation;
  }
}

/// w, W, b ~ U[-1, 1]; a ~ U[0.5, 2].
inline WnnModel init_model(std::size_t nin, const Hyperparams& hp, Activation act, Task task) {
  hp.validate();
  WnnModel m(nin, hp.hidden, act, task);
  Rng rng(derive_seed(hp.seed, 0x1A17));
  for (double& v : m.params.input_weights.flat()) v = rng.uniform(-1.0, 1.0);
  for (double& v : m.params.output_weights) v = rng.uniform(-1.0, 1.0);
  for (double& v : m.params.translation) v = rng.uniform(-1.0, 1.0);
  for (double& v : m.params.dilation) v = rng.uniform(0.5, 2.0);
  return m;
}

struct ForwardResult {
  double output = 0.0;  ///< sigmoid-squashed for classification
  double raw = 0.0;
  Vector hidden;
  Vector args;  ///< wavelet arguments (w.x - b) / a
};

namespace detail {

inline void check_row(const WnnModel& model, std::size_t len) {
  if (len != model.inputs()) {
    throw std::invalid_argument("input has " + std::to_string(len) + " features, model expects nin=" +
                                std::to_string(model.inputs()));
  }
}

/// Fills args[j] and hidden[j]; returns the pre-squash output.
inline double forward_into(const WnnModel& model, std::span<const double> x, std::span<double> args,
                           std::span<double> hidden) noexcept {
  const auto& p = model.params;
  const std::size_t nhn = model.hidden();
  std::fill(args.begin(), args.end(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    auto wrow = p.input_weights.row(i);
    for (std::size_t j = 0; j < nhn; ++j) args[j] += wrow[j] * xi;
  }
  double raw = 0.0;
  for (std::size_t j = 0; j < nhn; ++j) {
    args[j] = (args[j] - p.translation[j]) / p.dilation[j];
    hidden[j] = activate(model.activation, args[j]);
    raw += p.output_weights[j] * hidden[j];
  }
  return raw;
}

inline double squash(Task task, double raw) noexcept {
  return task == Task::Classification ? sigmoid(raw) : raw;
}

}  // namespace detail

inline ForwardResult forward(const WnnModel& model, std::span<const double> x) {
  detail::check_row(model, x.size());
  ForwardResult r;
  r.hidden.resize(model.hidden());
  r.args.resize(model.hidden());
  r.raw = detail::forward_into(model, x, r.args, r.hidden);
  r.output = detail::squash(model.task, r.raw);
  return r;
}

/// Mean squared error (regression) or mean binary cross-entropy (classification).
inline double loss(Task task, std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw std::invalid_argument("loss: predictions and targets differ in length");
  if (predictions.empty()) throw std::invalid_argument("loss: empty input");
  double sum = 0.0;
  if (task == Task::Regression) {
    for (std::size_t k = 0; k < predictions.size(); ++k) {
      const double d = targets[k] - predictions[k];
      sum += d * d;
    }
  } else {
    for (std::size_t k = 0; k < predictions.size(); ++k) {
      const double v = std::clamp(predictions[k], kEpsLog, 1.0 - kEpsLog);
      const double y = targets[k];
      sum -= y * std::log(v) + (1.0 - y) * std::log(1.0 - v);
    }
  }
  return std::max(0.0, sum / static_cast<double>(predictions.size()));
}

/// Analytic batch-mean gradient of loss() over the listed rows of xs.
inline GradientSet backward(const WnnModel& model, const Matrix& xs, std::span<const double> ys,
                            std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("backward: empty batch");
  detail::check_row(model, xs.cols());
  if (ys.size() != xs.rows()) throw std::invalid_argument("backward: xs and ys differ in length");

  const auto& p = model.params;
  const std::size_t nin = model.inputs();
  const std::size_t nhn = model.hidden();
  const double inv_n = 1.0 / static_cast<double>(rows.size());

  GradientSet g(nin, nhn);
  Vector args(nhn), hidden(nhn), common(nhn);
  for (std::size_t r : rows) {
    auto x = xs.row(r);
    const double raw = detail::forward_into(model, x, args, hidden);
    const double v = detail::squash(model.task, raw);
    const double y = ys[r];
    // dE/d(raw output) for this sample, including the 1/n of the batch mean.
    const double delta = model.task == Task::Regression ? -2.0 * (y - v) * inv_n : (v - y) * inv_n;
    for (std::size_t j = 0; j < nhn; ++j) {
      g.output_weights[j] += delta * hidden[j];
      // dE/d(arg_j) / a_j
      common[j] = delta * p.output_weights[j] * activate_deriv(model.activation, args[j]) / p.dilation[j];
      g.translation[j] -= common[j];
      g.dilation[j] -= common[j] * args[j];
    }
    for (std::size_t i = 0; i < nin; ++i) {
      const double xi = x[i];
      auto grow = g.input_weights.row(i);
      for (std::size_t j = 0; j < nhn; ++j) grow[j] += common[j] * xi;
    }
  }
  return g;
}

inline GradientSet backward(const WnnModel& model, const Matrix& xs, std::span<const double> ys) {
  std::vector<std::size_t> rows(xs.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return backward(model, xs, ys, rows);
}

/// Momentum step: delta = -lr * grad + momentum * delta_prev; theta += delta.
/// Updates model and momentum in place. A non-finite gradient throws
/// DivergenceError before anything is modified.
inline void apply_update(WnnModel& model, MomentumState& mom, const GradientSet& grads, double lr,
                         double momentum) {
  if (!model.params.same_shape(grads) || !model.params.same_shape(mom))
    throw std::invalid_argument("apply_update: shape mismatch");
  if (!grads.all_finite()) throw DivergenceError("non-finite gradient; reduce the learning rate");
  auto theta = model.params.groups();
  auto delta = mom.groups();
  auto grad = grads.groups();
  for (std::size_t g = 0; g < theta.size(); ++g) {
    for (std::size_t k = 0; k < theta[g].size(); ++k) {
      delta[g][k] = -lr * grad[g][k] + momentum * delta[g][k];
      theta[g][k] += delta[g][k];
    }
  }
  clamp_dilations(model.params.dilation);
  if (!model.params.all_finite()) throw DivergenceError("parameters became non-finite after update");
}

inline void apply_update(WnnModel& model, MomentumState& mom, const GradientSet& grads,
                         const Hyperparams& hp) {
  apply_update(model, mom, grads, hp.lr, hp.momentum);
}

inline MomentumState zero_momentum(const WnnModel& model) {
  return MomentumState(model.inputs(), model.hidden());
}

}  // namespace spwnn
