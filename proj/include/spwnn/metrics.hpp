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
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spwnn/text.hpp"
#include "spwnn/trainer.hpp"
#include "spwnn/wnn.hpp"

namespace spwnn {

inline constexpr double kDecisionThreshold = 0.5;

/// AUC is undefined when only one class is present.
class SingleClassError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ConfusionRates {
  double sensitivity = 1.0;
  double specificity = 1.0;
  bool vacuous_sensitivity = false;  ///< no positives in the labels
  bool vacuous_specificity = false;  ///< no negatives in the labels
};

/// Positive prediction iff score >= threshold. A rate whose class is absent is
/// reported as 1.0 and flagged.
inline ConfusionRates confusion_rates(std::span<const double> scores, std::span<const double> labels,
                                      double threshold = kDecisionThreshold) {
  if (scores.size() != labels.size()) throw std::invalid_argument("confusion_rates: length mismatch");
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const bool predicted = scores[k] >= threshold;
    if (labels[k] >= 0.5)
      predicted ? ++tp : ++fn;
    else
      predicted ? ++fp : ++tn;
  }
  ConfusionRates r;
  if (tp + fn == 0)
    r.vacuous_sensitivity = true;
  else
    r.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tn + fp == 0)
    r.vacuous_specificity = true;
  else
    r.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
  return r;
}

/// Mann-Whitney AUC with midranks for tied scores.
inline double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    // 1-based ranks i+1 .. j+1 share their mean.
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] >= 0.5) {
        pos_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw SingleClassError("auc: needs at least one positive and one negative label");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

struct EvalReport {
  Task task = Task::Regression;
  std::optional<double> mse;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> auc;
  std::size_t n = 0;
  double elapsed_s = 0.0;
  bool vacuous_sensitivity = false;
  bool vacuous_specificity = false;
  bool auc_omitted = false;  ///< single-class test set
};

inline EvalReport evaluate_scores(Task task, std::span<const double> scores, std::span<const double> ys) {
  EvalReport r;
  r.task = task;
  r.n = ys.size();
  if (task == Task::Regression) {
    if (!ys.empty()) r.mse = loss(Task::Regression, scores, ys);
    return r;
  }
  const auto rates = confusion_rates(scores, ys);
  r.sensitivity = rates.sensitivity;
  r.specificity = rates.specificity;
  r.vacuous_sensitivity = rates.vacuous_sensitivity;
  r.vacuous_specificity = rates.vacuous_specificity;
  try {
    r.auc = auc(scores, ys);
  } catch (const SingleClassError&) {
    r.auc_omitted = true;
  }
  return r;
}

inline EvalReport evaluate(const WnnModel& model, const Matrix& xs, std::span<const double> ys) {
  if (xs.rows() != ys.size()) throw std::invalid_argument("evaluate: xs and ys differ in length");
  const auto t0 = std::chrono::steady_clock::now();
  const auto scores = predict(model, xs);
  auto r = evaluate_scores(model.task, scores, ys);
  r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// "key=value" fields of a report, space separated.
inline std::string render(const EvalReport& r) {
  std::string out;
  auto field = [&](std::string_view key, const std::string& value) {
    if (!out.empty()) out += ' ';
    out += key;
    out += '=';
    out += value;
  };
  if (r.mse) field("mse", format_double(*r.mse));
  if (r.sensitivity) field("sensitivity", format_double(*r.sensitivity));
  if (r.specificity) field("specificity", format_double(*r.specificity));
  if (r.auc) field("auc", format_double(*r.auc));
  field("n", std::to_string(r.n));
  field("elapsed_s", format_double(r.elapsed_s));
  if (r.vacuous_sensitivity) field("vacuous_sensitivity", "1");
  if (r.vacuous_specificity) field("vacuous_specificity", "1");
  if (r.auc_omitted) field("auc_omitted", "1");
  return out;
}

}  // namespace spwnn
