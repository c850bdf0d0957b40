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

#include <algorithm>

#include "oracles.hpp"
#include "spwnn/metrics.hpp"
#include "spwnn/trainer.hpp"

using namespace spwnn;

TEST(ConfusionRates, Examples) {
  const double perfect[] = {0.9, 0.8, 0.1, 0.2};
  const double mixed[] = {0.9, 0.1, 0.9, 0.1};
  const double labels[] = {1, 1, 0, 0};
  auto r = confusion_rates(perfect, labels);
  EXPECT_EQ(r.sensitivity, 1.0);
  EXPECT_EQ(r.specificity, 1.0);
  r = confusion_rates(mixed, labels);
  EXPECT_EQ(r.sensitivity, 0.5);
  EXPECT_EQ(r.specificity, 0.5);
  EXPECT_FALSE(r.vacuous_sensitivity || r.vacuous_specificity);
}

TEST(ConfusionRates, AbsentClassIsVacuous) {
  const double scores[] = {0.9, 0.2, 0.7};
  const double ones[] = {1, 1, 1};
  auto r = confusion_rates(scores, ones);
  EXPECT_EQ(r.specificity, 1.0);
  EXPECT_TRUE(r.vacuous_specificity);
  EXPECT_FALSE(r.vacuous_sensitivity);
  EXPECT_DOUBLE_EQ(r.sensitivity, 2.0 / 3.0);
}

TEST(ConfusionRates, ThresholdIsInclusive) {
  const double scores[] = {0.5, 0.4999999};
  const double labels[] = {1, 0};
  const auto r = confusion_rates(scores, labels);
  EXPECT_EQ(r.sensitivity, 1.0);
  EXPECT_EQ(r.specificity, 1.0);
}

TEST(ConfusionRates, PermutationInvariant) {
  Rng rng(8);
  std::vector<double> s(40), y(40);
  for (std::size_t k = 0; k < s.size(); ++k) {
    s[k] = rng.unit();
    y[k] = rng.unit() < 0.4;
  }
  const auto base = confusion_rates(s, y);
  const auto perm = shuffled_indices(s.size(), 3);
  const auto r = confusion_rates(select<double>(s, perm), select<double>(y, perm));
  EXPECT_EQ(r.sensitivity, base.sensitivity);
  EXPECT_EQ(r.specificity, base.specificity);
}

TEST(ConfusionRates, LengthMismatch) {
  const double a[] = {1.0}, b[] = {1.0, 0.0};
  EXPECT_THROW(confusion_rates(a, b), std::invalid_argument);
}

TEST(Auc, Examples) {
  const double ranked[] = {0.1, 0.2, 0.8, 0.9};
  const double labels[] = {0, 0, 1, 1};
  EXPECT_EQ(auc(ranked, labels), 1.0);
  const double same[] = {0.3, 0.3, 0.3, 0.3};
  EXPECT_EQ(auc(same, labels), 0.5);
  const double one_swap[] = {0.1, 0.85, 0.8, 0.9};
  EXPECT_DOUBLE_EQ(auc(one_swap, labels), 0.75);
}

TEST(Auc, SingleClassIsDistinctError) {
  const double s[] = {0.1, 0.2};
  const double y[] = {1, 1};
  EXPECT_THROW(auc(s, y), SingleClassError);
}

TEST(Auc, MatchesPairCountingOracle) {
  Rng rng(1234);
  int checked = 0;
  while (checked < 2000) {
    const std::size_t n = 2 + rng.below(11);
    std::vector<double> s(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = static_cast<double>(rng.below(5)) / 4.0;  // coarse grid forces ties
      y[k] = rng.unit() < 0.5;
    }
    const auto pos = std::count(y.begin(), y.end(), 1.0);
    if (pos == 0 || pos == static_cast<long>(n)) continue;
    EXPECT_NEAR(auc(s, y), oracle::brute_force_auc(s, y), 1e-9);
    ++checked;
  }
}

TEST(Auc, MonotoneInvarianceAndLabelFlip) {
  Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.below(40);
    std::vector<double> s(n), y(n), flipped(n), warped(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = rng.uniform(-2, 2);
      y[k] = k % 2;
      flipped[k] = 1.0 - y[k];
      warped[k] = std::exp(3.0 * s[k]) + 7.0;
    }
    const double a = auc(s, y);
    EXPECT_DOUBLE_EQ(auc(warped, y), a);
    EXPECT_NEAR(a + auc(s, flipped), 1.0, 1e-12);
  }
}

TEST(Evaluate, RegressionPerfectFit) {
  const std::vector<double> s = {0.1, 0.5, -2.0};
  const auto r = evaluate_scores(Task::Regression, s, s);
  ASSERT_TRUE(r.mse.has_value());
  EXPECT_EQ(*r.mse, 0.0);
  EXPECT_FALSE(r.auc || r.sensitivity || r.specificity);
  EXPECT_EQ(r.n, 3u);
}

TEST(Evaluate, ClassificationSeparatingModel) {
  // One Gaussian unit centred on x=1 with a large output weight, shifted so
  // that x=1 scores high and x=-1 scores low.
  WnnModel m(1, 2, Activation::Gaussian, Task::Classification);
  m.params.input_weights(0, 0) = 1.0;
  m.params.translation[0] = 1.0;
  m.params.output_weights[0] = 20.0;
  m.params.input_weights(0, 1) = 0.0;
  m.params.translation[1] = 0.0;
  m.params.output_weights[1] = -10.0;  // constant offset: f(0) = 1
  Matrix xs(6, 1);
  std::vector<double> ys(6);
  for (std::size_t k = 0; k < 6; ++k) {
    xs(k, 0) = k < 3 ? 1.0 + 0.01 * k : -1.0 - 0.01 * k;
    ys[k] = k < 3;
  }
  const auto r = evaluate(m, xs, ys);
  EXPECT_EQ(*r.sensitivity, 1.0);
  EXPECT_EQ(*r.specificity, 1.0);
  EXPECT_EQ(*r.auc, 1.0);
  EXPECT_FALSE(r.mse.has_value());
  EXPECT_GE(r.elapsed_s, 0.0);
}

TEST(Evaluate, SingleClassOmitsAuc) {
  const std::vector<double> s = {0.7, 0.2}, y = {0, 0};
  const auto r = evaluate_scores(Task::Classification, s, y);
  EXPECT_FALSE(r.auc.has_value());
  EXPECT_TRUE(r.auc_omitted);
  EXPECT_TRUE(r.vacuous_sensitivity);
  EXPECT_EQ(*r.specificity, 0.5);
}

TEST(Evaluate, RatesStayInUnitInterval) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = oracle::random_model(rng, 2, 5, Activation::Morlet, Task::Classification);
    const auto xs = oracle::random_matrix(rng, 30, 2);
    std::vector<double> ys(30);
    for (std::size_t k = 0; k < 30; ++k) ys[k] = k % 3 == 0;
    const auto r = evaluate(m, xs, ys);
    for (double v : {*r.sensitivity, *r.specificity, *r.auc}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Render, FieldNames) {
  EvalReport r;
  r.task = Task::Classification;
  r.sensitivity = 1.0;
  r.specificity = 0.5;
  r.auc = 0.75;
  r.n = 4;
  r.elapsed_s = 0.25;
  EXPECT_EQ(render(r), "sensitivity=1 specificity=0.5 auc=0.75 n=4 elapsed_s=0.25");
  EvalReport g;
  g.mse = 0.125;
  g.n = 2;
  EXPECT_EQ(render(g), "mse=0.125 n=2 elapsed_s=0");
}
