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
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spwnn/matrix.hpp"
#include "spwnn/random.hpp"
#include "spwnn/text.hpp"
#include "spwnn/wnn.hpp"

namespace spwnn {

struct MinMax {
  double min = 0.0;
  double max = 0.0;

  /// Constant columns (max == min) map to 0.
  double apply(double v) const noexcept { return max == min ? 0.0 : (v - min) / (max - min); }
  bool operator==(const MinMax&) const = default;
};

struct NormStats {
  std::vector<MinMax> features;
  std::optional<MinMax> target;  ///< set for regression only

  bool empty() const noexcept { return features.empty(); }
  bool operator==(const NormStats&) const = default;
};

struct Dataset {
  Matrix features;
  Vector target;
  std::vector<std::string> feature_names;
  std::string target_name;
  NormStats norm;  ///< statistics the features were scaled with, if any
  std::size_t rejected_rows = 0;

  std::size_t rows() const noexcept { return target.size(); }
  std::size_t dims() const noexcept { return feature_names.size(); }

  Dataset select_rows(std::span<const std::size_t> idx) const {
    Dataset out{features.select_rows(idx), select<double>(target, idx), feature_names, target_name, norm, 0};
    return out;
  }

  Dataset select_cols(std::span<const std::size_t> idx) const {
    Dataset out;
    out.features = features.select_cols(idx);
    out.target = target;
    out.target_name = target_name;
    out.norm.target = norm.target;
    for (auto i : idx) {
      out.feature_names.push_back(feature_names[i]);
      if (!norm.features.empty()) out.norm.features.push_back(norm.features[i]);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// CSV ingestion

struct CsvOptions {
  /// Header name, or a 1-based column number when no header cell matches.
  std::string target;
  std::vector<std::string> drop;
  /// Target cells equal to this become 1, everything else 0.
  std::optional<std::string> positive_label;
  char delimiter = ',';
  /// Use exactly these feature columns, in this order (prediction time).
  std::optional<std::vector<std::string>> feature_columns;
  bool target_optional = false;
  bool allow_empty = false;
};

namespace detail {

inline std::optional<std::size_t> find_column(const std::vector<std::string>& header, std::string_view key) {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == key) return c;
  if (auto n = parse_u64(key); n && *n >= 1 && *n <= header.size()) return static_cast<std::size_t>(*n - 1);
  return std::nullopt;
}

inline bool label_matches(std::string_view cell, std::string_view label) {
  if (cell == label) return true;
  auto a = parse_double(cell);
  auto b = parse_double(label);
  return a && b && *a == *b;
}

}  // namespace detail

/// Header line then delimited rows. Rows with a missing, unparseable or
/// non-finite cell are skipped and counted in rejected_rows.
inline Dataset load_csv(std::istream& is, const CsvOptions& opt) {
  Dataset ds;
  std::string line;
  if (!std::getline(is, line) || trim(line).empty()) {
    if (opt.allow_empty) return ds;
    throw std::runtime_error("data file is empty");
  }
  std::vector<std::string> header;
  for (auto cell : split(trim(line), opt.delimiter)) header.emplace_back(trim(cell));

  std::optional<std::size_t> target_col;
  if (!opt.target.empty()) target_col = detail::find_column(header, opt.target);
  if (!target_col && !opt.target_optional)
    throw std::runtime_error("target column '" + opt.target + "' not found in header");

  std::vector<std::size_t> feature_cols;
  if (opt.feature_columns) {
    for (const auto& name : *opt.feature_columns) {
      auto c = detail::find_column(header, name);
      if (!c || header[*c] != name) {
        throw std::runtime_error("schema mismatch: column '" + name + "' missing; expected nin=" +
                                 std::to_string(opt.feature_columns->size()) + " feature columns");
      }
      feature_cols.push_back(*c);
    }
  } else {
    std::vector<bool> dropped(header.size(), false);
    for (const auto& d : opt.drop) {
      auto c = detail::find_column(header, d);
      if (!c) throw std::runtime_error("drop column '" + d + "' not found in header");
      dropped[*c] = true;
    }
    for (std::size_t c = 0; c < header.size(); ++c)
      if (!dropped[c] && c != target_col) feature_cols.push_back(c);
  }
  if (feature_cols.empty()) throw std::runtime_error("no feature columns left after dropping");

  for (auto c : feature_cols) ds.feature_names.push_back(header[c]);
  if (target_col) ds.target_name = header[*target_col];
  ds.features = Matrix(0, feature_cols.size());

  std::vector<double> row(feature_cols.size());
  std::size_t numeric_targets = 0, nonnumeric_targets = 0;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    auto cells = split(line, opt.delimiter);
    if (cells.size() != header.size()) {
      ++ds.rejected_rows;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 0; k < feature_cols.size() && ok; ++k) {
      auto v = parse_double(cells[feature_cols[k]]);
      ok = v && std::isfinite(*v);
      if (ok) row[k] = *v;
    }
    double y = 0.0;
    if (ok && target_col) {
      const auto cell = trim(cells[*target_col]);
      if (opt.positive_label) {
        y = detail::label_matches(cell, *opt.positive_label) ? 1.0 : 0.0;
      } else if (auto v = parse_double(cell); v && std::isfinite(*v)) {
        y = *v;
        ++numeric_targets;
      } else {
        ++nonnumeric_targets;
        ok = false;
      }
    }
    if (!ok) {
      ++ds.rejected_rows;
      continue;
    }
    ds.features.append_row(row);
    ds.target.push_back(y);
  }
  if (!opt.positive_label && numeric_targets == 0 && nonnumeric_targets > 0)
    throw std::runtime_error("target column '" + ds.target_name + "' is non-numeric; a positive label is required");
  if (ds.rows() == 0 && !opt.allow_empty) throw std::runtime_error("no valid data rows");
  return ds;
}

inline Dataset load_csv(const std::string& path, const CsvOptions& opt) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open data file '" + path + "'");
  return load_csv(is, opt);
}

inline void write_csv(std::ostream& os, const Dataset& ds, char delimiter = ',') {
  for (const auto& name : ds.feature_names) os << name << delimiter;
  os << (ds.target_name.empty() ? "target" : ds.target_name) << '\n';
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (double v : ds.features.row(r)) os << format_double(v) << delimiter;
    os << format_double(ds.target[r]) << '\n';
  }
}

inline void write_csv(const std::string& path, const Dataset& ds, char delimiter = ',') {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(os, ds, delimiter);
}

// ---------------------------------------------------------------------------
// Preprocessing

/// Per-feature min/max of ds (and of the target for regression).
inline NormStats compute_norm_stats(const Dataset& ds, Task task) {
  if (ds.rows() == 0) throw std::invalid_argument("cannot compute normalization statistics of an empty dataset");
  NormStats s;
  s.features.resize(ds.dims());
  for (std::size_t c = 0; c < ds.dims(); ++c) s.features[c] = MinMax{ds.features(0, c), ds.features(0, c)};
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    auto row = ds.features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      s.features[c].min = std::min(s.features[c].min, row[c]);
      s.features[c].max = std::max(s.features[c].max, row[c]);
    }
  }
  if (task == Task::Regression) {
    auto [lo, hi] = std::minmax_element(ds.target.begin(), ds.target.end());
    s.target = MinMax{*lo, *hi};
  }
  return s;
}

inline Dataset apply_norm(Dataset ds, const NormStats& s) {
  if (s.features.size() != ds.dims()) throw std::invalid_argument("normalization statistics do not match columns");
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    auto row = ds.features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = s.features[c].apply(row[c]);
  }
  if (s.target)
    for (double& y : ds.target) y = s.target->apply(y);
  ds.norm = s;
  return ds;
}

/// Min-max scaling with train-only statistics, applied to both sides.
inline std::pair<Dataset, Dataset> normalize(const Dataset& train, const Dataset& test, Task task) {
  if (train.dims() != test.dims()) throw std::invalid_argument("normalize: train and test columns differ");
  const auto stats = compute_norm_stats(train, task);
  return {apply_norm(train, stats), apply_norm(test, stats)};
}

struct SplitPair {
  Dataset train;
  Dataset test;
  double ratio = 0.8;
};

/// |train| = round(ratio * n). Unshuffled splits keep file order.
inline SplitPair split(const Dataset& ds, double ratio, std::uint64_t seed, bool shuffle) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must lie in (0, 1)");
  const std::size_t n = ds.rows();
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) {
    throw std::invalid_argument("split ratio " + format_double(ratio) + " leaves an empty side for n=" +
                                std::to_string(n));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (shuffle) idx = shuffled_indices(n, derive_seed(seed, 0x5B117));
  std::span<const std::size_t> all(idx);
  return SplitPair{ds.select_rows(all.first(n_train)), ds.select_rows(all.subspan(n_train)), ratio};
}

// ---------------------------------------------------------------------------
// Feature selection

struct FeatureScore {
  std::string name;
  double t_value = 0.0;
  std::size_t column = 0;
};

/// Welch two-sample t of one feature between class 1 and class 0. Returns 0
/// when the standard error vanishes.
inline double welch_t(const Dataset& ds, std::size_t column) {
  // Welford accumulators per class.
  std::size_t n[2] = {0, 0};
  double mean[2] = {0, 0}, m2[2] = {0, 0};
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const int cls = ds.target[r] >= 0.5 ? 1 : 0;
    const double x = ds.features(r, column);
    ++n[cls];
    const double d = x - mean[cls];
    mean[cls] += d / static_cast<double>(n[cls]);
    m2[cls] += d * (x - mean[cls]);
  }
  if (n[0] == 0 || n[1] == 0) throw std::invalid_argument("welch_t: both classes must be present");
  auto var = [&](int c) { return n[c] > 1 ? m2[c] / static_cast<double>(n[c] - 1) : 0.0; };
  const double se2 = var(1) / static_cast<double>(n[1]) + var(0) / static_cast<double>(n[0]);
  if (!(se2 > 0.0)) return 0.0;
  return (mean[1] - mean[0]) / std::sqrt(se2);
}

/// Ranks features by |t| descending (ties keep column order) and keeps the top k.
inline std::pair<Dataset, std::vector<FeatureScore>> t_value_select(const Dataset& ds, std::size_t k) {
  if (k == 0 || k > ds.dims())
    throw std::invalid_argument("t_value_select: k must lie in [1, " + std::to_string(ds.dims()) + "]");
  const auto positives = std::count_if(ds.target.begin(), ds.target.end(), [](double y) { return y >= 0.5; });
  if (positives == 0 || static_cast<std::size_t>(positives) == ds.rows())
    throw std::invalid_argument("t_value_select: target has a single class");

  std::vector<FeatureScore> ranked;
  ranked.reserve(ds.dims());
  for (std::size_t c = 0; c < ds.dims(); ++c) ranked.push_back({ds.feature_names[c], welch_t(ds, c), c});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.t_value) > std::abs(b.t_value); });

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < k; ++i) keep.push_back(ranked[i].column);
  return {ds.select_cols(keep), std::move(ranked)};
}

// ---------------------------------------------------------------------------
// Synthetic data

/// x ~ U[-3, 3], y = Morlet(x) + N(0, noise_sd).
inline Dataset synth_regression(std::size_t n, double noise_sd, std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("synth_regression: n must be >= 10");
  Rng rng(derive_seed(seed, 0x5E61));
  Dataset ds;
  ds.feature_names = {"x"};
  ds.target_name = "y";
  ds.features = Matrix(n, 1);
  ds.target.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double x = rng.uniform(-3.0, 3.0);
    const double noise = noise_sd > 0.0 ? rng.normal(0.0, noise_sd) : 0.0;
    ds.features(r, 0) = x;
    ds.target[r] = activate(Activation::Morlet, x) + noise;
  }
  return ds;
}

/// Two unit-variance 2-D Gaussian blobs whose means are `separation` apart
/// along the first axis; labels drawn with equal probability.
inline Dataset synth_classification(std::size_t n, double separation, std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("synth_classification: n must be >= 10");
  Rng rng(derive_seed(seed, 0xC1A5));
  Dataset ds;
  ds.feature_names = {"x1", "x2"};
  ds.target_name = "label";
  ds.features = Matrix(n, 2);
  ds.target.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double y = rng.unit() < 0.5 ? 0.0 : 1.0;
    const double centre = (y - 0.5) * separation;
    ds.features(r, 0) = rng.normal(centre, 1.0);
    ds.features(r, 1) = rng.normal(0.0, 1.0);
    ds.target[r] = y;
  }
  return ds;
}

}  // namespace spwnn
