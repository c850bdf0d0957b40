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

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "spwnn/text.hpp"
#include "spwnn/wnn.hpp"

namespace spwnn {

// Text model format:
//
//   SPWNN v1
//   <activation> <task> <nin> <nhn>
//   w
//   <nin rows of nhn values>
//   W
//   <nhn values>
//   a
//   <nhn values>
//   b
//   <nhn values>

inline constexpr std::string_view kModelMagic = "SPWNN v1";

namespace detail {

inline void write_row(std::ostream& os, std::span<const double> values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) os << ' ';
    os << format_double(values[k]);
  }
  os << '\n';
}

inline void read_row(std::istream& is, std::span<double> out, std::string_view section) {
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("model file truncated in section '" + std::string(section) + "'");
  auto tokens = split_ws(line);
  if (tokens.size() != out.size()) {
    throw std::runtime_error("model section '" + std::string(section) + "': expected " +
                             std::to_string(out.size()) + " values, got " + std::to_string(tokens.size()));
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto v = parse_double(tokens[k]);
    if (!v) throw std::runtime_error("model section '" + std::string(section) + "': bad number '" +
                                     std::string(tokens[k]) + "'");
    out[k] = *v;
  }
}

inline void expect_header(std::istream& is, std::string_view name) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != name)
    throw std::runtime_error("model file: expected section header '" + std::string(name) + "'");
}

}  // namespace detail

inline void save_model(std::ostream& os, const WnnModel& m) {
  os << kModelMagic << '\n'
     << to_string(m.activation) << ' ' << to_string(m.task) << ' ' << m.inputs() << ' ' << m.hidden() << '\n';
  os << "w\n";
  for (std::size_t i = 0; i < m.inputs(); ++i) detail::write_row(os, m.params.input_weights.row(i));
  os << "W\n";
  detail::write_row(os, m.params.output_weights);
  os << "a\n";
  detail::write_row(os, m.params.dilation);
  os << "b\n";
  detail::write_row(os, m.params.translation);
}

inline WnnModel load_model(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kModelMagic)
    throw std::runtime_error("not a model file (missing '" + std::string(kModelMagic) + "' header)");
  if (!std::getline(is, line)) throw std::runtime_error("model file truncated after header");
  auto tok = split_ws(line);
  if (tok.size() != 4) throw std::runtime_error("model file: malformed descriptor line");
  Activation act;
  Task task;
  try {
    act = parse_activation(tok[0]);
    task = parse_task(tok[1]);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("model file: ") + e.what());
  }
  const auto nin = parse_u64(tok[2]);
  const auto nhn = parse_u64(tok[3]);
  if (!nin || !nhn || *nin == 0 || *nhn == 0) throw std::runtime_error("model file: bad dimensions");

  WnnModel m(*nin, *nhn, act, task);
  detail::expect_header(is, "w");
  for (std::size_t i = 0; i < m.inputs(); ++i) detail::read_row(is, m.params.input_weights.row(i), "w");
  detail::expect_header(is, "W");
  detail::read_row(is, m.params.output_weights, "W");
  detail::expect_header(is, "a");
  detail::read_row(is, m.params.dilation, "a");
  detail::expect_header(is, "b");
  detail::read_row(is, m.params.translation, "b");
  if (!m.params.all_finite()) throw std::runtime_error("model file contains non-finite values");
  for (double a : m.params.dilation)
    if (std::abs(a) < kEpsDilation) throw std::runtime_error("model file: dilation below minimum magnitude");
  return m;
}

inline void save_model(const std::string& path, const WnnModel& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  save_model(os, m);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

inline WnnModel load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open model file '" + path + "'");
  return load_model(is);
}

inline std::string model_to_string(const WnnModel& m) {
  std::ostringstream os;
  save_model(os, m);
  return os.str();
}

}  // namespace spwnn
