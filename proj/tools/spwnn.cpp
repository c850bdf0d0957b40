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

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "spwnn/cli.hpp"

namespace {

struct FlagSpec {
  const char* name;
  const char* help;
};

constexpr FlagSpec kFlags[] = {
    {"config", "flat key=value config file; flags override it"},
    {"data", "input CSV (header line first)"},
    {"target", "target column name or 1-based index"},
    {"positive-label", "target value mapped to class 1"},
    {"drop", "comma-separated columns to ignore"},
    {"delimiter", "field delimiter (default ',', 'tab' for tabs)"},
    {"task", "regression | classification"},
    {"activation", "morlet | gaussian"},
    {"hidden", "hidden wavelet nodes"},
    {"lr", "learning rate"},
    {"momentum", "momentum coefficient in [0,1)"},
    {"batch-size", "mini-batch size"},
    {"epochs", "training epochs"},
    {"partitions", "data partitions (bench: comma-separated list)"},
    {"threads", "worker threads (0 = min(partitions, cores))"},
    {"seed", "RNG seed"},
    {"split", "train fraction of the train/test split"},
    {"top-k", "keep the k features with the largest |t|"},
    {"window-size", "stream window length in batches"},
    {"num-batches", "number of stream micro-batches"},
    {"pace-ms", "sleep between stream batches"},
    {"model-out", "write the trained model here"},
    {"model-in", "model file to score with"},
    {"metrics-out", "metrics log path (default stdout)"},
    {"test-out", "train: write the raw held-out split here"},
    {"predictions-out", "predict: write scores here (default stdout)"},
    {"data-out", "synth/select-features: CSV output path"},
    {"samples", "synth: number of rows"},
    {"noise", "synth regression: noise standard deviation"},
    {"separation", "synth classification: distance between class means"},
};

constexpr std::pair<const char*, const char*> kCommands[] = {
    {"train", "train on a CSV and evaluate on a held-out split"},
    {"predict", "score a CSV with a saved model"},
    {"stream", "sliding-window replay of a CSV as micro-batches"},
    {"bench", "time sequential vs partitioned training"},
    {"select-features", "rank features by Welch t-statistic"},
    {"synth", "write a synthetic dataset"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spwnn: data-parallel wavelet neural networks"};
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : kCommands) {
    auto* sub = app.add_subcommand(name, help);
    auto& store = values[name];
    for (const auto& f : kFlags) sub->add_option(std::string("--") + f.name, store[f.name], f.help);
    subs[name] = sub;
  }
  CLI11_PARSE(app, argc, argv);

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    spwnn::cli::KeyValues given;
    for (const auto& f : kFlags)
      if (sub->count(std::string("--") + f.name) > 0) given[f.name] = values[name][f.name];
    try {
      const auto cfg = spwnn::cli::resolve_config(name, given);
      return spwnn::cli::dispatch(cfg);
    } catch (const spwnn::cli::StageError& e) {
      std::cerr << "spwnn " << name << ": stage '" << e.stage() << "' failed: " << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "spwnn " << name << ": " << e.what() << '\n';
      return 2;
    }
  }
  return 2;
}
