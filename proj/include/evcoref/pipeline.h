// Copyright 2026 The evcoref Authors.
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

// Run configuration and the end-to-end commands behind the command-line tool.
//
// Configuration files are INI-style: [section] headers with key = value
// lines. Every command writes its artifacts plus a manifest.json into the
// run's output directory and refuses to reuse a directory whose manifest
// marks it complete.

#ifndef EVCOREF_PIPELINE_H_
#define EVCOREF_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evcoref/cluster.h"
#include "evcoref/commonsense.h"
#include "evcoref/embed.h"
#include "evcoref/gradcheck.h"
#include "evcoref/metrics.h"
#include "evcoref/scorer.h"
#include "evcoref/synthetic.h"
#include "evcoref/train.h"

namespace evcoref {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

struct DataConfig {
  std::filesystem::path train;
  std::filesystem::path dev;
  std::filesystem::path test;
  // Fixture files holding inference sets for each split.
  std::filesystem::path train_inferences;
  std::filesystem::path dev_inferences;
  std::filesystem::path test_inferences;
};

enum class InferenceSource { kFixture, kService };

struct CommonsenseConfig {
  InferenceSource source = InferenceSource::kFixture;
  GenerationConfig generation;
  std::string endpoint;
  std::filesystem::path exemplars;  // few-shot pool
  std::filesystem::path cache;      // empty: no persistent cache
  bool strict_train = true;
  bool strict_predict = false;
  int max_concurrency = 4;
  RetryPolicy retry;
  double timeout_seconds = 60.0;
};

struct RunConfig {
  std::string preset = "desk";
  DataConfig data;
  EmbedderConfig embedder;
  int attention_dim = 8;
  int hidden = 1024;
  CommonsenseConfig commonsense;
  TrainConfig train;
  ClusteringConfig cluster;
  std::vector<double> threshold_grid = DefaultThresholdGrid();
  EvalOptions eval;
  SyntheticSpec synth;
  GradCheckConfig gradcheck;
  std::vector<uint64_t> seeds = {1, 2, 3};

  ModelDims dims() const;
  // Throws ConfigError.
  void Validate() const;
  // Canonical JSON form, without credentials.
  std::string ToJson() const;
  std::string Fingerprint() const;
};

// "desk" (d=16, d_a=8) or "service" (d=1024, d_a=512).
RunConfig PresetConfig(std::string_view name);

// Starts from the preset named by [run] preset (default desk) and applies
// every key of the file. Relative paths resolve against the file's directory.
RunConfig LoadRunConfig(const std::filesystem::path &path);

std::vector<uint64_t> ParseSeedList(std::string_view text);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for one value
};
MeanStd Summarize(std::span<const double> values);

// Per-command options that are not part of the run configuration.
struct CommandOptions {
  std::filesystem::path out;
  std::filesystem::path checkpoint;
  std::filesystem::path clustering;
  std::filesystem::path corpus;      // overrides the split's corpus
  std::filesystem::path inferences;  // overrides the split's fixture file
  std::string split;  // train | dev | test; empty picks the command default
  std::optional<double> threshold;
  std::string first;   // explain: mention ids
  std::string second;
  bool gold_as_system = false;
  bool gradcheck_corrupt = false;  // test hook
};

int RunSynth(const RunConfig &config, const CommandOptions &options);
int RunGenInferences(const RunConfig &config, const CommandOptions &options);
int RunTrain(const RunConfig &config, const CommandOptions &options);
int RunPredict(const RunConfig &config, const CommandOptions &options);
int RunScore(const RunConfig &config, const CommandOptions &options);
int RunExplain(const RunConfig &config, const CommandOptions &options);
int RunGradcheck(const RunConfig &config, const CommandOptions &options);

struct WeightedInference {
  std::string text;
  double weight = 0.0;
};

// Inspection record for one mention pair; inference lists are sorted by
// descending weight. In inter mode first_before/first_after hold the second
// mention's inferences as attended by the first mention's query.
struct AttentionTrace {
  std::string first;
  std::string second;
  std::string first_context;
  std::string second_context;
  ScorerMode mode = ScorerMode::kIntra;
  double probability = 0.0;
  std::optional<int> gold_label;
  std::vector<WeightedInference> first_before;
  std::vector<WeightedInference> first_after;
  std::vector<WeightedInference> second_before;
  std::vector<WeightedInference> second_after;
};

AttentionTrace TracePair(const ModelParameters &params, FeatureStore &store,
                         const std::string &first, const std::string &second);
std::string FormatTrace(const AttentionTrace &trace);

}  // namespace evcoref

#endif  // EVCOREF_PIPELINE_H_
