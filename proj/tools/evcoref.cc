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

// Command-line entry point: evcoref <command> [options].

#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "evcoref/errors.h"
#include "evcoref/pipeline.h"

namespace {

using evcoref::CommandOptions;
using evcoref::RunConfig;

struct GlobalFlags {
  std::string config;
  std::string preset = "desk";
  std::string out;
  std::string seeds;
  std::string mode;
  std::string log_level = "info";
};

struct SynthFlags {
  std::optional<int> topics, clusters, mentions;
  std::optional<double> hard_fraction, distractor_rate;
};

RunConfig BuildConfig(const GlobalFlags &flags, const SynthFlags &synth) {
  RunConfig config = flags.config.empty() ? evcoref::PresetConfig(flags.preset)
                                          : evcoref::LoadRunConfig(flags.config);
  if (!flags.seeds.empty()) {
    config.seeds = evcoref::ParseSeedList(flags.seeds);
    config.synth.seed = config.seeds.front();
  }
  if (!flags.mode.empty()) config.train.mode = evcoref::ParseScorerMode(flags.mode);
  if (synth.topics) config.synth.n_topics = *synth.topics;
  if (synth.clusters) config.synth.clusters_per_topic = *synth.clusters;
  if (synth.mentions) config.synth.mentions_per_cluster = *synth.mentions;
  if (synth.hard_fraction) config.synth.hard_fraction = *synth.hard_fraction;
  if (synth.distractor_rate) config.synth.distractor_rate = *synth.distractor_rate;
  config.Validate();
  return config;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Cross-document event coreference with temporal commonsense"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--config", flags.config, "INI run configuration")
      ->check(CLI::ExistingFile);
  app.add_option("--preset", flags.preset, "Preset when no --config is given")
      ->check(CLI::IsMember({"desk", "service"}));
  app.add_option("--out", flags.out, "Output run directory");
  app.add_option("--seed", flags.seeds, "Comma-separated seed list");
  app.add_option("--mode", flags.mode, "Scorer mode")
      ->check(CLI::IsMember({"baseline", "intra", "inter"}));
  app.add_option("--log-level", flags.log_level, "Log level")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  CommandOptions options;
  SynthFlags synth;
  std::string checkpoint, clustering, corpus, inferences, pair;

  auto *synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_cmd->add_option("--topics", synth.topics);
  synth_cmd->add_option("--clusters", synth.clusters, "Clusters per topic");
  synth_cmd->add_option("--mentions", synth.mentions, "Mentions per cluster");
  synth_cmd->add_option("--hard-fraction", synth.hard_fraction);
  synth_cmd->add_option("--distractor-rate", synth.distractor_rate);

  auto *gen_cmd = app.add_subcommand("gen-inferences",
                                     "Fetch and cache inference sets");
  auto *train_cmd = app.add_subcommand("train", "Train one scorer per seed");
  auto *predict_cmd = app.add_subcommand("predict", "Cluster a split");
  auto *score_cmd = app.add_subcommand("score", "Evaluate a clustering file");
  auto *explain_cmd = app.add_subcommand("explain", "Dump attention weights");
  auto *grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check");

  for (auto *cmd : {gen_cmd, predict_cmd, score_cmd, explain_cmd}) {
    cmd->add_option("--split", options.split, "train, dev or test")
        ->check(CLI::IsMember({"train", "dev", "test"}));
    cmd->add_option("--corpus", corpus, "Corpus file overriding the split");
  }
  for (auto *cmd : {predict_cmd, explain_cmd}) {
    cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    cmd->add_option("--inferences", inferences, "Fixture file overriding the split");
  }
  predict_cmd->add_option("--threshold", options.threshold,
                          "Clustering threshold (default: tuned value)");
  score_cmd->add_option("--clustering", clustering)->check(CLI::ExistingFile);
  score_cmd->add_flag("--gold-as-system", options.gold_as_system,
                      "Score the gold clustering against itself");
  explain_cmd->add_option("--pair", pair, "FIRST,SECOND mention ids")->required();
  grad_cmd->add_flag("--corrupt-gradient", options.gradcheck_corrupt,
                     "Test hook: perturb analytic gradients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? evcoref::kExitOk : evcoref::kExitUsage;
  }
  spdlog::set_level(spdlog::level::from_str(flags.log_level));

  try {
    RunConfig config = BuildConfig(flags, synth);
    options.out = flags.out;
    options.checkpoint = checkpoint;
    options.clustering = clustering;
    options.corpus = corpus;
    options.inferences = inferences;
    if (!pair.empty()) {
      const auto comma = pair.find(',');
      if (comma == std::string::npos) {
        throw evcoref::ConfigError("--pair expects FIRST,SECOND");
      }
      options.first = pair.substr(0, comma);
      options.second = pair.substr(comma + 1);
    }
    if (options.gradcheck_corrupt) config.gradcheck.corrupt_gradient = true;

    if (*synth_cmd) return evcoref::RunSynth(config, options);
    if (*gen_cmd) return evcoref::RunGenInferences(config, options);
    if (*train_cmd) return evcoref::RunTrain(config, options);
    if (*predict_cmd) return evcoref::RunPredict(config, options);
    if (*score_cmd) return evcoref::RunScore(config, options);
    if (*explain_cmd) return evcoref::RunExplain(config, options);
    if (*grad_cmd) return evcoref::RunGradcheck(config, options);
  } catch (const evcoref::ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return evcoref::kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return evcoref::kExitFailure;
  }
  return evcoref::kExitUsage;
}
