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

// Scorer training, pairwise scoring of a corpus and threshold tuning.

#ifndef EVCOREF_TRAIN_H_
#define EVCOREF_TRAIN_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "evcoref/cluster.h"
#include "evcoref/commonsense.h"
#include "evcoref/corpus.h"
#include "evcoref/embed.h"
#include "evcoref/metrics.h"
#include "evcoref/scorer.h"

namespace evcoref {

// Builds and owns the scorer inputs of a corpus: span token vectors and,
// when inferences are enabled, embedded inference sentences. With inferences
// disabled the engine is never consulted.
class FeatureStore {
 public:
  FeatureStore(const Corpus &corpus, Embedder &embedder,
               InferenceEngine *engine, bool use_inferences);

  const Corpus &corpus() const { return corpus_; }
  const MentionInput &Input(const std::string &mention_id);
  std::vector<PairExample> Examples(std::span<const MentionPair> pairs);

 private:
  const EmbeddingMatrix &DocumentEmbedding(const std::string &doc_id);

  const Corpus &corpus_;
  Embedder &embedder_;
  InferenceEngine *engine_;
  bool use_inferences_;
  std::map<std::string, EmbeddingMatrix> documents_;
  std::map<std::string, std::unique_ptr<MentionInput>> inputs_;
};

ModelDims MakeModelDims(const EmbedderConfig &embedder, int attention_dim,
                        int hidden, ScorerMode mode);

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 128;
  double dropout = 0.3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 10;
  int patience = 2;  // <= 0 disables early stopping
  uint64_t seed = 1;
  ScorerMode mode = ScorerMode::kIntra;
  PairScope scope = PairScope::kSubtopic;

  void Validate() const;
};

// Adaptive-moment optimizer with bias correction.
class Adam {
 public:
  Adam(const ModelParameters &shape, const TrainConfig &config);
  void Step(ModelParameters &params, const ModelParameters &grad);
  int steps() const { return steps_; }

 private:
  ModelParameters m_;
  ModelParameters v_;
  double lr_, beta1_, beta2_, epsilon_;
  int steps_ = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_f1 = 0.0;
  bool improved = false;
};

struct TrainResult {
  ModelParameters params;  // best epoch
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_dev_f1 = -1.0;
  bool stopped_early = false;
};

// Pairwise F1 of `probabilities` >= threshold against the labels.
double PairwiseF1(std::span<const double> probabilities,
                  std::span<const PairExample> pairs, double threshold = 0.5);

// Initializes from config.seed, trains on shuffled candidate pairs and keeps
// the parameters of the epoch with the best dev pairwise F1 at 0.5.
TrainResult Train(FeatureStore &train, FeatureStore &dev, const ModelDims &dims,
                  const TrainConfig &config,
                  const std::function<void(const EpochRecord &)> &on_epoch = {});

// Probabilities for every candidate pair of the store's corpus.
ScoreMatrix ScoreCorpus(const ModelParameters &params, FeatureStore &store,
                        PairScope scope);

std::vector<double> DefaultThresholdGrid();

struct ThresholdResult {
  double threshold = 0.0;
  double conll_f1 = 0.0;
  std::vector<std::pair<double, double>> curve;  // (threshold, dev CoNLL F1)
};

// Picks the grid value with the best CoNLL F1 after clustering `scores`;
// ties go to the larger threshold.
ThresholdResult TuneThreshold(const Corpus &dev, const ScoreMatrix &scores,
                              std::span<const double> grid,
                              const ClusteringConfig &clustering,
                              const EvalOptions &eval);

}  // namespace evcoref

#endif  // EVCOREF_TRAIN_H_
