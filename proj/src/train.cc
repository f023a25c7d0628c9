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

#include "evcoref/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evcoref/errors.h"
#include "evcoref/random.h"

namespace evcoref {
namespace {

// Flat views of every block, in ForEachBlock order.
std::vector<std::pair<double *, Eigen::Index>> Blocks(ModelParameters &p) {
  std::vector<std::pair<double *, Eigen::Index>> out;
  p.ForEachBlock([&](std::string_view, double *data, Eigen::Index rows,
                     Eigen::Index cols) { out.emplace_back(data, rows * cols); });
  return out;
}

std::vector<std::pair<const double *, Eigen::Index>> Blocks(
    const ModelParameters &p) {
  std::vector<std::pair<const double *, Eigen::Index>> out;
  p.ForEachBlock([&](std::string_view, const double *data, Eigen::Index rows,
                     Eigen::Index cols) { out.emplace_back(data, rows * cols); });
  return out;
}

// Separate streams for initialization and for shuffling/dropout.
constexpr uint64_t kTrainStream = 0x747261696e000001ULL;

}  // namespace

FeatureStore::FeatureStore(const Corpus &corpus, Embedder &embedder,
                           InferenceEngine *engine, bool use_inferences)
    : corpus_(corpus),
      embedder_(embedder),
      engine_(engine),
      use_inferences_(use_inferences) {
  if (use_inferences_ && engine_ == nullptr) {
    throw ConfigError("commonsense scoring needs an inference engine");
  }
}

const EmbeddingMatrix &FeatureStore::DocumentEmbedding(const std::string &doc_id) {
  auto it = documents_.find(doc_id);
  if (it != documents_.end()) return it->second;
  EmbeddingMatrix m = embedder_.EmbedDocument(corpus_.document(doc_id));
  return documents_.emplace(doc_id, std::move(m)).first->second;
}

const MentionInput &FeatureStore::Input(const std::string &mention_id) {
  auto it = inputs_.find(mention_id);
  if (it != inputs_.end()) return *it->second;

  const Mention &m = corpus_.mention(mention_id);
  const EmbeddingMatrix &doc = DocumentEmbedding(m.doc_id);
  const Matrix &sentence = doc.sentences.at(m.sentence_index);
  auto input = std::make_unique<MentionInput>();
  input->mention_id = mention_id;
  input->span_tokens = sentence.middleCols(m.token_start, m.width());

  if (use_inferences_) {
    const InferenceSet set = engine_->Get(corpus_, m);
    std::vector<Sentence> sentences;
    std::vector<bool> is_before;
    auto collect = [&](const std::vector<std::string> &texts, bool before) {
      for (const std::string &text : texts) {
        Sentence tokens = TokenizeInference(text);
        if (tokens.empty()) continue;
        sentences.push_back(std::move(tokens));
        is_before.push_back(before);
        (before ? input->before_text : input->after_text).push_back(text);
      }
    };
    collect(set.before, true);
    collect(set.after, false);
    if (!sentences.empty()) {
      EmbeddingMatrix e =
          embedder_.EmbedSentences("inferences/" + mention_id, sentences);
      for (size_t i = 0; i < sentences.size(); ++i) {
        (is_before[i] ? input->before : input->after)
            .push_back(std::move(e.sentences[i]));
      }
    }
  }
  return *inputs_.emplace(mention_id, std::move(input)).first->second;
}

std::vector<PairExample> FeatureStore::Examples(
    std::span<const MentionPair> pairs) {
  std::vector<PairExample> out;
  out.reserve(pairs.size());
  for (const MentionPair &p : pairs) {
    out.push_back({&Input(p.first), &Input(p.second), p.label});
  }
  return out;
}

ModelDims MakeModelDims(const EmbedderConfig &embedder, int attention_dim,
                        int hidden, ScorerMode mode) {
  ModelDims dims;
  dims.dim = embedder.dim;
  dims.width_dim = embedder.width_dim;
  dims.max_width_bucket = embedder.max_width_bucket;
  dims.attention_dim = attention_dim;
  dims.hidden = hidden;
  dims.mode = mode;
  dims.Validate();
  return dims;
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("dropout must lie in [0, 1)");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
}

Adam::Adam(const ModelParameters &shape, const TrainConfig &config)
    : m_(ModelParameters::Zeros(shape.dims)),
      v_(ModelParameters::Zeros(shape.dims)),
      lr_(config.learning_rate),
      beta1_(config.beta1),
      beta2_(config.beta2),
      epsilon_(config.epsilon) {}

void Adam::Step(ModelParameters &params, const ModelParameters &grad) {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, steps_);
  const double c2 = 1.0 - std::pow(beta2_, steps_);
  auto p = Blocks(params);
  auto g = Blocks(grad);
  auto m = Blocks(m_);
  auto v = Blocks(v_);
  for (size_t b = 0; b < p.size(); ++b) {
    if (g[b].second != p[b].second) {
      throw DimensionError("gradient shape does not match parameters");
    }
    for (Eigen::Index i = 0; i < p[b].second; ++i) {
      const double gi = g[b].first[i];
      double &mi = m[b].first[i];
      double &vi = v[b].first[i];
      mi = beta1_ * mi + (1.0 - beta1_) * gi;
      vi = beta2_ * vi + (1.0 - beta2_) * gi * gi;
      p[b].first[i] -= lr_ * (mi / c1) / (std::sqrt(vi / c2) + epsilon_);
    }
  }
}

double PairwiseF1(std::span<const double> probabilities,
                  std::span<const PairExample> pairs, double threshold) {
  if (probabilities.size() != pairs.size()) {
    throw DimensionError("one probability per pair required");
  }
  double tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const bool predicted = probabilities[i] >= threshold;
    if (predicted && pairs[i].label) ++tp;
    if (predicted && !pairs[i].label) ++fp;
    if (!predicted && pairs[i].label) ++fn;
  }
  const double den = 2 * tp + fp + fn;
  return den > 0 ? 2 * tp / den : 0.0;
}

TrainResult Train(FeatureStore &train, FeatureStore &dev, const ModelDims &dims,
                  const TrainConfig &config,
                  const std::function<void(const EpochRecord &)> &on_epoch) {
  config.Validate();
  if (dims.mode != config.mode) {
    throw ConfigError("model dims and train config disagree on the mode");
  }
  const auto train_pairs = CandidatePairs(train.corpus(), config.scope, true);
  const auto dev_pairs = CandidatePairs(dev.corpus(), config.scope, true);
  if (train_pairs.empty()) throw ValidationError("training corpus has no pairs");
  const auto train_examples = train.Examples(train_pairs);
  const auto dev_examples = dev.Examples(dev_pairs);

  ModelParameters params = ModelParameters::Initialize(dims, config.seed);
  Adam adam(params, config);
  Rng rng(SplitMix64(config.seed ^ kTrainStream));

  TrainResult result;
  result.params = params;
  std::vector<size_t> order(train_examples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<PairExample> batch;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Shuffle(order, rng);
    double loss_sum = 0.0;
    for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const size_t end =
          std::min(order.size(), begin + static_cast<size_t>(config.batch_size));
      batch.clear();
      for (size_t i = begin; i < end; ++i) batch.push_back(train_examples[order[i]]);
      Matrix mask = DrawDropoutMask(dims.hidden, static_cast<int>(batch.size()),
                                    config.dropout, rng);
      ModelParameters grad;
      const double loss = PairLossAndGradient(params, batch, &mask, grad);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite training loss in epoch " +
                           std::to_string(epoch));
      }
      loss_sum += loss * static_cast<double>(batch.size());
      adam.Step(params, grad);
    }
    params.CheckFinite();

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(order.size());
    record.dev_f1 =
        dev_examples.empty()
            ? 0.0
            : PairwiseF1(ScorePairs(params, dev_examples), dev_examples, 0.5);
    record.improved = record.dev_f1 > result.best_dev_f1;
    if (record.improved) {
      result.best_dev_f1 = record.dev_f1;
      result.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else {
      ++since_best;
    }
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
    if (config.patience > 0 && since_best >= config.patience) {
      result.stopped_early = epoch < config.epochs;
      break;
    }
  }
  return result;
}

ScoreMatrix ScoreCorpus(const ModelParameters &params, FeatureStore &store,
                        PairScope scope) {
  const auto pairs = CandidatePairs(store.corpus(), scope, false);
  const auto examples = store.Examples(pairs);
  const auto probs = ScorePairs(params, examples);
  ScoreMatrix out;
  for (size_t i = 0; i < pairs.size(); ++i) {
    out.Set(pairs[i].first, pairs[i].second, probs[i]);
  }
  return out;
}

std::vector<double> DefaultThresholdGrid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back((30 + 5 * i) / 100.0);
  return grid;
}

ThresholdResult TuneThreshold(const Corpus &dev, const ScoreMatrix &scores,
                              std::span<const double> grid,
                              const ClusteringConfig &clustering,
                              const EvalOptions &eval) {
  if (grid.empty()) throw ConfigError("threshold grid is empty");
  ThresholdResult result;
  bool first = true;
  for (double tau : grid) {
    ClusteringConfig config = clustering;
    config.threshold = tau;
    const double conll =
        Evaluate(dev, ClusterCorpus(dev, scores, config), eval).conll_f1;
    result.curve.emplace_back(tau, conll);
    if (first || conll > result.conll_f1 ||
        (conll == result.conll_f1 && tau > result.threshold)) {
      result.threshold = tau;
      result.conll_f1 = conll;
      first = false;
    }
  }
  return result;
}

}  // namespace evcoref
