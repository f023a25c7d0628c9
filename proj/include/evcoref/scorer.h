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

// Commonsense-enhanced pairwise scorer.
//
// For a mention pair (i, j) the scorer input is
//
//   g = [ctx_i, ctx_j, cs_i, cs_j]        (cs blocks absent in baseline mode)
//
// where ctx is the mention's span representation and cs = [B, A] holds one
// attention-pooled vector per temporal relation. B and A come from a single
// scaled dot-product attention head whose query is the mention's own ctx and
// whose keys/values are span representations of inference sentences: the
// mention's own inferences in intra mode, the other mention's in inter mode.
// The values are the inference representations themselves.
//
// The probability is sigmoid(w2 . relu(W1^T g + b1) + b2), with inverted
// dropout on the hidden layer during training.

#ifndef EVCOREF_SCORER_H_
#define EVCOREF_SCORER_H_

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evcoref/embed.h"
#include "evcoref/random.h"

namespace evcoref {

enum class ScorerMode { kBaseline, kIntra, kInter };
ScorerMode ParseScorerMode(std::string_view name);
std::string_view ScorerModeName(ScorerMode mode);

struct ModelDims {
  int dim = 16;
  int width_dim = 20;
  int max_width_bucket = 8;
  int attention_dim = 8;
  int hidden = 1024;
  ScorerMode mode = ScorerMode::kIntra;

  int span_dim() const { return 3 * dim + width_dim; }
  int pair_dim() const {
    return (mode == ScorerMode::kBaseline ? 2 : 6) * span_dim();
  }
  void Validate() const;
  bool operator==(const ModelDims &) const = default;
};

struct ModelParameters {
  ModelDims dims;
  Vector w_alpha;      // dim
  Matrix width_table;  // max_width_bucket x width_dim
  Matrix wq_before;    // span_dim x attention_dim
  Matrix wk_before;
  Matrix wq_after;
  Matrix wk_after;
  Matrix w1;  // pair_dim x hidden
  Vector b1;  // hidden
  Vector w2;  // hidden
  double b2 = 0.0;
  int version = 1;

  static ModelParameters Zeros(const ModelDims &dims);
  // Uniform in +-1/sqrt(fan_in) for every block, drawn in block order.
  static ModelParameters Initialize(const ModelDims &dims, uint64_t seed);

  // Calls f(name, data, rows, cols) for every trainable block, in a fixed
  // order. Data is column-major.
  template <typename F>
  void ForEachBlock(F &&f) {
    f("w_alpha", w_alpha.data(), w_alpha.size(), Eigen::Index{1});
    f("width_table", width_table.data(), width_table.rows(), width_table.cols());
    f("wq_before", wq_before.data(), wq_before.rows(), wq_before.cols());
    f("wk_before", wk_before.data(), wk_before.rows(), wk_before.cols());
    f("wq_after", wq_after.data(), wq_after.rows(), wq_after.cols());
    f("wk_after", wk_after.data(), wk_after.rows(), wk_after.cols());
    f("w1", w1.data(), w1.rows(), w1.cols());
    f("b1", b1.data(), b1.size(), Eigen::Index{1});
    f("w2", w2.data(), w2.size(), Eigen::Index{1});
    f("b2", &b2, Eigen::Index{1}, Eigen::Index{1});
  }
  template <typename F>
  void ForEachBlock(F &&f) const {
    const_cast<ModelParameters *>(this)->ForEachBlock(
        [&f](std::string_view name, double *data, Eigen::Index rows,
             Eigen::Index cols) {
          f(name, static_cast<const double *>(data), rows, cols);
        });
  }

  size_t NumParameters() const;
  // Throws NumericError naming the first block holding a non-finite entry.
  void CheckFinite() const;
  bool operator==(const ModelParameters &other) const;
};

struct AttentionOutput {
  Vector vector;
  std::vector<double> weights;
};

// Single-head scaled dot-product attention with identity value map:
//   s_j = (W_q^T query) . (W_k^T r_j) / sqrt(d_a),  weights = softmax(s),
//   vector = sum_j weights_j r_j.
// An empty `reps` gives a zero vector and no weights.
AttentionOutput Attend(const Vector &query, std::span<const Vector> reps,
                       const Matrix &wq, const Matrix &wk);

struct CommonsenseVector {
  Vector vector;  // [before; after]
  AttentionOutput before;
  AttentionOutput after;
};

// `ctx_self` is the representation of the mention the vector belongs to; the
// caller passes the mention's own inference reps (intra) or the other
// mention's (inter). Not defined for baseline mode.
CommonsenseVector ComputeCommonsenseVector(ScorerMode mode,
                                           const Vector &ctx_self,
                                           std::span<const Vector> before_reps,
                                           std::span<const Vector> after_reps,
                                           const ModelParameters &params);

struct PairFeature {
  Vector g;
  std::string first;
  std::string second;
  ScorerMode mode = ScorerMode::kIntra;
};

PairFeature BuildPairFeature(const Vector &ctx_i, const Vector &ctx_j,
                             const Vector &cs_i, const Vector &cs_j,
                             ScorerMode mode, std::string first = {},
                             std::string second = {});

// MLP head only. With training=true a dropout mask with rate `dropout` is
// drawn from rng.
double ScorePair(const ModelParameters &params, const Vector &g, bool training,
                 Rng &rng, double dropout = 0.3);

struct LabeledFeature {
  Vector g;
  int label = 0;
};

inline constexpr double kProbabilityClamp = 1e-7;

// Mean binary cross-entropy with p clamped to [1e-7, 1 - 1e-7].
double BatchLoss(const ModelParameters &params,
                 std::span<const LabeledFeature> batch, bool training, Rng &rng,
                 double dropout = 0.3);

// Token vectors a mention contributes to the scorer: its span and every
// inference sentence, each as a dim x n matrix.
struct MentionInput {
  std::string mention_id;
  Matrix span_tokens;
  std::vector<Matrix> before;
  std::vector<Matrix> after;
  std::vector<std::string> before_text;
  std::vector<std::string> after_text;
};

struct PairExample {
  const MentionInput *first = nullptr;
  const MentionInput *second = nullptr;
  int label = 0;
};

// hidden x batch matrix of inverted-dropout scales (0 or 1/(1-rate)).
Matrix DrawDropoutMask(int hidden, int batch, double rate, Rng &rng);

// Loss over pair examples through the whole network. `mask` may be null
// (evaluation). When `pattern` is given it receives one byte per hidden unit
// and example recording relu activity, plus one per example recording
// probability clamping, so callers can detect kinks.
double PairLoss(const ModelParameters &params,
                std::span<const PairExample> batch, const Matrix *mask,
                std::vector<uint8_t> *pattern = nullptr);

// Same loss; `grad` is overwritten with its exact gradient.
double PairLossAndGradient(const ModelParameters &params,
                           std::span<const PairExample> batch,
                           const Matrix *mask, ModelParameters &grad);

// Draws a dropout mask from rng and returns the gradient of the resulting
// training loss.
ModelParameters Gradients(const ModelParameters &params,
                          std::span<const PairExample> batch, Rng &rng,
                          double dropout = 0.3);

// Evaluation-mode coreference probabilities.
std::vector<double> ScorePairs(const ModelParameters &params,
                               std::span<const PairExample> batch);

struct PairTrace {
  double probability = 0.0;
  CommonsenseVector cs_first;
  CommonsenseVector cs_second;
};

// Probability plus the attention weights behind it. In inter mode
// cs_first attends over the second mention's inferences and vice versa.
PairTrace ExplainPair(const ModelParameters &params, const MentionInput &first,
                      const MentionInput &second);

}  // namespace evcoref

#endif  // EVCOREF_SCORER_H_
