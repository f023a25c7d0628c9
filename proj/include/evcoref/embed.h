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

// Token embedding providers and span representations.
//
// A span representation concatenates, in this order, the first token vector,
// the last token vector, an attention-pooled vector over the span's tokens
// and a learned width embedding:
//
//   full = [start; last; pooled; width_feature]      (3 * d + d_len)
//
// with pooled = sum_t alpha_t x_t and alpha = softmax_t(w_alpha . x_t).

#ifndef EVCOREF_EMBED_H_
#define EVCOREF_EMBED_H_

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "evcoref/corpus.h"

namespace evcoref {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Deterministic unit-norm pseudo-random vector for `token`.
Vector HashEmbed(std::string_view token, int dim, uint64_t seed);

enum class EmbedProvider { kHash, kService };
EmbedProvider ParseEmbedProvider(std::string_view name);

struct EmbedderConfig {
  EmbedProvider provider = EmbedProvider::kHash;
  int dim = 16;
  uint64_t seed = 1;
  std::string endpoint;  // required for kService
  int width_dim = 20;
  int max_width_bucket = 8;
  int max_concurrency = 4;
  double timeout_seconds = 30.0;

  void Validate() const;
};

// One dim x n_tokens matrix per sentence.
struct EmbeddingMatrix {
  int dim = 0;
  std::vector<Matrix> sentences;
};

class Embedder {
 public:
  virtual ~Embedder() = default;

  // `cache_key` identifies the sentence list (a doc_id, for documents).
  virtual EmbeddingMatrix EmbedSentences(const std::string &cache_key,
                                         const std::vector<Sentence> &sentences) = 0;
  virtual std::string Fingerprint() const = 0;
  virtual int dim() const = 0;

  EmbeddingMatrix EmbedDocument(const Document &doc) {
    return EmbedSentences(doc.doc_id, doc.sentences);
  }
};

// Context-free: identical tokens always get identical vectors.
class HashEmbedder : public Embedder {
 public:
  HashEmbedder(int dim, uint64_t seed);

  EmbeddingMatrix EmbedSentences(const std::string &cache_key,
                                 const std::vector<Sentence> &sentences) override;
  std::string Fingerprint() const override;
  int dim() const override { return dim_; }

 private:
  int dim_;
  uint64_t seed_;
};

// Contextual embeddings from an HTTP service:
//   POST {"sentences": [[token, ...], ...]}
//     -> {"vectors": [[[real x d], ...], ...], "d": int}
// At most max_concurrency requests are in flight; results are cached by
// (cache_key, fingerprint).
class ServiceEmbedder : public Embedder {
 public:
  explicit ServiceEmbedder(const EmbedderConfig &config);

  EmbeddingMatrix EmbedSentences(const std::string &cache_key,
                                 const std::vector<Sentence> &sentences) override;
  std::string Fingerprint() const override;
  int dim() const override { return config_.dim; }
  size_t requests() const;

 private:
  EmbedderConfig config_;
  std::string base_;
  std::string path_;
  std::counting_semaphore<64> slots_;
  mutable std::mutex mu_;
  std::map<std::string, EmbeddingMatrix> cache_;
  size_t requests_ = 0;
};

std::unique_ptr<Embedder> MakeEmbedder(const EmbedderConfig &config);

// Dispatches over providers; throws DimensionError when the provider's output
// does not have config.dim components.
EmbeddingMatrix EmbedDocument(const EmbedderConfig &config, const Document &doc);

// 0-based row of the width table for a span of `width` tokens.
int WidthBucket(int width, int max_width_bucket);

struct SpanRepresentation {
  Vector start;
  Vector last;
  Vector pooled;
  Vector width_feature;
  Vector full;
  Vector attention;  // alpha over the span's tokens
  int width_row = 0;
};

// `tokens` is d x n (n >= 1); `width_table` is max_width_bucket x d_len.
SpanRepresentation ComputeSpanRepresentation(const Matrix &tokens,
                                             const Vector &w_alpha,
                                             const Matrix &width_table);

// Span [token_start, token_end] (inclusive) of one sentence. Throws
// ValidationError when the span is out of bounds.
SpanRepresentation SpanRepresentationAt(const EmbeddingMatrix &matrix,
                                        int sentence_index, int token_start,
                                        int token_end, const Vector &w_alpha,
                                        const Matrix &width_table);

// Adds dL/dw_alpha and dL/dwidth_table to the accumulators, given dL/dfull.
void AccumulateSpanGradient(const Matrix &tokens, const SpanRepresentation &rep,
                            const Eigen::Ref<const Vector> &grad_full,
                            Vector &grad_w_alpha, Matrix &grad_width_table);

}  // namespace evcoref

#endif  // EVCOREF_EMBED_H_
