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

#include "evcoref/embed.h"

#include <cmath>
#include <sstream>

#include "evcoref/errors.h"
#include "evcoref/random.h"
#include "http_util.h"
#include "httplib.h"
#include "json.hpp"

namespace evcoref {

using json = nlohmann::json;

Vector HashEmbed(std::string_view token, int dim, uint64_t seed) {
  if (dim < 1) throw DimensionError("embedding dimension must be >= 1");
  Rng rng(SplitMix64(Fnv1a64(token) ^ SplitMix64(seed)));
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = Gaussian(rng);
  double norm = v.norm();
  if (norm == 0.0) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / norm;
}

EmbedProvider ParseEmbedProvider(std::string_view name) {
  if (name == "hash") return EmbedProvider::kHash;
  if (name == "service") return EmbedProvider::kService;
  throw ConfigError("unknown embedding provider: " + std::string(name));
}

void EmbedderConfig::Validate() const {
  if (dim < 1) throw ConfigError("embedder dim must be >= 1");
  if (width_dim < 1) throw ConfigError("width_dim must be >= 1");
  if (max_width_bucket < 1) throw ConfigError("max_width_bucket must be >= 1");
  if (provider == EmbedProvider::kService && endpoint.empty()) {
    throw ConfigError("service embedder requires an endpoint");
  }
  if (max_concurrency < 1 || max_concurrency > 64) {
    throw ConfigError("embedder concurrency must lie in [1, 64]");
  }
}

HashEmbedder::HashEmbedder(int dim, uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 1) throw ConfigError("embedder dim must be >= 1");
}

EmbeddingMatrix HashEmbedder::EmbedSentences(
    const std::string &, const std::vector<Sentence> &sentences) {
  EmbeddingMatrix out;
  out.dim = dim_;
  out.sentences.reserve(sentences.size());
  for (const auto &sentence : sentences) {
    Matrix m(dim_, static_cast<Eigen::Index>(sentence.size()));
    for (size_t t = 0; t < sentence.size(); ++t) {
      m.col(static_cast<Eigen::Index>(t)) = HashEmbed(sentence[t], dim_, seed_);
    }
    out.sentences.push_back(std::move(m));
  }
  return out;
}

std::string HashEmbedder::Fingerprint() const {
  return "hash:d=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_);
}

ServiceEmbedder::ServiceEmbedder(const EmbedderConfig &config)
    : config_(config), slots_(config.max_concurrency) {
  config_.Validate();
  std::tie(base_, path_) = internal::SplitEndpoint(config_.endpoint);
}

std::string ServiceEmbedder::Fingerprint() const {
  return "service:" + config_.endpoint + ":d=" + std::to_string(config_.dim);
}

size_t ServiceEmbedder::requests() const {
  std::lock_guard<std::mutex> lock(mu_);
  return requests_;
}

EmbeddingMatrix ServiceEmbedder::EmbedSentences(
    const std::string &cache_key, const std::vector<Sentence> &sentences) {
  const std::string key = cache_key + '\x1f' + Fingerprint();
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    ++requests_;
  }

  const std::string payload = json{{"sentences", sentences}}.dump();
  httplib::Result res;
  {
    slots_.acquire();
    httplib::Client client(base_);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(config_.timeout_seconds));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    res = client.Post(path_, payload, "application/json");
    slots_.release();
  }
  if (!res) {
    throw ServiceError("embedding service unreachable: " +
                       httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw ServiceError("embedding service returned HTTP " +
                       std::to_string(res->status));
  }

  EmbeddingMatrix out;
  try {
    json reply = json::parse(res->body);
    const int d = reply.at("d").get<int>();
    if (d != config_.dim) {
      throw DimensionError("embedding service returned d=" + std::to_string(d) +
                           " but the configuration expects d=" +
                           std::to_string(config_.dim));
    }
    const auto &vectors = reply.at("vectors");
    if (!vectors.is_array() || vectors.size() != sentences.size()) {
      throw ServiceError("embedding service returned the wrong sentence count");
    }
    out.dim = d;
    for (size_t s = 0; s < sentences.size(); ++s) {
      const auto &rows = vectors[s];
      if (!rows.is_array() || rows.size() != sentences[s].size()) {
        throw ServiceError("embedding service returned the wrong token count");
      }
      Matrix m(d, static_cast<Eigen::Index>(rows.size()));
      for (size_t t = 0; t < rows.size(); ++t) {
        const auto values = rows[t].get<std::vector<double>>();
        if (values.size() != static_cast<size_t>(d)) {
          throw DimensionError("token vector has " +
                               std::to_string(values.size()) +
                               " components, expected " + std::to_string(d));
        }
        for (int i = 0; i < d; ++i) {
          if (!std::isfinite(values[i])) {
            throw ServiceError("embedding service returned a non-finite value");
          }
          m(i, static_cast<Eigen::Index>(t)) = values[i];
        }
      }
      out.sentences.push_back(std::move(m));
    }
  } catch (const json::exception &e) {
    throw ServiceError(std::string("malformed embedding response: ") + e.what());
  }

  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(key, out);
  return out;
}

std::unique_ptr<Embedder> MakeEmbedder(const EmbedderConfig &config) {
  config.Validate();
  if (config.provider == EmbedProvider::kService) {
    return std::make_unique<ServiceEmbedder>(config);
  }
  return std::make_unique<HashEmbedder>(config.dim, config.seed);
}

EmbeddingMatrix EmbedDocument(const EmbedderConfig &config, const Document &doc) {
  return MakeEmbedder(config)->EmbedDocument(doc);
}

int WidthBucket(int width, int max_width_bucket) {
  if (width < 1) throw ValidationError("span width must be >= 1");
  return std::min(width, max_width_bucket) - 1;
}

SpanRepresentation ComputeSpanRepresentation(const Matrix &tokens,
                                             const Vector &w_alpha,
                                             const Matrix &width_table) {
  const Eigen::Index d = tokens.rows();
  const Eigen::Index n = tokens.cols();
  if (n < 1) throw ValidationError("span has no tokens");
  if (w_alpha.size() != d) {
    throw DimensionError("w_alpha has " + std::to_string(w_alpha.size()) +
                         " components, tokens have " + std::to_string(d));
  }
  SpanRepresentation rep;
  rep.start = tokens.col(0);
  rep.last = tokens.col(n - 1);

  Vector scores = tokens.transpose() * w_alpha;
  const double shift = scores.maxCoeff();
  Vector e = (scores.array() - shift).exp().matrix();
  rep.attention = e / e.sum();
  rep.pooled = tokens * rep.attention;

  rep.width_row = WidthBucket(static_cast<int>(n),
                              static_cast<int>(width_table.rows()));
  rep.width_feature = width_table.row(rep.width_row).transpose();

  const Eigen::Index d_len = width_table.cols();
  rep.full.resize(3 * d + d_len);
  rep.full << rep.start, rep.last, rep.pooled, rep.width_feature;
  return rep;
}

SpanRepresentation SpanRepresentationAt(const EmbeddingMatrix &matrix,
                                        int sentence_index, int token_start,
                                        int token_end, const Vector &w_alpha,
                                        const Matrix &width_table) {
  if (sentence_index < 0 ||
      static_cast<size_t>(sentence_index) >= matrix.sentences.size()) {
    throw ValidationError("span out of bounds: no sentence " +
                          std::to_string(sentence_index));
  }
  const Matrix &tokens = matrix.sentences[sentence_index];
  if (token_start < 0 || token_start > token_end || token_end >= tokens.cols()) {
    throw ValidationError("span out of bounds: [" + std::to_string(token_start) +
                          ", " + std::to_string(token_end) + "] in sentence of " +
                          std::to_string(tokens.cols()) + " tokens");
  }
  return ComputeSpanRepresentation(
      tokens.middleCols(token_start, token_end - token_start + 1), w_alpha,
      width_table);
}

void AccumulateSpanGradient(const Matrix &tokens, const SpanRepresentation &rep,
                            const Eigen::Ref<const Vector> &grad_full,
                            Vector &grad_w_alpha, Matrix &grad_width_table) {
  const Eigen::Index d = tokens.rows();
  const Eigen::Index d_len = grad_width_table.cols();
  const auto grad_pooled = grad_full.segment(2 * d, d);
  // d pooled / d score_u = alpha_u (x_u - pooled)
  Vector projected = tokens.transpose() * grad_pooled;
  const double mean = grad_pooled.dot(rep.pooled);
  Vector grad_scores =
      (rep.attention.array() * (projected.array() - mean)).matrix();
  grad_w_alpha.noalias() += tokens * grad_scores;
  grad_width_table.row(rep.width_row) +=
      grad_full.segment(3 * d, d_len).transpose();
}

}  // namespace evcoref
