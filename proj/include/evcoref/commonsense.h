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

// Temporal commonsense inferences: prompt construction for the generation
// model, completion parsing, inference providers and the persistent cache.
//
// A fine-tuned prompt is laid out as
//
//   Context: <sentence>\nEvent: <mention text>\nBefore:
//
// and the model is expected to continue with the before inferences, a line
// starting with "After:", the after inferences and the stop token.

#ifndef EVCOREF_COMMONSENSE_H_
#define EVCOREF_COMMONSENSE_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "evcoref/corpus.h"

namespace evcoref {

inline constexpr int kDefaultInferenceCount = 5;
inline constexpr size_t kFewshotExemplarCount = 8;
inline constexpr char kCredentialEnvVar[] = "EVCOREF_GENERATION_API_KEY";

// Up to k "before" and k "after" inference sentences for one mention.
struct InferenceSet {
  std::string doc_id;
  std::string mention_id;
  std::vector<std::string> before;
  std::vector<std::string> after;
  // "fixture", "synthetic", "service:<model>" or "fewshot:<model>", with an
  // optional ";warning=<what>" suffix.
  std::string provenance;

  bool operator==(const InferenceSet &) const = default;
};

// Strips whitespace, drops empty strings and truncates both lists to k.
void NormalizeInferenceSet(InferenceSet &set, int k);

enum class PromptMode { kFinetuned, kFewshot };
PromptMode ParsePromptMode(std::string_view name);

struct GenerationConfig {
  double top_p = 0.9;
  int max_tokens = 150;
  std::string stop = "END";
  int k = kDefaultInferenceCount;
  PromptMode mode = PromptMode::kFinetuned;
  std::string model_id = "default";

  void Validate() const;
};

// A human-written example used in few-shot prompts.
struct PromptExemplar {
  std::string context;
  std::string event;
  std::vector<std::string> before;
  std::vector<std::string> after;
};

// Throws ValidationError when `event` is not a substring of `context` or when
// few-shot mode does not get exactly kFewshotExemplarCount exemplars.
std::string FormatPrompt(std::string_view context, std::string_view event,
                         PromptMode mode,
                         std::span<const PromptExemplar> exemplars = {});

// Seeded sample of `count` exemplars without replacement.
std::vector<PromptExemplar> SampleExemplars(
    std::span<const PromptExemplar> pool, size_t count, uint64_t seed);
std::vector<PromptExemplar> ReadExemplarFile(const std::filesystem::path &path);

struct ParsedCompletion {
  std::vector<std::string> before;
  std::vector<std::string> after;
  bool missing_after = false;
};

// Parses the text the model produced after the trailing "Before:" cue.
ParsedCompletion ParseCompletion(std::string_view completion, int k,
                                 std::string_view stop = "END");

// Splits on '.', '!' and '?' followed by whitespace or end of text. Terminal
// punctuation stays with its sentence; fragments under 3 characters are
// dropped.
std::vector<std::string> SplitSentences(std::string_view text);

// Whitespace tokenization with trailing punctuation split off, used to embed
// inference sentences.
std::vector<std::string> TokenizeInference(std::string_view sentence);

// Source of inferences for a mention.
class InferenceProvider {
 public:
  virtual ~InferenceProvider() = default;

  // `context` is the full sentence containing the mention.
  virtual InferenceSet Generate(const Mention &mention,
                                const std::string &context) = 0;
  // Identifies the provider and its settings in cache keys.
  virtual std::string Fingerprint() const = 0;
};

// Looks inferences up in a fixture file. In strict mode a missing mention is
// a ValidationError; otherwise an empty set carrying a warning is returned.
class FixtureProvider : public InferenceProvider {
 public:
  FixtureProvider(std::vector<InferenceSet> sets, bool strict);
  static std::unique_ptr<FixtureProvider> FromFile(
      const std::filesystem::path &path, bool strict);

  InferenceSet Generate(const Mention &mention,
                        const std::string &context) override;
  std::string Fingerprint() const override { return fingerprint_; }

 private:
  std::map<std::string, InferenceSet> by_mention_;
  bool strict_;
  std::string fingerprint_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

// Client for the text generation service:
//   POST {"prompt", "top_p", "max_tokens", "stop"} -> {"completion"}
// The bearer credential is read from kCredentialEnvVar on every request and
// is never logged.
class GenerationClient {
 public:
  GenerationClient(std::string endpoint, RetryPolicy retry = {},
                   double timeout_seconds = 60.0);

  std::string Complete(const std::string &prompt,
                       const GenerationConfig &config) const;

 private:
  std::string base_;
  std::string path_;
  RetryPolicy retry_;
  double timeout_seconds_;
};

// Prompts a generation service (fine-tuned or few-shot) and parses the
// completion.
class ServiceProvider : public InferenceProvider {
 public:
  // Few-shot mode samples kFewshotExemplarCount exemplars from
  // `exemplar_pool` once, using `seed`.
  ServiceProvider(GenerationClient client, GenerationConfig config,
                  std::vector<PromptExemplar> exemplar_pool = {},
                  uint64_t seed = 0);

  InferenceSet Generate(const Mention &mention,
                        const std::string &context) override;
  std::string Fingerprint() const override;

 private:
  GenerationClient client_;
  GenerationConfig config_;
  std::vector<PromptExemplar> exemplars_;
};

// File-backed cache of inference sets keyed by
// (doc_id, mention_id, provider fingerprint). Entries are immutable; every
// insert rewrites the file through a temporary and a rename, so readers
// never see a partial file.
class InferenceCache {
 public:
  explicit InferenceCache(std::filesystem::path path);

  std::optional<InferenceSet> Find(const std::string &doc_id,
                                   const std::string &mention_id,
                                   const std::string &fingerprint) const;
  // No-op when the key is already present.
  void Insert(const std::string &fingerprint, const InferenceSet &set);
  size_t size() const;

 private:
  using Key = std::tuple<std::string, std::string, std::string>;
  struct Entry {
    InferenceSet set;
    std::string created_at;
  };
  void Flush() const;

  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<Key, Entry> entries_;
};

// Cache-first access to a provider. Safe to call from several threads when
// the provider is.
class InferenceEngine {
 public:
  InferenceEngine(InferenceProvider &provider, InferenceCache *cache, int k);

  InferenceSet Get(const Mention &mention, const std::string &context);
  InferenceSet Get(const Corpus &corpus, const Mention &mention) {
    return Get(mention, corpus.ContextOf(mention));
  }
  // Number of times the provider was actually invoked.
  size_t provider_calls() const { return provider_calls_.load(); }

 private:
  InferenceProvider &provider_;
  InferenceCache *cache_;
  int k_;
  std::atomic<size_t> provider_calls_{0};
};

// Fixture file: one JSON record per line with doc_id, mention_id, before,
// after and provenance. Cache files add fingerprint and created_at.
std::vector<InferenceSet> ReadInferences(std::istream &in);
std::vector<InferenceSet> LoadInferenceFile(const std::filesystem::path &path);
void WriteInferences(std::span<const InferenceSet> sets, std::ostream &out);
void SaveInferenceFile(std::span<const InferenceSet> sets,
                       const std::filesystem::path &path);

}  // namespace evcoref

#endif  // EVCOREF_COMMONSENSE_H_
