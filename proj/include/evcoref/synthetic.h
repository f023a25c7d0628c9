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

// Desk-scale synthetic corpora with a controllable split between lexical and
// commonsense coreference signal.
//
// Every gold cluster is tied to an event family. In an easy cluster all
// mentions share one head lexeme of that family. In a hard cluster the heads
// are pairwise distinct generic verbs, so only the emitted inference sets
// (three of each relation drawn from a four-sentence family pool, plus two
// generic sentences) connect the mentions.

#ifndef EVCOREF_SYNTHETIC_H_
#define EVCOREF_SYNTHETIC_H_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "evcoref/commonsense.h"
#include "evcoref/corpus.h"

namespace evcoref {

struct SyntheticSpec {
  int n_topics = 4;
  int clusters_per_topic = 3;
  int mentions_per_cluster = 4;
  double hard_fraction = 0.5;
  double distractor_rate = 0.5;
  uint64_t seed = 7;

  // Throws ConfigError for non-positive counts, out-of-range rates, or
  // requests that exceed the embedded vocabulary.
  void Validate() const;
};

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<InferenceSet> fixtures;
  std::set<std::string> hard_clusters;
};

SyntheticCorpus GenerateSynthetic(const SyntheticSpec &spec);

// Gold cluster ids produced by the generator end in "-easy" or "-hard".
bool IsHardClusterId(std::string_view cluster_id);

// Number of inference sentences per relation drawn from the family pool.
inline constexpr int kSharedPoolDraws = 3;

// Serves the inference sets the generator emits for `spec`.
class SyntheticProvider : public InferenceProvider {
 public:
  explicit SyntheticProvider(const SyntheticSpec &spec);

  InferenceSet Generate(const Mention &mention,
                        const std::string &context) override;
  std::string Fingerprint() const override { return fingerprint_; }

 private:
  std::map<std::string, InferenceSet> by_mention_;
  std::string fingerprint_;
};

namespace synthetic_vocab {

struct EventFamily {
  std::string_view name;
  std::vector<std::string_view> lexemes;
  std::vector<std::string_view> before_pool;
  std::vector<std::string_view> after_pool;
};

const std::vector<EventFamily> &Families();
const std::vector<std::string_view> &GenericHeads();
const std::vector<std::string_view> &GenericInferences();
const std::vector<std::string_view> &Subjects();
const std::vector<std::string_view> &Objects();
const std::vector<std::string_view> &Places();
const std::vector<std::string_view> &Days();
const std::vector<std::vector<std::string_view>> &DistractorSentences();

}  // namespace synthetic_vocab
}  // namespace evcoref

#endif  // EVCOREF_SYNTHETIC_H_
