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

// Documents, gold event mentions and corpus file I/O.
//
// The corpus file is UTF-8 with one JSON record per line. Each record is an
// object with exactly one key, "doc" or "mention":
//
//   {"doc":{"doc_id":"d1","sentences":[["A","man","left","."]],
//           "subtopic_id":"1_a","topic_id":"1"}}
//   {"mention":{"doc_id":"d1","gold_cluster_id":"c1","mention_id":"m1",
//               "sentence_index":0,"text":"left","token_end":2,
//               "token_start":2}}
//
// A canonical file lists every doc record before the mention records, with
// keys sorted and no whitespace; WriteCorpus always produces that form.

#ifndef EVCOREF_CORPUS_H_
#define EVCOREF_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "evcoref/clustering.h"

namespace evcoref {

using Sentence = std::vector<std::string>;

struct Document {
  std::string doc_id;
  std::string topic_id;
  std::string subtopic_id;
  std::vector<Sentence> sentences;
};

struct Mention {
  std::string mention_id;
  std::string doc_id;
  int sentence_index = 0;
  int token_start = 0;  // inclusive
  int token_end = 0;    // inclusive
  std::string text;
  std::optional<std::string> gold_cluster_id;

  int width() const { return token_end - token_start + 1; }
};

// Two mentions in canonical order with a coreference label (1 = coreferent).
struct MentionPair {
  std::string first;
  std::string second;
  int label = 0;
};

enum class PairScope { kSubtopic, kTopic, kCorpus };

PairScope ParsePairScope(std::string_view name);
std::string_view PairScopeName(PairScope scope);

class Corpus {
 public:
  // Both adders validate against the invariants of the corpus format and
  // throw ValidationError on violation. Mentions must refer to a document
  // that was already added.
  void AddDocument(Document doc);
  void AddMention(Mention mention);

  const std::vector<Document> &documents() const { return documents_; }
  const std::vector<Mention> &mentions() const { return mentions_; }

  bool HasDocument(const std::string &doc_id) const;
  bool HasMention(const std::string &mention_id) const;
  const Document &document(const std::string &doc_id) const;
  const Mention &mention(const std::string &mention_id) const;
  size_t DocumentIndex(const std::string &doc_id) const;

  const Sentence &SentenceOf(const Mention &mention) const;
  // The mention's sentence joined by single spaces.
  std::string ContextOf(const Mention &mention) const;
  const Document &DocumentOf(const Mention &mention) const {
    return document(mention.doc_id);
  }

  // Gold clustering over the mentions that carry a gold_cluster_id.
  Clustering GoldClustering() const;

  // Copy holding every document but only the mentions that satisfy `keep`.
  template <typename Pred>
  Corpus FilterMentions(Pred keep) const {
    Corpus out;
    for (const Document &d : documents_) out.AddDocument(d);
    for (const Mention &m : mentions_) {
      if (keep(m)) out.AddMention(m);
    }
    return out;
  }

  // Mentions sorted by document order, then sentence, then token_start.
  std::vector<const Mention *> CanonicalMentions() const;

  // Mention ids grouped into scope units, in canonical order. Units are
  // ordered by their first canonical mention.
  std::vector<std::vector<std::string>> ScopeUnits(PairScope scope) const;

 private:
  std::vector<Document> documents_;
  std::vector<Mention> mentions_;
  std::unordered_map<std::string, size_t> doc_index_;
  std::unordered_map<std::string, size_t> mention_index_;
};

Corpus ReadCorpus(std::istream &in);
Corpus LoadCorpus(const std::filesystem::path &path);
void WriteCorpus(const Corpus &corpus, std::ostream &out);
void SaveCorpus(const Corpus &corpus, const std::filesystem::path &path);

struct ExpectedStats {
  size_t mentions = 0;
  size_t clusters = 0;
};

struct StatsReport {
  bool pass = false;
  size_t mentions = 0;
  size_t clusters = 0;
  std::vector<std::string> mismatches;
};

// Counts gold mentions and distinct gold clusters and compares them to the
// expected values.
StatsReport ValidateStats(const Corpus &corpus, const ExpectedStats &expected);

// All unordered mention pairs within each scope unit. When `with_labels` is
// set every mention must carry a gold cluster id (ValidationError otherwise).
std::vector<MentionPair> CandidatePairs(const Corpus &corpus, PairScope scope,
                                        bool with_labels = true);

}  // namespace evcoref

#endif  // EVCOREF_CORPUS_H_
