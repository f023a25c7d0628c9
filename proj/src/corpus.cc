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

#include "evcoref/corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include "evcoref/errors.h"
#include "json.hpp"

namespace evcoref {
namespace {

using json = nlohmann::json;

std::string LineError(size_t line, const std::string &what) {
  return "corpus line " + std::to_string(line) + ": " + what;
}

void CheckKeys(const json &obj, const std::set<std::string> &required,
               const std::set<std::string> &optional, size_t line) {
  if (!obj.is_object()) throw FormatError(LineError(line, "expected object"));
  for (const auto &key : required) {
    if (!obj.contains(key)) {
      throw FormatError(LineError(line, "missing field '" + key + "'"));
    }
  }
  for (const auto &[key, value] : obj.items()) {
    if (!required.count(key) && !optional.count(key)) {
      throw FormatError(LineError(line, "unknown field '" + key + "'"));
    }
  }
}

template <typename T>
T Field(const json &obj, const char *key, size_t line) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception &) {
    throw FormatError(LineError(line, std::string("bad value for '") + key +
                                          "'"));
  }
}

Document ParseDocument(const json &obj, size_t line) {
  CheckKeys(obj, {"doc_id", "topic_id", "subtopic_id", "sentences"}, {}, line);
  Document doc;
  doc.doc_id = Field<std::string>(obj, "doc_id", line);
  doc.topic_id = Field<std::string>(obj, "topic_id", line);
  doc.subtopic_id = Field<std::string>(obj, "subtopic_id", line);
  doc.sentences = Field<std::vector<Sentence>>(obj, "sentences", line);
  return doc;
}

Mention ParseMention(const json &obj, size_t line) {
  CheckKeys(obj,
            {"mention_id", "doc_id", "sentence_index", "token_start",
             "token_end", "text"},
            {"gold_cluster_id"}, line);
  Mention m;
  m.mention_id = Field<std::string>(obj, "mention_id", line);
  m.doc_id = Field<std::string>(obj, "doc_id", line);
  m.sentence_index = Field<int>(obj, "sentence_index", line);
  m.token_start = Field<int>(obj, "token_start", line);
  m.token_end = Field<int>(obj, "token_end", line);
  m.text = Field<std::string>(obj, "text", line);
  if (obj.contains("gold_cluster_id")) {
    m.gold_cluster_id = Field<std::string>(obj, "gold_cluster_id", line);
  }
  return m;
}

std::string JoinTokens(const Sentence &tokens, size_t begin, size_t end) {
  std::string out;
  for (size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

PairScope ParsePairScope(std::string_view name) {
  if (name == "subtopic") return PairScope::kSubtopic;
  if (name == "topic") return PairScope::kTopic;
  if (name == "corpus") return PairScope::kCorpus;
  throw ConfigError("unknown scope: " + std::string(name));
}

std::string_view PairScopeName(PairScope scope) {
  switch (scope) {
    case PairScope::kSubtopic:
      return "subtopic";
    case PairScope::kTopic:
      return "topic";
    case PairScope::kCorpus:
      return "corpus";
  }
  return "subtopic";
}

void Corpus::AddDocument(Document doc) {
  if (doc.doc_id.empty()) throw ValidationError("empty doc_id");
  if (doc_index_.count(doc.doc_id)) {
    throw ValidationError("duplicate doc_id: " + doc.doc_id);
  }
  for (size_t s = 0; s < doc.sentences.size(); ++s) {
    if (doc.sentences[s].empty()) {
      throw ValidationError("empty sentence " + std::to_string(s) +
                            " in document " + doc.doc_id);
    }
    for (const auto &token : doc.sentences[s]) {
      if (token.empty()) {
        throw ValidationError("empty token in document " + doc.doc_id);
      }
    }
  }
  doc_index_.emplace(doc.doc_id, documents_.size());
  documents_.push_back(std::move(doc));
}

void Corpus::AddMention(Mention m) {
  if (m.mention_id.empty()) throw ValidationError("empty mention_id");
  if (mention_index_.count(m.mention_id)) {
    throw ValidationError("duplicate mention_id: " + m.mention_id);
  }
  auto doc = doc_index_.find(m.doc_id);
  if (doc == doc_index_.end()) {
    throw ValidationError("mention " + m.mention_id + " refers to unknown doc " +
                          m.doc_id);
  }
  const auto &sentences = documents_[doc->second].sentences;
  if (m.sentence_index < 0 ||
      static_cast<size_t>(m.sentence_index) >= sentences.size()) {
    throw ValidationError("span out of bounds for mention " + m.mention_id +
                          ": no sentence " + std::to_string(m.sentence_index));
  }
  const Sentence &tokens = sentences[m.sentence_index];
  if (m.token_start < 0 || m.token_start > m.token_end ||
      static_cast<size_t>(m.token_end) >= tokens.size()) {
    throw ValidationError("span out of bounds for mention " + m.mention_id +
                          ": [" + std::to_string(m.token_start) + ", " +
                          std::to_string(m.token_end) + "] in sentence of " +
                          std::to_string(tokens.size()) + " tokens");
  }
  std::string covered = JoinTokens(tokens, m.token_start, m.token_end + 1);
  if (covered != m.text) {
    throw ValidationError("mention text mismatch for " + m.mention_id + ": '" +
                          m.text + "' vs covered tokens '" + covered + "'");
  }
  mention_index_.emplace(m.mention_id, mentions_.size());
  mentions_.push_back(std::move(m));
}

bool Corpus::HasDocument(const std::string &doc_id) const {
  return doc_index_.count(doc_id) > 0;
}

bool Corpus::HasMention(const std::string &mention_id) const {
  return mention_index_.count(mention_id) > 0;
}

const Document &Corpus::document(const std::string &doc_id) const {
  return documents_[DocumentIndex(doc_id)];
}

size_t Corpus::DocumentIndex(const std::string &doc_id) const {
  auto it = doc_index_.find(doc_id);
  if (it == doc_index_.end()) {
    throw ValidationError("unknown doc_id: " + doc_id);
  }
  return it->second;
}

const Mention &Corpus::mention(const std::string &mention_id) const {
  auto it = mention_index_.find(mention_id);
  if (it == mention_index_.end()) {
    throw ValidationError("unknown mention_id: " + mention_id);
  }
  return mentions_[it->second];
}

const Sentence &Corpus::SentenceOf(const Mention &mention) const {
  return document(mention.doc_id).sentences.at(mention.sentence_index);
}

std::string Corpus::ContextOf(const Mention &mention) const {
  const Sentence &s = SentenceOf(mention);
  return JoinTokens(s, 0, s.size());
}

Clustering Corpus::GoldClustering() const {
  Clustering out;
  for (const Mention &m : mentions_) {
    if (m.gold_cluster_id) out.Assign(m.mention_id, *m.gold_cluster_id);
  }
  return out;
}

std::vector<const Mention *> Corpus::CanonicalMentions() const {
  std::vector<const Mention *> out;
  out.reserve(mentions_.size());
  for (const Mention &m : mentions_) out.push_back(&m);
  auto key = [this](const Mention *m) {
    return std::make_tuple(doc_index_.at(m->doc_id), m->sentence_index,
                           m->token_start, m->token_end,
                           std::string_view(m->mention_id));
  };
  std::sort(out.begin(), out.end(), [&](const Mention *a, const Mention *b) {
    return key(a) < key(b);
  });
  return out;
}

std::vector<std::vector<std::string>> Corpus::ScopeUnits(
    PairScope scope) const {
  std::vector<std::vector<std::string>> units;
  std::unordered_map<std::string, size_t> unit_of;
  for (const Mention *m : CanonicalMentions()) {
    const Document &doc = document(m->doc_id);
    std::string key;
    switch (scope) {
      case PairScope::kSubtopic:
        key = doc.topic_id + '\x1f' + doc.subtopic_id;
        break;
      case PairScope::kTopic:
        key = doc.topic_id;
        break;
      case PairScope::kCorpus:
        break;
    }
    auto [it, inserted] = unit_of.emplace(key, units.size());
    if (inserted) units.emplace_back();
    units[it->second].push_back(m->mention_id);
  }
  return units;
}

Corpus ReadCorpus(std::istream &in) {
  Corpus corpus;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error &e) {
      throw FormatError(LineError(line_no, e.what()));
    }
    if (!record.is_object() || record.size() != 1) {
      throw FormatError(
          LineError(line_no, "record must have exactly one key, doc or mention"));
    }
    try {
      if (record.contains("doc")) {
        corpus.AddDocument(ParseDocument(record["doc"], line_no));
      } else if (record.contains("mention")) {
        corpus.AddMention(ParseMention(record["mention"], line_no));
      } else {
        throw FormatError(LineError(line_no, "unknown record kind"));
      }
    } catch (const ValidationError &e) {
      throw ValidationError(LineError(line_no, e.what()));
    }
  }
  return corpus;
}

Corpus LoadCorpus(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open corpus file " + path.string());
  return ReadCorpus(in);
}

void WriteCorpus(const Corpus &corpus, std::ostream &out) {
  for (const Document &d : corpus.documents()) {
    json doc = {{"doc_id", d.doc_id},
                {"topic_id", d.topic_id},
                {"subtopic_id", d.subtopic_id},
                {"sentences", d.sentences}};
    out << json{{"doc", doc}}.dump() << '\n';
  }
  for (const Mention &m : corpus.mentions()) {
    json mention = {{"mention_id", m.mention_id},
                    {"doc_id", m.doc_id},
                    {"sentence_index", m.sentence_index},
                    {"token_start", m.token_start},
                    {"token_end", m.token_end},
                    {"text", m.text}};
    if (m.gold_cluster_id) mention["gold_cluster_id"] = *m.gold_cluster_id;
    out << json{{"mention", mention}}.dump() << '\n';
  }
}

void SaveCorpus(const Corpus &corpus, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write corpus file " + path.string());
  WriteCorpus(corpus, out);
}

StatsReport ValidateStats(const Corpus &corpus, const ExpectedStats &expected) {
  StatsReport report;
  std::set<std::string> clusters;
  for (const Mention &m : corpus.mentions()) {
    if (!m.gold_cluster_id) continue;
    ++report.mentions;
    clusters.insert(*m.gold_cluster_id);
  }
  report.clusters = clusters.size();
  if (report.mentions != expected.mentions) {
    report.mismatches.push_back("mentions: expected " +
                                std::to_string(expected.mentions) + ", found " +
                                std::to_string(report.mentions));
  }
  if (report.clusters != expected.clusters) {
    report.mismatches.push_back("clusters: expected " +
                                std::to_string(expected.clusters) + ", found " +
                                std::to_string(report.clusters));
  }
  report.pass = report.mismatches.empty();
  return report;
}

std::vector<MentionPair> CandidatePairs(const Corpus &corpus, PairScope scope,
                                        bool with_labels) {
  std::vector<MentionPair> pairs;
  for (const auto &unit : corpus.ScopeUnits(scope)) {
    std::vector<const Mention *> ms;
    ms.reserve(unit.size());
    for (const auto &id : unit) {
      const Mention &m = corpus.mention(id);
      if (with_labels && !m.gold_cluster_id) {
        throw ValidationError("missing gold label on mention " + id);
      }
      ms.push_back(&m);
    }
    for (size_t i = 0; i < ms.size(); ++i) {
      for (size_t j = i + 1; j < ms.size(); ++j) {
        MentionPair p{ms[i]->mention_id, ms[j]->mention_id, 0};
        if (with_labels) {
          p.label = *ms[i]->gold_cluster_id == *ms[j]->gold_cluster_id ? 1 : 0;
        }
        pairs.push_back(std::move(p));
      }
    }
  }
  return pairs;
}

}  // namespace evcoref
