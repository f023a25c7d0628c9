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

#include "evcoref/synthetic.h"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "evcoref/errors.h"
#include "evcoref/random.h"

namespace evcoref {
namespace {

namespace vocab = synthetic_vocab;

constexpr int kPoolSize = 4;
constexpr int kGenericDraws = 2;

std::string Id(const char *fmt, int a, int b = 0) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

template <typename T>
const T &Pick(const std::vector<T> &items, Rng &rng) {
  return items[UniformIndex(rng, items.size())];
}

void AppendWords(std::string_view phrase, Sentence &out) {
  std::istringstream in{std::string(phrase)};
  std::string word;
  while (in >> word) out.push_back(word);
}

// Three of the four pool sentences plus two generic ones, shuffled. Any two
// draws from the same pool share at least two sentences.
std::vector<std::string> DrawInferences(
    const std::vector<std::string_view> &pool, Rng &rng) {
  std::vector<std::string> out;
  for (size_t i : SampleIndices(pool.size(), kSharedPoolDraws, rng)) {
    out.emplace_back(pool[i]);
  }
  const auto &generic = vocab::GenericInferences();
  for (size_t i : SampleIndices(generic.size(), kGenericDraws, rng)) {
    out.emplace_back(generic[i]);
  }
  Shuffle(out, rng);
  return out;
}

}  // namespace

void SyntheticSpec::Validate() const {
  if (n_topics < 1 || clusters_per_topic < 1 || mentions_per_cluster < 1) {
    throw ConfigError("synthetic spec counts must be >= 1");
  }
  if (!(hard_fraction >= 0.0 && hard_fraction <= 1.0)) {
    throw ConfigError("hard_fraction must lie in [0, 1]");
  }
  if (!(distractor_rate >= 0.0) || !std::isfinite(distractor_rate)) {
    throw ConfigError("distractor_rate must be >= 0");
  }
  if (static_cast<size_t>(clusters_per_topic) > vocab::Families().size()) {
    throw ConfigError("clusters_per_topic exceeds the " +
                      std::to_string(vocab::Families().size()) +
                      " available event families");
  }
  if (static_cast<size_t>(clusters_per_topic) * mentions_per_cluster >
      vocab::GenericHeads().size()) {
    throw ConfigError("clusters_per_topic * mentions_per_cluster exceeds the "
                      "generic head vocabulary");
  }
}

bool IsHardClusterId(std::string_view cluster_id) {
  return cluster_id.ends_with("-hard");
}

SyntheticCorpus GenerateSynthetic(const SyntheticSpec &spec) {
  spec.Validate();
  Rng rng(SplitMix64(spec.seed));
  const auto &families = vocab::Families();
  const auto &heads = vocab::GenericHeads();

  const int total = spec.n_topics * spec.clusters_per_topic;
  const auto n_hard = static_cast<size_t>(std::llround(spec.hard_fraction * total));
  std::vector<bool> hard(total, false);
  for (size_t i : SampleIndices(total, n_hard, rng)) hard[i] = true;

  SyntheticCorpus out;
  for (int t = 0; t < spec.n_topics; ++t) {
    const std::string topic = Id("t%03d", t);
    const std::string subtopic = topic + "_s0";
    auto family_ids = SampleIndices(families.size(), spec.clusters_per_topic, rng);
    auto head_ids = SampleIndices(
        heads.size(), spec.clusters_per_topic * spec.mentions_per_cluster, rng);

    struct ClusterPlan {
      std::string gold_id;
      const vocab::EventFamily *family;
      std::vector<std::string> heads;  // one per mention
    };
    std::vector<ClusterPlan> plans;
    size_t next_head = 0;
    for (int c = 0; c < spec.clusters_per_topic; ++c) {
      const bool is_hard = hard[t * spec.clusters_per_topic + c];
      ClusterPlan plan;
      plan.family = &families[family_ids[c]];
      plan.gold_id = Id("t%03d_c%02d", t, c) + (is_hard ? "-hard" : "-easy");
      if (is_hard) {
        for (int m = 0; m < spec.mentions_per_cluster; ++m) {
          plan.heads.emplace_back(heads[head_ids[next_head++]]);
        }
        out.hard_clusters.insert(plan.gold_id);
      } else {
        std::string lexeme(Pick(plan.family->lexemes, rng));
        plan.heads.assign(spec.mentions_per_cluster, lexeme);
      }
      plans.push_back(std::move(plan));
    }

    // Document j carries the j-th mention of every cluster.
    for (int j = 0; j < spec.mentions_per_cluster; ++j) {
      Document doc;
      doc.doc_id = topic + Id("_d%02d", j);
      doc.topic_id = topic;
      doc.subtopic_id = subtopic;

      std::vector<int> order(spec.clusters_per_topic);
      for (int c = 0; c < spec.clusters_per_topic; ++c) order[c] = c;
      Shuffle(order, rng);

      std::vector<Mention> mentions;
      for (int c : order) {
        Sentence s;
        s.emplace_back(Pick(vocab::Subjects(), rng));
        s.push_back(plans[c].heads[j]);
        AppendWords(Pick(vocab::Objects(), rng), s);
        s.emplace_back("in");
        s.emplace_back(Pick(vocab::Places(), rng));
        s.emplace_back("on");
        s.emplace_back(Pick(vocab::Days(), rng));
        s.emplace_back(".");

        Mention m;
        m.mention_id = doc.doc_id + Id("_m%02d", c);
        m.doc_id = doc.doc_id;
        m.sentence_index = static_cast<int>(doc.sentences.size());
        m.token_start = 1;
        m.token_end = 1;
        m.text = plans[c].heads[j];
        m.gold_cluster_id = plans[c].gold_id;
        mentions.push_back(m);
        doc.sentences.push_back(std::move(s));

        InferenceSet inf;
        inf.doc_id = m.doc_id;
        inf.mention_id = m.mention_id;
        inf.before = DrawInferences(plans[c].family->before_pool, rng);
        inf.after = DrawInferences(plans[c].family->after_pool, rng);
        inf.provenance = "synthetic";
        out.fixtures.push_back(std::move(inf));

        const double whole = std::floor(spec.distractor_rate);
        int n_distractors = static_cast<int>(whole);
        if (UniformReal(rng) < spec.distractor_rate - whole) ++n_distractors;
        for (int d = 0; d < n_distractors; ++d) {
          const auto &words = Pick(vocab::DistractorSentences(), rng);
          doc.sentences.emplace_back(words.begin(), words.end());
        }
      }
      out.corpus.AddDocument(std::move(doc));
      for (auto &m : mentions) out.corpus.AddMention(std::move(m));
    }
  }
  return out;
}

SyntheticProvider::SyntheticProvider(const SyntheticSpec &spec) {
  SyntheticCorpus generated = GenerateSynthetic(spec);
  for (auto &set : generated.fixtures) {
    by_mention_.emplace(set.mention_id, std::move(set));
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "synthetic:%d:%d:%d:%.17g:%.17g:%llu",
                spec.n_topics, spec.clusters_per_topic,
                spec.mentions_per_cluster, spec.hard_fraction,
                spec.distractor_rate,
                static_cast<unsigned long long>(spec.seed));
  fingerprint_ = buf;
}

InferenceSet SyntheticProvider::Generate(const Mention &mention,
                                         const std::string &) {
  auto it = by_mention_.find(mention.mention_id);
  if (it == by_mention_.end()) {
    throw ValidationError("synthetic provider has no inferences for mention " +
                          mention.mention_id);
  }
  return it->second;
}

}  // namespace evcoref
