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

#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "evcoref/errors.h"
#include "evcoref/synthetic.h"

using namespace evcoref;

namespace {

std::string Serialize(const SyntheticCorpus &s) {
  std::ostringstream out;
  WriteCorpus(s.corpus, out);
  WriteInferences(s.fixtures, out);
  return out.str();
}

size_t Shared(const InferenceSet &a, const InferenceSet &b) {
  std::set<std::string> left(a.before.begin(), a.before.end());
  left.insert(a.after.begin(), a.after.end());
  size_t n = 0;
  std::set<std::string> right(b.before.begin(), b.before.end());
  right.insert(b.after.begin(), b.after.end());
  for (const auto &s : right) n += left.count(s);
  return n;
}

}  // namespace

TEST_CASE("generation is deterministic") {
  SyntheticSpec spec;
  spec.seed = 7;
  CHECK(Serialize(GenerateSynthetic(spec)) == Serialize(GenerateSynthetic(spec)));
  SyntheticSpec other = spec;
  other.seed = 8;
  CHECK(Serialize(GenerateSynthetic(spec)) != Serialize(GenerateSynthetic(other)));
}

TEST_CASE("counts follow the generator settings") {
  SyntheticSpec spec;
  spec.n_topics = 4;
  spec.clusters_per_topic = 3;
  spec.mentions_per_cluster = 4;
  const auto s = GenerateSynthetic(spec);
  CHECK(s.corpus.mentions().size() == 48);
  CHECK(s.corpus.GoldClustering().NumClusters() == 12);
  CHECK(s.fixtures.size() == 48);
  CHECK(s.hard_clusters.size() == 6);
}

TEST_CASE("hard clusters use distinct heads and share inferences") {
  SyntheticSpec spec;
  spec.n_topics = 6;
  spec.mentions_per_cluster = 3;
  spec.hard_fraction = 0.5;
  const auto s = GenerateSynthetic(spec);
  std::map<std::string, InferenceSet> by_mention;
  for (const auto &f : s.fixtures) by_mention[f.mention_id] = f;
  REQUIRE_FALSE(s.hard_clusters.empty());
  for (const auto &[cid, members] : s.corpus.GoldClustering().Clusters()) {
    CHECK(IsHardClusterId(cid) == (s.hard_clusters.count(cid) == 1));
    if (!IsHardClusterId(cid)) {
      std::set<std::string> heads;
      for (const auto &m : members) heads.insert(s.corpus.mention(m).text);
      CHECK(heads.size() == 1);
      continue;
    }
    std::set<std::string> heads;
    for (const auto &m : members) heads.insert(s.corpus.mention(m).text);
    CHECK(heads.size() == members.size());
    for (size_t a = 0; a < members.size(); ++a) {
      for (size_t b = a + 1; b < members.size(); ++b) {
        CHECK(Shared(by_mention[members[a]], by_mention[members[b]]) >= 2);
      }
    }
  }
}

TEST_CASE("synthetic provider returns the generator's fixtures") {
  SyntheticSpec spec;
  const auto s = GenerateSynthetic(spec);
  SyntheticProvider provider(spec);
  for (const auto &f : s.fixtures) {
    const auto &m = s.corpus.mention(f.mention_id);
    CHECK(provider.Generate(m, s.corpus.ContextOf(m)) == f);
  }
  Mention stranger;
  stranger.mention_id = "nobody";
  CHECK_THROWS_AS(provider.Generate(stranger, ""), ValidationError);
}

TEST_CASE("invalid specs are config errors") {
  SyntheticSpec spec;
  spec.clusters_per_topic = 0;
  CHECK_THROWS_AS(spec.Validate(), ConfigError);
  spec = {};
  spec.hard_fraction = 1.5;
  CHECK_THROWS_AS(spec.Validate(), ConfigError);
  spec = {};
  spec.distractor_rate = -1;
  CHECK_THROWS_AS(spec.Validate(), ConfigError);
  spec = {};
  spec.clusters_per_topic = 10000;
  CHECK_THROWS_AS(spec.Validate(), ConfigError);
}

TEST_CASE("mentions stay inside their sentences") {
  SyntheticSpec spec;
  spec.distractor_rate = 1.5;
  const auto s = GenerateSynthetic(spec);
  for (const auto &m : s.corpus.mentions()) {
    const auto &sentence = s.corpus.SentenceOf(m);
    CHECK(m.token_end < static_cast<int>(sentence.size()));
    CHECK(sentence[m.token_start] == m.text);
  }
}
