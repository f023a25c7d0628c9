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

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "evcoref/errors.h"
#include "evcoref/metrics.h"
#include "oracles.h"

using namespace evcoref;

namespace {

Clustering Make(std::initializer_list<std::initializer_list<const char *>> groups) {
  std::vector<std::vector<std::string>> clusters;
  for (const auto &g : groups) clusters.emplace_back(g.begin(), g.end());
  return Clustering::FromClusters(clusters);
}

Corpus OneTopicCorpus(const std::vector<std::pair<std::string, std::string>> &gold,
                      const std::string &topic = "t1") {
  Corpus c;
  Document d;
  d.doc_id = "d_" + topic;
  d.topic_id = topic;
  d.subtopic_id = topic + "_s";
  Sentence s;
  for (size_t i = 0; i < gold.size(); ++i) s.push_back("w" + std::to_string(i));
  d.sentences.push_back(s);
  c.AddDocument(d);
  for (size_t i = 0; i < gold.size(); ++i) {
    Mention m;
    m.mention_id = gold[i].first;
    m.doc_id = d.doc_id;
    m.token_start = m.token_end = static_cast<int>(i);
    m.text = s[i];
    m.gold_cluster_id = gold[i].second;
    c.AddMention(m);
  }
  return c;
}

}  // namespace

TEST_CASE("MUC of a split cluster") {
  const auto s = Muc(Make({{"a", "b", "c", "d"}}), Make({{"a", "b"}, {"c", "d"}}));
  CHECK(s.recall == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(s.precision == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.f1 == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("MUC identity and all-singleton response") {
  const auto key = Make({{"a", "b"}, {"c", "d", "e"}});
  CHECK(Muc(key, key).f1 == 1.0);
  const auto s = Muc(key, Make({{"a"}, {"b"}, {"c"}, {"d"}, {"e"}}));
  CHECK(s.recall == 0.0);
  CHECK(s.f1 == 0.0);
}

TEST_CASE("B-cubed of a split cluster") {
  const auto s = BCubed(Make({{"a", "b", "c"}}), Make({{"a", "b"}, {"c"}}));
  CHECK(s.precision == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.recall == doctest::Approx(5.0 / 9).epsilon(1e-12));
  CHECK(s.f1 == doctest::Approx(5.0 / 7).epsilon(1e-12));
}

TEST_CASE("B-cubed one cluster against singletons") {
  const auto key = Make({{"a", "b", "c", "d"}});
  const auto s = BCubed(key, Make({{"a"}, {"b"}, {"c"}, {"d"}}));
  CHECK(s.precision == 1.0);
  CHECK(s.recall == doctest::Approx(0.25));
}

TEST_CASE("CEAF_e crossed clusters") {
  // Alignments: {ab-ac, c-b} sums to 1/2; {ab-b, c-ac} sums to 2/3 + 2/3.
  const auto key = Make({{"a", "b"}, {"c"}});
  const auto response = Make({{"a", "c"}, {"b"}});
  const auto s = CeafE(key, response);
  CHECK(s.precision == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(s.recall == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(s.f1 == doctest::Approx(2.0 / 3).epsilon(1e-12));
  const oracle::Labels k = {0, 0, 1};
  const oracle::Labels r = {0, 1, 0};
  CHECK(oracle::CeafBestScaled(k, r) == 4 * oracle::kScale / 3);
  CHECK(s.f1 == doctest::Approx(oracle::CeafE(k, r).f).epsilon(1e-12));
}

TEST_CASE("CEAF_e identity and empty response") {
  const auto key = Make({{"a", "b"}, {"c"}});
  CHECK(CeafE(key, key).f1 == 1.0);
  CHECK(CeafE(Clustering{}, Clustering{}).f1 == 0.0);
}

TEST_CASE("CoNLL F1 is the mean of three F1 values") {
  auto f = [](double v) { return MetricScore{0, 0, v}; };
  CHECK(ConllF1(f(1), f(1), f(1)) == 1.0);
  CHECK(ConllF1(f(0.8), f(5.0 / 7), f(0.25)) == doctest::Approx(0.5881).epsilon(1e-4));
  CHECK(ConllF1(f(0), f(0), f(0)) == 0.0);
}

TEST_CASE("MetricScore F1 is zero when P + R is zero") {
  CHECK(MetricScore::FromPR(0, 0).f1 == 0.0);
  CHECK(MetricScore::FromPR(0.5, 1.0).f1 == doctest::Approx(2.0 / 3));
}

TEST_CASE("metrics reject different mention universes") {
  CHECK_THROWS_AS(Muc(Make({{"a", "b"}}), Make({{"a", "c"}})), ValidationError);
  CHECK_THROWS_AS(BCubed(Make({{"a"}}), Make({{"b"}})), ValidationError);
  CHECK_THROWS_AS(CeafE(Make({{"a"}}), Make({{"b"}})), ValidationError);
}

TEST_CASE("metrics agree with brute-force oracles on random clusterings") {
  std::mt19937_64 rng(20261016);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t n = 1 + rng() % 8;
    const auto key = oracle::RandomLabels(n, rng);
    const auto response = oracle::RandomLabels(n, rng);
    const auto k = oracle::ToClustering(key);
    const auto r = oracle::ToClustering(response);
    const auto m = Muc(k, r);
    const auto om = oracle::Muc(key, response);
    CHECK(m.precision == doctest::Approx(om.p).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(om.r).epsilon(1e-12));
    const auto b = BCubed(k, r);
    const auto ob = oracle::BCubed(key, response);
    CHECK(b.precision == doctest::Approx(ob.p).epsilon(1e-12));
    CHECK(b.recall == doctest::Approx(ob.r).epsilon(1e-12));
    const auto c = CeafE(k, r);
    const auto oc = oracle::CeafE(key, response);
    CHECK(c.f1 == doctest::Approx(oc.f).epsilon(1e-12));
  }
}

TEST_CASE("Kuhn-Munkres reaches the exhaustive optimum") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + rng() % 8;
    const auto key = oracle::RandomLabels(n, rng);
    const auto response = oracle::RandomLabels(n, rng);
    const auto kg = oracle::Groups(key);
    const auto rg = oracle::Groups(response);
    std::vector<std::vector<double>> phi(kg.size(), std::vector<double>(rg.size()));
    for (size_t i = 0; i < kg.size(); ++i) {
      for (size_t j = 0; j < rg.size(); ++j) {
        phi[i][j] = static_cast<double>(oracle::ScaledPhi(kg[i], rg[j])) / oracle::kScale;
      }
    }
    const auto match = MaxWeightAssignment(phi);
    std::set<int> used;
    int64_t total = 0;
    for (size_t i = 0; i < match.size(); ++i) {
      if (match[i] < 0) continue;
      CHECK(used.insert(match[i]).second);
      total += oracle::ScaledPhi(kg[i], rg[match[i]]);
    }
    CHECK(total == oracle::CeafBestScaled(key, response));
  }
}

TEST_CASE("Kuhn-Munkres handles rectangular tables") {
  const std::vector<std::vector<double>> w = {{1, 5, 2}, {4, 6, 1}};
  const auto match = MaxWeightAssignment(w);
  REQUIRE(match.size() == 2);
  CHECK(w[0][match[0]] + w[1][match[1]] == 9.0);
  const std::vector<std::vector<double>> tall = {{3}, {7}, {1}};
  const auto m2 = MaxWeightAssignment(tall);
  CHECK(m2 == std::vector<int>{-1, 0, -1});
}

TEST_CASE("swapping key and response swaps precision and recall") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + rng() % 8;
    const auto k = oracle::ToClustering(oracle::RandomLabels(n, rng));
    const auto r = oracle::ToClustering(oracle::RandomLabels(n, rng));
    for (auto metric : {&Muc, &BCubed, &CeafE}) {
      const auto a = metric(k, r);
      const auto b = metric(r, k);
      CHECK(a.precision == doctest::Approx(b.recall).epsilon(1e-12));
      CHECK(a.recall == doctest::Approx(b.precision).epsilon(1e-12));
    }
  }
}

TEST_CASE("metrics are invariant under relabeling") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 2 + rng() % 7;
    auto key = oracle::RandomLabels(n, rng);
    auto response = oracle::RandomLabels(n, rng);
    auto relabeled = response;
    for (auto &l : relabeled) l = 100 - l;
    const auto k = oracle::ToClustering(key);
    const auto a = oracle::ToClustering(response);
    const auto b = oracle::ToClustering(relabeled);
    CHECK(Muc(k, a).f1 == Muc(k, b).f1);
    CHECK(BCubed(k, a).f1 == BCubed(k, b).f1);
    CHECK(CeafE(k, a).f1 == CeafE(k, b).f1);
  }
}

TEST_CASE("all three metrics are 1 exactly when the clusterings agree") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 2 + rng() % 7;
    const auto k = oracle::ToClustering(oracle::RandomLabels(n, rng));
    const auto r = oracle::ToClustering(oracle::RandomLabels(n, rng));
    auto kl = k.ClusterList();
    auto rl = r.ClusterList();
    std::sort(kl.begin(), kl.end());
    std::sort(rl.begin(), rl.end());
    const bool same = kl == rl;
    const bool all_one =
        BCubed(k, r).f1 == 1.0 && CeafE(k, r).f1 == 1.0;
    CHECK(same == all_one);
    for (auto metric : {&Muc, &BCubed, &CeafE}) {
      const auto s = metric(k, r);
      CHECK(s.f1 >= 0.0);
      CHECK(s.f1 <= 1.0);
    }
  }
}

TEST_CASE("evaluate: gold as system scores 1 under every option") {
  const Corpus c = OneTopicCorpus({{"a", "x"}, {"b", "x"}, {"c", "y"}, {"d", "y"}});
  for (bool topic : {true, false}) {
    for (bool drop : {true, false}) {
      const auto r = Evaluate(c, c.GoldClustering(), {topic, drop});
      CHECK(r.conll_f1 == 1.0);
      CHECK(r.muc.f1 == 1.0);
    }
  }
}

TEST_CASE("evaluate: singleton removal and harmonization hand trace") {
  // gold {a,b},{c}; system {a,b,c}. Dropping singletons removes {c} from the
  // key; c returns to the key as a singleton.
  const Corpus c = OneTopicCorpus({{"a", "x"}, {"b", "x"}, {"c", "y"}});
  const auto r = Evaluate(c, Make({{"a", "b", "c"}}), {});
  REQUIRE(r.units.size() == 1);
  CHECK(r.units[0].key_mentions == 3);
  CHECK(r.muc.recall == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.muc.precision == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.b_cubed.recall == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.b_cubed.precision == doctest::Approx(5.0 / 9).epsilon(1e-12));
  CHECK(r.ceaf_e.recall == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(r.ceaf_e.precision == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.conll_f1 == doctest::Approx((2.0 / 3 + 5.0 / 7 + 8.0 / 15) / 3).epsilon(1e-12));
}

TEST_CASE("evaluate: all-singleton system has MUC F1 0") {
  const Corpus c = OneTopicCorpus({{"a", "x"}, {"b", "x"}, {"c", "y"}, {"d", "y"}});
  const auto r = Evaluate(c, Make({{"a"}, {"b"}, {"c"}, {"d"}}), {});
  CHECK(r.muc.f1 == 0.0);
}

TEST_CASE("evaluate: topics are averaged and empty keys skipped") {
  Corpus c;
  auto add_topic = [&c](const std::string &t,
                        const std::vector<std::pair<std::string, std::string>> &gold) {
    const Corpus part = OneTopicCorpus(gold, t);
    for (const auto &d : part.documents()) c.AddDocument(d);
    for (const auto &m : part.mentions()) c.AddMention(m);
  };
  add_topic("t1", {{"a", "x"}, {"b", "x"}});
  add_topic("t2", {{"c", "y"}, {"d", "y"}, {"e", "y"}});
  add_topic("t3", {{"f", "z"}});
  // t1 perfect; t2 split into {c,d},{e}.
  const auto r = Evaluate(c, Make({{"a", "b"}, {"c", "d"}, {"e"}, {"f"}}), {});
  REQUIRE(r.units.size() == 2);
  CHECK(r.skipped_units == std::vector<std::string>{"t3"});
  const double t2 = r.units[1].conll_f1;
  CHECK(r.conll_f1 == doctest::Approx((1.0 + t2) / 2).epsilon(1e-12));
  CHECK(r.muc.f1 == doctest::Approx((r.units[0].muc.f1 + r.units[1].muc.f1) / 2));
}

TEST_CASE("evaluate: a missing system mention is an error") {
  const Corpus c = OneTopicCorpus({{"a", "x"}, {"b", "x"}});
  CHECK_THROWS_AS(Evaluate(c, Make({{"a"}}), {}), ValidationError);
}

TEST_CASE("evaluate: subtopic granularity groups by subtopic") {
  const Corpus c = OneTopicCorpus({{"a", "x"}, {"b", "x"}});
  EvalOptions o;
  o.granularity = EvalGranularity::kSubtopic;
  const auto r = Evaluate(c, c.GoldClustering(), o);
  REQUIRE(r.units.size() == 1);
  CHECK(r.units[0].unit == "t1_s");
}

TEST_CASE("report table and json carry every unit") {
  const Corpus c = OneTopicCorpus({{"a", "x"}, {"b", "x"}, {"c", "y"}});
  const auto r = Evaluate(c, Make({{"a", "b", "c"}}), {});
  const std::string table = FormatReportTable(r);
  CHECK(table.find("MUC") != std::string::npos);
  CHECK(table.find("t1") != std::string::npos);
  CHECK(table.find("average") != std::string::npos);
  const std::string json = ReportToJson(r);
  CHECK(json.find("\"conll_f1\"") != std::string::npos);
}

TEST_CASE("evaluate hand trace matches the frozen golden report") {
  const Corpus c = OneTopicCorpus({{"a", "x"}, {"b", "x"}, {"c", "y"}});
  const auto r = Evaluate(c, Make({{"a", "b", "c"}}), {});
  std::ifstream in(std::string(EVCOREF_GOLDEN_DIR) + "/evaluate_hand_trace.txt");
  REQUIRE(in.good());
  std::stringstream golden;
  golden << in.rdbuf();
  CHECK(FormatReportTable(r) == golden.str());
}
