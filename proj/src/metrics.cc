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

#include "evcoref/metrics.h"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "evcoref/errors.h"
#include "file_util.h"
#include "json.hpp"

namespace evcoref {
namespace {

using json = nlohmann::json;
using ClusterMap = std::map<std::string, std::vector<std::string>>;

void RequireSameUniverse(const Clustering &key, const Clustering &response) {
  if (key.Mentions() != response.Mentions()) {
    throw ValidationError("key and response cover different mentions");
  }
}

double Ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

// Sum over `a` clusters of |A| - |partition of A by b|, and of |A| - 1.
std::pair<double, double> MucCounts(const ClusterMap &a, const Clustering &b) {
  double num = 0.0;
  double den = 0.0;
  for (const auto &[id, members] : a) {
    std::set<std::string> parts;
    for (const auto &m : members) parts.insert(b.ClusterOf(m));
    num += static_cast<double>(members.size() - parts.size());
    den += static_cast<double>(members.size() - 1);
  }
  return {num, den};
}

double BCubedSide(const Clustering &a, const Clustering &b) {
  const ClusterMap a_clusters = a.Clusters();
  const ClusterMap b_clusters = b.Clusters();
  double total = 0.0;
  for (const auto &[mention, cluster] : a.assignment()) {
    const auto &mine = a_clusters.at(cluster);
    const auto &other = b_clusters.at(b.ClusterOf(mention));
    std::vector<std::string> common;
    std::set_intersection(mine.begin(), mine.end(), other.begin(), other.end(),
                          std::back_inserter(common));
    total += static_cast<double>(common.size()) / static_cast<double>(mine.size());
  }
  return Ratio(total, static_cast<double>(a.size()));
}

double Phi(const std::vector<std::string> &k, const std::vector<std::string> &r) {
  std::vector<std::string> common;
  std::set_intersection(k.begin(), k.end(), r.begin(), r.end(),
                        std::back_inserter(common));
  return 2.0 * static_cast<double>(common.size()) /
         static_cast<double>(k.size() + r.size());
}

MetricScore Mean(const std::vector<MetricScore> &scores) {
  MetricScore out;
  if (scores.empty()) return out;
  for (const auto &s : scores) {
    out.precision += s.precision;
    out.recall += s.recall;
    out.f1 += s.f1;
  }
  const double n = static_cast<double>(scores.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  return out;
}

json ScoreJson(const MetricScore &s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

}  // namespace

MetricScore MetricScore::FromPR(double precision, double recall) {
  MetricScore s;
  s.precision = precision;
  s.recall = recall;
  s.f1 = precision + recall > 0.0
             ? 2.0 * precision * recall / (precision + recall)
             : 0.0;
  return s;
}

MetricScore Muc(const Clustering &key, const Clustering &response) {
  RequireSameUniverse(key, response);
  const auto [r_num, r_den] = MucCounts(key.Clusters(), response);
  const auto [p_num, p_den] = MucCounts(response.Clusters(), key);
  return MetricScore::FromPR(Ratio(p_num, p_den), Ratio(r_num, r_den));
}

MetricScore BCubed(const Clustering &key, const Clustering &response) {
  RequireSameUniverse(key, response);
  return MetricScore::FromPR(BCubedSide(response, key), BCubedSide(key, response));
}

MetricScore CeafE(const Clustering &key, const Clustering &response) {
  RequireSameUniverse(key, response);
  const auto key_list = key.ClusterList();
  const auto response_list = response.ClusterList();
  if (key_list.empty() || response_list.empty()) return {};
  std::vector<std::vector<double>> phi(key_list.size(),
                                       std::vector<double>(response_list.size()));
  for (size_t i = 0; i < key_list.size(); ++i) {
    for (size_t j = 0; j < response_list.size(); ++j) {
      phi[i][j] = Phi(key_list[i], response_list[j]);
    }
  }
  const std::vector<int> match = MaxWeightAssignment(phi);
  double total = 0.0;
  for (size_t i = 0; i < match.size(); ++i) {
    if (match[i] >= 0) total += phi[i][match[i]];
  }
  return MetricScore::FromPR(total / static_cast<double>(response_list.size()),
                             total / static_cast<double>(key_list.size()));
}

double ConllF1(const MetricScore &muc, const MetricScore &b_cubed,
               const MetricScore &ceaf_e) {
  return (muc.f1 + b_cubed.f1 + ceaf_e.f1) / 3.0;
}

// Kuhn-Munkres with potentials on the square cost matrix -weights, padded
// with zeros.
std::vector<int> MaxWeightAssignment(
    const std::vector<std::vector<double>> &weights) {
  const size_t rows = weights.size();
  if (rows == 0) return {};
  const size_t cols = weights[0].size();
  for (const auto &row : weights) {
    if (row.size() != cols) throw DimensionError("ragged weight table");
  }
  const size_t n = std::max(rows, cols);
  auto cost = [&](size_t i, size_t j) {
    return (i < rows && j < cols) ? -weights[i][j] : 0.0;
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<size_t> p(n + 1, 0), way(n + 1, 0);
  for (size_t i = 1; i <= n; ++i) {
    p[0] = i;
    size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const size_t i0 = p[j0];
      double delta = kInf;
      size_t j1 = 0;
      for (size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> match(rows, -1);
  for (size_t j = 1; j <= n; ++j) {
    if (p[j] >= 1 && p[j] <= rows && j <= cols) {
      match[p[j] - 1] = static_cast<int>(j - 1);
    }
  }
  return match;
}

EvalGranularity ParseEvalGranularity(std::string_view name) {
  if (name == "topic") return EvalGranularity::kTopic;
  if (name == "subtopic") return EvalGranularity::kSubtopic;
  throw ConfigError("unknown evaluation granularity: " + std::string(name));
}

std::string_view EvalGranularityName(EvalGranularity granularity) {
  return granularity == EvalGranularity::kTopic ? "topic" : "subtopic";
}

EvalReport Evaluate(const Corpus &corpus, const Clustering &system,
                    const EvalOptions &options) {
  Clustering key = corpus.GoldClustering();
  for (const Mention &m : corpus.mentions()) {
    if (!m.gold_cluster_id) {
      throw ValidationError("mention " + m.mention_id + " has no gold cluster");
    }
    if (!system.Contains(m.mention_id)) {
      throw ValidationError("system clustering is missing mention " +
                            m.mention_id);
    }
  }
  Clustering response = system.Restrict(key.Mentions());
  if (options.drop_singletons) {
    key = key.WithoutSingletons();
    response = response.WithoutSingletons();
  }

  std::map<std::string, std::set<std::string>> units;
  for (const Mention &m : corpus.mentions()) {
    std::string unit = "all";
    if (options.topic_level) {
      const Document &doc = corpus.DocumentOf(m);
      unit = options.granularity == EvalGranularity::kTopic ? doc.topic_id
                                                            : doc.subtopic_id;
    }
    units[unit].insert(m.mention_id);
  }

  EvalReport report;
  report.options = options;
  std::vector<MetricScore> muc, b3, ceaf;
  for (const auto &[unit, mentions] : units) {
    Clustering k = key.Restrict(mentions);
    Clustering r = response.Restrict(mentions);
    if (k.empty()) {
      report.skipped_units.push_back(unit);
      continue;
    }
    // Twinless mentions join the other side as singletons.
    for (const auto &[m, c] : r.assignment()) {
      if (!k.Contains(m)) k.Assign(m, "\x1f" + m);
    }
    for (const auto &[m, c] : k.assignment()) {
      if (!r.Contains(m)) r.Assign(m, "\x1f" + m);
    }
    UnitScores s;
    s.unit = unit;
    s.key_mentions = k.size();
    s.muc = Muc(k, r);
    s.b_cubed = BCubed(k, r);
    s.ceaf_e = CeafE(k, r);
    s.conll_f1 = ConllF1(s.muc, s.b_cubed, s.ceaf_e);
    muc.push_back(s.muc);
    b3.push_back(s.b_cubed);
    ceaf.push_back(s.ceaf_e);
    report.units.push_back(std::move(s));
  }
  report.muc = Mean(muc);
  report.b_cubed = Mean(b3);
  report.ceaf_e = Mean(ceaf);
  report.conll_f1 = ConllF1(report.muc, report.b_cubed, report.ceaf_e);
  return report;
}

std::string FormatReportTable(const EvalReport &report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %21s   %21s   %21s   %6s\n", "",
                "MUC", "B3", "CEAF_e", "CoNLL");
  out += line;
  std::snprintf(line, sizeof line,
                "%-16s %6s %6s %6s   %6s %6s %6s   %6s %6s %6s   %6s\n", "unit",
                "R", "P", "F1", "R", "P", "F1", "R", "P", "F1", "F1");
  out += line;
  auto row = [&](const std::string &name, const MetricScore &m,
                 const MetricScore &b, const MetricScore &c, double conll) {
    std::snprintf(line, sizeof line,
                  "%-16s %6.2f %6.2f %6.2f   %6.2f %6.2f %6.2f   %6.2f %6.2f "
                  "%6.2f   %6.2f\n",
                  name.c_str(), 100 * m.recall, 100 * m.precision, 100 * m.f1,
                  100 * b.recall, 100 * b.precision, 100 * b.f1, 100 * c.recall,
                  100 * c.precision, 100 * c.f1, 100 * conll);
    out += line;
  };
  for (const auto &u : report.units) {
    row(u.unit, u.muc, u.b_cubed, u.ceaf_e, u.conll_f1);
  }
  row("average", report.muc, report.b_cubed, report.ceaf_e, report.conll_f1);
  if (!report.skipped_units.empty()) {
    out += "skipped (empty key):";
    for (const auto &u : report.skipped_units) out += " " + u;
    out += "\n";
  }
  return out;
}

std::string ReportToJson(const EvalReport &report) {
  json units = json::array();
  for (const auto &u : report.units) {
    units.push_back({{"unit", u.unit},
                     {"key_mentions", u.key_mentions},
                     {"muc", ScoreJson(u.muc)},
                     {"b_cubed", ScoreJson(u.b_cubed)},
                     {"ceaf_e", ScoreJson(u.ceaf_e)},
                     {"conll_f1", u.conll_f1}});
  }
  json j = {
      {"options",
       {{"topic_level", report.options.topic_level},
        {"drop_singletons", report.options.drop_singletons},
        {"granularity", EvalGranularityName(report.options.granularity)}}},
      {"units", units},
      {"skipped_units", report.skipped_units},
      {"muc", ScoreJson(report.muc)},
      {"b_cubed", ScoreJson(report.b_cubed)},
      {"ceaf_e", ScoreJson(report.ceaf_e)},
      {"conll_f1", report.conll_f1}};
  return j.dump(2) + "\n";
}

void SaveReport(const EvalReport &report, const std::filesystem::path &json_path,
                const std::filesystem::path &table_path) {
  internal::AtomicWrite(json_path, ReportToJson(report));
  internal::AtomicWrite(table_path, FormatReportTable(report));
}

}  // namespace evcoref
