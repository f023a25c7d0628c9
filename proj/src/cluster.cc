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

#include "evcoref/cluster.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "evcoref/errors.h"
#include "file_util.h"
#include "json.hpp"

namespace evcoref {
namespace {

using json = nlohmann::json;

std::pair<std::string, std::string> Key(const std::string &a,
                                        const std::string &b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

void ScoreMatrix::Set(const std::string &a, const std::string &b,
                      double probability) {
  if (a == b) throw ValidationError("score matrix diagonal is unused: " + a);
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw ValidationError("score for " + a + "/" + b + " is outside [0, 1]");
  }
  scores_[Key(a, b)] = probability;
}

bool ScoreMatrix::Has(const std::string &a, const std::string &b) const {
  return scores_.count(Key(a, b)) > 0;
}

double ScoreMatrix::At(const std::string &a, const std::string &b) const {
  auto it = scores_.find(Key(a, b));
  if (it == scores_.end()) {
    throw ValidationError("missing score for pair " + a + "/" + b);
  }
  return it->second;
}

void ClusteringConfig::Validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("clustering threshold must lie in [0, 1]");
  }
  if (linkage != "average") {
    throw ConfigError("unsupported linkage: " + linkage);
  }
}

Clustering AgglomerativeCluster(std::span<const std::string> mentions,
                                const ScoreMatrix &scores, double threshold) {
  std::vector<std::string> ids(mentions.begin(), mentions.end());
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ValidationError("duplicate mention in clustering input");
  }
  const size_t n = ids.size();
  // sum[a][b]: total score between clusters a and b. Cluster a is identified
  // by its smallest member, ids[a], because ids is sorted and merges keep the
  // lower index.
  std::vector<std::vector<double>> sum(n, std::vector<double>(n, 0.0));
  for (size_t a = 0; a < n; ++a) {
    for (size_t b = a + 1; b < n; ++b) {
      sum[a][b] = sum[b][a] = scores.At(ids[a], ids[b]);
    }
  }
  std::vector<size_t> size(n, 1);
  std::vector<size_t> parent(n);
  std::vector<char> active(n, 1);
  for (size_t a = 0; a < n; ++a) parent[a] = a;

  while (true) {
    double best = -1.0;
    size_t best_a = n, best_b = n;
    // Scanning a < b in index order visits pairs in lexicographic order of
    // their min ids, so strict improvement keeps the first tied pair.
    for (size_t a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (size_t b = a + 1; b < n; ++b) {
        if (!active[b]) continue;
        const double avg =
            sum[a][b] / static_cast<double>(size[a] * size[b]);
        if (avg > best) {
          best = avg;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best_a == n || best < threshold) break;
    for (size_t c = 0; c < n; ++c) {
      sum[best_a][c] += sum[best_b][c];
      sum[c][best_a] = sum[best_a][c];
    }
    size[best_a] += size[best_b];
    active[best_b] = 0;
    parent[best_b] = best_a;
  }

  Clustering out;
  for (size_t a = 0; a < n; ++a) {
    size_t root = a;
    while (parent[root] != root) root = parent[root];
    out.Assign(ids[a], ids[root]);
  }
  return out;
}

Clustering ClusterCorpus(const Corpus &corpus, const ScoreMatrix &scores,
                         const ClusteringConfig &config) {
  config.Validate();
  Clustering out;
  for (const auto &unit : corpus.ScopeUnits(config.scope)) {
    const Clustering part = AgglomerativeCluster(unit, scores, config.threshold);
    for (const auto &[m, c] : part.assignment()) out.Assign(m, c);
  }
  return out;
}

void SaveClusteringFile(const std::filesystem::path &path,
                        const Clustering &clustering,
                        const ClusteringHeader &header) {
  std::ostringstream out;
  json h = {{"threshold", header.threshold},
            {"linkage", header.linkage},
            {"scope", header.scope},
            {"checkpoint", header.checkpoint}};
  out << json{{"header", h}}.dump() << "\n";
  for (const auto &[m, c] : clustering.assignment()) {
    out << json{{"mention_id", m}, {"cluster_id", c}}.dump() << "\n";
  }
  internal::AtomicWrite(path, out.str());
}

std::pair<Clustering, ClusteringHeader> LoadClusteringFile(
    const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  Clustering clustering;
  ClusteringHeader header;
  std::string line;
  size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where =
        path.string() + " line " + std::to_string(line_no) + ": ";
    try {
      const json j = json::parse(line);
      if (!seen_header) {
        const json &h = j.at("header");
        header.threshold = h.at("threshold").get<double>();
        header.linkage = h.at("linkage").get<std::string>();
        header.scope = h.at("scope").get<std::string>();
        header.checkpoint = h.at("checkpoint").get<std::string>();
        seen_header = true;
        continue;
      }
      const auto mention = j.at("mention_id").get<std::string>();
      if (clustering.Contains(mention)) {
        throw FormatError(where + "duplicate mention " + mention);
      }
      clustering.Assign(mention, j.at("cluster_id").get<std::string>());
    } catch (const json::exception &e) {
      throw FormatError(where + e.what());
    }
  }
  if (!seen_header) throw FormatError(path.string() + ": missing header line");
  return {std::move(clustering), std::move(header)};
}

}  // namespace evcoref
