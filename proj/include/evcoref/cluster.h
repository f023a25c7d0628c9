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

// Average-linkage agglomerative clustering over pairwise probabilities.

#ifndef EVCOREF_CLUSTER_H_
#define EVCOREF_CLUSTER_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evcoref/clustering.h"
#include "evcoref/corpus.h"

namespace evcoref {

// Symmetric pair -> probability map; the diagonal is never stored.
class ScoreMatrix {
 public:
  void Set(const std::string &a, const std::string &b, double probability);
  bool Has(const std::string &a, const std::string &b) const;
  // Throws ValidationError when the pair has no score.
  double At(const std::string &a, const std::string &b) const;
  size_t size() const { return scores_.size(); }
  const std::map<std::pair<std::string, std::string>, double> &scores() const {
    return scores_;
  }

 private:
  std::map<std::pair<std::string, std::string>, double> scores_;
};

struct ClusteringConfig {
  double threshold = 0.5;
  std::string linkage = "average";
  PairScope scope = PairScope::kSubtopic;

  void Validate() const;
};

// Starts from singletons and merges the pair of clusters with the highest
// average pairwise score while that average is >= threshold. Ties go to the
// lexicographically smallest (min id, min id) pair. Cluster ids are the
// smallest member mention id.
Clustering AgglomerativeCluster(std::span<const std::string> mentions,
                                const ScoreMatrix &scores, double threshold);

// Clusters every scope unit of the corpus independently.
Clustering ClusterCorpus(const Corpus &corpus, const ScoreMatrix &scores,
                         const ClusteringConfig &config);

struct ClusteringHeader {
  double threshold = 0.0;
  std::string linkage = "average";
  std::string scope = "subtopic";
  std::string checkpoint;  // fingerprint of the scoring checkpoint
};

// First line {"header": {...}}, then one {"cluster_id", "mention_id"} record
// per mention in mention-id order.
void SaveClusteringFile(const std::filesystem::path &path,
                        const Clustering &clustering,
                        const ClusteringHeader &header);
std::pair<Clustering, ClusteringHeader> LoadClusteringFile(
    const std::filesystem::path &path);

}  // namespace evcoref

#endif  // EVCOREF_CLUSTER_H_
