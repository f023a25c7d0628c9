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

#ifndef EVCOREF_CLUSTERING_H_
#define EVCOREF_CLUSTERING_H_

#include <map>
#include <set>
#include <string>
#include <vector>

namespace evcoref {

// A partition of a mention set, stored as mention_id -> cluster_id.
// Every mention belongs to exactly one cluster, so no cluster is ever empty.
class Clustering {
 public:
  Clustering() = default;
  explicit Clustering(std::map<std::string, std::string> assignment)
      : assignment_(std::move(assignment)) {}

  // Builds a clustering from explicit member lists. Cluster ids are the
  // minimum member mention_id of each list.
  static Clustering FromClusters(
      const std::vector<std::vector<std::string>> &clusters);

  void Assign(const std::string &mention_id, const std::string &cluster_id) {
    assignment_[mention_id] = cluster_id;
  }

  bool Contains(const std::string &mention_id) const {
    return assignment_.count(mention_id) > 0;
  }
  const std::string &ClusterOf(const std::string &mention_id) const;

  const std::map<std::string, std::string> &assignment() const {
    return assignment_;
  }
  size_t size() const { return assignment_.size(); }
  bool empty() const { return assignment_.empty(); }

  // cluster_id -> sorted member ids.
  std::map<std::string, std::vector<std::string>> Clusters() const;
  // Member lists in cluster_id order.
  std::vector<std::vector<std::string>> ClusterList() const;
  size_t NumClusters() const { return Clusters().size(); }

  std::set<std::string> Mentions() const;

  // Keeps only the listed mentions.
  Clustering Restrict(const std::set<std::string> &mention_ids) const;
  // Removes every cluster with a single member.
  Clustering WithoutSingletons() const;

  bool operator==(const Clustering &other) const {
    return assignment_ == other.assignment_;
  }

 private:
  std::map<std::string, std::string> assignment_;
};

}  // namespace evcoref

#endif  // EVCOREF_CLUSTERING_H_
