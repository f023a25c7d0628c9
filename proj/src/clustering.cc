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

#include "evcoref/clustering.h"

#include <stdexcept>

#include "evcoref/errors.h"

namespace evcoref {

Clustering Clustering::FromClusters(
    const std::vector<std::vector<std::string>> &clusters) {
  Clustering out;
  for (const auto &members : clusters) {
    if (members.empty()) continue;
    std::string id = members.front();
    for (const auto &m : members) id = std::min(id, m);
    for (const auto &m : members) out.Assign(m, id);
  }
  return out;
}

const std::string &Clustering::ClusterOf(const std::string &mention_id) const {
  auto it = assignment_.find(mention_id);
  if (it == assignment_.end()) {
    throw ValidationError("mention not in clustering: " + mention_id);
  }
  return it->second;
}

std::map<std::string, std::vector<std::string>> Clustering::Clusters() const {
  std::map<std::string, std::vector<std::string>> out;
  // assignment_ is ordered by mention id, so member lists come out sorted.
  for (const auto &[mention, cluster] : assignment_) {
    out[cluster].push_back(mention);
  }
  return out;
}

std::vector<std::vector<std::string>> Clustering::ClusterList() const {
  std::vector<std::vector<std::string>> out;
  for (auto &[id, members] : Clusters()) out.push_back(std::move(members));
  return out;
}

std::set<std::string> Clustering::Mentions() const {
  std::set<std::string> out;
  for (const auto &[mention, cluster] : assignment_) out.insert(mention);
  return out;
}

Clustering Clustering::Restrict(const std::set<std::string> &mention_ids) const {
  Clustering out;
  for (const auto &[mention, cluster] : assignment_) {
    if (mention_ids.count(mention)) out.Assign(mention, cluster);
  }
  return out;
}

Clustering Clustering::WithoutSingletons() const {
  std::map<std::string, size_t> sizes;
  for (const auto &[mention, cluster] : assignment_) ++sizes[cluster];
  Clustering out;
  for (const auto &[mention, cluster] : assignment_) {
    if (sizes[cluster] > 1) out.Assign(mention, cluster);
  }
  return out;
}

}  // namespace evcoref
