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

// Coreference evaluation: MUC, B-cubed, CEAF_e and their CoNLL average.
//
// The metric functions take two clusterings over the same mention set and
// throw ValidationError otherwise. Evaluate() handles singleton removal,
// universe harmonization and per-topic averaging.

#ifndef EVCOREF_METRICS_H_
#define EVCOREF_METRICS_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "evcoref/clustering.h"
#include "evcoref/corpus.h"

namespace evcoref {

struct MetricScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  // f1 = 2PR / (P + R), or 0 when P + R = 0.
  static MetricScore FromPR(double precision, double recall);
};

MetricScore Muc(const Clustering &key, const Clustering &response);
MetricScore BCubed(const Clustering &key, const Clustering &response);
// Entity similarity phi = 2|K n R| / (|K| + |R|), maximized over one-to-one
// alignments with the Kuhn-Munkres algorithm.
MetricScore CeafE(const Clustering &key, const Clustering &response);
double ConllF1(const MetricScore &muc, const MetricScore &b_cubed,
               const MetricScore &ceaf_e);

// Maximum-weight one-to-one assignment of rows to columns for a non-negative
// rows x cols weight table. Returns the matched column per row, or -1.
std::vector<int> MaxWeightAssignment(
    const std::vector<std::vector<double>> &weights);

enum class EvalGranularity { kTopic, kSubtopic };
EvalGranularity ParseEvalGranularity(std::string_view name);
std::string_view EvalGranularityName(EvalGranularity granularity);

struct EvalOptions {
  bool topic_level = true;
  bool drop_singletons = true;
  EvalGranularity granularity = EvalGranularity::kTopic;
};

struct UnitScores {
  std::string unit;  // topic or subtopic id; "all" when not topic-level
  size_t key_mentions = 0;
  MetricScore muc;
  MetricScore b_cubed;
  MetricScore ceaf_e;
  double conll_f1 = 0.0;
};

// Aggregate precision, recall and F1 are each the mean over evaluated units.
struct EvalReport {
  EvalOptions options;
  std::vector<UnitScores> units;
  std::vector<std::string> skipped_units;
  MetricScore muc;
  MetricScore b_cubed;
  MetricScore ceaf_e;
  double conll_f1 = 0.0;
};

// `system` must cover every gold mention of the corpus; system mentions
// outside the corpus are ignored.
EvalReport Evaluate(const Corpus &corpus, const Clustering &system,
                    const EvalOptions &options);

// Fixed-width P/R/F1 table, one row per unit plus the aggregate.
std::string FormatReportTable(const EvalReport &report);
std::string ReportToJson(const EvalReport &report);
void SaveReport(const EvalReport &report, const std::filesystem::path &json_path,
                const std::filesystem::path &table_path);

}  // namespace evcoref

#endif  // EVCOREF_METRICS_H_
