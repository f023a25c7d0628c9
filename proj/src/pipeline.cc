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

#include "evcoref/pipeline.h"

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "evcoref/checkpoint.h"
#include "evcoref/errors.h"
#include "evcoref/random.h"
#include "file_util.h"
#include "json.hpp"

namespace evcoref {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Value parsing

std::string Trimmed(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> SplitList(std::string_view text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    item = Trimmed(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T ParseNumber(const std::string &key, const std::string &value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (!in || !(in >> std::ws).eof()) {
    throw ConfigError(key + ": cannot parse '" + value + "'");
  }
  return out;
}

bool ParseBool(const std::string &key, const std::string &value) {
  if (value == "true" || value == "yes" || value == "1" || value == "on") return true;
  if (value == "false" || value == "no" || value == "0" || value == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

std::string UtcNow() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string Hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration keys

using Setter = std::function<void(RunConfig &, const std::string &key,
                                  const std::string &value, const fs::path &base)>;

fs::path ResolvePath(const fs::path &base, const std::string &value) {
  if (value.empty()) return {};
  fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

const std::map<std::string, Setter> &Setters() {
  static const std::map<std::string, Setter> setters = [] {
    std::map<std::string, Setter> s;
    auto path = [&s](const std::string &name, fs::path DataConfig::*field) {
      s[name] = [field](RunConfig &c, const std::string &, const std::string &v,
                        const fs::path &base) { c.data.*field = ResolvePath(base, v); };
    };
    path("data.train", &DataConfig::train);
    path("data.dev", &DataConfig::dev);
    path("data.test", &DataConfig::test);
    path("data.train_inferences", &DataConfig::train_inferences);
    path("data.dev_inferences", &DataConfig::dev_inferences);
    path("data.test_inferences", &DataConfig::test_inferences);

    auto num = [&s](const std::string &name, auto getter) {
      s[name] = [getter](RunConfig &c, const std::string &k, const std::string &v,
                         const fs::path &) {
        auto &field = getter(c);
        field = ParseNumber<std::remove_reference_t<decltype(field)>>(k, v);
      };
    };
    auto flag = [&s](const std::string &name, auto getter) {
      s[name] = [getter](RunConfig &c, const std::string &k, const std::string &v,
                         const fs::path &) { getter(c) = ParseBool(k, v); };
    };

    s["run.preset"] = [](RunConfig &, const std::string &, const std::string &,
                         const fs::path &) {};
    s["run.seeds"] = [](RunConfig &c, const std::string &, const std::string &v,
                        const fs::path &) { c.seeds = ParseSeedList(v); };
    s["run.mode"] = [](RunConfig &c, const std::string &, const std::string &v,
                       const fs::path &) { c.train.mode = ParseScorerMode(v); };

    s["embedder.provider"] = [](RunConfig &c, const std::string &,
                                const std::string &v, const fs::path &) {
      c.embedder.provider = ParseEmbedProvider(v);
    };
    s["embedder.endpoint"] = [](RunConfig &c, const std::string &,
                                const std::string &v, const fs::path &) {
      c.embedder.endpoint = v;
    };
    num("embedder.dim", [](RunConfig &c) -> int & { return c.embedder.dim; });
    num("embedder.seed", [](RunConfig &c) -> uint64_t & { return c.embedder.seed; });
    num("embedder.width_dim", [](RunConfig &c) -> int & { return c.embedder.width_dim; });
    num("embedder.max_width_bucket",
        [](RunConfig &c) -> int & { return c.embedder.max_width_bucket; });
    num("embedder.max_concurrency",
        [](RunConfig &c) -> int & { return c.embedder.max_concurrency; });
    num("embedder.timeout",
        [](RunConfig &c) -> double & { return c.embedder.timeout_seconds; });

    num("model.attention_dim", [](RunConfig &c) -> int & { return c.attention_dim; });
    num("model.hidden", [](RunConfig &c) -> int & { return c.hidden; });

    s["commonsense.source"] = [](RunConfig &c, const std::string &k,
                                 const std::string &v, const fs::path &) {
      if (v == "fixture") {
        c.commonsense.source = InferenceSource::kFixture;
      } else if (v == "service") {
        c.commonsense.source = InferenceSource::kService;
      } else {
        throw ConfigError(k + ": expected fixture or service, got '" + v + "'");
      }
    };
    s["commonsense.endpoint"] = [](RunConfig &c, const std::string &,
                                   const std::string &v, const fs::path &) {
      c.commonsense.endpoint = v;
    };
    s["commonsense.model_id"] = [](RunConfig &c, const std::string &,
                                   const std::string &v, const fs::path &) {
      c.commonsense.generation.model_id = v;
    };
    s["commonsense.prompt_mode"] = [](RunConfig &c, const std::string &,
                                      const std::string &v, const fs::path &) {
      c.commonsense.generation.mode = ParsePromptMode(v);
    };
    s["commonsense.stop"] = [](RunConfig &c, const std::string &,
                               const std::string &v, const fs::path &) {
      c.commonsense.generation.stop = v;
    };
    s["commonsense.exemplars"] = [](RunConfig &c, const std::string &,
                                    const std::string &v, const fs::path &base) {
      c.commonsense.exemplars = ResolvePath(base, v);
    };
    s["commonsense.cache"] = [](RunConfig &c, const std::string &,
                                const std::string &v, const fs::path &base) {
      c.commonsense.cache = ResolvePath(base, v);
    };
    num("commonsense.top_p",
        [](RunConfig &c) -> double & { return c.commonsense.generation.top_p; });
    num("commonsense.max_tokens",
        [](RunConfig &c) -> int & { return c.commonsense.generation.max_tokens; });
    num("commonsense.k", [](RunConfig &c) -> int & { return c.commonsense.generation.k; });
    num("commonsense.max_concurrency",
        [](RunConfig &c) -> int & { return c.commonsense.max_concurrency; });
    num("commonsense.retries",
        [](RunConfig &c) -> int & { return c.commonsense.retry.attempts; });
    s["commonsense.backoff_ms"] = [](RunConfig &c, const std::string &k,
                                     const std::string &v, const fs::path &) {
      c.commonsense.retry.initial_backoff =
          std::chrono::milliseconds(ParseNumber<long>(k, v));
    };
    num("commonsense.timeout",
        [](RunConfig &c) -> double & { return c.commonsense.timeout_seconds; });
    flag("commonsense.strict_train",
         [](RunConfig &c) -> bool & { return c.commonsense.strict_train; });
    flag("commonsense.strict_predict",
         [](RunConfig &c) -> bool & { return c.commonsense.strict_predict; });

    num("train.learning_rate", [](RunConfig &c) -> double & { return c.train.learning_rate; });
    num("train.batch_size", [](RunConfig &c) -> int & { return c.train.batch_size; });
    num("train.dropout", [](RunConfig &c) -> double & { return c.train.dropout; });
    num("train.beta1", [](RunConfig &c) -> double & { return c.train.beta1; });
    num("train.beta2", [](RunConfig &c) -> double & { return c.train.beta2; });
    num("train.epsilon", [](RunConfig &c) -> double & { return c.train.epsilon; });
    num("train.epochs", [](RunConfig &c) -> int & { return c.train.epochs; });
    num("train.patience", [](RunConfig &c) -> int & { return c.train.patience; });

    num("cluster.threshold", [](RunConfig &c) -> double & { return c.cluster.threshold; });
    s["cluster.linkage"] = [](RunConfig &c, const std::string &,
                              const std::string &v, const fs::path &) {
      c.cluster.linkage = v;
    };
    s["cluster.scope"] = [](RunConfig &c, const std::string &,
                            const std::string &v, const fs::path &) {
      c.cluster.scope = ParsePairScope(v);
    };
    s["cluster.grid"] = [](RunConfig &c, const std::string &k,
                           const std::string &v, const fs::path &) {
      c.threshold_grid.clear();
      for (const auto &item : SplitList(v)) {
        c.threshold_grid.push_back(ParseNumber<double>(k, item));
      }
    };

    flag("eval.topic_level", [](RunConfig &c) -> bool & { return c.eval.topic_level; });
    flag("eval.drop_singletons",
         [](RunConfig &c) -> bool & { return c.eval.drop_singletons; });
    s["eval.granularity"] = [](RunConfig &c, const std::string &,
                               const std::string &v, const fs::path &) {
      c.eval.granularity = ParseEvalGranularity(v);
    };

    num("synth.n_topics", [](RunConfig &c) -> int & { return c.synth.n_topics; });
    num("synth.clusters_per_topic",
        [](RunConfig &c) -> int & { return c.synth.clusters_per_topic; });
    num("synth.mentions_per_cluster",
        [](RunConfig &c) -> int & { return c.synth.mentions_per_cluster; });
    num("synth.hard_fraction", [](RunConfig &c) -> double & { return c.synth.hard_fraction; });
    num("synth.distractor_rate",
        [](RunConfig &c) -> double & { return c.synth.distractor_rate; });
    num("synth.seed", [](RunConfig &c) -> uint64_t & { return c.synth.seed; });

    num("gradcheck.mentions", [](RunConfig &c) -> int & { return c.gradcheck.mentions; });
    num("gradcheck.pairs", [](RunConfig &c) -> int & { return c.gradcheck.pairs; });
    num("gradcheck.max_coordinates",
        [](RunConfig &c) -> int & { return c.gradcheck.max_coordinates; });
    num("gradcheck.step", [](RunConfig &c) -> double & { return c.gradcheck.step; });
    num("gradcheck.tolerance",
        [](RunConfig &c) -> double & { return c.gradcheck.tolerance; });
    return s;
  }();
  return setters;
}

// ---------------------------------------------------------------------------
// Run directories

// Manifest of a completed run in `out`, if any.
std::optional<json> CompletedManifest(const fs::path &out) {
  const fs::path manifest = out / "manifest.json";
  if (out.empty() || !fs::exists(manifest)) return std::nullopt;
  try {
    json m = json::parse(internal::ReadFileBytes(manifest));
    if (m.value("status", "") == "complete") return m;
  } catch (const json::exception &) {
  }
  return std::nullopt;
}

// Owns one command's output directory: refuses completed directories, logs
// to run.log alongside stderr and writes manifest.json.
class RunDir {
 public:
  RunDir(const fs::path &out, std::string command, const RunConfig &config)
      : path_(out), command_(std::move(command)) {
    if (out.empty()) throw ConfigError("--out is required");
    if (CompletedManifest(out)) {
      throw ConfigError("run directory " + out.string() +
                        " holds a completed run; choose a new --out");
    }
    fs::create_directories(out);
    config_json_ = json::parse(config.ToJson());
    fingerprint_ = config.Fingerprint();
    started_at_ = UtcNow();
    start_ = std::chrono::steady_clock::now();

    previous_logger_ = spdlog::default_logger();
    auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
    auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>(
        (out / "run.log").string(), true);
    auto logger = std::make_shared<spdlog::logger>(
        "evcoref", spdlog::sinks_init_list{console, file});
    logger->set_level(previous_logger_->level());
    logger->flush_on(spdlog::level::info);
    spdlog::set_default_logger(logger);
    WriteManifest("running", json::object());
    spdlog::info("{} run in {} (config {})", command_, out.string(), fingerprint_);
  }

  RunDir(const RunDir &) = delete;
  RunDir &operator=(const RunDir &) = delete;

  ~RunDir() {
    if (!completed_) {
      try {
        WriteManifest("failed", json::object());
      } catch (...) {
      }
    }
    spdlog::set_default_logger(previous_logger_);
  }

  const fs::path &path() const { return path_; }

  void Complete(const json &result) {
    WriteManifest("complete", result);
    completed_ = true;
  }

 private:
  void WriteManifest(const std::string &status, const json &result) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    json m = {{"command", command_},
              {"version", kVersion},
              {"status", status},
              {"config_fingerprint", fingerprint_},
              {"config", config_json_},
              {"started_at", started_at_},
              {"finished_at", status == "running" ? "" : UtcNow()},
              {"elapsed_seconds", elapsed},
              {"result", result}};
    internal::AtomicWrite(path_ / "manifest.json", m.dump(2) + "\n");
  }

  fs::path path_;
  std::string command_;
  json config_json_;
  std::string fingerprint_;
  std::string started_at_;
  std::chrono::steady_clock::time_point start_;
  std::shared_ptr<spdlog::logger> previous_logger_;
  bool completed_ = false;
};

// ---------------------------------------------------------------------------
// Data and inference plumbing

struct Split {
  std::string name;
  fs::path corpus;
  fs::path inferences;
};

Split ResolveSplit(const RunConfig &config, const CommandOptions &options,
                   const std::string &default_split) {
  Split s;
  s.name = options.split.empty() ? default_split : options.split;
  if (s.name == "train") {
    s.corpus = config.data.train;
    s.inferences = config.data.train_inferences;
  } else if (s.name == "dev") {
    s.corpus = config.data.dev;
    s.inferences = config.data.dev_inferences;
  } else if (s.name == "test") {
    s.corpus = config.data.test;
    s.inferences = config.data.test_inferences;
  } else {
    throw ConfigError("unknown split: " + s.name);
  }
  if (!options.corpus.empty()) s.corpus = options.corpus;
  if (!options.inferences.empty()) s.inferences = options.inferences;
  if (s.corpus.empty()) throw ConfigError("no corpus configured for split " + s.name);
  return s;
}

void RequireFile(const fs::path &path, const std::string &what) {
  if (path.empty() || !fs::is_regular_file(path)) {
    throw ConfigError(what + " not found: " + path.string());
  }
}

// Provider, optional shared cache and engine for one split.
class InferenceSetup {
 public:
  InferenceSetup(const RunConfig &config, const fs::path &fixtures, bool strict,
                 InferenceCache *cache) {
    const CommonsenseConfig &cs = config.commonsense;
    if (cs.source == InferenceSource::kFixture) {
      RequireFile(fixtures, "inference fixture file");
      provider_ = FixtureProvider::FromFile(fixtures, strict);
    } else {
      std::vector<PromptExemplar> pool;
      if (cs.generation.mode == PromptMode::kFewshot) {
        RequireFile(cs.exemplars, "few-shot exemplar file");
        pool = ReadExemplarFile(cs.exemplars);
      }
      provider_ = std::make_unique<ServiceProvider>(
          GenerationClient(cs.endpoint, cs.retry, cs.timeout_seconds),
          cs.generation, std::move(pool), config.seeds.front());
    }
    engine_ = std::make_unique<InferenceEngine>(*provider_, cache,
                                                cs.generation.k);
  }

  InferenceEngine &engine() { return *engine_; }

 private:
  std::unique_ptr<InferenceProvider> provider_;
  std::unique_ptr<InferenceEngine> engine_;
};

std::unique_ptr<InferenceCache> MakeCache(const RunConfig &config) {
  if (config.commonsense.cache.empty()) return nullptr;
  return std::make_unique<InferenceCache>(config.commonsense.cache);
}

// Corpus, embedder-backed feature store and (when needed) inference engine.
class SplitData {
 public:
  SplitData(const RunConfig &config, const Split &split, Embedder &embedder,
            bool strict, InferenceCache *cache)
      : name_(split.name) {
    RequireFile(split.corpus, split.name + " corpus");
    corpus_ = LoadCorpus(split.corpus);
    const bool use = config.train.mode != ScorerMode::kBaseline;
    if (use) inference_ = std::make_unique<InferenceSetup>(config, split.inferences,
                                                           strict, cache);
    store_ = std::make_unique<FeatureStore>(
        corpus_, embedder, use ? &inference_->engine() : nullptr, use);
  }

  const std::string &name() const { return name_; }
  const Corpus &corpus() const { return corpus_; }
  FeatureStore &store() { return *store_; }
  size_t provider_calls() const {
    return inference_ ? inference_->engine().provider_calls() : 0;
  }

 private:
  std::string name_;
  Corpus corpus_;
  std::unique_ptr<InferenceSetup> inference_;
  std::unique_ptr<FeatureStore> store_;
};

bool FullyLabeled(const Corpus &corpus) {
  return !corpus.mentions().empty() &&
         std::all_of(corpus.mentions().begin(), corpus.mentions().end(),
                     [](const Mention &m) { return m.gold_cluster_id.has_value(); });
}

json ScoreJson(const MetricScore &s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

ClusteringHeader MakeHeader(const RunConfig &config, double threshold,
                            const std::string &checkpoint) {
  ClusteringHeader h;
  h.threshold = threshold;
  h.linkage = config.cluster.linkage;
  h.scope = std::string(PairScopeName(config.cluster.scope));
  h.checkpoint = checkpoint;
  return h;
}

double ThresholdFor(const CommandOptions &options, const fs::path &checkpoint) {
  if (options.threshold) return *options.threshold;
  const fs::path file = checkpoint.parent_path() / "threshold.json";
  if (!fs::exists(file)) {
    throw ConfigError("no --threshold given and no threshold.json next to " +
                      checkpoint.string());
  }
  try {
    return json::parse(internal::ReadFileBytes(file)).at("threshold").get<double>();
  } catch (const json::exception &e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

std::string FormatMeanStd(const MeanStd &m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", 100 * m.mean, 100 * m.stddev);
  return buf;
}

std::vector<WeightedInference> Weighted(const std::vector<std::string> &texts,
                                        const std::vector<double> &weights) {
  std::vector<WeightedInference> out;
  for (size_t i = 0; i < texts.size() && i < weights.size(); ++i) {
    out.push_back({texts[i], weights[i]});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const WeightedInference &a, const WeightedInference &b) {
                     return a.weight > b.weight;
                   });
  return out;
}

json TraceJson(const AttentionTrace &t) {
  auto list = [](const std::vector<WeightedInference> &items) {
    json out = json::array();
    for (const auto &w : items) out.push_back({{"text", w.text}, {"weight", w.weight}});
    return out;
  };
  json j = {{"first", t.first},
            {"second", t.second},
            {"first_context", t.first_context},
            {"second_context", t.second_context},
            {"mode", ScorerModeName(t.mode)},
            {"probability", t.probability},
            {"first_before", list(t.first_before)},
            {"first_after", list(t.first_after)},
            {"second_before", list(t.second_before)},
            {"second_after", list(t.second_after)}};
  j["gold_label"] = t.gold_label ? json(*t.gold_label) : json(nullptr);
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ModelDims RunConfig::dims() const {
  return MakeModelDims(embedder, attention_dim, hidden, train.mode);
}

void RunConfig::Validate() const {
  if (seeds.empty()) throw ConfigError("seed list is empty");
  embedder.Validate();
  train.Validate();
  cluster.Validate();
  commonsense.generation.Validate();
  if (threshold_grid.empty()) throw ConfigError("threshold grid is empty");
  for (double t : threshold_grid) {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("grid thresholds must lie in [0, 1]");
  }
  if (commonsense.max_concurrency < 1) {
    throw ConfigError("commonsense.max_concurrency must be >= 1");
  }
  if (commonsense.retry.attempts < 1) throw ConfigError("commonsense.retries must be >= 1");
  if (commonsense.source == InferenceSource::kService &&
      train.mode != ScorerMode::kBaseline && commonsense.endpoint.empty()) {
    throw ConfigError("commonsense.endpoint is required for the service source");
  }
  if (train.scope != cluster.scope) {
    throw ConfigError("training and clustering scopes differ");
  }
  dims().Validate();
}

std::string RunConfig::ToJson() const {
  json j = {
      {"preset", preset},
      {"seeds", seeds},
      {"mode", ScorerModeName(train.mode)},
      {"data",
       {{"train", data.train.string()},
        {"dev", data.dev.string()},
        {"test", data.test.string()},
        {"train_inferences", data.train_inferences.string()},
        {"dev_inferences", data.dev_inferences.string()},
        {"test_inferences", data.test_inferences.string()}}},
      {"embedder",
       {{"provider", embedder.provider == EmbedProvider::kHash ? "hash" : "service"},
        {"dim", embedder.dim},
        {"seed", embedder.seed},
        {"endpoint", embedder.endpoint},
        {"width_dim", embedder.width_dim},
        {"max_width_bucket", embedder.max_width_bucket},
        {"max_concurrency", embedder.max_concurrency},
        {"timeout", embedder.timeout_seconds}}},
      {"model", {{"attention_dim", attention_dim}, {"hidden", hidden}}},
      {"commonsense",
       {{"source",
         commonsense.source == InferenceSource::kFixture ? "fixture" : "service"},
        {"endpoint", commonsense.endpoint},
        {"model_id", commonsense.generation.model_id},
        {"prompt_mode", commonsense.generation.mode == PromptMode::kFinetuned
                            ? "finetuned"
                            : "fewshot"},
        {"top_p", commonsense.generation.top_p},
        {"max_tokens", commonsense.generation.max_tokens},
        {"stop", commonsense.generation.stop},
        {"k", commonsense.generation.k},
        {"exemplars", commonsense.exemplars.string()},
        {"cache", commonsense.cache.string()},
        {"strict_train", commonsense.strict_train},
        {"strict_predict", commonsense.strict_predict},
        {"max_concurrency", commonsense.max_concurrency},
        {"retries", commonsense.retry.attempts},
        {"backoff_ms", commonsense.retry.initial_backoff.count()},
        {"timeout", commonsense.timeout_seconds}}},
      {"train",
       {{"learning_rate", train.learning_rate},
        {"batch_size", train.batch_size},
        {"dropout", train.dropout},
        {"beta1", train.beta1},
        {"beta2", train.beta2},
        {"epsilon", train.epsilon},
        {"epochs", train.epochs},
        {"patience", train.patience},
        {"early_stopping", "dev pairwise F1 at 0.5"}}},
      {"cluster",
       {{"threshold", cluster.threshold},
        {"linkage", cluster.linkage},
        {"scope", PairScopeName(cluster.scope)},
        {"grid", threshold_grid}}},
      {"eval",
       {{"topic_level", eval.topic_level},
        {"drop_singletons", eval.drop_singletons},
        {"granularity", EvalGranularityName(eval.granularity)}}},
      {"synth",
       {{"n_topics", synth.n_topics},
        {"clusters_per_topic", synth.clusters_per_topic},
        {"mentions_per_cluster", synth.mentions_per_cluster},
        {"hard_fraction", synth.hard_fraction},
        {"distractor_rate", synth.distractor_rate},
        {"seed", synth.seed}}},
      {"gradcheck",
       {{"mentions", gradcheck.mentions},
        {"pairs", gradcheck.pairs},
        {"max_coordinates", gradcheck.max_coordinates},
        {"step", gradcheck.step},
        {"tolerance", gradcheck.tolerance}}}};
  return j.dump();
}

std::string RunConfig::Fingerprint() const { return Hex64(Fnv1a64(ToJson())); }

RunConfig PresetConfig(std::string_view name) {
  RunConfig c;
  c.preset = std::string(name);
  if (name == "desk") return c;
  if (name == "service") {
    c.embedder.provider = EmbedProvider::kService;
    c.embedder.dim = 1024;
    c.attention_dim = 512;
    c.commonsense.source = InferenceSource::kService;
    return c;
  }
  throw ConfigError("unknown preset: " + std::string(name));
}

RunConfig LoadRunConfig(const fs::path &path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error &e) {
    throw ConfigError(e.what());
  }
  const std::string preset = tree.get<std::string>("run.preset", "desk");
  RunConfig config = PresetConfig(Trimmed(preset));
  const fs::path base = path.parent_path();
  for (const auto &[section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      throw ConfigError(path.string() + ": key outside a section: " + section);
    }
    for (const auto &[key, value] : entries) {
      const std::string name = section + "." + key;
      auto it = Setters().find(name);
      if (it == Setters().end()) {
        throw ConfigError(path.string() + ": unknown key " + name);
      }
      it->second(config, name, Trimmed(value.data()), base);
    }
  }
  config.train.scope = config.cluster.scope;
  return config;
}

std::vector<uint64_t> ParseSeedList(std::string_view text) {
  std::vector<uint64_t> seeds;
  for (const auto &item : SplitList(text)) {
    if (item.front() == '-') throw ConfigError("seeds must be non-negative: " + item);
    seeds.push_back(ParseNumber<uint64_t>("seed", item));
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  return seeds;
}

MeanStd Summarize(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

int RunSynth(const RunConfig &config, const CommandOptions &options) {
  SyntheticSpec spec = config.synth;
  spec.Validate();
  const SyntheticCorpus generated = GenerateSynthetic(spec);
  const size_t clusters = generated.corpus.GoldClustering().NumClusters();
  std::cout << "documents " << generated.corpus.documents().size() << "\n"
            << "mentions " << generated.corpus.mentions().size() << "\n"
            << "clusters " << clusters << " (" << generated.hard_clusters.size()
            << " hard)\n";

  // A completed run with the same configuration is verified, not rewritten.
  if (auto done = CompletedManifest(options.out);
      done && done->value("command", "") == "synth" &&
      done->value("config_fingerprint", "") == config.Fingerprint()) {
    std::ostringstream corpus, fixtures;
    WriteCorpus(generated.corpus, corpus);
    WriteInferences(generated.fixtures, fixtures);
    const bool same =
        internal::ReadFileBytes(options.out / "corpus.ndjson") == corpus.str() &&
        internal::ReadFileBytes(options.out / "inferences.ndjson") == fixtures.str();
    std::cout << (same ? "identical to the existing run in "
                       : "DIFFERS from the existing run in ")
              << options.out.string() << "\n";
    return same ? kExitOk : kExitFailure;
  }

  RunDir dir(options.out, "synth", config);
  SaveCorpus(generated.corpus, dir.path() / "corpus.ndjson");
  SaveInferenceFile(generated.fixtures, dir.path() / "inferences.ndjson");
  dir.Complete({{"documents", generated.corpus.documents().size()},
                {"mentions", generated.corpus.mentions().size()},
                {"clusters", clusters},
                {"hard_clusters", generated.hard_clusters.size()},
                {"seed", spec.seed}});
  return kExitOk;
}

int RunGenInferences(const RunConfig &config, const CommandOptions &options) {
  std::vector<Split> splits;
  if (!options.split.empty() || !options.corpus.empty()) {
    splits.push_back(ResolveSplit(config, options, "test"));
  } else {
    for (const char *name : {"train", "dev", "test"}) {
      CommandOptions o = options;
      o.split = name;
      Split s = ResolveSplit(config, o, name);
      if (fs::exists(s.corpus)) splits.push_back(s);
    }
    if (splits.empty()) throw ConfigError("no corpus files configured");
  }
  for (const Split &s : splits) RequireFile(s.corpus, s.name + " corpus");
  RunDir dir(options.out, "gen-inferences", config);
  auto cache = MakeCache(config);
  json result = json::object();
  for (const Split &split : splits) {
    const Corpus corpus = LoadCorpus(split.corpus);
    InferenceSetup setup(config, split.inferences, config.commonsense.strict_train,
                         cache.get());
    const auto mentions = corpus.CanonicalMentions();
    std::vector<InferenceSet> sets(mentions.size());
    std::atomic<size_t> next{0};
    std::vector<std::string> errors(mentions.size());
    auto worker = [&] {
      for (size_t i = next++; i < mentions.size(); i = next++) {
        try {
          sets[i] = setup.engine().Get(corpus, *mentions[i]);
        } catch (const std::exception &e) {
          errors[i] = e.what();
        }
      }
    };
    const int n_workers = std::max(
        1, std::min<int>(config.commonsense.max_concurrency,
                         static_cast<int>(mentions.size())));
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    for (size_t i = 0; i < errors.size(); ++i) {
      if (!errors[i].empty()) {
        throw ServiceError("inferences for " + mentions[i]->mention_id + ": " +
                           errors[i]);
      }
    }
    size_t warnings = 0;
    for (const auto &s : sets) {
      if (s.provenance.find("warning=") != std::string::npos) ++warnings;
    }
    const fs::path file = dir.path() / ("inferences_" + split.name + ".ndjson");
    SaveInferenceFile(sets, file);
    spdlog::info("{}: {} inference sets, {} provider calls, {} warnings",
                 split.name, sets.size(), setup.engine().provider_calls(), warnings);
    result[split.name] = {{"mentions", sets.size()},
                          {"provider_calls", setup.engine().provider_calls()},
                          {"warnings", warnings},
                          {"file", file.filename().string()}};
  }
  dir.Complete(result);
  return kExitOk;
}

int RunTrain(const RunConfig &config, const CommandOptions &options) {
  RequireFile(config.data.train, "train corpus");
  RequireFile(config.data.dev, "dev corpus");
  const bool with_test = !config.data.test.empty();
  if (with_test) RequireFile(config.data.test, "test corpus");
  RunDir dir(options.out, "train", config);

  auto embedder = MakeEmbedder(config.embedder);
  auto cache = MakeCache(config);
  const bool strict = config.commonsense.strict_train;
  SplitData train(config, {"train", config.data.train, config.data.train_inferences},
                  *embedder, strict, cache.get());
  SplitData dev(config, {"dev", config.data.dev, config.data.dev_inferences},
                *embedder, strict, cache.get());
  std::unique_ptr<SplitData> test;
  if (with_test) {
    test = std::make_unique<SplitData>(
        config, Split{"test", config.data.test, config.data.test_inferences},
        *embedder, config.commonsense.strict_predict, cache.get());
  }
  const ModelDims dims = config.dims();
  spdlog::info("mode {}, {} parameters, seeds {}", ScorerModeName(dims.mode),
               ModelParameters::Zeros(dims).NumParameters(), config.seeds.size());

  json seeds = json::array();
  std::vector<double> dev_scores, test_scores;
  bool any_failed = false;
  for (uint64_t seed : config.seeds) {
    const fs::path seed_dir = dir.path() / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    TrainConfig tc = config.train;
    tc.seed = seed;
    json entry = {{"seed", seed}};
    try {
      const TrainResult result =
          Train(train.store(), dev.store(), dims, tc, [seed](const EpochRecord &r) {
            spdlog::info("seed {} epoch {} loss {:.4f} dev pairwise F1 {:.4f}{}", seed,
                         r.epoch, r.train_loss, r.dev_f1, r.improved ? " *" : "");
          });
      const fs::path ckpt = seed_dir / "model.ckpt";
      SaveCheckpoint(result.params, ckpt);

      json history = json::array();
      for (const auto &r : result.history) {
        history.push_back({{"epoch", r.epoch},
                           {"train_loss", r.train_loss},
                           {"dev_pairwise_f1", r.dev_f1},
                           {"improved", r.improved}});
      }
      internal::AtomicWrite(seed_dir / "history.json",
                            json{{"best_epoch", result.best_epoch},
                                 {"best_dev_pairwise_f1", result.best_dev_f1},
                                 {"stopped_early", result.stopped_early},
                                 {"epochs", history}}
                                    .dump(2) + "\n");

      const ThresholdResult tuned = TuneThreshold(
          dev.corpus(), ScoreCorpus(result.params, dev.store(), config.cluster.scope),
          config.threshold_grid, config.cluster, config.eval);
      json curve = json::array();
      for (const auto &[tau, conll] : tuned.curve) {
        curve.push_back({{"threshold", tau}, {"dev_conll_f1", conll}});
      }
      internal::AtomicWrite(seed_dir / "threshold.json",
                            json{{"threshold", tuned.threshold},
                                 {"dev_conll_f1", tuned.conll_f1},
                                 {"curve", curve}}
                                    .dump(2) + "\n");
      entry["best_epoch"] = result.best_epoch;
      entry["threshold"] = tuned.threshold;
      entry["dev_conll_f1"] = tuned.conll_f1;
      entry["checkpoint"] = CheckpointFingerprint(ckpt);
      dev_scores.push_back(tuned.conll_f1);
      spdlog::info("seed {}: best epoch {}, tau {:.2f}, dev CoNLL F1 {:.4f}", seed,
                   result.best_epoch, tuned.threshold, tuned.conll_f1);

      if (test) {
        ClusteringConfig cc = config.cluster;
        cc.threshold = tuned.threshold;
        const Clustering system = ClusterCorpus(
            test->corpus(),
            ScoreCorpus(result.params, test->store(), cc.scope), cc);
        SaveClusteringFile(seed_dir / "clusters.ndjson", system,
                           MakeHeader(config, tuned.threshold, entry["checkpoint"]));
        const EvalReport report = Evaluate(test->corpus(), system, config.eval);
        SaveReport(report, seed_dir / "report.json", seed_dir / "report.txt");
        entry["test_conll_f1"] = report.conll_f1;
        test_scores.push_back(report.conll_f1);
        spdlog::info("seed {}: test CoNLL F1 {:.4f}", seed, report.conll_f1);
      }
    } catch (const NumericError &e) {
      spdlog::error("seed {} aborted: {}", seed, e.what());
      entry["error"] = e.what();
      any_failed = true;
    }
    seeds.push_back(entry);
  }

  const size_t calls = train.provider_calls() + dev.provider_calls() +
                       (test ? test->provider_calls() : 0);
  spdlog::info("commonsense provider calls: {}", calls);
  if (dims.mode == ScorerMode::kBaseline && calls != 0) {
    throw Error("baseline mode consulted the commonsense provider");
  }

  const MeanStd dev_summary = Summarize(dev_scores);
  json summary = {{"mode", ScorerModeName(dims.mode)},
                  {"seeds", seeds},
                  {"provider_calls", calls},
                  {"dev_conll_f1", {{"mean", dev_summary.mean},
                                    {"stddev", dev_summary.stddev}}}};
  std::string text = "mode " + std::string(ScorerModeName(dims.mode)) + ", " +
                     std::to_string(dev_scores.size()) + " seeds\n" +
                     "dev CoNLL F1  " + FormatMeanStd(dev_summary) + "\n";
  if (test) {
    const MeanStd test_summary = Summarize(test_scores);
    summary["test_conll_f1"] = {{"mean", test_summary.mean},
                                {"stddev", test_summary.stddev}};
    text += "test CoNLL F1 " + FormatMeanStd(test_summary) + "\n";
  }
  internal::AtomicWrite(dir.path() / "summary.json", summary.dump(2) + "\n");
  internal::AtomicWrite(dir.path() / "summary.txt", text);
  std::cout << text;
  dir.Complete(summary);
  return any_failed ? kExitFailure : kExitOk;
}

int RunPredict(const RunConfig &config, const CommandOptions &options) {
  if (options.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  RequireFile(options.checkpoint, "checkpoint");
  const Split split = ResolveSplit(config, options, "test");
  const ModelDims dims = config.dims();
  const ModelParameters params = LoadCheckpoint(options.checkpoint, &dims);
  const double threshold = ThresholdFor(options, options.checkpoint);
  RunDir dir(options.out, "predict", config);

  auto embedder = MakeEmbedder(config.embedder);
  auto cache = MakeCache(config);
  SplitData data(config, split, *embedder, config.commonsense.strict_predict,
                 cache.get());
  ClusteringConfig cc = config.cluster;
  cc.threshold = threshold;
  const Clustering system = ClusterCorpus(
      data.corpus(), ScoreCorpus(params, data.store(), cc.scope), cc);
  const std::string fingerprint = CheckpointFingerprint(options.checkpoint);
  SaveClusteringFile(dir.path() / "clusters.ndjson", system,
                     MakeHeader(config, threshold, fingerprint));
  json result = {{"threshold", threshold},
                 {"checkpoint", fingerprint},
                 {"clusters", system.NumClusters()},
                 {"provider_calls", data.provider_calls()}};
  if (FullyLabeled(data.corpus())) {
    const EvalReport report = Evaluate(data.corpus(), system, config.eval);
    SaveReport(report, dir.path() / "report.json", dir.path() / "report.txt");
    std::cout << FormatReportTable(report);
    result["conll_f1"] = report.conll_f1;
  }
  dir.Complete(result);
  return kExitOk;
}

int RunScore(const RunConfig &config, const CommandOptions &options) {
  const Split split = ResolveSplit(config, options, "test");
  RequireFile(split.corpus, split.name + " corpus");
  const Corpus corpus = LoadCorpus(split.corpus);
  Clustering system;
  if (options.gold_as_system) {
    system = corpus.GoldClustering();
  } else {
    if (options.clustering.empty()) {
      throw ConfigError("--clustering or --gold-as-system is required");
    }
    RequireFile(options.clustering, "clustering file");
    system = LoadClusteringFile(options.clustering).first;
  }
  RunDir dir(options.out, "score", config);
  const EvalReport report = Evaluate(corpus, system, config.eval);
  SaveReport(report, dir.path() / "report.json", dir.path() / "report.txt");
  std::cout << FormatReportTable(report);
  dir.Complete({{"conll_f1", report.conll_f1},
                {"muc", ScoreJson(report.muc)},
                {"b_cubed", ScoreJson(report.b_cubed)},
                {"ceaf_e", ScoreJson(report.ceaf_e)},
                {"skipped_units", report.skipped_units}});
  return kExitOk;
}

int RunExplain(const RunConfig &config, const CommandOptions &options) {
  if (options.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (options.first.empty() || options.second.empty()) {
    throw ConfigError("--pair FIRST,SECOND is required");
  }
  RequireFile(options.checkpoint, "checkpoint");
  const Split split = ResolveSplit(config, options, "test");
  const ModelDims dims = config.dims();
  const ModelParameters params = LoadCheckpoint(options.checkpoint, &dims);
  auto embedder = MakeEmbedder(config.embedder);
  auto cache = MakeCache(config);
  SplitData data(config, split, *embedder, config.commonsense.strict_predict,
                 cache.get());
  for (const auto &id : {options.first, options.second}) {
    if (!data.corpus().HasMention(id)) throw ConfigError("unknown mention id: " + id);
  }
  RunDir dir(options.out, "explain", config);
  const AttentionTrace trace =
      TracePair(params, data.store(), options.first, options.second);
  const std::string text = FormatTrace(trace);
  internal::AtomicWrite(dir.path() / "explain.txt", text);
  internal::AtomicWrite(dir.path() / "explain.json", TraceJson(trace).dump(2) + "\n");
  std::cout << text;
  dir.Complete({{"probability", trace.probability}});
  return kExitOk;
}

int RunGradcheck(const RunConfig &config, const CommandOptions &options) {
  RunDir dir(options.out, "gradcheck", config);
  const ModelDims dims = config.dims();
  json seeds = json::array();
  std::ostringstream text;
  bool pass = true;
  double worst = 0.0;
  for (uint64_t seed : config.seeds) {
    const GradCheckReport r = CheckGradients(dims, seed, config.gradcheck);
    json blocks = json::array();
    text << "seed " << seed << " mode " << ScorerModeName(r.mode) << "\n";
    for (const auto &b : r.blocks) {
      blocks.push_back({{"block", b.block},
                        {"relative_error", b.relative_error},
                        {"checked", b.checked},
                        {"skipped", b.skipped},
                        {"pass", b.pass}});
      char line[128];
      std::snprintf(line, sizeof line, "  %-12s %10.3e  %4zu checked %3zu skipped  %s\n",
                    b.block.c_str(), b.relative_error, b.checked, b.skipped,
                    b.pass ? "ok" : "FAIL");
      text << line;
    }
    seeds.push_back({{"seed", seed},
                     {"mode", ScorerModeName(r.mode)},
                     {"max_relative_error", r.max_relative_error},
                     {"pass", r.pass},
                     {"blocks", blocks}});
    pass = pass && r.pass;
    worst = std::max(worst, r.max_relative_error);
  }
  char line[96];
  std::snprintf(line, sizeof line, "%s: max relative error %.3e (tolerance %.1e)\n",
                pass ? "PASS" : "FAIL", worst, config.gradcheck.tolerance);
  text << line;
  const json report = {{"pass", pass},
                       {"max_relative_error", worst},
                       {"tolerance", config.gradcheck.tolerance},
                       {"step", config.gradcheck.step},
                       {"seeds", seeds}};
  internal::AtomicWrite(dir.path() / "gradcheck.json", report.dump(2) + "\n");
  internal::AtomicWrite(dir.path() / "gradcheck.txt", text.str());
  std::cout << text.str();
  dir.Complete({{"pass", pass}, {"max_relative_error", worst}});
  return pass ? kExitOk : kExitFailure;
}

AttentionTrace TracePair(const ModelParameters &params, FeatureStore &store,
                         const std::string &first, const std::string &second) {
  const Corpus &corpus = store.corpus();
  const Mention &a = corpus.mention(first);
  const Mention &b = corpus.mention(second);
  const MentionInput &in_a = store.Input(first);
  const MentionInput &in_b = store.Input(second);
  const PairTrace pt = ExplainPair(params, in_a, in_b);

  AttentionTrace t;
  t.first = first;
  t.second = second;
  t.first_context = corpus.ContextOf(a);
  t.second_context = corpus.ContextOf(b);
  t.mode = params.dims.mode;
  t.probability = pt.probability;
  if (a.gold_cluster_id && b.gold_cluster_id) {
    t.gold_label = *a.gold_cluster_id == *b.gold_cluster_id ? 1 : 0;
  }
  if (t.mode == ScorerMode::kBaseline) return t;
  const bool intra = t.mode == ScorerMode::kIntra;
  const MentionInput &src_a = intra ? in_a : in_b;
  const MentionInput &src_b = intra ? in_b : in_a;
  t.first_before = Weighted(src_a.before_text, pt.cs_first.before.weights);
  t.first_after = Weighted(src_a.after_text, pt.cs_first.after.weights);
  t.second_before = Weighted(src_b.before_text, pt.cs_second.before.weights);
  t.second_after = Weighted(src_b.after_text, pt.cs_second.after.weights);
  return t;
}

std::string FormatTrace(const AttentionTrace &t) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", t.probability);
  out << "pair " << t.first << " " << t.second << "\n"
      << "mode " << ScorerModeName(t.mode) << "\n"
      << "probability " << buf << "\n"
      << "gold " << (t.gold_label ? std::to_string(*t.gold_label) : "unknown") << "\n"
      << "context " << t.first << ": " << t.first_context << "\n"
      << "context " << t.second << ": " << t.second_context << "\n";
  const bool intra = t.mode == ScorerMode::kIntra;
  auto section = [&](const std::string &query, const std::string &owner,
                     const char *relation,
                     const std::vector<WeightedInference> &items) {
    out << relation << " inferences of " << owner << " attended by " << query
        << "\n";
    for (const auto &w : items) {
      std::snprintf(buf, sizeof buf, "  %.6f  ", w.weight);
      out << buf << w.text << "\n";
    }
  };
  if (t.mode != ScorerMode::kBaseline) {
    section(t.first, intra ? t.first : t.second, "before", t.first_before);
    section(t.first, intra ? t.first : t.second, "after", t.first_after);
    section(t.second, intra ? t.second : t.first, "before", t.second_before);
    section(t.second, intra ? t.second : t.first, "after", t.second_after);
  }
  return out.str();
}

}  // namespace evcoref
