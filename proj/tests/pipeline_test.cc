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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "evcoref/commonsense.h"
#include "evcoref/corpus.h"
#include "evcoref/errors.h"
#include "evcoref/pipeline.h"
#include "json.hpp"

using namespace evcoref;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path Scratch() {
  static const fs::path root = [] {
    const auto dir = fs::temp_directory_path() / "evcoref_pipeline_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
  }();
  return root;
}

// Runs the CLI with `args`; stdout and stderr go to `<log>`.
int Cli(const std::string &args, const std::string &log = "cli.log") {
  const std::string cmd = std::string("\"") + EVCOREF_CLI + "\" " + args + " > \"" +
                          (Scratch() / log).string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string ReadAll(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json ReadJson(const fs::path &path) { return json::parse(ReadAll(path)); }

std::string Q(const fs::path &p) { return "\"" + p.string() + "\""; }

// Small synthetic corpus and a config training a tiny intra model on it.
struct Workspace {
  fs::path data = Scratch() / "data";
  fs::path config = Scratch() / "run.ini";

  Workspace() {
    if (fs::exists(config)) return;
    REQUIRE(Cli("--out " + Q(data) + " --seed 3 synth --topics 3 --clusters 2 --mentions 3") == 0);
    std::ofstream ini(config);
    ini << "[run]\nseeds = 1\nmode = intra\n"
        << "[data]\ntrain = data/corpus.ndjson\ndev = data/corpus.ndjson\n"
        << "test = data/corpus.ndjson\ntrain_inferences = data/inferences.ndjson\n"
        << "dev_inferences = data/inferences.ndjson\n"
        << "test_inferences = data/inferences.ndjson\n"
        << "[model]\nhidden = 16\n"
        << "[train]\nepochs = 2\n";
  }
};

}  // namespace

TEST_CASE("synth writes a corpus and refuses invalid specs") {
  const auto out = Scratch() / "synth_ok";
  CHECK(Cli("--out " + Q(out) + " synth") == kExitOk);
  CHECK(fs::is_regular_file(out / "corpus.ndjson"));
  CHECK(fs::is_regular_file(out / "inferences.ndjson"));
  CHECK(ReadJson(out / "manifest.json").at("status") == "complete");
  const std::string bytes = ReadAll(out / "corpus.ndjson");
  CHECK(Cli("--out " + Q(out) + " synth") == kExitOk);
  CHECK(ReadAll(out / "corpus.ndjson") == bytes);
  CHECK(Cli("--out " + Q(out) + " --seed 99 synth") == kExitUsage);

  const auto bad = Scratch() / "synth_bad";
  CHECK(Cli("--out " + Q(bad) + " synth --clusters 0") == kExitUsage);
  CHECK_FALSE(fs::exists(bad));
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(Cli("--bogus") == kExitUsage);
  CHECK(Cli("--out " + Q(Scratch() / "x") + " --mode neither synth") == kExitUsage);
  CHECK(Cli("--config " + Q(Scratch() / "missing.ini") + " synth") == kExitUsage);
  CHECK(Cli("--help") == kExitOk);
}

TEST_CASE("score gold as system and all-singleton clusterings") {
  Workspace w;
  const auto out = Scratch() / "score_gold";
  REQUIRE(Cli("--config " + Q(w.config) + " --out " + Q(out) + " score --gold-as-system") ==
          kExitOk);
  const auto result = ReadJson(out / "manifest.json").at("result");
  CHECK(result.at("conll_f1").get<double>() == 1.0);

  const Corpus corpus = LoadCorpus(w.data / "corpus.ndjson");
  Clustering all;
  for (const auto &m : corpus.mentions()) all.Assign(m.mention_id, m.mention_id);
  ClusteringHeader header;
  header.threshold = 1.0;
  SaveClusteringFile(Scratch() / "singletons.ndjson", all, header);
  const auto out2 = Scratch() / "score_singletons";
  REQUIRE(Cli("--config " + Q(w.config) + " --out " + Q(out2) + " score --clustering " +
              Q(Scratch() / "singletons.ndjson")) == kExitOk);
  const auto r2 = ReadJson(out2 / "manifest.json").at("result");
  CHECK(r2.at("muc").at("f1").get<double>() == 0.0);
}

TEST_CASE("train, predict and explain end to end") {
  Workspace w;
  const auto run = Scratch() / "train";
  REQUIRE(Cli("--config " + Q(w.config) + " --out " + Q(run) + " train", "train.log") ==
          kExitOk);
  const auto seed = run / "seed_1";
  for (const char *f : {"model.ckpt", "history.json", "threshold.json", "clusters.ndjson",
                        "report.json", "report.txt"}) {
    CHECK(fs::is_regular_file(seed / f));
  }
  CHECK(fs::is_regular_file(run / "summary.txt"));
  CHECK(ReadAll(run / "summary.txt").find("test CoNLL F1") != std::string::npos);
  CHECK(ReadJson(seed / "history.json").at("epochs").size() == 2);
  CHECK(Cli("--config " + Q(w.config) + " --out " + Q(run) + " train") == kExitUsage);

  const auto pred = Scratch() / "predict";
  REQUIRE(Cli("--config " + Q(w.config) + " --out " + Q(pred) + " predict --checkpoint " +
              Q(seed / "model.ckpt")) == kExitOk);
  CHECK(ReadAll(pred / "clusters.ndjson") == ReadAll(seed / "clusters.ndjson"));

  const auto wrong = Scratch() / "predict_wrong";
  CHECK(Cli("--config " + Q(w.config) + " --mode baseline --out " + Q(wrong) +
            " predict --checkpoint " + Q(seed / "model.ckpt")) == kExitUsage);

  const Corpus corpus = LoadCorpus(w.data / "corpus.ndjson");
  const auto pairs = CandidatePairs(corpus, PairScope::kSubtopic);
  const MentionPair p = pairs.front();
  std::vector<InferenceSet> sets;
  for (const auto &m : corpus.mentions()) {
    sets.push_back({m.doc_id, m.mention_id, {"It rained."}, {"It stopped."}, "fixture"});
  }
  SaveInferenceFile(sets, Scratch() / "single.ndjson");
  const auto ex = Scratch() / "explain_single";
  REQUIRE(Cli("--config " + Q(w.config) + " --out " + Q(ex) + " explain --checkpoint " +
              Q(seed / "model.ckpt") + " --split test --inferences " +
              Q(Scratch() / "single.ndjson") + " --pair " + p.first + "," + p.second) ==
          kExitOk);
  const auto trace = ReadJson(ex / "explain.json");
  for (const char *rel : {"first_before", "first_after", "second_before", "second_after"}) {
    REQUIRE(trace.at(rel).size() == 1);
    CHECK(trace.at(rel)[0].at("weight").get<double>() == 1.0);
  }
  CHECK(ReadAll(ex / "explain.txt").find("1.000000") != std::string::npos);

  const auto ex2 = Scratch() / "explain_sorted";
  REQUIRE(Cli("--config " + Q(w.config) + " --out " + Q(ex2) + " explain --checkpoint " +
              Q(seed / "model.ckpt") + " --pair " + p.first + "," + p.second) == kExitOk);
  const auto t2 = ReadJson(ex2 / "explain.json");
  for (const char *rel : {"first_before", "first_after", "second_before", "second_after"}) {
    const auto &items = t2.at(rel);
    CHECK(items.size() >= 1);
    for (size_t i = 1; i < items.size(); ++i) {
      CHECK(items[i - 1].at("weight").get<double>() >= items[i].at("weight").get<double>());
    }
  }
}

TEST_CASE("baseline training makes no provider calls") {
  Workspace w;
  const auto run = Scratch() / "train_baseline";
  REQUIRE(Cli("--config " + Q(w.config) + " --mode baseline --out " + Q(run) + " train",
              "baseline.log") == kExitOk);
  const std::string log = ReadAll(run / "run.log");
  CHECK(log.find("commonsense provider calls: 0") != std::string::npos);
}

TEST_CASE("gradcheck passes and fails on the corruption hook") {
  const auto ok = Scratch() / "gc_ok";
  CHECK(Cli("--out " + Q(ok) + " --seed 4 gradcheck") == kExitOk);
  const auto report = ReadJson(ok / "gradcheck.json");
  CHECK(report.at("pass").get<bool>());
  const auto again = Scratch() / "gc_again";
  CHECK(Cli("--out " + Q(again) + " --seed 4 gradcheck") == kExitOk);
  CHECK(ReadAll(again / "gradcheck.txt") == ReadAll(ok / "gradcheck.txt"));
  const auto bad = Scratch() / "gc_bad";
  CHECK(Cli("--out " + Q(bad) + " gradcheck --corrupt-gradient") == kExitFailure);
}

TEST_CASE("config files reject unknown keys and bad values") {
  const auto write = [](const std::string &name, const std::string &text) {
    const auto path = Scratch() / name;
    std::ofstream(path) << text;
    return path;
  };
  CHECK_THROWS_AS(LoadRunConfig(write("unknown.ini", "[train]\nepoch = 3\n")), ConfigError);
  CHECK_THROWS_AS(LoadRunConfig(write("badnum.ini", "[train]\nepochs = many\n")), ConfigError);
  CHECK_THROWS_AS(LoadRunConfig(write("badmode.ini", "[run]\nmode = both\n")), ConfigError);
  const auto cfg = LoadRunConfig(
      write("good.ini", "[run]\nseeds = 4,5\n[data]\ntrain = a/b.ndjson\n[cluster]\nscope = topic\n"));
  CHECK(cfg.seeds == std::vector<uint64_t>{4, 5});
  CHECK(cfg.data.train == Scratch() / "a/b.ndjson");
  CHECK(cfg.cluster.scope == PairScope::kTopic);
  CHECK(cfg.train.scope == PairScope::kTopic);
}

TEST_CASE("presets and fingerprints") {
  const auto desk = PresetConfig("desk");
  CHECK(desk.embedder.dim == 16);
  CHECK(desk.attention_dim == 8);
  const auto service = PresetConfig("service");
  CHECK(service.embedder.dim == 1024);
  CHECK(service.attention_dim == 512);
  CHECK_THROWS_AS(PresetConfig("cluster"), ConfigError);
  auto other = desk;
  other.train.epochs += 1;
  CHECK(desk.Fingerprint() != other.Fingerprint());
  CHECK(desk.Fingerprint() == PresetConfig("desk").Fingerprint());
}

TEST_CASE("seed lists") {
  CHECK(ParseSeedList("1,2,3") == std::vector<uint64_t>{1, 2, 3});
  CHECK(ParseSeedList(" 7 ") == std::vector<uint64_t>{7});
  CHECK_THROWS_AS(ParseSeedList("1,x"), ConfigError);
  CHECK_THROWS_AS(ParseSeedList(""), ConfigError);
}

TEST_CASE("the credential never reaches the manifest") {
  const std::string secret = "sk-manifest-secret-42";
  const auto out = Scratch() / "secret_synth";
  const std::string env = std::string(kCredentialEnvVar) + "=" + secret + " ";
  const std::string cmd = env + "\"" + EVCOREF_CLI + "\" --out " + Q(out) +
                          " synth > /dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  for (const auto &entry : fs::directory_iterator(out)) {
    CHECK(ReadAll(entry.path()).find(secret) == std::string::npos);
  }
}
