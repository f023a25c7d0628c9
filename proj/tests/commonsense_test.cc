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
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include "doctest.h"
#include "evcoref/commonsense.h"
#include "evcoref/errors.h"
#include "evcoref/synthetic.h"
#include "httplib.h"
#include "json.hpp"

using namespace evcoref;
namespace fs = std::filesystem;

namespace {

const char kLohanContext[] =
    "Lindsay Lohan checks into rehab at Betty Ford Center , rehires longtime "
    "lawyer Shawn Holley";

std::string ReadAll(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path FreshDir(const std::string &name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> Sentences(const std::string &stem, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(stem + " number " + std::to_string(i) + ".");
  return out;
}

Mention MakeMention(const std::string &id) {
  Mention m;
  m.mention_id = id;
  m.doc_id = "d1";
  m.text = "rehires";
  return m;
}

class CountingProvider : public InferenceProvider {
 public:
  InferenceSet Generate(const Mention &mention, const std::string &) override {
    ++calls;
    InferenceSet s;
    s.mention_id = mention.mention_id;
    s.before = {"  b1.  ", "", "b2."};
    s.after = Sentences("a", 7);
    s.provenance = "test";
    return s;
  }
  std::string Fingerprint() const override { return "counting"; }
  int calls = 0;
};

// Generation service that fails `failures` times with HTTP 503, then answers.
class MockGenerationService {
 public:
  MockGenerationService(int failures, std::string completion)
      : failures_(failures), completion_(std::move(completion)) {
    server_.Post("/v1/complete", [this](const httplib::Request &req,
                                        httplib::Response &res) {
      ++requests;
      last_authorization = req.get_header_value("Authorization");
      last_body = req.body;
      if (failures_-- > 0) {
        res.status = 503;
        return;
      }
      res.set_content(nlohmann::json{{"completion", completion_}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockGenerationService() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/complete";
  }

  std::atomic<int> requests{0};
  std::string last_authorization;
  std::string last_body;

 private:
  std::atomic<int> failures_;
  std::string completion_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RetryPolicy FastRetry(int attempts) {
  return RetryPolicy{attempts, std::chrono::milliseconds(1)};
}

}  // namespace

TEST_CASE("fine-tuned prompt matches the golden file") {
  const std::string golden = ReadAll(fs::path(EVCOREF_GOLDEN_DIR) / "lohan_prompt.txt");
  REQUIRE_FALSE(golden.empty());
  CHECK(FormatPrompt(kLohanContext, "rehires", PromptMode::kFinetuned) == golden);
}

TEST_CASE("prompt preconditions") {
  CHECK_THROWS_AS(FormatPrompt(kLohanContext, "flying", PromptMode::kFinetuned),
                  ValidationError);
  std::vector<PromptExemplar> seven(7, PromptExemplar{"A man ran .", "ran", {"x."}, {"y."}});
  CHECK_THROWS_AS(FormatPrompt(kLohanContext, "rehires", PromptMode::kFewshot, seven),
                  ValidationError);
  std::vector<PromptExemplar> eight(8, seven.front());
  const auto p = FormatPrompt(kLohanContext, "rehires", PromptMode::kFewshot, eight);
  CHECK(p.ends_with("Event: rehires\nBefore:"));
}

TEST_CASE("exemplar sampling is seeded") {
  std::vector<PromptExemplar> pool;
  for (int i = 0; i < 20; ++i) {
    pool.push_back({"ctx " + std::to_string(i), "ctx", {}, {}});
  }
  const auto a = SampleExemplars(pool, 8, 5);
  const auto b = SampleExemplars(pool, 8, 5);
  REQUIRE(a.size() == 8);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].context == b[i].context);
  CHECK_THROWS_AS(SampleExemplars(std::span(pool).first(5), 8, 5), ConfigError);
}

TEST_CASE("parse completion example") {
  const auto p = ParseCompletion(
      " She fired her old lawyer. She needs counsel.\nAfter: He gets a good pay. END", 5);
  CHECK(p.before == std::vector<std::string>{"She fired her old lawyer.", "She needs counsel."});
  CHECK(p.after == std::vector<std::string>{"He gets a good pay."});
  CHECK_FALSE(p.missing_after);
}

TEST_CASE("parse completion truncates to k") {
  std::string text;
  for (const auto &s : Sentences("before", 7)) text += " " + s;
  text += "\nAfter:";
  const auto p = ParseCompletion(text, 5);
  CHECK(p.before.size() == 5);
  CHECK(p.before.front() == "before number 0.");
  CHECK(p.after.empty());
}

TEST_CASE("empty completion parses to empty lists with a warning flag") {
  const auto p = ParseCompletion("", 5);
  CHECK(p.before.empty());
  CHECK(p.after.empty());
  CHECK(p.missing_after);
}

TEST_CASE("text after the stop word is dropped") {
  const auto p = ParseCompletion(" A thing happened.\nAfter: Another thing. END Junk here.", 5);
  CHECK(p.after == std::vector<std::string>{"Another thing."});
}

TEST_CASE("parse completion round trips every list size") {
  const int k = kDefaultInferenceCount;
  for (int nb = 0; nb <= k; ++nb) {
    for (int na = 0; na <= k; ++na) {
      const auto before = Sentences("She did thing", nb);
      const auto after = Sentences("He saw event", na);
      std::string text;
      for (const auto &s : before) text += " " + s;
      text += "\nAfter:";
      for (const auto &s : after) text += " " + s;
      text += " END";
      const auto p = ParseCompletion(text, k);
      CHECK(p.before == before);
      CHECK(p.after == after);
    }
  }
}

TEST_CASE("inference tokenization splits trailing punctuation") {
  CHECK(TokenizeInference("He gets a good pay.") ==
        std::vector<std::string>{"He", "gets", "a", "good", "pay", "."});
  CHECK(TokenizeInference("  ").empty());
}

TEST_CASE("engine normalizes and caches provider output") {
  const auto dir = FreshDir("evcoref_cs_cache");
  CountingProvider provider;
  {
    InferenceCache cache(dir / "cache.ndjson");
    InferenceEngine engine(provider, &cache, 5);
    const auto first = engine.Get(MakeMention("m1"), kLohanContext);
    CHECK(first.before == std::vector<std::string>{"b1.", "b2."});
    CHECK(first.after.size() == 5);
    CHECK(first.doc_id == "d1");
    const auto second = engine.Get(MakeMention("m1"), kLohanContext);
    CHECK(second == first);
    CHECK(provider.calls == 1);
    CHECK(engine.provider_calls() == 1);
  }
  InferenceCache reopened(dir / "cache.ndjson");
  CHECK(reopened.size() == 1);
  InferenceEngine engine(provider, &reopened, 5);
  engine.Get(MakeMention("m1"), kLohanContext);
  CHECK(provider.calls == 1);
  engine.Get(MakeMention("m2"), kLohanContext);
  CHECK(provider.calls == 2);
  fs::remove_all(dir);
}

TEST_CASE("fixture provider strict and lenient") {
  InferenceSet s{"d1", "m1", {"b1."}, {"a1."}, "fixture"};
  FixtureProvider strict({s}, true);
  CHECK(strict.Generate(MakeMention("m1"), "") == s);
  CHECK_THROWS_AS(strict.Generate(MakeMention("m9"), ""), ValidationError);
  FixtureProvider lenient({s}, false);
  const auto empty = lenient.Generate(MakeMention("m9"), "");
  CHECK(empty.before.empty());
  CHECK(empty.provenance.find("warning=") != std::string::npos);
  CHECK_THROWS_AS(FixtureProvider({s, s}, true), ValidationError);
}

TEST_CASE("inference files round trip") {
  SyntheticSpec spec;
  const auto syn = GenerateSynthetic(spec);
  std::ostringstream out;
  WriteInferences(syn.fixtures, out);
  std::istringstream in(out.str());
  CHECK(ReadInferences(in) == syn.fixtures);
  std::istringstream bad(R"({"doc_id":"d","mention_id":"m","before":[],"after":[]})");
  CHECK_THROWS_AS(ReadInferences(bad), FormatError);
}

TEST_CASE("synthetic provider gives hard mentions shared pool inferences") {
  SyntheticSpec spec;
  spec.hard_fraction = 1.0;
  const auto syn = GenerateSynthetic(spec);
  SyntheticProvider provider(spec);
  InferenceEngine engine(provider, nullptr, 5);
  const auto &m = syn.corpus.mentions().front();
  const auto set = engine.Get(syn.corpus, m);
  const auto &family_sets = syn.fixtures;
  size_t shared = 0;
  for (const auto &f : family_sets) {
    if (f.mention_id == m.mention_id) continue;
    if (syn.corpus.mention(f.mention_id).gold_cluster_id != m.gold_cluster_id) continue;
    for (const auto &b : set.before) {
      shared += std::count(f.before.begin(), f.before.end(), b);
    }
    break;
  }
  CHECK(shared >= 2);
}

TEST_CASE("generation client retries then succeeds") {
  MockGenerationService service(2, " A happened.\nAfter: B happened. END");
  GenerationClient client(service.endpoint(), FastRetry(3), 5.0);
  GenerationConfig cfg;
  const auto completion = client.Complete("Context: x\nEvent: x\nBefore:", cfg);
  CHECK(completion == " A happened.\nAfter: B happened. END");
  CHECK(service.requests == 3);
  const auto body = nlohmann::json::parse(service.last_body);
  CHECK(body.at("top_p").get<double>() == 0.9);
  CHECK(body.at("max_tokens").get<int>() == 150);
  CHECK(body.at("stop").get<std::string>() == "END");
}

TEST_CASE("generation client gives up after the retry budget") {
  MockGenerationService service(5, "unused");
  GenerationClient client(service.endpoint(), FastRetry(2), 5.0);
  CHECK_THROWS_AS(client.Complete("p", GenerationConfig{}), ServiceError);
  CHECK(service.requests == 2);
}

TEST_CASE("credential travels in the header and never reaches the cache") {
  const std::string secret = "sk-test-credential-0123456789";
  ::setenv(kCredentialEnvVar, secret.c_str(), 1);
  MockGenerationService service(0, " Lohan relapsed.\nAfter: Holley filed papers. END");
  const auto dir = FreshDir("evcoref_cs_secret");
  {
    ServiceProvider provider(GenerationClient(service.endpoint(), FastRetry(1), 5.0),
                             GenerationConfig{});
    InferenceCache cache(dir / "cache.ndjson");
    InferenceEngine engine(provider, &cache, 5);
    const auto set = engine.Get(MakeMention("m1"), kLohanContext);
    CHECK(set.before == std::vector<std::string>{"Lohan relapsed."});
    CHECK(set.after == std::vector<std::string>{"Holley filed papers."});
    CHECK(set.provenance == "service:default");
  }
  ::unsetenv(kCredentialEnvVar);
  CHECK(service.last_authorization == "Bearer " + secret);
  CHECK(service.last_body.find(secret) == std::string::npos);
  const std::string cached = ReadAll(dir / "cache.ndjson");
  CHECK_FALSE(cached.empty());
  CHECK(cached.find(secret) == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("completion without an After section is flagged in provenance") {
  MockGenerationService service(0, " Only before text.");
  ServiceProvider provider(GenerationClient(service.endpoint(), FastRetry(1), 5.0),
                           GenerationConfig{});
  const auto set = provider.Generate(MakeMention("m1"), kLohanContext);
  CHECK(set.provenance == "service:default;warning=missing-after");
  CHECK(set.after.empty());
}

TEST_CASE("generation config validation") {
  GenerationConfig cfg;
  CHECK_NOTHROW(cfg.Validate());
  cfg.top_p = 0.0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = {};
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  CHECK_THROWS_AS(ParsePromptMode("zero"), ConfigError);
  CHECK_THROWS_AS(GenerationClient("no-scheme"), ConfigError);
}
