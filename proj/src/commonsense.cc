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

#include "evcoref/commonsense.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "evcoref/errors.h"
#include "evcoref/random.h"
#include "file_util.h"
#include "http_util.h"
#include "httplib.h"
#include "json.hpp"

namespace evcoref {
namespace {

using json = nlohmann::json;

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::string Join(const std::vector<std::string> &items, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

bool IsTerminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Cuts `text` at the first whole-word occurrence of `stop`.
std::string_view CutAtStop(std::string_view text, std::string_view stop) {
  if (stop.empty()) return text;
  size_t pos = 0;
  while ((pos = text.find(stop, pos)) != std::string_view::npos) {
    const bool left_ok =
        pos == 0 || std::isspace(static_cast<unsigned char>(text[pos - 1]));
    const size_t end = pos + stop.size();
    const bool right_ok =
        end == text.size() ||
        !std::isalnum(static_cast<unsigned char>(text[end]));
    if (left_ok && right_ok) return text.substr(0, pos);
    pos = end;
  }
  return text;
}

std::string Timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string Hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json ToJson(const InferenceSet &set) {
  return {{"doc_id", set.doc_id},
          {"mention_id", set.mention_id},
          {"before", set.before},
          {"after", set.after},
          {"provenance", set.provenance}};
}

InferenceSet FromJson(const json &obj, size_t line) {
  static const std::vector<std::string> kRequired = {
      "doc_id", "mention_id", "before", "after", "provenance"};
  auto fail = [line](const std::string &what) {
    return FormatError("inference line " + std::to_string(line) + ": " + what);
  };
  if (!obj.is_object()) throw fail("expected object");
  for (const auto &key : kRequired) {
    if (!obj.contains(key)) throw fail("missing field '" + key + "'");
  }
  for (const auto &[key, value] : obj.items()) {
    if (std::find(kRequired.begin(), kRequired.end(), key) == kRequired.end() &&
        key != "fingerprint" && key != "created_at") {
      throw fail("unknown field '" + key + "'");
    }
  }
  InferenceSet set;
  try {
    set.doc_id = obj.at("doc_id").get<std::string>();
    set.mention_id = obj.at("mention_id").get<std::string>();
    set.before = obj.at("before").get<std::vector<std::string>>();
    set.after = obj.at("after").get<std::vector<std::string>>();
    set.provenance = obj.at("provenance").get<std::string>();
  } catch (const json::exception &e) {
    throw fail(e.what());
  }
  if (set.provenance.empty()) throw fail("empty provenance");
  return set;
}

}  // namespace

void NormalizeInferenceSet(InferenceSet &set, int k) {
  auto clean = [k](std::vector<std::string> &items) {
    std::vector<std::string> out;
    for (const auto &s : items) {
      auto t = Trim(s);
      if (!t.empty()) out.emplace_back(t);
    }
    if (out.size() > static_cast<size_t>(k)) out.resize(k);
    items = std::move(out);
  };
  clean(set.before);
  clean(set.after);
}

PromptMode ParsePromptMode(std::string_view name) {
  if (name == "finetuned") return PromptMode::kFinetuned;
  if (name == "fewshot") return PromptMode::kFewshot;
  throw ConfigError("unknown prompt mode: " + std::string(name));
}

void GenerationConfig::Validate() const {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (k < 1) throw ConfigError("k must be >= 1");
}

std::string FormatPrompt(std::string_view context, std::string_view event,
                         PromptMode mode,
                         std::span<const PromptExemplar> exemplars) {
  if (event.empty() || context.find(event) == std::string_view::npos) {
    throw ValidationError("event '" + std::string(event) +
                          "' does not occur in context");
  }
  std::string prompt;
  if (mode == PromptMode::kFewshot) {
    if (exemplars.size() != kFewshotExemplarCount) {
      throw ValidationError("few-shot prompts need exactly " +
                            std::to_string(kFewshotExemplarCount) +
                            " exemplars, got " +
                            std::to_string(exemplars.size()));
    }
    prompt +=
        "Describe what happens immediately before and after the target event "
        "in its context.\n";
    for (const auto &ex : exemplars) {
      prompt += "Context: " + ex.context + "\n";
      prompt += "Event: " + ex.event + "\n";
      prompt += "Before: " + Join(ex.before, " ") + "\n";
      prompt += "After: " + Join(ex.after, " ") + " END\n";
    }
  }
  prompt += "Context: ";
  prompt += context;
  prompt += "\nEvent: ";
  prompt += event;
  prompt += "\nBefore:";
  return prompt;
}

std::vector<PromptExemplar> SampleExemplars(
    std::span<const PromptExemplar> pool, size_t count, uint64_t seed) {
  if (pool.size() < count) {
    throw ConfigError("exemplar pool has " + std::to_string(pool.size()) +
                      " entries, need " + std::to_string(count));
  }
  Rng rng(SplitMix64(seed));
  std::vector<PromptExemplar> out;
  for (size_t i : SampleIndices(pool.size(), count, rng)) out.push_back(pool[i]);
  return out;
}

std::vector<PromptExemplar> ReadExemplarFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open exemplar file " + path.string());
  std::vector<PromptExemplar> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      json obj = json::parse(line);
      PromptExemplar ex;
      ex.context = obj.at("context").get<std::string>();
      ex.event = obj.at("event").get<std::string>();
      ex.before = obj.at("before").get<std::vector<std::string>>();
      ex.after = obj.at("after").get<std::vector<std::string>>();
      out.push_back(std::move(ex));
    } catch (const json::exception &e) {
      throw FormatError("exemplar line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return out;
}

std::vector<std::string> SplitSentences(std::string_view text) {
  std::vector<std::string> out;
  auto emit = [&out](std::string_view piece) {
    piece = Trim(piece);
    if (piece.size() >= 3) out.emplace_back(piece);
  };
  size_t begin = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    if (!IsTerminal(text[i])) continue;
    const bool boundary =
        i + 1 == text.size() ||
        std::isspace(static_cast<unsigned char>(text[i + 1]));
    if (boundary) {
      emit(text.substr(begin, i + 1 - begin));
      begin = i + 1;
    }
  }
  if (begin < text.size()) emit(text.substr(begin));
  return out;
}

ParsedCompletion ParseCompletion(std::string_view completion, int k,
                                 std::string_view stop) {
  ParsedCompletion parsed;
  std::string before_text;
  std::string after_text;
  bool in_after = false;
  size_t pos = 0;
  while (pos <= completion.size()) {
    size_t nl = completion.find('\n', pos);
    if (nl == std::string_view::npos) nl = completion.size();
    std::string_view line = completion.substr(pos, nl - pos);
    if (!in_after) {
      std::string_view lead = Trim(line);
      if (lead.starts_with("After:")) {
        in_after = true;
        lead.remove_prefix(6);
        after_text.append(lead);
      } else {
        before_text.append(line);
        before_text += ' ';
      }
    } else {
      after_text += ' ';
      after_text.append(line);
    }
    pos = nl + 1;
  }
  parsed.missing_after = !in_after;

  auto take = [k, stop](std::string_view section) {
    auto sentences = SplitSentences(CutAtStop(section, stop));
    if (sentences.size() > static_cast<size_t>(k)) sentences.resize(k);
    return sentences;
  };
  parsed.before = take(before_text);
  parsed.after = take(after_text);
  return parsed;
}

std::vector<std::string> TokenizeInference(std::string_view sentence) {
  static constexpr std::string_view kPunct = ".,!?;:";
  std::vector<std::string> tokens;
  std::istringstream in{std::string(sentence)};
  std::string word;
  while (in >> word) {
    size_t end = word.size();
    while (end > 0 && kPunct.find(word[end - 1]) != std::string_view::npos) {
      --end;
    }
    if (end > 0) tokens.push_back(word.substr(0, end));
    for (size_t i = end; i < word.size(); ++i) tokens.emplace_back(1, word[i]);
  }
  return tokens;
}

FixtureProvider::FixtureProvider(std::vector<InferenceSet> sets, bool strict)
    : strict_(strict) {
  std::ostringstream bytes;
  WriteInferences(sets, bytes);
  fingerprint_ = "fixture:" + Hex(Fnv1a64(bytes.str()));
  for (auto &set : sets) {
    std::string id = set.mention_id;
    if (!by_mention_.emplace(id, std::move(set)).second) {
      throw ValidationError("duplicate fixture for mention " + id);
    }
  }
}

std::unique_ptr<FixtureProvider> FixtureProvider::FromFile(
    const std::filesystem::path &path, bool strict) {
  return std::make_unique<FixtureProvider>(LoadInferenceFile(path), strict);
}

InferenceSet FixtureProvider::Generate(const Mention &mention,
                                       const std::string &) {
  auto it = by_mention_.find(mention.mention_id);
  if (it != by_mention_.end()) return it->second;
  if (strict_) {
    throw ValidationError("no inference fixture for mention " +
                          mention.mention_id);
  }
  spdlog::warn("no inference fixture for mention {}; using an empty set",
               mention.mention_id);
  InferenceSet empty;
  empty.doc_id = mention.doc_id;
  empty.mention_id = mention.mention_id;
  empty.provenance = "fixture;warning=missing-fixture";
  return empty;
}

GenerationClient::GenerationClient(std::string endpoint, RetryPolicy retry,
                                   double timeout_seconds)
    : retry_(retry), timeout_seconds_(timeout_seconds) {
  std::tie(base_, path_) = internal::SplitEndpoint(endpoint);
  if (retry_.attempts < 1) throw ConfigError("retry attempts must be >= 1");
}

std::string GenerationClient::Complete(const std::string &prompt,
                                       const GenerationConfig &config) const {
  json body = {{"prompt", prompt},
               {"top_p", config.top_p},
               {"max_tokens", config.max_tokens},
               {"stop", config.stop}};
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (const char *key = std::getenv(kCredentialEnvVar); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  auto backoff = retry_.initial_backoff;
  for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
    httplib::Client client(base_);
    const auto timeout = std::chrono::duration<double>(timeout_seconds_);
    client.set_connection_timeout(
        std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(
        std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
    } else if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
    } else {
      try {
        json reply = json::parse(res->body);
        return reply.at("completion").get<std::string>();
      } catch (const json::exception &) {
        last_error = "response does not match {completion: string}";
      }
    }
    spdlog::warn("generation attempt {}/{} failed: {}", attempt,
                 retry_.attempts, last_error);
    if (attempt < retry_.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw ServiceError("generation service failed after " +
                     std::to_string(retry_.attempts) +
                     " attempts: " + last_error);
}

ServiceProvider::ServiceProvider(GenerationClient client,
                                 GenerationConfig config,
                                 std::vector<PromptExemplar> exemplar_pool,
                                 uint64_t seed)
    : client_(std::move(client)), config_(std::move(config)) {
  config_.Validate();
  if (config_.mode == PromptMode::kFewshot) {
    exemplars_ = SampleExemplars(exemplar_pool, kFewshotExemplarCount, seed);
  }
}

InferenceSet ServiceProvider::Generate(const Mention &mention,
                                       const std::string &context) {
  const std::string prompt =
      FormatPrompt(context, mention.text, config_.mode, exemplars_);
  const std::string completion = client_.Complete(prompt, config_);
  ParsedCompletion parsed = ParseCompletion(completion, config_.k, config_.stop);
  InferenceSet set;
  set.doc_id = mention.doc_id;
  set.mention_id = mention.mention_id;
  set.before = std::move(parsed.before);
  set.after = std::move(parsed.after);
  set.provenance = (config_.mode == PromptMode::kFewshot ? "fewshot:" : "service:") +
                   config_.model_id;
  if (parsed.missing_after) {
    spdlog::warn("completion for {} has no After: section", mention.mention_id);
    set.provenance += ";warning=missing-after";
  }
  return set;
}

std::string ServiceProvider::Fingerprint() const {
  std::ostringstream fp;
  fp << (config_.mode == PromptMode::kFewshot ? "fewshot:" : "service:")
     << config_.model_id << ":p=" << config_.top_p
     << ":max=" << config_.max_tokens << ":k=" << config_.k;
  if (!exemplars_.empty()) {
    std::string joined;
    for (const auto &ex : exemplars_) joined += ex.context + '\x1f' + ex.event;
    fp << ":ex=" << Hex(Fnv1a64(joined));
  }
  return fp.str();
}

InferenceCache::InferenceCache(std::filesystem::path path)
    : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error &e) {
      throw FormatError("cache line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    if (!obj.contains("fingerprint")) {
      throw FormatError("cache line " + std::to_string(line_no) +
                        ": missing fingerprint");
    }
    Entry entry{FromJson(obj, line_no), obj.value("created_at", "")};
    Key key{entry.set.doc_id, entry.set.mention_id,
            obj["fingerprint"].get<std::string>()};
    entries_.emplace(std::move(key), std::move(entry));
  }
}

std::optional<InferenceSet> InferenceCache::Find(
    const std::string &doc_id, const std::string &mention_id,
    const std::string &fingerprint) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(Key{doc_id, mention_id, fingerprint});
  if (it == entries_.end()) return std::nullopt;
  return it->second.set;
}

void InferenceCache::Insert(const std::string &fingerprint,
                            const InferenceSet &set) {
  std::lock_guard<std::mutex> lock(mu_);
  Key key{set.doc_id, set.mention_id, fingerprint};
  if (entries_.count(key)) return;
  entries_.emplace(std::move(key), Entry{set, Timestamp()});
  Flush();
}

size_t InferenceCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

void InferenceCache::Flush() const {
  std::string bytes;
  for (const auto &[key, entry] : entries_) {
    json obj = ToJson(entry.set);
    obj["fingerprint"] = std::get<2>(key);
    obj["created_at"] = entry.created_at;
    bytes += obj.dump();
    bytes += '\n';
  }
  internal::AtomicWrite(path_, bytes);
}

InferenceEngine::InferenceEngine(InferenceProvider &provider,
                                 InferenceCache *cache, int k)
    : provider_(provider), cache_(cache), k_(k) {
  if (k < 1) throw ConfigError("k must be >= 1");
}

InferenceSet InferenceEngine::Get(const Mention &mention,
                                  const std::string &context) {
  const std::string fingerprint = provider_.Fingerprint();
  if (cache_) {
    if (auto hit = cache_->Find(mention.doc_id, mention.mention_id, fingerprint)) {
      return *hit;
    }
  }
  ++provider_calls_;
  InferenceSet set = provider_.Generate(mention, context);
  set.doc_id = mention.doc_id;
  set.mention_id = mention.mention_id;
  NormalizeInferenceSet(set, k_);
  if (set.provenance.empty()) {
    throw ValidationError("provider returned a set without provenance");
  }
  if (cache_) cache_->Insert(fingerprint, set);
  return set;
}

std::vector<InferenceSet> ReadInferences(std::istream &in) {
  std::vector<InferenceSet> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error &e) {
      throw FormatError("inference line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    out.push_back(FromJson(obj, line_no));
  }
  return out;
}

std::vector<InferenceSet> LoadInferenceFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open inference file " + path.string());
  return ReadInferences(in);
}

void WriteInferences(std::span<const InferenceSet> sets, std::ostream &out) {
  for (const auto &set : sets) out << ToJson(set).dump() << '\n';
}

void SaveInferenceFile(std::span<const InferenceSet> sets,
                       const std::filesystem::path &path) {
  std::ostringstream bytes;
  WriteInferences(sets, bytes);
  internal::AtomicWrite(path, bytes.str());
}

}  // namespace evcoref
