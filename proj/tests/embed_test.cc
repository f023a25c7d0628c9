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

#include <cmath>
#include <random>
#include <string>
#include <thread>

#include "doctest.h"
#include "evcoref/embed.h"
#include "evcoref/errors.h"
#include "httplib.h"
#include "json.hpp"

using namespace evcoref;

namespace {

// Max |cosine| over tokens "tok0".."tok999" at d = 16, seed = 1.
constexpr double kFrozenMaxCosine = 0.93504541415233078;

Matrix RandomMatrix(int rows, int cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = n(rng);
  }
  return m;
}

// Local embedding service answering with vectors of `dim` components.
class MockEmbedService {
 public:
  explicit MockEmbedService(int dim) {
    server_.Post("/embed", [dim](const httplib::Request &req, httplib::Response &res) {
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json vectors = nlohmann::json::array();
      for (const auto &sentence : body.at("sentences")) {
        nlohmann::json rows = nlohmann::json::array();
        for (size_t t = 0; t < sentence.size(); ++t) {
          rows.push_back(std::vector<double>(dim, static_cast<double>(t)));
        }
        vectors.push_back(rows);
      }
      res.set_content(nlohmann::json{{"d", dim}, {"vectors", vectors}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockEmbedService() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/embed";
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("hash embedding is deterministic and unit norm") {
  for (int i = 0; i < 200; ++i) {
    const std::string tok = "w" + std::to_string(i);
    const Vector a = HashEmbed(tok, 16, 3);
    CHECK(a == HashEmbed(tok, 16, 3));
    CHECK(std::abs(a.norm() - 1.0) <= 1e-9);
  }
  CHECK(HashEmbed("x", 16, 1) != HashEmbed("x", 16, 2));
  CHECK_THROWS_AS(HashEmbed("x", 0, 1), DimensionError);
}

TEST_CASE("hash embeddings of distinct tokens stay apart") {
  std::vector<Vector> v;
  for (int i = 0; i < 1000; ++i) v.push_back(HashEmbed("tok" + std::to_string(i), 16, 1));
  double max_cos = 0.0;
  for (size_t a = 0; a < v.size(); ++a) {
    for (size_t b = a + 1; b < v.size(); ++b) {
      max_cos = std::max(max_cos, std::abs(v[a].dot(v[b])));
    }
  }
  CHECK(max_cos < 0.95);
  CHECK(max_cos == doctest::Approx(kFrozenMaxCosine).epsilon(1e-12));
}

TEST_CASE("hash embedder shapes and context-free rows") {
  HashEmbedder e(8, 1);
  const auto m = e.EmbedSentences("k", {{"the", "cat", "the"}});
  REQUIRE(m.sentences.size() == 1);
  CHECK(m.sentences[0].rows() == 8);
  CHECK(m.sentences[0].cols() == 3);
  CHECK(m.sentences[0].col(0) == m.sentences[0].col(2));
  Document doc{"d", "t", "s", {{"a"}, {"b", "c"}}};
  EmbedderConfig cfg;
  cfg.dim = 8;
  const auto dm = EmbedDocument(cfg, doc);
  CHECK(dm.sentences.size() == 2);
  CHECK(dm.sentences[1].cols() == 2);
}

TEST_CASE("embedder config validation") {
  EmbedderConfig cfg;
  CHECK_NOTHROW(cfg.Validate());
  cfg.provider = EmbedProvider::kService;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = {};
  cfg.dim = 0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  CHECK_THROWS_AS(ParseEmbedProvider("bert"), ConfigError);
}

TEST_CASE("width buckets clip at the maximum") {
  CHECK(WidthBucket(1, 8) == 0);
  CHECK(WidthBucket(8, 8) == 7);
  CHECK(WidthBucket(30, 8) == 7);
  CHECK_THROWS_AS(WidthBucket(0, 8), ValidationError);
}

TEST_CASE("single-token span pools to that token") {
  std::mt19937_64 rng(1);
  const Matrix x = RandomMatrix(4, 1, rng);
  const Matrix table = RandomMatrix(8, 20, rng);
  const auto rep = ComputeSpanRepresentation(x, Vector::Random(4), table);
  CHECK(rep.start == x.col(0));
  CHECK(rep.last == x.col(0));
  CHECK((rep.pooled - x.col(0)).norm() <= 1e-12);
  CHECK(rep.full.size() == 3 * 4 + 20);
  CHECK(rep.width_feature == table.row(0).transpose());
}

TEST_CASE("equal attention scores pool to the mean") {
  Matrix x(2, 2);
  x << 1, 3, 2, 0;
  const Vector w = Vector::Zero(2);
  const auto rep = ComputeSpanRepresentation(x, w, Matrix::Zero(8, 20));
  CHECK(rep.pooled[0] == doctest::Approx(2.0));
  CHECK(rep.pooled[1] == doctest::Approx(1.0));
}

TEST_CASE("hand softmax over two tokens") {
  Matrix x(2, 2);
  x << 1, 0, 0, 1;
  Vector w(2);
  w << std::log(3.0), 0.0;
  const auto rep = ComputeSpanRepresentation(x, w, Matrix::Zero(8, 20));
  // Independent scalar softmax: e^{ln 3} / (e^{ln 3} + e^0).
  const double a0 = std::exp(std::log(3.0)) / (std::exp(std::log(3.0)) + 1.0);
  CHECK(std::abs(rep.attention[0] - 0.75) <= 1e-12);
  CHECK(std::abs(rep.attention[0] - a0) <= 1e-12);
  CHECK(std::abs(rep.pooled[0] - 0.75) <= 1e-12);
  CHECK(std::abs(rep.pooled[1] - 0.25) <= 1e-12);
  CHECK(rep.width_row == 1);
}

TEST_CASE("pooled vector lies in the convex hull") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    const Matrix x = RandomMatrix(5, n, rng);
    const Vector w = RandomMatrix(5, 1, rng).col(0) * 3.0;
    const auto rep = ComputeSpanRepresentation(x, w, Matrix::Zero(8, 20));
    CHECK(std::abs(rep.attention.sum() - 1.0) <= 1e-9);
    CHECK(rep.attention.minCoeff() >= 0.0);
    for (int r = 0; r < 5; ++r) {
      CHECK(rep.pooled[r] <= x.row(r).maxCoeff() + 1e-12);
      CHECK(rep.pooled[r] >= x.row(r).minCoeff() - 1e-12);
    }
    CHECK(rep.width_row == std::min(n, 8) - 1);
  }
}

TEST_CASE("span gradient matches finite differences") {
  std::mt19937_64 rng(3);
  const int d = 4;
  const int d_len = 3;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 10);
    const Matrix x = RandomMatrix(d, n, rng);
    Vector w = RandomMatrix(d, 1, rng).col(0);
    Matrix table = RandomMatrix(8, d_len, rng);
    const Vector c = RandomMatrix(3 * d + d_len, 1, rng).col(0);
    auto loss = [&](const Vector &wa, const Matrix &t) {
      return c.dot(ComputeSpanRepresentation(x, wa, t).full);
    };
    const auto rep = ComputeSpanRepresentation(x, w, table);
    Vector gw = Vector::Zero(d);
    Matrix gt = Matrix::Zero(8, d_len);
    AccumulateSpanGradient(x, rep, c, gw, gt);
    const double h = 1e-6;
    for (int i = 0; i < d; ++i) {
      Vector up = w, down = w;
      up[i] += h;
      down[i] -= h;
      const double fd = (loss(up, table) - loss(down, table)) / (2 * h);
      CHECK(gw[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
    const int row = std::min(n, 8) - 1;
    for (int j = 0; j < d_len; ++j) CHECK(gt(row, j) == c[3 * d + j]);
    CHECK(gt.sum() == doctest::Approx(c.tail(d_len).sum()));
  }
}

TEST_CASE("span lookup rejects out-of-bounds spans") {
  HashEmbedder e(4, 1);
  const auto m = e.EmbedSentences("k", {{"a", "b"}});
  const Matrix table = Matrix::Zero(8, 20);
  CHECK_NOTHROW(SpanRepresentationAt(m, 0, 0, 1, Vector::Zero(4), table));
  CHECK_THROWS_AS(SpanRepresentationAt(m, 0, 1, 2, Vector::Zero(4), table),
                  ValidationError);
  CHECK_THROWS_AS(SpanRepresentationAt(m, 1, 0, 0, Vector::Zero(4), table),
                  ValidationError);
  CHECK_THROWS_AS(SpanRepresentationAt(m, 0, 0, 0, Vector::Zero(3), table),
                  DimensionError);
}

TEST_CASE("service embedder caches per key") {
  MockEmbedService service(16);
  EmbedderConfig cfg;
  cfg.provider = EmbedProvider::kService;
  cfg.endpoint = service.endpoint();
  ServiceEmbedder e(cfg);
  const auto m = e.EmbedSentences("doc", {{"a", "b", "c"}});
  REQUIRE(m.sentences.size() == 1);
  CHECK(m.sentences[0].cols() == 3);
  CHECK(m.sentences[0](0, 2) == 2.0);
  e.EmbedSentences("doc", {{"a", "b", "c"}});
  CHECK(e.requests() == 1);
}

TEST_CASE("service dimension mismatch is an error") {
  MockEmbedService service(1024);
  EmbedderConfig cfg;
  cfg.provider = EmbedProvider::kService;
  cfg.endpoint = service.endpoint();
  cfg.dim = 16;
  ServiceEmbedder e(cfg);
  CHECK_THROWS_AS(e.EmbedSentences("doc", {{"a"}}), DimensionError);
}

TEST_CASE("unreachable service is a service error") {
  EmbedderConfig cfg;
  cfg.provider = EmbedProvider::kService;
  cfg.endpoint = "http://127.0.0.1:1/embed";
  cfg.timeout_seconds = 1.0;
  ServiceEmbedder e(cfg);
  CHECK_THROWS_AS(e.EmbedSentences("doc", {{"a"}}), ServiceError);
}
