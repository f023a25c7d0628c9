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

#include "evcoref/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "evcoref/errors.h"
#include "evcoref/random.h"
#include "file_util.h"
#include "json.hpp"

namespace evcoref {
namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'E', 'V', 'C', 'K', 'P', 'T', '\0', '\x01'};
constexpr int kFormatVersion = 1;

void PutU32(std::ostream &out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void PutF64(std::ostream &out, double v) {
  const auto bits = std::bit_cast<uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void ReadExact(std::istream &in, char *data, size_t n) {
  in.read(data, static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw FormatError("truncated checkpoint");
  }
}

uint32_t GetU32(std::istream &in) {
  unsigned char b[4];
  ReadExact(in, reinterpret_cast<char *>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

double GetF64(std::istream &in) {
  unsigned char b[8];
  ReadExact(in, reinterpret_cast<char *>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

std::string GetString(std::istream &in, uint32_t max_len) {
  const uint32_t len = GetU32(in);
  if (len > max_len) throw FormatError("checkpoint string too long");
  std::string s(len, '\0');
  ReadExact(in, s.data(), len);
  return s;
}

json HeaderJson(const ModelParameters &p) {
  return {{"version", p.version},
          {"d", p.dims.dim},
          {"d_len", p.dims.width_dim},
          {"d_a", p.dims.attention_dim},
          {"h", p.dims.hidden},
          {"max_width_bucket", p.dims.max_width_bucket},
          {"mode", ScorerModeName(p.dims.mode)},
          {"format", kFormatVersion}};
}

void CheckAgainst(const ModelDims &got, const ModelDims &expected) {
  std::string diff;
  auto cmp = [&diff](const char *name, auto a, auto b) {
    if (a != b) {
      std::ostringstream s;
      s << " " << name << "=" << a << " (config " << b << ")";
      diff += s.str();
    }
  };
  cmp("d", got.dim, expected.dim);
  cmp("d_len", got.width_dim, expected.width_dim);
  cmp("d_a", got.attention_dim, expected.attention_dim);
  cmp("h", got.hidden, expected.hidden);
  cmp("max_width_bucket", got.max_width_bucket, expected.max_width_bucket);
  cmp("mode", ScorerModeName(got.mode), ScorerModeName(expected.mode));
  if (!diff.empty()) {
    throw ConfigError("checkpoint header does not match config:" + diff);
  }
}

}  // namespace

void WriteCheckpoint(const ModelParameters &params, std::ostream &out) {
  params.CheckFinite();
  out.write(kMagic, sizeof kMagic);
  const std::string header = HeaderJson(params).dump();
  PutU32(out, static_cast<uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  uint32_t blocks = 0;
  params.ForEachBlock([&](std::string_view, const double *, Eigen::Index,
                          Eigen::Index) { ++blocks; });
  PutU32(out, blocks);
  params.ForEachBlock([&](std::string_view name, const double *data,
                          Eigen::Index rows, Eigen::Index cols) {
    PutU32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    PutU32(out, static_cast<uint32_t>(rows));
    PutU32(out, static_cast<uint32_t>(cols));
    for (Eigen::Index i = 0; i < rows * cols; ++i) PutF64(out, data[i]);
  });
  if (!out) throw FormatError("checkpoint write failed");
}

void SaveCheckpoint(const ModelParameters &params,
                    const std::filesystem::path &path) {
  std::ostringstream out;
  WriteCheckpoint(params, out);
  internal::AtomicWrite(path, out.str());
}

ModelParameters ReadCheckpoint(std::istream &in, const ModelDims *expected) {
  char magic[8];
  ReadExact(in, magic, 8);
  if (!std::equal(magic, magic + 8, kMagic)) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  ModelDims dims;
  int version = 1;
  try {
    const json h = json::parse(GetString(in, 1 << 16));
    if (h.at("format").get<int>() != kFormatVersion) {
      throw FormatError("unsupported checkpoint format");
    }
    version = h.at("version").get<int>();
    dims.dim = h.at("d").get<int>();
    dims.width_dim = h.at("d_len").get<int>();
    dims.attention_dim = h.at("d_a").get<int>();
    dims.hidden = h.at("h").get<int>();
    dims.max_width_bucket = h.at("max_width_bucket").get<int>();
    dims.mode = ParseScorerMode(h.at("mode").get<std::string>());
  } catch (const json::exception &e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  }
  dims.Validate();
  if (expected) CheckAgainst(dims, *expected);

  ModelParameters params = ModelParameters::Zeros(dims);
  params.version = version;
  uint32_t blocks = 0;
  params.ForEachBlock([&](std::string_view, double *, Eigen::Index,
                          Eigen::Index) { ++blocks; });
  if (GetU32(in) != blocks) throw FormatError("checkpoint block count mismatch");
  params.ForEachBlock([&](std::string_view name, double *data,
                          Eigen::Index rows, Eigen::Index cols) {
    const std::string got = GetString(in, 256);
    if (got != name) {
      throw FormatError("checkpoint block " + got + " where " +
                        std::string(name) + " was expected");
    }
    const uint32_t r = GetU32(in);
    const uint32_t c = GetU32(in);
    if (r != rows || c != cols) {
      throw FormatError("checkpoint block " + got + " has shape " +
                        std::to_string(r) + "x" + std::to_string(c));
    }
    for (Eigen::Index i = 0; i < rows * cols; ++i) data[i] = GetF64(in);
  });
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after checkpoint");
  }
  params.CheckFinite();
  return params;
}

ModelParameters LoadCheckpoint(const std::filesystem::path &path,
                               const ModelDims *expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return ReadCheckpoint(in, expected);
}

std::string CheckpointFingerprint(const std::filesystem::path &path) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(
                    Fnv1a64(internal::ReadFileBytes(path))));
  return hex;
}

}  // namespace evcoref
