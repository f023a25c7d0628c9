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

#include "evcoref/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "evcoref/errors.h"
#include "evcoref/random.h"

namespace evcoref {
namespace {

Matrix GaussianMatrix(Eigen::Index rows, Eigen::Index cols, Rng &rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Gaussian(rng);
  return m;
}

std::vector<MentionInput> RandomMentions(const ModelDims &dims, int count,
                                         Rng &rng) {
  std::vector<MentionInput> out(count);
  for (int i = 0; i < count; ++i) {
    MentionInput &m = out[i];
    m.mention_id = "m" + std::to_string(i);
    const auto width = 1 + UniformIndex(rng, dims.max_width_bucket + 2);
    m.span_tokens = GaussianMatrix(dims.dim, static_cast<Eigen::Index>(width), rng);
    for (auto *list : {&m.before, &m.after}) {
      const auto n = UniformIndex(rng, 6);
      for (size_t j = 0; j < n; ++j) {
        const auto len = 1 + UniformIndex(rng, 12);
        list->push_back(GaussianMatrix(dims.dim, static_cast<Eigen::Index>(len), rng));
      }
    }
  }
  return out;
}

struct NamedBlock {
  std::string name;
  double *data;
  Eigen::Index size;
};

std::vector<NamedBlock> NamedBlocks(ModelParameters &p) {
  std::vector<NamedBlock> out;
  p.ForEachBlock([&](std::string_view name, double *data, Eigen::Index rows,
                     Eigen::Index cols) {
    out.push_back({std::string(name), data, rows * cols});
  });
  return out;
}

}  // namespace

GradCheckReport CheckGradients(const ModelDims &dims, uint64_t seed,
                               const GradCheckConfig &config) {
  dims.Validate();
  if (config.mentions < 2 || config.pairs < 1 || config.max_coordinates < 1 ||
      !(config.step > 0.0)) {
    throw ConfigError("invalid gradient-check configuration");
  }
  Rng rng(SplitMix64(seed));
  ModelParameters params = ModelParameters::Initialize(dims, seed);
  const std::vector<MentionInput> mentions =
      RandomMentions(dims, config.mentions, rng);
  std::vector<PairExample> batch;
  for (int p = 0; p < config.pairs; ++p) {
    const auto i = UniformIndex(rng, mentions.size());
    auto j = UniformIndex(rng, mentions.size() - 1);
    if (j >= i) ++j;
    batch.push_back({&mentions[i], &mentions[j],
                     static_cast<int>(UniformIndex(rng, 2))});
  }
  const Matrix mask =
      DrawDropoutMask(dims.hidden, config.pairs, config.dropout, rng);

  ModelParameters grad;
  PairLossAndGradient(params, batch, &mask, grad);
  if (config.corrupt_gradient) {
    grad.ForEachBlock([](std::string_view, double *data, Eigen::Index rows,
                         Eigen::Index cols) {
      for (Eigen::Index i = 0; i < rows * cols; ++i) data[i] += 1e-2;
    });
  }
  std::vector<uint8_t> base_pattern;
  PairLoss(params, batch, &mask, &base_pattern);

  GradCheckReport report;
  report.seed = seed;
  report.mode = dims.mode;
  const auto param_blocks = NamedBlocks(params);
  const auto grad_blocks = NamedBlocks(grad);
  std::vector<uint8_t> pattern;
  for (size_t b = 0; b < param_blocks.size(); ++b) {
    const NamedBlock &pb = param_blocks[b];
    const auto n = static_cast<size_t>(pb.size);
    std::vector<size_t> coords;
    if (n <= static_cast<size_t>(config.max_coordinates)) {
      for (size_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      coords = SampleIndices(n, config.max_coordinates, rng);
      std::sort(coords.begin(), coords.end());
    }
    BlockCheck check;
    check.block = pb.name;
    double diff2 = 0.0, analytic2 = 0.0, numeric2 = 0.0;
    for (size_t i : coords) {
      const double original = pb.data[i];
      pb.data[i] = original + config.step;
      const double plus = PairLoss(params, batch, &mask, &pattern);
      bool kink = pattern != base_pattern;
      pb.data[i] = original - config.step;
      const double minus = PairLoss(params, batch, &mask, &pattern);
      kink = kink || pattern != base_pattern;
      pb.data[i] = original;
      if (kink) {
        ++check.skipped;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * config.step);
      const double analytic = grad_blocks[b].data[i];
      diff2 += (analytic - numeric) * (analytic - numeric);
      analytic2 += analytic * analytic;
      numeric2 += numeric * numeric;
      ++check.checked;
    }
    const double denom = std::sqrt(analytic2) + std::sqrt(numeric2);
    check.relative_error = denom > 0.0 ? std::sqrt(diff2) / denom : 0.0;
    check.pass = check.relative_error <= config.tolerance;
    report.max_relative_error =
        std::max(report.max_relative_error, check.relative_error);
    report.pass = report.pass && check.pass;
    report.blocks.push_back(std::move(check));
  }
  return report;
}

}  // namespace evcoref
