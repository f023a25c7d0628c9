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

#include "evcoref/scorer.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "evcoref/errors.h"

namespace evcoref {
namespace {

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double ClampProbability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

bool IsClamped(double p) {
  return p < kProbabilityClamp || p > 1.0 - kProbabilityClamp;
}

double CrossEntropy(double p, int label) {
  const double pc = ClampProbability(p);
  return label ? -std::log(pc) : -std::log(1.0 - pc);
}

// Attention forward state. `reps` holds the value/key inputs column-wise.
struct AttentionCache {
  Matrix reps;  // span_dim x n
  Vector query_proj;
  Matrix keys;  // attention_dim x n
  Vector weights;
  Vector out;
};

AttentionCache AttendForward(const Vector &query, Matrix reps, const Matrix &wq,
                             const Matrix &wk) {
  AttentionCache c;
  c.reps = std::move(reps);
  const Eigen::Index n = c.reps.cols();
  if (n == 0) {
    c.out = Vector::Zero(query.size());
    return c;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  c.query_proj = wq.transpose() * query;
  c.keys = wk.transpose() * c.reps;
  Vector scores = (c.keys.transpose() * c.query_proj) * scale;
  const double shift = scores.maxCoeff();
  Vector e = (scores.array() - shift).exp().matrix();
  c.weights = e / e.sum();
  c.out = c.reps * c.weights;
  return c;
}

// Accumulates gradients of the attention output into the query, the value
// representations and the projections.
void AttendBackward(const AttentionCache &c, const Vector &query,
                    const Eigen::Ref<const Vector> &grad_out, const Matrix &wq,
                    const Matrix &wk, Eigen::Ref<Vector> grad_query,
                    Matrix &grad_reps, Matrix &grad_wq, Matrix &grad_wk) {
  if (c.reps.cols() == 0) return;
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  Vector grad_w = c.reps.transpose() * grad_out;
  const double mean = c.weights.dot(grad_w);
  Vector grad_s = (c.weights.array() * (grad_w.array() - mean)).matrix();

  grad_reps.noalias() += grad_out * c.weights.transpose();
  Vector grad_q = (c.keys * grad_s) * scale;
  Matrix grad_keys = (c.query_proj * grad_s.transpose()) * scale;

  grad_wq.noalias() += query * grad_q.transpose();
  grad_query.noalias() += wq * grad_q;
  grad_wk.noalias() += c.reps * grad_keys.transpose();
  grad_reps.noalias() += wk * grad_keys;
}

Matrix StackReps(const std::vector<SpanRepresentation> &reps, Eigen::Index dim) {
  Matrix out(dim, static_cast<Eigen::Index>(reps.size()));
  for (size_t j = 0; j < reps.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = reps[j].full;
  }
  return out;
}

struct MentionState {
  const MentionInput *input = nullptr;
  SpanRepresentation ctx;
  std::vector<SpanRepresentation> before;
  std::vector<SpanRepresentation> after;
  Vector grad_ctx;
  Matrix grad_before;  // span_dim x n_before
  Matrix grad_after;
};

struct PairState {
  int first = 0;
  int second = 0;
  // Mention whose inferences feed cs_first / cs_second.
  int source_first = 0;
  int source_second = 0;
  AttentionCache before_first, after_first, before_second, after_second;
};

// Forward/backward over one batch of pair examples.
class BatchGraph {
 public:
  BatchGraph(const ModelParameters &params, std::span<const PairExample> batch)
      : p_(params), batch_(batch) {}

  double Forward(const Matrix *mask, std::vector<uint8_t> *pattern = nullptr);
  void Backward(const Matrix *mask, ModelParameters &grad);
  const std::vector<double> &probabilities() const { return probs_; }

 private:
  int AddMention(const MentionInput *input);

  const ModelParameters &p_;
  std::span<const PairExample> batch_;
  std::vector<MentionState> mentions_;
  std::unordered_map<const MentionInput *, int> index_;
  std::vector<PairState> pairs_;
  Matrix g_, z_, h_;
  Vector o_;
  std::vector<double> probs_;
};

int BatchGraph::AddMention(const MentionInput *input) {
  if (input == nullptr) throw ValidationError("pair example without mention");
  auto [it, inserted] = index_.emplace(input, static_cast<int>(mentions_.size()));
  if (!inserted) return it->second;
  const ModelDims &dims = p_.dims;
  if (input->span_tokens.rows() != dims.dim) {
    throw DimensionError("mention " + input->mention_id + " has token dim " +
                         std::to_string(input->span_tokens.rows()) +
                         ", model expects " + std::to_string(dims.dim));
  }
  MentionState m;
  m.input = input;
  m.ctx = ComputeSpanRepresentation(input->span_tokens, p_.w_alpha, p_.width_table);
  if (dims.mode != ScorerMode::kBaseline) {
    for (const Matrix &tokens : input->before) {
      m.before.push_back(ComputeSpanRepresentation(tokens, p_.w_alpha, p_.width_table));
    }
    for (const Matrix &tokens : input->after) {
      m.after.push_back(ComputeSpanRepresentation(tokens, p_.w_alpha, p_.width_table));
    }
  }
  mentions_.push_back(std::move(m));
  return it->second;
}

double BatchGraph::Forward(const Matrix *mask, std::vector<uint8_t> *pattern) {
  const ModelDims &dims = p_.dims;
  const Eigen::Index span_dim = dims.span_dim();
  const auto n = static_cast<Eigen::Index>(batch_.size());
  if (n == 0) throw ValidationError("empty batch");
  const bool with_cs = dims.mode != ScorerMode::kBaseline;

  pairs_.clear();
  g_.resize(dims.pair_dim(), n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const PairExample &ex = batch_[b];
    PairState ps;
    ps.first = AddMention(ex.first);
    ps.second = AddMention(ex.second);
    const MentionState &mi = mentions_[ps.first];
    const MentionState &mj = mentions_[ps.second];
    g_.col(b).segment(0, span_dim) = mi.ctx.full;
    g_.col(b).segment(span_dim, span_dim) = mj.ctx.full;
    if (with_cs) {
      const bool intra = dims.mode == ScorerMode::kIntra;
      ps.source_first = intra ? ps.first : ps.second;
      ps.source_second = intra ? ps.second : ps.first;
      const MentionState &si = mentions_[ps.source_first];
      const MentionState &sj = mentions_[ps.source_second];
      ps.before_first = AttendForward(mi.ctx.full, StackReps(si.before, span_dim),
                                      p_.wq_before, p_.wk_before);
      ps.after_first = AttendForward(mi.ctx.full, StackReps(si.after, span_dim),
                                     p_.wq_after, p_.wk_after);
      ps.before_second = AttendForward(mj.ctx.full, StackReps(sj.before, span_dim),
                                       p_.wq_before, p_.wk_before);
      ps.after_second = AttendForward(mj.ctx.full, StackReps(sj.after, span_dim),
                                      p_.wq_after, p_.wk_after);
      g_.col(b).segment(2 * span_dim, span_dim) = ps.before_first.out;
      g_.col(b).segment(3 * span_dim, span_dim) = ps.after_first.out;
      g_.col(b).segment(4 * span_dim, span_dim) = ps.before_second.out;
      g_.col(b).segment(5 * span_dim, span_dim) = ps.after_second.out;
    }
    pairs_.push_back(std::move(ps));
  }

  z_.noalias() = p_.w1.transpose() * g_;
  z_.colwise() += p_.b1;
  if (!z_.allFinite()) {
    throw NumericError("non-finite hidden pre-activation (w1/b1)");
  }
  h_ = z_.cwiseMax(0.0);
  if (mask) {
    if (mask->rows() != h_.rows() || mask->cols() != h_.cols()) {
      throw DimensionError("dropout mask shape does not match the batch");
    }
    h_.array() *= mask->array();
  }
  o_.noalias() = h_.transpose() * p_.w2;
  o_.array() += p_.b2;
  if (!o_.allFinite()) throw NumericError("non-finite output logit (w2/b2)");

  probs_.resize(n);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < n; ++b) {
    probs_[b] = Sigmoid(o_[b]);
    loss += CrossEntropy(probs_[b], batch_[b].label);
  }
  if (pattern) {
    pattern->clear();
    pattern->reserve(z_.size() + n);
    for (Eigen::Index i = 0; i < z_.size(); ++i) {
      pattern->push_back(z_.data()[i] > 0.0);
    }
    for (double p : probs_) pattern->push_back(IsClamped(p));
  }
  return loss / static_cast<double>(n);
}

void BatchGraph::Backward(const Matrix *mask, ModelParameters &grad) {
  const ModelDims &dims = p_.dims;
  const Eigen::Index span_dim = dims.span_dim();
  const auto n = static_cast<Eigen::Index>(batch_.size());
  grad = ModelParameters::Zeros(dims);
  grad.version = p_.version;

  Vector grad_o(n);
  for (Eigen::Index b = 0; b < n; ++b) {
    grad_o[b] = IsClamped(probs_[b])
                    ? 0.0
                    : (probs_[b] - batch_[b].label) / static_cast<double>(n);
  }
  grad.w2.noalias() = h_ * grad_o;
  grad.b2 = grad_o.sum();

  Matrix grad_z = p_.w2 * grad_o.transpose();
  if (mask) grad_z.array() *= mask->array();
  grad_z.array() *= (z_.array() > 0.0).cast<double>();
  grad.w1.noalias() = g_ * grad_z.transpose();
  grad.b1 = grad_z.rowwise().sum();
  Matrix grad_g = p_.w1 * grad_z;

  for (MentionState &m : mentions_) {
    m.grad_ctx = Vector::Zero(span_dim);
    m.grad_before = Matrix::Zero(span_dim, static_cast<Eigen::Index>(m.before.size()));
    m.grad_after = Matrix::Zero(span_dim, static_cast<Eigen::Index>(m.after.size()));
  }

  const bool with_cs = dims.mode != ScorerMode::kBaseline;
  for (Eigen::Index b = 0; b < n; ++b) {
    const PairState &ps = pairs_[b];
    MentionState &mi = mentions_[ps.first];
    MentionState &mj = mentions_[ps.second];
    mi.grad_ctx += grad_g.col(b).segment(0, span_dim);
    mj.grad_ctx += grad_g.col(b).segment(span_dim, span_dim);
    if (!with_cs) continue;
    MentionState &si = mentions_[ps.source_first];
    MentionState &sj = mentions_[ps.source_second];
    AttendBackward(ps.before_first, mi.ctx.full,
                   grad_g.col(b).segment(2 * span_dim, span_dim), p_.wq_before,
                   p_.wk_before, mi.grad_ctx, si.grad_before, grad.wq_before,
                   grad.wk_before);
    AttendBackward(ps.after_first, mi.ctx.full,
                   grad_g.col(b).segment(3 * span_dim, span_dim), p_.wq_after,
                   p_.wk_after, mi.grad_ctx, si.grad_after, grad.wq_after,
                   grad.wk_after);
    AttendBackward(ps.before_second, mj.ctx.full,
                   grad_g.col(b).segment(4 * span_dim, span_dim), p_.wq_before,
                   p_.wk_before, mj.grad_ctx, sj.grad_before, grad.wq_before,
                   grad.wk_before);
    AttendBackward(ps.after_second, mj.ctx.full,
                   grad_g.col(b).segment(5 * span_dim, span_dim), p_.wq_after,
                   p_.wk_after, mj.grad_ctx, sj.grad_after, grad.wq_after,
                   grad.wk_after);
  }

  for (MentionState &m : mentions_) {
    AccumulateSpanGradient(m.input->span_tokens, m.ctx, m.grad_ctx,
                           grad.w_alpha, grad.width_table);
    for (size_t j = 0; j < m.before.size(); ++j) {
      AccumulateSpanGradient(m.input->before[j], m.before[j],
                             m.grad_before.col(static_cast<Eigen::Index>(j)),
                             grad.w_alpha, grad.width_table);
    }
    for (size_t j = 0; j < m.after.size(); ++j) {
      AccumulateSpanGradient(m.input->after[j], m.after[j],
                             m.grad_after.col(static_cast<Eigen::Index>(j)),
                             grad.w_alpha, grad.width_table);
    }
  }
}

double Fanin(std::string_view block, const ModelDims &dims) {
  if (block == "w_alpha") return dims.dim;
  if (block == "width_table") return dims.width_dim;
  if (block == "w1" || block == "b1") return dims.pair_dim();
  if (block == "w2" || block == "b2") return dims.hidden;
  return dims.span_dim();
}

// Hidden activations for one feature vector, before dropout.
Vector Hidden(const ModelParameters &params, const Vector &g) {
  if (g.size() != params.w1.rows()) {
    throw DimensionError("feature has " + std::to_string(g.size()) +
                         " components, scorer expects " +
                         std::to_string(params.w1.rows()));
  }
  Vector z = params.w1.transpose() * g + params.b1;
  if (!z.allFinite()) throw NumericError("non-finite hidden pre-activation (w1/b1)");
  return z.cwiseMax(0.0);
}

void ApplyDropout(Vector &h, double rate, Rng &rng) {
  if (rate <= 0.0) return;
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    h[i] *= UniformReal(rng) < rate ? 0.0 : keep;
  }
}

double Output(const ModelParameters &params, const Vector &h) {
  const double o = params.w2.dot(h) + params.b2;
  if (!std::isfinite(o)) throw NumericError("non-finite output logit (w2/b2)");
  return Sigmoid(o);
}

}  // namespace

ScorerMode ParseScorerMode(std::string_view name) {
  if (name == "baseline") return ScorerMode::kBaseline;
  if (name == "intra") return ScorerMode::kIntra;
  if (name == "inter") return ScorerMode::kInter;
  throw ConfigError("unknown scorer mode: " + std::string(name));
}

std::string_view ScorerModeName(ScorerMode mode) {
  switch (mode) {
    case ScorerMode::kBaseline:
      return "baseline";
    case ScorerMode::kIntra:
      return "intra";
    case ScorerMode::kInter:
      return "inter";
  }
  return "intra";
}

void ModelDims::Validate() const {
  if (dim < 1 || width_dim < 1 || max_width_bucket < 1 || attention_dim < 1 ||
      hidden < 1) {
    throw ConfigError("model dimensions must be >= 1");
  }
}

ModelParameters ModelParameters::Zeros(const ModelDims &dims) {
  dims.Validate();
  ModelParameters p;
  p.dims = dims;
  p.w_alpha = Vector::Zero(dims.dim);
  p.width_table = Matrix::Zero(dims.max_width_bucket, dims.width_dim);
  p.wq_before = Matrix::Zero(dims.span_dim(), dims.attention_dim);
  p.wk_before = Matrix::Zero(dims.span_dim(), dims.attention_dim);
  p.wq_after = Matrix::Zero(dims.span_dim(), dims.attention_dim);
  p.wk_after = Matrix::Zero(dims.span_dim(), dims.attention_dim);
  p.w1 = Matrix::Zero(dims.pair_dim(), dims.hidden);
  p.b1 = Vector::Zero(dims.hidden);
  p.w2 = Vector::Zero(dims.hidden);
  p.b2 = 0.0;
  return p;
}

ModelParameters ModelParameters::Initialize(const ModelDims &dims,
                                            uint64_t seed) {
  ModelParameters p = Zeros(dims);
  Rng rng(SplitMix64(seed));
  p.ForEachBlock([&](std::string_view name, double *data, Eigen::Index rows,
                     Eigen::Index cols) {
    const double bound = 1.0 / std::sqrt(Fanin(name, dims));
    for (Eigen::Index i = 0; i < rows * cols; ++i) {
      data[i] = UniformReal(rng, -bound, bound);
    }
  });
  return p;
}

size_t ModelParameters::NumParameters() const {
  size_t total = 0;
  ForEachBlock([&](std::string_view, const double *, Eigen::Index rows,
                   Eigen::Index cols) { total += rows * cols; });
  return total;
}

void ModelParameters::CheckFinite() const {
  ForEachBlock([](std::string_view name, const double *data, Eigen::Index rows,
                  Eigen::Index cols) {
    for (Eigen::Index i = 0; i < rows * cols; ++i) {
      if (!std::isfinite(data[i])) {
        throw NumericError("non-finite value in parameter block " +
                           std::string(name));
      }
    }
  });
}

bool ModelParameters::operator==(const ModelParameters &other) const {
  return dims == other.dims && version == other.version &&
         w_alpha == other.w_alpha && width_table == other.width_table &&
         wq_before == other.wq_before && wk_before == other.wk_before &&
         wq_after == other.wq_after && wk_after == other.wk_after &&
         w1 == other.w1 && b1 == other.b1 && w2 == other.w2 && b2 == other.b2;
}

AttentionOutput Attend(const Vector &query, std::span<const Vector> reps,
                       const Matrix &wq, const Matrix &wk) {
  if (wq.rows() != query.size() || wk.rows() != query.size() ||
      wq.cols() != wk.cols()) {
    throw DimensionError("attention projections do not match the query");
  }
  Matrix stacked(query.size(), static_cast<Eigen::Index>(reps.size()));
  for (size_t j = 0; j < reps.size(); ++j) {
    if (reps[j].size() != query.size()) {
      throw DimensionError("inference representation " + std::to_string(j) +
                           " has the wrong dimension");
    }
    stacked.col(static_cast<Eigen::Index>(j)) = reps[j];
  }
  AttentionCache c = AttendForward(query, std::move(stacked), wq, wk);
  AttentionOutput out;
  out.vector = std::move(c.out);
  out.weights.assign(c.weights.data(), c.weights.data() + c.weights.size());
  return out;
}

CommonsenseVector ComputeCommonsenseVector(ScorerMode mode,
                                           const Vector &ctx_self,
                                           std::span<const Vector> before_reps,
                                           std::span<const Vector> after_reps,
                                           const ModelParameters &params) {
  if (mode == ScorerMode::kBaseline) {
    throw ConfigError("baseline mode has no commonsense vector");
  }
  CommonsenseVector cs;
  cs.before = Attend(ctx_self, before_reps, params.wq_before, params.wk_before);
  cs.after = Attend(ctx_self, after_reps, params.wq_after, params.wk_after);
  cs.vector.resize(cs.before.vector.size() + cs.after.vector.size());
  cs.vector << cs.before.vector, cs.after.vector;
  return cs;
}

PairFeature BuildPairFeature(const Vector &ctx_i, const Vector &ctx_j,
                             const Vector &cs_i, const Vector &cs_j,
                             ScorerMode mode, std::string first,
                             std::string second) {
  if (ctx_i.size() != ctx_j.size()) {
    throw DimensionError("span representations differ in size");
  }
  PairFeature f;
  f.first = std::move(first);
  f.second = std::move(second);
  f.mode = mode;
  if (mode == ScorerMode::kBaseline) {
    f.g.resize(2 * ctx_i.size());
    f.g << ctx_i, ctx_j;
    return f;
  }
  if (cs_i.size() != 2 * ctx_i.size() || cs_j.size() != 2 * ctx_i.size()) {
    throw DimensionError("commonsense vectors must be twice the span size");
  }
  f.g.resize(6 * ctx_i.size());
  f.g << ctx_i, ctx_j, cs_i, cs_j;
  return f;
}

double ScorePair(const ModelParameters &params, const Vector &g, bool training,
                 Rng &rng, double dropout) {
  Vector h = Hidden(params, g);
  if (training) ApplyDropout(h, dropout, rng);
  return Output(params, h);
}

double BatchLoss(const ModelParameters &params,
                 std::span<const LabeledFeature> batch, bool training, Rng &rng,
                 double dropout) {
  if (batch.empty()) throw ValidationError("empty batch");
  double total = 0.0;
  for (const auto &ex : batch) {
    total += CrossEntropy(ScorePair(params, ex.g, training, rng, dropout), ex.label);
  }
  return total / static_cast<double>(batch.size());
}

Matrix DrawDropoutMask(int hidden, int batch, double rate, Rng &rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  Matrix mask(hidden, batch);
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = (rate > 0.0 && UniformReal(rng) < rate) ? 0.0 : keep;
  }
  return mask;
}

double PairLoss(const ModelParameters &params,
                std::span<const PairExample> batch, const Matrix *mask,
                std::vector<uint8_t> *pattern) {
  BatchGraph graph(params, batch);
  return graph.Forward(mask, pattern);
}

double PairLossAndGradient(const ModelParameters &params,
                           std::span<const PairExample> batch,
                           const Matrix *mask, ModelParameters &grad) {
  BatchGraph graph(params, batch);
  const double loss = graph.Forward(mask);
  graph.Backward(mask, grad);
  return loss;
}

ModelParameters Gradients(const ModelParameters &params,
                          std::span<const PairExample> batch, Rng &rng,
                          double dropout) {
  if (batch.empty()) throw ValidationError("empty batch");
  Matrix mask = DrawDropoutMask(params.dims.hidden,
                                static_cast<int>(batch.size()), dropout, rng);
  ModelParameters grad;
  PairLossAndGradient(params, batch, &mask, grad);
  return grad;
}

std::vector<double> ScorePairs(const ModelParameters &params,
                               std::span<const PairExample> batch) {
  constexpr size_t kChunk = 512;
  std::vector<double> out;
  out.reserve(batch.size());
  for (size_t begin = 0; begin < batch.size(); begin += kChunk) {
    auto chunk = batch.subspan(begin, std::min(kChunk, batch.size() - begin));
    BatchGraph graph(params, chunk);
    graph.Forward(nullptr);
    const auto &probs = graph.probabilities();
    out.insert(out.end(), probs.begin(), probs.end());
  }
  return out;
}

PairTrace ExplainPair(const ModelParameters &params, const MentionInput &first,
                      const MentionInput &second) {
  PairTrace trace;
  PairExample ex{&first, &second, 0};
  trace.probability = ScorePairs(params, std::span<const PairExample>(&ex, 1))[0];
  if (params.dims.mode == ScorerMode::kBaseline) return trace;

  auto reps = [&params](const std::vector<Matrix> &sentences) {
    std::vector<Vector> out;
    for (const Matrix &tokens : sentences) {
      out.push_back(
          ComputeSpanRepresentation(tokens, params.w_alpha, params.width_table).full);
    }
    return out;
  };
  const Vector ctx_first =
      ComputeSpanRepresentation(first.span_tokens, params.w_alpha, params.width_table).full;
  const Vector ctx_second =
      ComputeSpanRepresentation(second.span_tokens, params.w_alpha, params.width_table).full;
  const bool intra = params.dims.mode == ScorerMode::kIntra;
  const MentionInput &src_first = intra ? first : second;
  const MentionInput &src_second = intra ? second : first;
  trace.cs_first = ComputeCommonsenseVector(params.dims.mode, ctx_first,
                                            reps(src_first.before),
                                            reps(src_first.after), params);
  trace.cs_second = ComputeCommonsenseVector(params.dims.mode, ctx_second,
                                             reps(src_second.before),
                                             reps(src_second.after), params);
  return trace;
}

}  // namespace evcoref
