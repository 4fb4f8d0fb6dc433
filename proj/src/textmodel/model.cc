// Copyright 2026 The fdkd Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "textmodel/model.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/error.h"
#include "common/rng.h"

namespace fdkd {
namespace {

inline double Dot(const double* a, const double* b, size_t n) {
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (size_t j = 0; j < n; ++j) acc += a[j] * b[j];
  return acc;
}

inline void Axpy(double alpha, const double* x, double* y, size_t n) {
#pragma omp simd
  for (size_t j = 0; j < n; ++j) y[j] += alpha * x[j];
}

void RecurrentForward(const ModelParams& p, TokenId token, const double* h_prev,
                      double* h_out) {
  const size_t E = p.dims().embed;
  const size_t H = p.dims().hidden;
  const double* emb = p.data(p.embedding()) + static_cast<size_t>(token) * E;
  const double* w = p.data(p.recurrent());
  const double* b = p.data(p.recurrent_bias());
  for (size_t i = 0; i < H; ++i) {
    const double* row = w + i * (E + H);
    h_out[i] = std::tanh(b[i] + Dot(row, emb, E) + Dot(row + E, h_prev, H));
  }
}

void OutputLogits(const ModelParams& p, const double* h, double* logits) {
  const size_t V = p.dims().vocab;
  const size_t H = p.dims().hidden;
  const double* w = p.data(p.output());
  const double* b = p.data(p.output_bias());
  for (size_t v = 0; v < V; ++v) logits[v] = b[v] + Dot(w + v * H, h, H);
}

void CheckIds(const ModelParams& p, const std::vector<TokenId>& ids) {
  for (TokenId id : ids) {
    if (id >= p.dims().vocab) {
      Fail(ErrorCode::kShapeMismatch, "token id " + std::to_string(id) +
                                          " outside model vocabulary of " +
                                          std::to_string(p.dims().vocab));
    }
  }
}

std::vector<TokenId> Conditioned(const TokenSequence& input, const TokenSequence& output) {
  std::vector<TokenId> full;
  full.reserve(input.size() + output.size() + 3);
  full.push_back(Vocabulary::kBos);
  full.insert(full.end(), input.ids.begin(), input.ids.end());
  full.push_back(Vocabulary::kSep);
  full.insert(full.end(), output.ids.begin(), output.ids.end());
  full.push_back(Vocabulary::kEos);
  return full;
}

struct Workspace {
  std::vector<double> hidden;     // (steps + 1) x H; slot 0 is the zero state
  std::vector<double> log_probs;  // counted steps x V
  std::vector<double> dh, dh_prev, da;
};

Workspace& ThreadWorkspace() {
  thread_local Workspace ws;
  return ws;
}

// Runs the forward pass over the conditioned sequence and returns the summed
// log probability of positions >= first_counted. Leaves hidden states and the
// counted log distributions in ws.
double ForwardConditioned(const ModelParams& p, const std::vector<TokenId>& full,
                          size_t first_counted, Workspace& ws) {
  const size_t H = p.dims().hidden;
  const size_t V = p.dims().vocab;
  const size_t steps = full.size() - 1;
  ws.hidden.assign((steps + 1) * H, 0.0);
  ws.log_probs.resize((steps - first_counted) * V);
  double total = 0.0;
  for (size_t s = 0; s < steps; ++s) {
    RecurrentForward(p, full[s], ws.hidden.data() + s * H, ws.hidden.data() + (s + 1) * H);
    if (s < first_counted) continue;
    double* lp = ws.log_probs.data() + (s - first_counted) * V;
    OutputLogits(p, ws.hidden.data() + (s + 1) * H, lp);
    LogSoftmaxInPlace({lp, V});
    total += lp[full[s + 1]];
  }
  return total;
}

}  // namespace

ModelParams::ModelParams(ModelDims dims) : dims_(dims) {
  const size_t total = dims.vocab * dims.embed + dims.hidden * (dims.embed + dims.hidden) +
                       dims.hidden + dims.vocab * dims.hidden + dims.vocab;
  data_.assign(total, 0.0);
}

ModelParams ModelParams::RandomInit(ModelDims dims, uint64_t seed, double scale) {
  ModelParams p(dims);
  Rng rng(seed);
  for (double& v : p.data_) v = static_cast<double>(static_cast<float>(rng.Uniform(-scale, scale)));
  return p;
}

void ModelParams::SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }

void ModelParams::RoundToFloat() {
  for (double& v : data_) v = static_cast<double>(static_cast<float>(v));
}

bool ModelParams::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void ModelParams::AddScaled(const ModelParams& other, double scale) {
  if (!(dims_ == other.dims_)) Fail(ErrorCode::kShapeMismatch, "parameter shapes differ");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

void LogSoftmaxInPlace(std::span<double> v) {
  double mx = -INFINITY;
  for (double x : v) mx = std::max(mx, x);
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - mx);
  const double lse = mx + std::log(sum);
  for (double& x : v) x -= lse;
}

void CheckCompatible(const Vocabulary& vocab, const ModelParams& params) {
  if (params.dims().vocab != vocab.size()) {
    Fail(ErrorCode::kShapeMismatch, "model vocabulary " + std::to_string(params.dims().vocab) +
                                        " != " + std::to_string(vocab.size()));
  }
}

LogProbMatrix ForwardLogprobs(const ModelParams& params, const TokenSequence& prefix) {
  if (prefix.empty() || prefix.ids.front() != Vocabulary::kBos) {
    Fail(ErrorCode::kInvalidArgument, "prefix must start with <bos>");
  }
  CheckIds(params, prefix.ids);
  const size_t V = params.dims().vocab;
  LogProbMatrix out;
  out.rows = prefix.size();
  out.cols = V;
  out.values.resize(out.rows * V);
  RecurrentState state(params);
  std::vector<double> lp;
  for (size_t s = 0; s < prefix.size(); ++s) {
    state.Step(prefix.ids[s], &lp);
    std::copy(lp.begin(), lp.end(), out.values.begin() + s * V);
  }
  return out;
}

double SequenceLogprob(const ModelParams& params, const TokenSequence& input,
                       const TokenSequence& output, bool normalized) {
  if (output.empty()) Fail(ErrorCode::kEmptyOutput);
  CheckIds(params, input.ids);
  CheckIds(params, output.ids);
  const std::vector<TokenId> full = Conditioned(input, output);
  const double total = ForwardConditioned(params, full, input.size() + 1, ThreadWorkspace());
  return normalized ? total / static_cast<double>(output.size() + 1) : total;
}

double AccumulateSequenceLogprobGrad(const ModelParams& p, const TokenSequence& input,
                                     const TokenSequence& output, double scale,
                                     Gradients* grad) {
  if (output.empty()) Fail(ErrorCode::kEmptyOutput);
  if (!(grad->dims() == p.dims())) Fail(ErrorCode::kShapeMismatch, "gradient shape");
  CheckIds(p, input.ids);
  CheckIds(p, output.ids);
  const std::vector<TokenId> full = Conditioned(input, output);
  const size_t first_counted = input.size() + 1;
  Workspace& ws = ThreadWorkspace();
  const double total = ForwardConditioned(p, full, first_counted, ws);

  const size_t E = p.dims().embed;
  const size_t H = p.dims().hidden;
  const size_t V = p.dims().vocab;
  const size_t Z = E + H;
  const double* w_rec = p.data(p.recurrent());
  const double* w_out = p.data(p.output());
  double* g_emb = grad->data(grad->embedding());
  double* g_rec = grad->data(grad->recurrent());
  double* g_rec_b = grad->data(grad->recurrent_bias());
  double* g_out = grad->data(grad->output());
  double* g_out_b = grad->data(grad->output_bias());

  ws.dh.assign(H, 0.0);
  ws.dh_prev.assign(H, 0.0);
  ws.da.assign(H, 0.0);
  const size_t steps = full.size() - 1;
  for (size_t s = steps; s-- > 0;) {
    const double* h = ws.hidden.data() + (s + 1) * H;
    const double* h_prev = ws.hidden.data() + s * H;
    if (s >= first_counted) {
      const double* lp = ws.log_probs.data() + (s - first_counted) * V;
      const TokenId target = full[s + 1];
      for (size_t v = 0; v < V; ++v) {
        const double dl = scale * ((v == target ? 1.0 : 0.0) - std::exp(lp[v]));
        g_out_b[v] += dl;
        Axpy(dl, h, g_out + v * H, H);
        Axpy(dl, w_out + v * H, ws.dh.data(), H);
      }
    }
    for (size_t i = 0; i < H; ++i) ws.da[i] = ws.dh[i] * (1.0 - h[i] * h[i]);
    const double* emb = p.data(p.embedding()) + static_cast<size_t>(full[s]) * E;
    double* g_e = g_emb + static_cast<size_t>(full[s]) * E;
    std::fill(ws.dh_prev.begin(), ws.dh_prev.end(), 0.0);
    for (size_t i = 0; i < H; ++i) {
      const double da = ws.da[i];
      if (da == 0.0) continue;
      g_rec_b[i] += da;
      double* gr = g_rec + i * Z;
      const double* wr = w_rec + i * Z;
      Axpy(da, emb, gr, E);
      Axpy(da, wr, g_e, E);
      Axpy(da, h_prev, gr + E, H);
      Axpy(da, wr + E, ws.dh_prev.data(), H);
    }
    std::swap(ws.dh, ws.dh_prev);
  }
  return total;
}

Gradients GradSequenceLogprob(const ModelParams& params, const TokenSequence& input,
                              const TokenSequence& output) {
  Gradients g(params.dims());
  AccumulateSequenceLogprobGrad(params, input, output, 1.0, &g);
  return g;
}

RecurrentState::RecurrentState(const ModelParams& params)
    : params_(&params), hidden_(params.dims().hidden, 0.0), scratch_(params.dims().hidden) {}

void RecurrentState::Step(TokenId token, std::vector<double>* log_probs) {
  if (token >= params_->dims().vocab) {
    Fail(ErrorCode::kShapeMismatch, "token id " + std::to_string(token) + " outside vocabulary");
  }
  RecurrentForward(*params_, token, hidden_.data(), scratch_.data());
  std::swap(hidden_, scratch_);
  if (log_probs) {
    log_probs->resize(params_->dims().vocab);
    OutputLogits(*params_, hidden_.data(), log_probs->data());
    LogSoftmaxInPlace(*log_probs);
  }
}

}  // namespace fdkd
