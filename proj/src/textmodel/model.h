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

#ifndef FDKD_TEXTMODEL_MODEL_H_
#define FDKD_TEXTMODEL_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "textmodel/vocabulary.h"

namespace fdkd {

struct ModelDims {
  size_t vocab = 0;
  size_t embed = 32;
  size_t hidden = 64;

  bool operator==(const ModelDims&) const = default;
};

// Row-major view of one tensor inside a ModelParams buffer.
struct TensorView {
  size_t offset;
  size_t rows;
  size_t cols;
  size_t size() const { return rows * cols; }
};

// All trainable tensors of the student, stored in one contiguous buffer so
// that optimizers, finite-difference probes and checksums can treat the model
// as a flat vector. The same type is used for gradients.
//
//   h_t    = tanh(W_rec [E[x_t]; h_{t-1}] + b_rec)
//   logits = W_out h_t + b_out
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(ModelDims dims);  // all zeros

  // Uniform(-scale, scale); every value is representable as float32 so a
  // freshly initialized model round-trips through a checkpoint exactly.
  static ModelParams RandomInit(ModelDims dims, uint64_t seed, double scale = 0.08);

  const ModelDims& dims() const { return dims_; }
  size_t size() const { return data_.size(); }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  TensorView embedding() const { return {0, dims_.vocab, dims_.embed}; }
  TensorView recurrent() const {
    return {embedding().size(), dims_.hidden, dims_.embed + dims_.hidden};
  }
  TensorView recurrent_bias() const {
    return {recurrent().offset + recurrent().size(), 1, dims_.hidden};
  }
  TensorView output() const {
    return {recurrent_bias().offset + recurrent_bias().size(), dims_.vocab, dims_.hidden};
  }
  TensorView output_bias() const {
    return {output().offset + output().size(), 1, dims_.vocab};
  }
  std::vector<TensorView> tensors() const {
    return {embedding(), recurrent(), recurrent_bias(), output(), output_bias()};
  }

  double* data(const TensorView& t) { return data_.data() + t.offset; }
  const double* data(const TensorView& t) const { return data_.data() + t.offset; }

  void SetZero();
  // Rounds every entry to the nearest float32; checkpoints store float32.
  void RoundToFloat();
  bool AllFinite() const;
  // this += scale * other. Throws kShapeMismatch.
  void AddScaled(const ModelParams& other, double scale);

  bool operator==(const ModelParams& other) const {
    return dims_ == other.dims_ && data_ == other.data_;
  }

 private:
  ModelDims dims_;
  std::vector<double> data_;
};

using Gradients = ModelParams;

// Row s holds log p(next token | prefix[0..s]) over the vocabulary.
struct LogProbMatrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(size_t r) const { return {values.data() + r * cols, cols}; }
};

// prefix must be non-empty and start with <bos>.
LogProbMatrix ForwardLogprobs(const ModelParams& params, const TokenSequence& prefix);

// The model is conditioned on [<bos>] input [<sep>]; the returned logprob sums
// over the output tokens followed by <eos>. Normalized divides by |output|+1.
double SequenceLogprob(const ModelParams& params, const TokenSequence& input,
                       const TokenSequence& output, bool normalized = false);

// Adds scale * d(log p(output | input))/d(params) into *grad and returns the
// unnormalized log probability.
double AccumulateSequenceLogprobGrad(const ModelParams& params, const TokenSequence& input,
                                     const TokenSequence& output, double scale,
                                     Gradients* grad);

Gradients GradSequenceLogprob(const ModelParams& params, const TokenSequence& input,
                              const TokenSequence& output);

// Throws kShapeMismatch when params were built for another vocabulary size.
void CheckCompatible(const Vocabulary& vocab, const ModelParams& params);

// Incremental decoding state: the hidden vector after consuming a prefix.
class RecurrentState {
 public:
  explicit RecurrentState(const ModelParams& params);

  // Consumes one token. When log_probs is non-null it receives the log
  // distribution of the next token.
  void Step(TokenId token, std::vector<double>* log_probs);

  const std::vector<double>& hidden() const { return hidden_; }

 private:
  const ModelParams* params_;
  std::vector<double> hidden_;
  std::vector<double> scratch_;
};

// Numerically stable in-place log-softmax.
void LogSoftmaxInPlace(std::span<double> v);

}  // namespace fdkd

#endif  // FDKD_TEXTMODEL_MODEL_H_
