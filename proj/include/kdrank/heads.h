// Copyright 2026 The kdrank Authors
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

// Matching heads g(c, r): dot-product bi-encoder, plain cross-encoder over a
// joint sequence, and the enhanced cross-encoder that compares separately
// encoded token matrices through one layer of cross-attention.

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kdrank/encoders.h"
#include "kdrank/params.h"
#include "kdrank/tensor.h"

namespace kdrank {

enum class HeadKind { kBi, kPlainCross, kEnhancedCross };
enum class Aggregation { kCls, kClsMaxMean };

std::string to_string(HeadKind kind);
HeadKind head_kind_from_string(const std::string& name);
std::string to_string(Aggregation agg);
Aggregation aggregation_from_string(const std::string& name);

struct HeadConfig {
  HeadKind kind = HeadKind::kBi;
  // How the bi head reduces token encodings to one vector.
  Aggregation bi_aggregation = Aggregation::kCls;
  // Enhanced head only. Without submult the final comparison is c ⊕ r and
  // the hidden projection shrinks from 12d to 6d inputs.
  bool use_submult = true;
  // Enhanced head only. Without it the token encodings bypass cross
  // attention unchanged and w1 is not allocated.
  bool use_cross_attention = true;
  // Biases on the two final projections.
  bool use_bias = true;

  friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

struct HeadParams {
  HeadConfig config;
  ParamSet weights;
};

void validate(const HeadConfig& config);
HeadParams init_head(const HeadConfig& config, std::size_t d, Rng& rng);

// a ⊕ b ⊕ (a − b) ⊕ (a ⊙ b). For matrices the comparison is row-wise and
// the output is m x 4d.
Tensor submult(const Tensor& a, const Tensor& b);

// softmax(q kᵀ / sqrt(d)) over the first k_valid keys (later keys weigh 0).
Tensor attention_weights(const Tensor& q, const Tensor& k, std::size_t k_valid);
// attention_weights(q, k, k_valid) · k.
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k,
                            std::size_t k_valid);

struct CrossAttended {
  TokenEncodings context;
  TokenEncodings response;
};

// ĉ = SubMult(c', Att(c', r')) · W1 and symmetrically for r̂, or the identity
// when cross attention is disabled.
CrossAttended cross_attend(const TokenEncodings& context,
                           const TokenEncodings& response,
                           const HeadParams& head);

// Scalar logit for the enhanced head.
Tensor score_enhanced(const TokenEncodings& context,
                      const TokenEncodings& response, const HeadParams& head);
Tensor score_bi(const Tensor& context_vec, const Tensor& response_vec);
// Two-layer MLP over row 0 of the joint [CLS] c [SEP] r encoding.
Tensor score_plain_cross(const TokenEncodings& joint, const HeadParams& head);

// Vector the bi head compares, per head.config.bi_aggregation.
Tensor bi_vector(const TokenEncodings& enc, const HeadParams& head);

// Entry (i, j) scores context i against response j. Bi and enhanced heads
// only.
Tensor batch_score_matrix(std::span<const TokenEncodings> contexts,
                          std::span<const TokenEncodings> responses,
                          const HeadParams& head);

// --- full models -----------------------------------------------------------

struct ModelConfig {
  EncoderConfig encoder;
  HeadConfig head;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Model {
  ModelConfig config;
  EncoderParams encoder;
  HeadParams head;

  // Every trainable tensor, aliased, as "encoder.*" then "head.*".
  ParamSet parameters() const;
};

Model init_model(const ModelConfig& config, std::uint64_t seed);
Model clone_model(const Model& model);

// A ranking sample already mapped to token ids.
struct RankingSample {
  std::string id;
  TokenSequence context;
  std::vector<TokenSequence> candidates;
  std::size_t gold = 0;
};

// [CLS] context-tokens [SEP] response-tokens, padding stripped.
TokenSequence joint_sequence(const TokenSequence& context,
                             const TokenSequence& response);

// Scores of one context against each candidate, as a 1-D tensor. Shared
// encodings are computed once where the head allows it.
Tensor score_candidates(const Model& model, const TokenSequence& context,
                        std::span<const TokenSequence> candidates);

// Same as score_candidates but reuses an existing context encoding (bi and
// enhanced heads only).
Tensor score_candidates(const Model& model, const TokenEncodings& context,
                        std::span<const TokenEncodings> candidates);

}  // namespace kdrank
