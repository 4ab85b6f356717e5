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

// Token-sequence encoders: a small post-LN transformer and a BiLSTM.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kdrank/params.h"
#include "kdrank/tensor.h"

namespace kdrank {

// Reserved vocabulary ids. Real tokens start at kNumReservedTokens.
inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kClsId = 1;
inline constexpr std::int32_t kSepId = 2;
inline constexpr std::int32_t kTurnId = 3;
inline constexpr std::int32_t kUnkId = 4;
inline constexpr std::int32_t kNumReservedTokens = 5;

struct TokenSequence {
  // ids[0] is kClsId; entries past valid_len are kPadId.
  std::vector<std::int32_t> ids;
  std::size_t valid_len = 0;
};

// Pads (never truncates) seq with kPadId up to length.
TokenSequence pad_to(const TokenSequence& seq, std::size_t length);

enum class EncoderKind { kTransformer, kBiLstm };

std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& name);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::kTransformer;
  std::size_t vocab_size = 0;
  std::size_t d = 32;
  std::size_t n_layers = 2;
  std::size_t n_heads = 2;
  // Positional table size; longest sequence the transformer accepts.
  std::size_t max_len = 32;
  std::size_t ffn_dim = 64;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct EncoderParams {
  EncoderConfig config;
  ParamSet weights;
};

struct TokenEncodings {
  // One row per input position, padding included.
  Tensor matrix;
  std::size_t valid_len = 0;
};

// Throws ConfigError when the descriptor cannot produce a valid model.
void validate(const EncoderConfig& config);

// Embeddings ~ U(-0.05, 0.05); projections Xavier-uniform; layer-norm gains
// one and biases zero; LSTM forget-gate bias one.
EncoderParams init_encoder(const EncoderConfig& config, Rng& rng);

// Padded positions never influence valid rows: attention keys past valid_len
// get weight 0 and the BiLSTM runs over valid tokens only (padded output rows
// are zero).
TokenEncodings encode(const EncoderParams& params, const TokenSequence& seq);

std::vector<TokenEncodings> encode_batch(const EncoderParams& params,
                                         std::span<const TokenSequence> seqs);

// Row 0, the [CLS] position.
Tensor aggregate_cls(const TokenEncodings& enc);

// [CLS] row, column max and column mean over valid rows, concatenated in
// that order. Width 3d.
Tensor aggregate_cls_max_mean(const TokenEncodings& enc);

}  // namespace kdrank
