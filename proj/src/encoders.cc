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

#include "kdrank/encoders.h"

#include <cmath>

#include "kdrank/errors.h"

namespace kdrank {

namespace {

constexpr double kEmbeddingInit = 0.05;

std::string layer_name(std::size_t layer, const char* suffix) {
  return "layer" + std::to_string(layer) + "." + suffix;
}

void check_sequence(const EncoderConfig& config, const TokenSequence& seq) {
  if (seq.valid_len == 0 || seq.valid_len > seq.ids.size()) {
    throw ContractError("token sequence valid_len " +
                        std::to_string(seq.valid_len) + " outside [1, " +
                        std::to_string(seq.ids.size()) + "]");
  }
  if (seq.ids[0] != kClsId) {
    throw ContractError("token sequence must start with [CLS]");
  }
  for (std::int32_t id : seq.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size) {
      throw VocabularyError("token id " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(config.vocab_size));
    }
  }
  if (config.kind == EncoderKind::kTransformer &&
      seq.ids.size() > config.max_len) {
    throw ContractError("sequence length " + std::to_string(seq.ids.size()) +
                        " exceeds encoder max_len " +
                        std::to_string(config.max_len));
  }
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_bias(matmul(x, w), b);
}

TokenEncodings encode_transformer(const EncoderParams& params,
                                  const TokenSequence& seq) {
  const EncoderConfig& cfg = params.config;
  const ParamSet& w = params.weights;
  const std::size_t m = seq.ids.size();
  const std::size_t head_dim = cfg.d / cfg.n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Tensor x = add(embedding(w.get("tok_emb"), seq.ids),
                 slice_rows(w.get("pos_emb"), 0, m));
  x = layer_norm(x, w.get("emb_ln.g"), w.get("emb_ln.b"));

  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    auto p = [&](const char* s) -> const Tensor& {
      return w.get(layer_name(l, s));
    };
    Tensor q = linear(x, p("wq"), p("bq"));
    Tensor k = linear(x, p("wk"), p("bk"));
    Tensor v = linear(x, p("wv"), p("bv"));
    std::vector<Tensor> heads;
    heads.reserve(cfg.n_heads);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      Tensor qh = slice_cols(q, h * head_dim, head_dim);
      Tensor kh = slice_cols(k, h * head_dim, head_dim);
      Tensor vh = slice_cols(v, h * head_dim, head_dim);
      Tensor logits = scale(matmul(qh, transpose(kh)), inv_sqrt);
      heads.push_back(matmul(softmax_rows(logits, seq.valid_len), vh));
    }
    Tensor attended = cfg.n_heads == 1 ? heads[0] : concat(heads, 1);
    x = layer_norm(add(x, linear(attended, p("wo"), p("bo"))), p("ln1.g"),
                   p("ln1.b"));
    Tensor ff = linear(relu(linear(x, p("ff1.w"), p("ff1.b"))), p("ff2.w"),
                       p("ff2.b"));
    x = layer_norm(add(x, ff), p("ln2.g"), p("ln2.b"));
  }
  return {x, seq.valid_len};
}

// Runs one LSTM direction over the rows of xw (precomputed input
// projections, L x 4h) and returns the L hidden states in input order.
std::vector<Tensor> run_lstm(const Tensor& xw, const Tensor& wh,
                             std::size_t hidden, bool reverse) {
  const std::size_t steps = xw.rows();
  std::vector<Tensor> states(steps);
  Tensor h = Tensor::zeros({1, hidden});
  Tensor c = Tensor::zeros({1, hidden});
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    Tensor gates = add(slice_rows(xw, t, 1), matmul(h, wh));
    Tensor in_gate = sigmoid(slice_cols(gates, 0, hidden));
    Tensor forget_gate = sigmoid(slice_cols(gates, hidden, hidden));
    Tensor cell_in = tanh(slice_cols(gates, 2 * hidden, hidden));
    Tensor out_gate = sigmoid(slice_cols(gates, 3 * hidden, hidden));
    c = add(hadamard(forget_gate, c), hadamard(in_gate, cell_in));
    h = hadamard(out_gate, tanh(c));
    states[t] = h;
  }
  return states;
}

TokenEncodings encode_bilstm(const EncoderParams& params,
                             const TokenSequence& seq) {
  const EncoderConfig& cfg = params.config;
  const ParamSet& w = params.weights;
  const std::size_t hidden = cfg.d / 2;
  const std::size_t valid = seq.valid_len;

  Tensor emb = embedding(
      w.get("tok_emb"),
      std::span<const std::int32_t>(seq.ids.data(), valid));
  Tensor fwd_in = linear(emb, w.get("fwd.wx"), w.get("fwd.b"));
  Tensor bwd_in = linear(emb, w.get("bwd.wx"), w.get("bwd.b"));
  std::vector<Tensor> fwd = run_lstm(fwd_in, w.get("fwd.wh"), hidden, false);
  std::vector<Tensor> bwd = run_lstm(bwd_in, w.get("bwd.wh"), hidden, true);

  std::vector<Tensor> rows;
  rows.reserve(valid + 1);
  for (std::size_t t = 0; t < valid; ++t) {
    rows.push_back(concat({fwd[t], bwd[t]}, 1));
  }
  if (seq.ids.size() > valid) {
    rows.push_back(Tensor::zeros({seq.ids.size() - valid, cfg.d}));
  }
  return {rows.size() == 1 ? rows[0] : concat(rows, 0), valid};
}

}  // namespace

TokenSequence pad_to(const TokenSequence& seq, std::size_t length) {
  TokenSequence out = seq;
  if (out.ids.size() < length) out.ids.resize(length, kPadId);
  return out;
}

std::string to_string(EncoderKind kind) {
  return kind == EncoderKind::kTransformer ? "transformer" : "bilstm";
}

EncoderKind encoder_kind_from_string(const std::string& name) {
  if (name == "transformer") return EncoderKind::kTransformer;
  if (name == "bilstm") return EncoderKind::kBiLstm;
  throw ConfigError("unknown encoder kind '" + name + "'");
}

void validate(const EncoderConfig& config) {
  if (config.vocab_size <= static_cast<std::size_t>(kNumReservedTokens)) {
    throw ConfigError("vocab_size must exceed the reserved token count");
  }
  if (config.d == 0) throw ConfigError("encoder width d must be positive");
  if (config.kind == EncoderKind::kTransformer) {
    if (config.n_layers == 0 || config.n_heads == 0 || config.max_len == 0 ||
        config.ffn_dim == 0) {
      throw ConfigError("transformer sizes must be positive");
    }
    if (config.d % config.n_heads != 0) {
      throw ConfigError("d=" + std::to_string(config.d) +
                        " is not divisible by n_heads=" +
                        std::to_string(config.n_heads));
    }
  } else if (config.d % 2 != 0) {
    throw ConfigError("bilstm width d must be even (d/2 per direction)");
  }
}

EncoderParams init_encoder(const EncoderConfig& config, Rng& rng) {
  validate(config);
  EncoderParams params{config, {}};
  ParamSet& w = params.weights;
  const std::size_t d = config.d;
  w.add("tok_emb", uniform_tensor({config.vocab_size, d}, -kEmbeddingInit,
                                  kEmbeddingInit, rng));

  if (config.kind == EncoderKind::kTransformer) {
    w.add("pos_emb", uniform_tensor({config.max_len, d}, -kEmbeddingInit,
                                    kEmbeddingInit, rng));
    w.add("emb_ln.g", Tensor::vector(std::vector<double>(d, 1.0)));
    w.add("emb_ln.b", Tensor::zeros({d}));
    for (std::size_t l = 0; l < config.n_layers; ++l) {
      for (const char* proj : {"q", "k", "v", "o"}) {
        w.add(layer_name(l, (std::string("w") + proj).c_str()),
              xavier_tensor(d, d, rng));
        w.add(layer_name(l, (std::string("b") + proj).c_str()),
              Tensor::zeros({d}));
      }
      w.add(layer_name(l, "ln1.g"),
            Tensor::vector(std::vector<double>(d, 1.0)));
      w.add(layer_name(l, "ln1.b"), Tensor::zeros({d}));
      w.add(layer_name(l, "ff1.w"), xavier_tensor(d, config.ffn_dim, rng));
      w.add(layer_name(l, "ff1.b"), Tensor::zeros({config.ffn_dim}));
      w.add(layer_name(l, "ff2.w"), xavier_tensor(config.ffn_dim, d, rng));
      w.add(layer_name(l, "ff2.b"), Tensor::zeros({d}));
      w.add(layer_name(l, "ln2.g"),
            Tensor::vector(std::vector<double>(d, 1.0)));
      w.add(layer_name(l, "ln2.b"), Tensor::zeros({d}));
    }
  } else {
    const std::size_t hidden = d / 2;
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string base(dir);
      w.add(base + ".wx", xavier_tensor(d, 4 * hidden, rng));
      w.add(base + ".wh", xavier_tensor(hidden, 4 * hidden, rng));
      std::vector<double> bias(4 * hidden, 0.0);
      for (std::size_t i = hidden; i < 2 * hidden; ++i) bias[i] = 1.0;
      w.add(base + ".b", Tensor::vector(std::move(bias)));
    }
  }
  return params;
}

TokenEncodings encode(const EncoderParams& params, const TokenSequence& seq) {
  check_sequence(params.config, seq);
  if (params.config.kind == EncoderKind::kTransformer) {
    return encode_transformer(params, seq);
  }
  return encode_bilstm(params, seq);
}

std::vector<TokenEncodings> encode_batch(const EncoderParams& params,
                                         std::span<const TokenSequence> seqs) {
  std::vector<TokenEncodings> out;
  out.reserve(seqs.size());
  for (const TokenSequence& s : seqs) out.push_back(encode(params, s));
  return out;
}

Tensor aggregate_cls(const TokenEncodings& enc) {
  if (enc.valid_len == 0) throw EmptySequenceError("aggregate of empty input");
  return row(enc.matrix, 0);
}

Tensor aggregate_cls_max_mean(const TokenEncodings& enc) {
  return concat({aggregate_cls(enc),
                 pool(enc.matrix, PoolKind::kMax, enc.valid_len),
                 pool(enc.matrix, PoolKind::kMean, enc.valid_len)});
}

}  // namespace kdrank
