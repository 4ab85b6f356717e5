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

#include "kdrank/heads.h"

#include <cmath>

#include "kdrank/errors.h"

namespace kdrank {

namespace {

Tensor project(const Tensor& x, const HeadParams& head, const char* w,
               const char* b) {
  Tensor y = matmul(x, head.weights.get(w));
  if (head.config.use_bias) y = add_bias(y, head.weights.get(b));
  return y;
}

void require_kind(const HeadParams& head, HeadKind kind) {
  if (head.config.kind != kind) {
    throw ConfigError("head is " + to_string(head.config.kind) +
                      ", operation needs " + to_string(kind));
  }
}

// Rows of the enhanced head's hidden projection for token width d.
std::size_t enhanced_input_width(const HeadConfig& config, std::size_t d) {
  return config.use_submult ? 12 * d : 6 * d;
}

}  // namespace

std::string to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::kBi:
      return "bi";
    case HeadKind::kPlainCross:
      return "plain_cross";
    case HeadKind::kEnhancedCross:
      return "enhanced_cross";
  }
  return "?";
}

HeadKind head_kind_from_string(const std::string& name) {
  if (name == "bi") return HeadKind::kBi;
  if (name == "plain_cross") return HeadKind::kPlainCross;
  if (name == "enhanced_cross") return HeadKind::kEnhancedCross;
  throw ConfigError("unknown head kind '" + name + "'");
}

std::string to_string(Aggregation agg) {
  return agg == Aggregation::kCls ? "cls" : "cls_max_mean";
}

Aggregation aggregation_from_string(const std::string& name) {
  if (name == "cls") return Aggregation::kCls;
  if (name == "cls_max_mean") return Aggregation::kClsMaxMean;
  throw ConfigError("unknown aggregation '" + name + "'");
}

void validate(const HeadConfig& config) {
  if (config.kind != HeadKind::kEnhancedCross &&
      (!config.use_submult || !config.use_cross_attention)) {
    throw ConfigError("ablation flags apply to the enhanced_cross head only");
  }
}

HeadParams init_head(const HeadConfig& config, std::size_t d, Rng& rng) {
  validate(config);
  HeadParams head{config, {}};
  ParamSet& w = head.weights;
  switch (config.kind) {
    case HeadKind::kBi:
      break;
    case HeadKind::kPlainCross:
      w.add("w_hidden", xavier_tensor(d, d, rng));
      if (config.use_bias) w.add("b_hidden", Tensor::zeros({d}));
      w.add("w_out", xavier_tensor(d, 1, rng));
      if (config.use_bias) w.add("b_out", Tensor::zeros({1}));
      break;
    case HeadKind::kEnhancedCross: {
      if (config.use_cross_attention) {
        w.add("w1", xavier_tensor(4 * d, d, rng));
      }
      w.add("w_proj", xavier_tensor(enhanced_input_width(config, d), d, rng));
      if (config.use_bias) w.add("b_proj", Tensor::zeros({d}));
      w.add("w_out", xavier_tensor(d, 1, rng));
      if (config.use_bias) w.add("b_out", Tensor::zeros({1}));
      break;
    }
  }
  return head;
}

Tensor submult(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("submult: shape mismatch " + a.shape_string() +
                         " vs " + b.shape_string());
  }
  const std::size_t axis = a.dim() == 1 ? 0 : 1;
  return concat({a, b, sub(a, b), hadamard(a, b)}, axis);
}

Tensor attention_weights(const Tensor& q, const Tensor& k,
                         std::size_t k_valid) {
  if (q.cols() != k.cols()) {
    throw DimensionError("attention: query width " + q.shape_string() +
                         " vs key width " + k.shape_string());
  }
  if (k_valid == 0) throw EmptySequenceError("attention over zero keys");
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  return softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt), k_valid);
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k,
                            std::size_t k_valid) {
  return matmul(attention_weights(q, k, k_valid), k);
}

CrossAttended cross_attend(const TokenEncodings& context,
                           const TokenEncodings& response,
                           const HeadParams& head) {
  if (context.matrix.cols() != response.matrix.cols()) {
    throw DimensionError("cross_attend: widths differ " +
                         context.matrix.shape_string() + " vs " +
                         response.matrix.shape_string());
  }
  if (!head.config.use_cross_attention) return {context, response};
  const Tensor& w1 = head.weights.get("w1");
  Tensor c_att = scaled_dot_attention(context.matrix, response.matrix,
                                      response.valid_len);
  Tensor r_att = scaled_dot_attention(response.matrix, context.matrix,
                                      context.valid_len);
  return {{matmul(submult(context.matrix, c_att), w1), context.valid_len},
          {matmul(submult(response.matrix, r_att), w1), response.valid_len}};
}

Tensor score_enhanced(const TokenEncodings& context,
                      const TokenEncodings& response, const HeadParams& head) {
  require_kind(head, HeadKind::kEnhancedCross);
  const std::size_t d = context.matrix.cols();
  const Tensor& w_proj = head.weights.get("w_proj");
  if (w_proj.rows() != enhanced_input_width(head.config, d)) {
    throw ConfigError("w_proj " + w_proj.shape_string() +
                      " inconsistent with use_submult=" +
                      (head.config.use_submult ? "true" : "false") +
                      " at width " + std::to_string(d));
  }
  CrossAttended x = cross_attend(context, response, head);
  Tensor c_bar = aggregate_cls_max_mean(x.context);
  Tensor r_bar = aggregate_cls_max_mean(x.response);
  Tensor features = head.config.use_submult ? submult(c_bar, r_bar)
                                            : concat({c_bar, r_bar});
  Tensor hidden = relu(project(features, head, "w_proj", "b_proj"));
  return project(hidden, head, "w_out", "b_out");
}

Tensor score_bi(const Tensor& context_vec, const Tensor& response_vec) {
  if (context_vec.dim() != 1 || context_vec.shape() != response_vec.shape()) {
    throw DimensionError("score_bi: vectors " + context_vec.shape_string() +
                         " and " + response_vec.shape_string());
  }
  return matmul(context_vec, reshape(response_vec, {response_vec.numel(), 1}));
}

Tensor score_plain_cross(const TokenEncodings& joint, const HeadParams& head) {
  require_kind(head, HeadKind::kPlainCross);
  Tensor hidden = relu(project(aggregate_cls(joint), head, "w_hidden",
                               "b_hidden"));
  return project(hidden, head, "w_out", "b_out");
}

Tensor bi_vector(const TokenEncodings& enc, const HeadParams& head) {
  return head.config.bi_aggregation == Aggregation::kCls
             ? aggregate_cls(enc)
             : aggregate_cls_max_mean(enc);
}

Tensor batch_score_matrix(std::span<const TokenEncodings> contexts,
                          std::span<const TokenEncodings> responses,
                          const HeadParams& head) {
  if (contexts.empty() || contexts.size() != responses.size()) {
    throw DimensionError("batch_score_matrix needs B contexts and B responses");
  }
  const std::size_t b = contexts.size();
  switch (head.config.kind) {
    case HeadKind::kBi: {
      std::vector<Tensor> cv, rv;
      for (std::size_t i = 0; i < b; ++i) {
        cv.push_back(bi_vector(contexts[i], head));
        rv.push_back(bi_vector(responses[i], head));
      }
      return matmul(stack(cv), transpose(stack(rv)));
    }
    case HeadKind::kEnhancedCross: {
      std::vector<Tensor> entries;
      entries.reserve(b * b);
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
          entries.push_back(score_enhanced(contexts[i], responses[j], head));
        }
      }
      return reshape(concat(entries), {b, b});
    }
    case HeadKind::kPlainCross:
      break;
  }
  throw UnsupportedHeadError(
      "plain_cross encodes each (context, response) pair jointly and cannot "
      "reuse encodings across a batch");
}

// --- full models -----------------------------------------------------------

ParamSet Model::parameters() const {
  ParamSet all;
  all.extend("encoder.", encoder.weights);
  all.extend("head.", head.weights);
  return all;
}

Model init_model(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  Model model;
  model.config = config;
  model.encoder = init_encoder(config.encoder, rng);
  model.head = init_head(config.head, config.encoder.d, rng);
  return model;
}

Model clone_model(const Model& model) {
  Model out;
  out.config = model.config;
  out.encoder = {model.encoder.config, model.encoder.weights.clone()};
  out.head = {model.head.config, model.head.weights.clone()};
  return out;
}

TokenSequence joint_sequence(const TokenSequence& context,
                             const TokenSequence& response) {
  TokenSequence joint;
  joint.ids.assign(context.ids.begin(),
                   context.ids.begin() + context.valid_len);
  joint.ids.push_back(kSepId);
  joint.ids.insert(joint.ids.end(), response.ids.begin() + 1,
                   response.ids.begin() + response.valid_len);
  joint.valid_len = joint.ids.size();
  return joint;
}

Tensor score_candidates(const Model& model, const TokenSequence& context,
                        std::span<const TokenSequence> candidates) {
  if (candidates.empty()) throw ContractError("no candidates to score");
  if (model.config.head.kind == HeadKind::kPlainCross) {
    std::vector<Tensor> scores;
    scores.reserve(candidates.size());
    for (const TokenSequence& cand : candidates) {
      scores.push_back(score_plain_cross(
          encode(model.encoder, joint_sequence(context, cand)), model.head));
    }
    return concat(scores);
  }
  TokenEncodings ctx = encode(model.encoder, context);
  std::vector<TokenEncodings> cands = encode_batch(model.encoder, candidates);
  return score_candidates(model, ctx, cands);
}

Tensor score_candidates(const Model& model, const TokenEncodings& context,
                        std::span<const TokenEncodings> candidates) {
  if (candidates.empty()) throw ContractError("no candidates to score");
  std::vector<Tensor> scores;
  scores.reserve(candidates.size());
  switch (model.config.head.kind) {
    case HeadKind::kBi: {
      Tensor cv = bi_vector(context, model.head);
      for (const TokenEncodings& r : candidates) {
        scores.push_back(score_bi(cv, bi_vector(r, model.head)));
      }
      break;
    }
    case HeadKind::kEnhancedCross:
      for (const TokenEncodings& r : candidates) {
        scores.push_back(score_enhanced(context, r, model.head));
      }
      break;
    case HeadKind::kPlainCross:
      throw UnsupportedHeadError(
          "plain_cross cannot score precomputed separate encodings");
  }
  return concat(scores);
}

}  // namespace kdrank
