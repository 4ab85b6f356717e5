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

#include <gtest/gtest.h>

#include <cmath>

#include "kdrank/errors.h"
#include "test_util.h"

namespace kdrank {
namespace {

using testing::random_tensor;

std::vector<double> values(const Tensor& t) {
  return {t.data().begin(), t.data().end()};
}

HeadParams enhanced_head(std::size_t d, Rng& rng, bool submult = true,
                         bool attention = true) {
  HeadConfig cfg;
  cfg.kind = HeadKind::kEnhancedCross;
  cfg.use_submult = submult;
  cfg.use_cross_attention = attention;
  HeadParams head = init_head(cfg, d, rng);
  // Non-zero biases so the oracle exercises them.
  for (const char* name : {"b_proj", "b_out"}) {
    for (double& x : head.weights.get(name).mutable_data()) {
      x = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
    }
  }
  return head;
}

TokenEncodings random_encodings(std::size_t rows, std::size_t valid,
                                std::size_t d, Rng& rng) {
  return {random_tensor({rows, d}, rng), valid};
}

TEST(SubmultTest, Examples) {
  EXPECT_EQ(values(submult(Tensor::vector({1, 2}), Tensor::vector({3, 4}))),
            (std::vector<double>{1, 2, 3, 4, -2, -2, 3, 8}));
  Tensor a = Tensor::vector({2, -3, 0.5});
  EXPECT_EQ(values(submult(a, a)),
            (std::vector<double>{2, -3, 0.5, 2, -3, 0.5, 0, 0, 0, 4, 9, 0.25}));
  EXPECT_THROW(submult(Tensor::vector({1}), Tensor::vector({1, 2})),
               DimensionError);
}

TEST(AttentionTest, HandComputedExample) {
  Tensor out = scaled_dot_attention(Tensor::matrix({{1, 0}}),
                                    Tensor::matrix({{1, 0}, {0, 1}}), 2);
  EXPECT_NEAR(out.at(0, 0), 0.6698, 1e-4);
  EXPECT_NEAR(out.at(0, 1), 0.3302, 1e-4);
}

TEST(AttentionTest, SingleKeyAndOrthogonalQuery) {
  Rng rng(1);
  Tensor k = random_tensor({1, 3}, rng);
  Tensor out = scaled_dot_attention(random_tensor({4, 3}, rng), k, 1);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out.at(r, c), k.at(0, c), 1e-15);
  }
  Tensor avg = scaled_dot_attention(Tensor::matrix({{0, 0, 1}}),
                                    Tensor::matrix({{2, 0, 0}, {0, 2, 0}}), 2);
  EXPECT_NEAR(avg.at(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(avg.at(0, 1), 1.0, 1e-15);
  EXPECT_THROW(scaled_dot_attention(k, k, 0), EmptySequenceError);
}

TEST(AttentionTest, WeightsSumToOneAndMaskExactly) {
  Rng rng(2);
  Tensor w = attention_weights(random_tensor({3, 4}, rng),
                               random_tensor({5, 4}, rng), 3);
  for (std::size_t r = 0; r < 3; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 5; ++c) total += w.at(r, c);
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_EQ(w.at(r, 3), 0.0);
    EXPECT_EQ(w.at(r, 4), 0.0);
  }
}

TEST(CrossAttendTest, ShapesIdentityAndSingleToken) {
  Rng rng(3);
  HeadParams head = enhanced_head(4, rng);
  TokenEncodings c = random_encodings(3, 3, 4, rng);
  TokenEncodings r = random_encodings(5, 2, 4, rng);
  CrossAttended x = cross_attend(c, r, head);
  EXPECT_EQ(x.context.matrix.shape(), (Shape{3, 4}));
  EXPECT_EQ(x.response.matrix.shape(), (Shape{5, 4}));

  HeadParams bypass = enhanced_head(4, rng, true, false);
  CrossAttended id = cross_attend(c, r, bypass);
  EXPECT_TRUE(id.context.matrix.same_storage(c.matrix));
  EXPECT_TRUE(id.response.matrix.same_storage(r.matrix));

  Tensor v = random_tensor({1, 4}, rng);
  CrossAttended one = cross_attend({v, 1}, {v, 1}, head);
  Tensor want = matmul(submult(row(v, 0), row(v, 0)), head.weights.get("w1"));
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(one.context.matrix.at(0, j), want[j], 1e-12);
  }
}

TEST(EnhancedTest, MatchesStraightLineOracle) {
  Rng rng(4);
  std::uniform_int_distribution<std::size_t> len(1, 5), width(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = width(rng), m = len(rng), n = len(rng);
    const bool submult = trial % 3 != 1;
    const bool attention = trial % 3 != 2;
    HeadParams head = enhanced_head(d, rng, submult, attention);
    std::uniform_int_distribution<std::size_t> vm(1, m), vn(1, n);
    TokenEncodings c = random_encodings(m, vm(rng), d, rng);
    TokenEncodings r = random_encodings(n, vn(rng), d, rng);
    const double got = score_enhanced(c, r, head).item();
    EXPECT_NEAR(got, testing::enhanced_oracle(c, r, head), 1e-9)
        << "trial " << trial;
  }
}

TEST(EnhancedTest, ZeroOutputLayerGivesZeroAndDeterminism) {
  Rng rng(5);
  HeadParams head = enhanced_head(3, rng);
  TokenEncodings c = random_encodings(3, 2, 3, rng);
  TokenEncodings r = random_encodings(2, 2, 3, rng);
  const double first = score_enhanced(c, r, head).item();
  EXPECT_EQ(first, score_enhanced(c, r, head).item());
  for (double& x : head.weights.get("w_out").mutable_data()) x = 0.0;
  for (double& x : head.weights.get("b_out").mutable_data()) x = 0.0;
  EXPECT_EQ(score_enhanced(c, r, head).item(), 0.0);
}

TEST(EnhancedTest, AblationShapes) {
  Rng rng(6);
  const std::size_t d = 5;
  HeadParams full = enhanced_head(d, rng);
  EXPECT_EQ(full.weights.get("w_proj").shape(), (Shape{12 * d, d}));
  EXPECT_EQ(full.weights.get("w1").shape(), (Shape{4 * d, d}));
  HeadParams no_sub = enhanced_head(d, rng, false, true);
  EXPECT_EQ(no_sub.weights.get("w_proj").shape(), (Shape{6 * d, d}));
  HeadParams no_att = enhanced_head(d, rng, true, false);
  EXPECT_FALSE(no_att.weights.contains("w1"));
  EXPECT_EQ(no_att.weights.get("w_proj").shape(), (Shape{12 * d, d}));
  // A 12d projection under use_submult=false is a configuration error.
  no_sub.weights.get("w_proj") = full.weights.get("w_proj");
  TokenEncodings c = random_encodings(2, 2, d, rng);
  EXPECT_THROW(score_enhanced(c, c, no_sub), ConfigError);
}

TEST(EnhancedTest, GradientsMatchFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    HeadParams head = enhanced_head(3, rng);
    TokenEncodings c = random_encodings(4, 3, 3, rng);
    TokenEncodings r = random_encodings(3, 2, 3, rng);
    std::vector<Tensor> inputs{c.matrix, r.matrix};
    for (auto& [name, t] : head.weights) inputs.push_back(t);
    EXPECT_LT(testing::grad_check([&] { return score_enhanced(c, r, head); },
                                  inputs),
              1e-4);
  }
}

TEST(HeadConfigTest, AblationFlagsOnlyForEnhanced) {
  HeadConfig cfg;
  cfg.kind = HeadKind::kBi;
  cfg.use_submult = false;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg.kind = HeadKind::kPlainCross;
  cfg.use_submult = true;
  cfg.use_cross_attention = false;
  EXPECT_THROW(validate(cfg), ConfigError);
  EXPECT_EQ(head_kind_from_string("plain_cross"), HeadKind::kPlainCross);
  EXPECT_THROW(head_kind_from_string("poly"), ConfigError);
}

TEST(BiTest, DotProductExamples) {
  EXPECT_EQ(score_bi(Tensor::vector({1, 0}), Tensor::vector({0, 1})).item(), 0.0);
  EXPECT_EQ(score_bi(Tensor::vector({1, 2}), Tensor::vector({3, 4})).item(), 11.0);
  Rng rng(8);
  Tensor a = random_tensor({6}, rng), b = random_tensor({6}, rng);
  EXPECT_EQ(score_bi(a, b).item(), score_bi(b, a).item());
  EXPECT_THROW(score_bi(Tensor::vector({1}), Tensor::vector({1, 2})),
               DimensionError);
}

TEST(PlainCrossTest, ZeroOutputAndFinite) {
  Rng rng(9);
  HeadConfig cfg;
  cfg.kind = HeadKind::kPlainCross;
  HeadParams head = init_head(cfg, 4, rng);
  TokenEncodings joint = random_encodings(6, 6, 4, rng);
  EXPECT_TRUE(std::isfinite(score_plain_cross(joint, head).item()));
  for (double& x : head.weights.get("w_out").mutable_data()) x = 0.0;
  EXPECT_EQ(score_plain_cross(joint, head).item(), 0.0);
}

TEST(BatchScoreTest, MatchesPairwiseLoop) {
  Rng rng(10);
  for (HeadKind kind : {HeadKind::kBi, HeadKind::kEnhancedCross}) {
    for (Aggregation agg : {Aggregation::kCls, Aggregation::kClsMaxMean}) {
      HeadConfig cfg;
      cfg.kind = kind;
      cfg.bi_aggregation = agg;
      HeadParams head = init_head(cfg, 4, rng);
      std::vector<TokenEncodings> cs, rs;
      for (int i = 0; i < 4; ++i) {
        cs.push_back(random_encodings(5, 1 + i, 4, rng));
        rs.push_back(random_encodings(3, 3 - i % 3, 4, rng));
      }
      Tensor m = batch_score_matrix(cs, rs, head);
      ASSERT_EQ(m.shape(), (Shape{4, 4}));
      for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
          const double want =
              kind == HeadKind::kBi
                  ? score_bi(bi_vector(cs[i], head), bi_vector(rs[j], head)).item()
                  : score_enhanced(cs[i], rs[j], head).item();
          EXPECT_NEAR(m.at(i, j), want, 1e-9);
        }
      }
      std::span<const TokenEncodings> c1(cs.data(), 1), r1(rs.data(), 1);
      EXPECT_NEAR(batch_score_matrix(c1, r1, head).at(0, 0),
                  m.at(0, 0), 1e-12);
    }
  }
}

TEST(BatchScoreTest, PlainCrossUnsupported) {
  Rng rng(11);
  HeadConfig cfg;
  cfg.kind = HeadKind::kPlainCross;
  HeadParams head = init_head(cfg, 4, rng);
  std::vector<TokenEncodings> cs{random_encodings(2, 2, 4, rng)};
  EXPECT_THROW(batch_score_matrix(cs, cs, head), UnsupportedHeadError);
}

TEST(BatchScoreTest, ScalingResponsesKeepsRowArgmax) {
  Rng rng(12);
  HeadConfig cfg;
  HeadParams head = init_head(cfg, 4, rng);
  std::vector<TokenEncodings> cs, rs, scaled;
  for (int i = 0; i < 5; ++i) {
    cs.push_back(random_encodings(3, 3, 4, rng));
    rs.push_back(random_encodings(3, 3, 4, rng));
    scaled.push_back({scale(rs.back().matrix, 3.5), 3});
  }
  Tensor a = batch_score_matrix(cs, rs, head);
  Tensor b = batch_score_matrix(cs, scaled, head);
  for (std::size_t i = 0; i < 5; ++i) {
    std::size_t best_a = 0, best_b = 0;
    for (std::size_t j = 1; j < 5; ++j) {
      if (a.at(i, j) > a.at(i, best_a)) best_a = j;
      if (b.at(i, j) > b.at(i, best_b)) best_b = j;
      EXPECT_NEAR(b.at(i, j), 3.5 * a.at(i, j), 1e-12);
    }
    EXPECT_EQ(best_a, best_b);
  }
}

TEST(ModelTest, JointSequenceAndCandidateScores) {
  TokenSequence c{{kClsId, 7, 8, kPadId}, 3};
  TokenSequence r{{kClsId, 9, kPadId}, 2};
  TokenSequence j = joint_sequence(c, r);
  EXPECT_EQ(j.ids, (std::vector<std::int32_t>{kClsId, 7, 8, kSepId, 9}));
  EXPECT_EQ(j.valid_len, 5u);

  for (HeadKind kind :
       {HeadKind::kBi, HeadKind::kPlainCross, HeadKind::kEnhancedCross}) {
    ModelConfig cfg;
    cfg.encoder.vocab_size = 12;
    cfg.encoder.d = 4;
    cfg.encoder.n_layers = 1;
    cfg.encoder.max_len = 10;
    cfg.encoder.ffn_dim = 8;
    cfg.head.kind = kind;
    Model model = init_model(cfg, 1);
    std::vector<TokenSequence> cands{r, TokenSequence{{kClsId, 10}, 2}};
    Tensor s = score_candidates(model, c, cands);
    ASSERT_EQ(s.numel(), 2u);
    if (kind == HeadKind::kPlainCross) {
      const double want = score_plain_cross(
          encode(model.encoder, joint_sequence(c, cands[1])), model.head).item();
      EXPECT_NEAR(s[1], want, 1e-12);
    } else if (kind == HeadKind::kEnhancedCross) {
      const double want = score_enhanced(encode(model.encoder, c),
                                         encode(model.encoder, cands[1]),
                                         model.head).item();
      EXPECT_NEAR(s[1], want, 1e-12);
    }
    ParamSet all = model.parameters();
    EXPECT_TRUE(all.contains("encoder.tok_emb"));
    Model copy = clone_model(model);
    EXPECT_TRUE(copy.parameters().values_equal(all));
    EXPECT_FALSE(copy.encoder.weights.get("tok_emb").same_storage(
        model.encoder.weights.get("tok_emb")));
  }
}

TEST(ModelTest, InitIsDeterministicBySeed) {
  ModelConfig cfg;
  cfg.encoder.vocab_size = 30;
  cfg.head.kind = HeadKind::kEnhancedCross;
  EXPECT_EQ(fingerprint(init_model(cfg, 4).parameters()),
            fingerprint(init_model(cfg, 4).parameters()));
  EXPECT_NE(fingerprint(init_model(cfg, 4).parameters()),
            fingerprint(init_model(cfg, 5).parameters()));
}

}  // namespace
}  // namespace kdrank
