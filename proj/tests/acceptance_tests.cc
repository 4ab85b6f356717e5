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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.
//
//   acceptance_tests [--cli <path to kdrank>] [--only 1,4,...]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kdrank/data.h"
#include "kdrank/errors.h"
#include "kdrank/eval.h"
#include "kdrank/serialization.h"
#include "kdrank/training.h"
#include "test_util.h"

namespace kdrank {
namespace {

namespace fs = std::filesystem;
using testing::grad_check;
using testing::random_tensor;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// --- 1. gradients -------------------------------------------------------------

ModelConfig tiny_model(HeadKind head) {
  ModelConfig cfg;
  cfg.encoder.vocab_size = 14;
  cfg.encoder.d = 4;
  cfg.encoder.n_layers = 1;
  cfg.encoder.n_heads = 2;
  cfg.encoder.max_len = 8;
  cfg.encoder.ffn_dim = 6;
  cfg.head.kind = head;
  return cfg;
}

TokenSequence random_sequence(Rng& rng, std::size_t max_valid,
                              std::size_t padded, std::int32_t vocab) {
  std::uniform_int_distribution<std::size_t> len(1, max_valid);
  std::uniform_int_distribution<std::int32_t> tok(kNumReservedTokens,
                                                  vocab - 1);
  TokenSequence s;
  s.valid_len = len(rng);
  s.ids.push_back(kClsId);
  while (s.ids.size() < s.valid_len) s.ids.push_back(tok(rng));
  return pad_to(s, padded);
}

// Worst relative error over every differentiable op for one random instance.
double op_instance(Rng& rng) {
  auto rand = [&](Shape s, double lo = -1.0, double hi = 1.0) {
    return random_tensor(std::move(s), rng, lo, hi);
  };
  double worst = 0.0;
  auto check = [&](const std::function<Tensor()>& f, std::vector<Tensor> in) {
    worst = std::max(worst, grad_check(f, std::move(in)));
  };
  std::uniform_int_distribution<std::size_t> dim(2, 5);
  const std::size_t r = dim(rng), c = dim(rng), k = dim(rng);
  Tensor a = rand({r, c}), b = rand({r, c}), w = rand({r, c});
  Tensor m = rand({c, k}), v = rand({c}), bias = rand({c});
  auto weighted = [&](const Tensor& t) { return sum(hadamard(t, w)); };

  check([&] { return sum(tanh(matmul(a, m))); }, {a, m});
  check([&] { return sum(matmul(v, m)); }, {v, m});
  check([&] { return sum(matmul(transpose(m), transpose(a))); }, {a, m});
  check([&] { return weighted(add(a, b)); }, {a, b});
  check([&] { return weighted(sub(a, b)); }, {a, b});
  check([&] { return weighted(hadamard(a, b)); }, {a, b});
  check([&] { return weighted(relu(a)); }, {a});
  check([&] { return weighted(sigmoid(a)); }, {a});
  check([&] { return weighted(tanh(a)); }, {a});
  check([&] { return weighted(scale(a, 1.3)); }, {a});
  check([&] { return weighted(add_bias(a, bias)); }, {a, bias});
  Tensor x = rand({r, c}, -2.0, 2.0);
  check([&] { return weighted(softmax_rows(x)); }, {x});
  const std::size_t valid = 1 + rng() % c;
  check([&] { return weighted(softmax_rows(x, valid)); }, {x});
  Tensor g = rand({c}), beta = rand({c});
  check([&] { return weighted(layer_norm(x, g, beta)); }, {x, g, beta});
  Tensor zt = rand({k}, -3.0, 3.0), zs = rand({k}, -3.0, 3.0);
  check([&] { return distill_loss(zt, zs); }, {zt, zs});
  check([&] { return distill_loss(zt, zs, true, true); }, {zt, zs});
  Tensor s = rand({k}, -3.0, 3.0);
  const std::size_t target = rng() % k;
  check([&] { return cross_entropy(s, target); }, {s});
  check([&] { return mean(hadamard(x, w)); }, {x});
  Tensor wc = rand({c});
  const std::size_t valid_rows = 1 + rng() % r;
  check([&] { return sum(hadamard(pool(a, PoolKind::kMax, valid_rows), wc)); },
        {a});
  check([&] { return sum(hadamard(pool(a, PoolKind::kMean, valid_rows), wc)); },
        {a});
  Tensor a2 = rand({r, k}), wcat = rand({r, c + k});
  check([&] { return sum(hadamard(concat({a, a2}, 1), wcat)); }, {a, a2});
  Tensor v2 = rand({k}), wv = rand({c + k});
  check([&] { return sum(hadamard(concat({v, v2}), wv)); }, {v, v2});
  Tensor ws = rand({2, c});
  check([&] { return sum(hadamard(stack(std::vector<Tensor>{v, bias}), ws)); },
        {v, bias});
  Tensor wsl = rand({1, c - 1});
  check([&] {
    return sum(hadamard(slice_cols(slice_rows(a, r - 1, 1), 1, c - 1), wsl));
  }, {a});
  check([&] { return sum(hadamard(row(a, 0), wc)); }, {a});
  Tensor wr = rand({r * c});
  check([&] { return sum(hadamard(reshape(a, {r * c}), wr)); }, {a});
  Tensor table = rand({7, c}), we = rand({4, c});
  std::vector<std::int32_t> ids{6, 0, 6, 3};
  check([&] { return sum(hadamard(embedding(table, ids), we)); }, {table});
  return worst;
}

// Full enhanced cross-encoder scorer under the combined loss, with respect
// to every model parameter.
double scorer_instance(Rng& rng, std::uint64_t seed) {
  Model model = init_model(tiny_model(HeadKind::kEnhancedCross), seed);
  // Larger embeddings push gradients well above the relative-error floor.
  for (double& x : model.encoder.weights.get("tok_emb").mutable_data()) {
    x *= 20.0;
  }
  for (const char* name : {"b_proj", "b_out"}) {
    for (double& x : model.head.weights.get(name).mutable_data()) {
      x = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
    }
  }
  const std::size_t k = 3;
  TokenSequence ctx = random_sequence(rng, 5, 5, 14);
  std::vector<TokenSequence> cands;
  for (std::size_t i = 0; i < k; ++i) cands.push_back(random_sequence(rng, 3, 3, 14));
  Tensor teacher = random_tensor({k}, rng, -2.0, 2.0);
  const std::size_t gold = rng() % k;
  std::vector<Tensor> inputs;
  for (auto& [name, t] : model.parameters()) inputs.push_back(t);
  return grad_check(
      [&] {
        Tensor z = score_candidates(model, ctx, cands);
        return combined_loss(0.5, ce_loss(z, gold), distill_loss(teacher, z));
      },
      inputs);
}

Outcome criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double ops = 0.0, scorer = 0.0;
  for (int i = 0; i < 20; ++i) {
    ops = std::max(ops, op_instance(rng));
    scorer = std::max(scorer, scorer_instance(rng, 200 + i));
  }
  const double secs = seconds_since(t0);
  return {ops < 1e-4 && scorer < 1e-4 && secs < 120.0,
          fmt("max rel err ops %.2e, scorer+loss %.2e, %.1fs", ops, scorer,
              secs)};
}

// --- 2. straight-line oracle --------------------------------------------------

Outcome criterion_oracle() {
  Rng rng(102);
  std::uniform_int_distribution<std::size_t> len(1, 5), width(1, 8);
  HeadConfig cfg;
  cfg.kind = HeadKind::kEnhancedCross;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = width(rng), m = len(rng), n = len(rng);
    HeadParams head = init_head(cfg, d, rng);
    for (auto& [name, t] : head.weights) {
      for (double& x : t.mutable_data()) {
        x = std::uniform_real_distribution<double>(-0.7, 0.7)(rng);
      }
    }
    TokenEncodings c{random_tensor({m, d}, rng), 1 + rng() % m};
    TokenEncodings r{random_tensor({n, d}, rng), 1 + rng() % n};
    const double got = score_enhanced(c, r, head).item();
    worst = std::max(worst,
                     std::abs(got - testing::enhanced_oracle(c, r, head)));
  }
  return {worst <= 1e-9, fmt("100 instances, max abs diff %.2e", worst)};
}

// --- 3. metric oracles --------------------------------------------------------

Outcome criterion_metrics() {
  Rng rng(103);
  std::uniform_int_distribution<int> level(0, 3);
  std::uniform_int_distribution<std::size_t> count(2, 12);
  std::size_t mismatches = 0, ties = 0;
  for (int matrix = 0; matrix < 100; ++matrix) {
    std::vector<RankingResult> results;
    double hits = 0.0, rr = 0.0;
    const std::size_t rows = count(rng);
    for (std::size_t i = 0; i < rows; ++i) {
      std::vector<double> s(count(rng));
      for (double& x : s) x = level(rng);
      const std::size_t gold =
          std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng);
      ties += std::count(s.begin(), s.end(), s[gold]) > 1;
      const std::size_t want = testing::brute_force_rank(s, gold);
      hits += want == 1 ? 1.0 : 0.0;
      rr += 1.0 / static_cast<double>(want);
      results.push_back(make_ranking_result(s, gold));
    }
    if (recall_at_1(results) != hits / rows) ++mismatches;
    if (mrr(results) != rr / rows) ++mismatches;
  }
  return {mismatches == 0 && ties > 0,
          fmt("100 matrices, %zu gold ties, %zu mismatches", ties, mismatches)};
}

// --- 4 and 5. training on the bundled synthetic spec ---------------------------

// Desk-scale settings shared by the distillation and cross-encoder checks.
constexpr double kDeskLearningRate = 1e-3;
constexpr std::size_t kDeskEpochs = 8;
constexpr std::size_t kDeskBiEpochs = 12;
constexpr double kDeskBiLstmLearningRate = 3e-3;
constexpr std::size_t kDeskBiLstmEpochs = 15;

struct Corpus {
  Vocab vocab;
  std::vector<RankingSample> train, valid, test;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    SyntheticSpec spec;
    DatasetSplits d = generate_synthetic(spec);
    Corpus out;
    out.vocab = Vocab::build(d.train, spec.vocab_size);
    MaxLens lens = choose_max_lens(d.train);
    out.train = to_samples(d.train, out.vocab, lens);
    out.valid = to_samples(d.valid, out.vocab, lens);
    out.test = to_samples(d.test, out.vocab, lens);
    return out;
  }();
  return c;
}

ModelConfig desk_model(HeadKind head,
                       EncoderKind kind = EncoderKind::kTransformer) {
  ModelConfig cfg;
  cfg.encoder.kind = kind;
  cfg.encoder.vocab_size = corpus().vocab.size();
  cfg.head.kind = head;
  if (kind == EncoderKind::kBiLstm) cfg.head.bi_aggregation = Aggregation::kClsMaxMean;
  return cfg;
}

TrainConfig desk_train(std::uint64_t seed,
                       EncoderKind kind = EncoderKind::kTransformer) {
  TrainConfig tc = default_train_config(kind);
  tc.lr = kind == EncoderKind::kBiLstm ? kDeskBiLstmLearningRate
                                       : kDeskLearningRate;
  tc.epochs = kind == EncoderKind::kBiLstm ? kDeskBiLstmEpochs : kDeskEpochs;
  tc.center_distill = true;
  tc.seed = seed;
  return tc;
}

double train_and_test(const ModelConfig& mc, const TrainConfig& tc,
                      std::span<const DistillationRecord> records = {},
                      Model* out = nullptr) {
  const Corpus& c = corpus();
  Model m = init_model(mc, tc.seed);
  train(m, c.train, c.valid, tc, records);
  const double r1 = summarize(evaluate(m, c.test)).recall_at_1;
  if (out) *out = std::move(m);
  return r1;
}

struct Teacher {
  double test_r1 = 0.0;
  double seconds = 0.0;
  std::vector<DistillationRecord> records;
};

const Teacher& teacher() {
  static const Teacher t = [] {
    const auto t0 = std::chrono::steady_clock::now();
    Teacher out;
    Model m;
    out.test_r1 =
        train_and_test(desk_model(HeadKind::kEnhancedCross), desk_train(1), {}, &m);
    out.records = cache_teacher_logits(m, corpus().train);
    out.seconds = seconds_since(t0);
    return out;
  }();
  return t;
}

Outcome distillation_gain(EncoderKind kind) {
  const auto t0 = std::chrono::steady_clock::now();
  const Teacher& t = teacher();
  const double teacher_secs = t.seconds;
  int wins = 0;
  double gain_sum = 0.0, no_kd_sum = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ModelConfig mc = desk_model(HeadKind::kBi, kind);
    TrainConfig tc = desk_train(seed, kind);
    if (kind == EncoderKind::kTransformer) tc.epochs = kDeskBiEpochs;
    const double no_kd = train_and_test(mc, tc);
    const double kd = train_and_test(mc, tc, t.records);
    wins += kd >= no_kd;
    gain_sum += kd - no_kd;
    no_kd_sum += no_kd;
    per_seed += fmt(" %.3f/%.3f", no_kd, kd);
  }
  // The teacher is shared, so its training time counts toward each check.
  const double secs = seconds_since(t0) + (kind == EncoderKind::kBiLstm ? teacher_secs : 0.0);
  const bool pass = t.test_r1 > no_kd_sum / 5.0 && wins >= 3 && gain_sum > 0.0 &&
                    secs < 900.0;
  return {pass, fmt("%s student: teacher R@1 %.3f vs noKD mean %.3f; "
                    "noKD/KD per seed%s; %d/5 seeds KD >= noKD, mean gain "
                    "%+.4f; %.0fs",
                    to_string(kind).c_str(), t.test_r1, no_kd_sum / 5.0,
                    per_seed.c_str(), wins, gain_sum / 5.0, secs)};
}

Outcome criterion_distillation() {
  Outcome bi = distillation_gain(EncoderKind::kTransformer);
  Outcome lstm = distillation_gain(EncoderKind::kBiLstm);
  return {bi.pass && lstm.pass, bi.detail + " | " + lstm.detail};
}

Outcome criterion_cross_heads() {
  const auto t0 = std::chrono::steady_clock::now();
  double enhanced = 0.0, plain = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const double e = seed == 1 ? teacher().test_r1
                               : train_and_test(desk_model(HeadKind::kEnhancedCross),
                                                desk_train(seed));
    TrainConfig tc = desk_train(seed);
    // Same number of negatives per example as the in-batch objective.
    tc.explicit_negatives = tc.batch_size - 1;
    const double p = train_and_test(desk_model(HeadKind::kPlainCross), tc);
    enhanced += e / 3.0;
    plain += p / 3.0;
    per_seed += fmt(" %.3f/%.3f", e, p);
  }
  return {enhanced >= plain,
          fmt("enhanced/plain per seed%s; mean %.3f vs %.3f; %.0fs",
              per_seed.c_str(), enhanced, plain, seconds_since(t0))};
}

// --- 6. ablations end to end ---------------------------------------------------

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() /
          ("kdrank_acceptance_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

int run_command(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

// Checks the parameter shapes of an ablated head and that the scorer still
// matches the straight-line oracle, whose bypass is the identity.
std::optional<std::string> ablation_problem(const Model& m, bool submult,
                                            bool attention) {
  const std::size_t d = m.config.encoder.d;
  const ParamSet& w = m.head.weights;
  const Shape proj = w.get("w_proj").shape();
  const std::size_t want_rows = (submult ? 12 : 6) * d;
  if (proj != Shape{want_rows, d}) return "w_proj is " + shape_string(proj);
  if (attention != w.contains("w1")) return std::string("w1 presence wrong");
  if (attention && w.get("w1").shape() != Shape{4 * d, d}) {
    return "w1 is " + shape_string(w.get("w1").shape());
  }
  Rng rng(6);
  TokenEncodings c{random_tensor({4, d}, rng), 3};
  TokenEncodings r{random_tensor({3, d}, rng), 2};
  const double diff = std::abs(score_enhanced(c, r, m.head).item() -
                               testing::enhanced_oracle(c, r, m.head));
  if (diff > 1e-9) return fmt("oracle mismatch %.2e", diff);
  if (!attention) {
    // Identity bypass: aligned rows are the sequences themselves.
    CrossAttended x = cross_attend(c, r, m.head);
    const auto a = x.context.matrix.data(), b = c.matrix.data();
    if (!std::equal(a.begin(), a.end(), b.begin(), b.end())) {
      return std::string("bypass is not the identity");
    }
  }
  return std::nullopt;
}

Outcome criterion_ablations(const std::string& cli) {
  Scratch tmp;
  const fs::path data = tmp.dir / "data", vocab = tmp.dir / "vocab.txt";
  const fs::path spec = tmp.dir / "spec.json", cfg = tmp.dir / "config.json";
  std::ofstream(spec) << R"({"train_size": 160, "valid_size": 40, "test_size": 40})";
  std::ofstream(cfg) << R"({"model": {"encoder": {"d": 8, "n_layers": 1, "ffn_dim": 16}},
 "train": {"lr": 0.003, "epochs": 2}})";

  std::vector<std::string> steps{
      cli + " gen-data --spec " + spec.string() + " --out " + data.string(),
      cli + " build-vocab --data " + data.string() + " --out " + vocab.string()};
  struct Variant {
    const char* name;
    const char* flags;
    bool submult, attention;
  };
  const Variant variants[] = {{"full", "", true, true},
                              {"submult", "--ablate submult", false, true},
                              {"attention", "--ablate attention", true, false}};
  const std::string common = " --data " + data.string() + " --vocab " +
                             vocab.string() + " --config " + cfg.string() +
                             " --seed 3";
  for (const Variant& v : variants) {
    const fs::path ckpt = tmp.dir / (std::string(v.name) + ".ckpt");
    steps.push_back(cli + " train-teacher " + v.flags + common + " --out " +
                    ckpt.string());
    steps.push_back(cli + " evaluate --model " + ckpt.string() + " --data " +
                    data.string() + " --vocab " + vocab.string());
  }
  for (const std::string& s : steps) {
    if (int code = run_command(s); code != 0) {
      return {false, fmt("exit %d from: %s", code, s.c_str())};
    }
  }
  std::string shapes;
  for (const Variant& v : variants) {
    Checkpoint ck = load_checkpoint(tmp.dir / (std::string(v.name) + ".ckpt"));
    if (auto problem = ablation_problem(ck.model, v.submult, v.attention)) {
      return {false, std::string(v.name) + ": " + *problem};
    }
    if (!fs::exists(tmp.dir / (std::string(v.name) + ".ckpt.manifest.json"))) {
      return {false, std::string(v.name) + ": no manifest"};
    }
    shapes += fmt(" %s w_proj %s;", v.name,
                  shape_string(ck.model.head.weights.get("w_proj").shape()).c_str());
  }
  return {true, "CLI train+evaluate ok," + shapes +
                    " attention ablation has no w1 and an identity bypass"};
}

// --- 7. latency scaling --------------------------------------------------------

Outcome criterion_latency() {
  const std::vector<std::size_t> counts{10, 100};
  BenchmarkOptions opts;
  opts.warmup = 5;
  opts.samples = 30;
  auto ratio = [&](HeadKind kind) {
    Model m = init_model(desk_model(kind), 1);
    LatencyReport r = benchmark_latency(m, corpus().test, counts, opts);
    return std::make_pair(r.rows[1].mean_ms / r.rows[0].mean_ms, r);
  };
  auto [bi, bi_report] = ratio(HeadKind::kBi);
  auto [cross, cross_report] = ratio(HeadKind::kEnhancedCross);
  return {bi <= 1.5 && cross >= 5.0,
          fmt("bi %.3f->%.3f ms (x%.2f), enhanced %.2f->%.2f ms (x%.2f)",
              bi_report.rows[0].mean_ms, bi_report.rows[1].mean_ms, bi,
              cross_report.rows[0].mean_ms, cross_report.rows[1].mean_ms,
              cross)};
}

// --- 8. mixture degeneracy -----------------------------------------------------

Outcome criterion_mixture() {
  const Corpus& c = corpus();
  std::vector<RankingSample> few(c.train.begin(), c.train.begin() + 48);
  std::vector<RankingSample> valid(c.valid.begin(), c.valid.begin() + 16);
  ModelConfig student = desk_model(HeadKind::kBi);
  student.encoder.d = 8;
  student.encoder.n_layers = 1;
  student.encoder.ffn_dim = 16;
  ModelConfig tcfg = student;
  tcfg.head.kind = HeadKind::kEnhancedCross;
  auto records = cache_teacher_logits(init_model(tcfg, 4), few);
  TrainConfig tc = desk_train(7);
  tc.alpha = 1.0;
  tc.epochs = 2;
  Model plain = init_model(student, 5), with = init_model(student, 5);
  auto h1 = train(plain, few, valid, tc);
  auto h2 = train(with, few, valid, tc, records);
  const bool identical =
      plain.parameters().values_equal(with.parameters()) && h1.epochs == h2.epochs;

  Rng rng(108);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::size_t checked = 0, exact = 0;
  for (int i = 0; i < 50; ++i) {
    const double ce = u(rng), kd = u(rng);
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double want = alpha * ce + (1.0 - alpha) * kd;
      Tensor t = combined_loss(alpha, Tensor::scalar(ce), Tensor::scalar(kd));
      checked += 2;
      exact += (combined_loss(alpha, ce, kd) == want) + (t.item() == want);
    }
  }
  return {identical && exact == checked,
          fmt("alpha=1 parameters %s; linearity exact on %zu/%zu grid points",
              identical ? "bit-identical" : "DIFFER", exact, checked)};
}

// --- 9. index equivalence ------------------------------------------------------

Outcome criterion_index() {
  Rng rng(109);
  const Corpus& c = corpus();
  Scratch tmp;
  double worst = 0.0;
  bool exact = true;
  for (Aggregation agg : {Aggregation::kCls, Aggregation::kClsMaxMean}) {
    ModelConfig cfg = desk_model(HeadKind::kBi);
    cfg.head.bi_aggregation = agg;
    Model model = init_model(cfg, 9);
    std::vector<TokenSequence> contexts, responses;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < 50; ++i) {
      contexts.push_back(c.test[i].context);
      responses.push_back(c.test[i + 50].candidates[i % 10]);
      ids.push_back("r" + std::to_string(i));
    }
    CandidateIndex index = build_candidate_index(model, ids, responses);
    for (const TokenSequence& ctx : contexts) {
      std::vector<double> via_index = score_with_index(model, index, ctx);
      Tensor live = score_candidates(model, ctx, responses);
      for (std::size_t j = 0; j < responses.size(); ++j) {
        worst = std::max(worst, std::abs(via_index[j] - live[j]));
      }
    }
    const fs::path p = tmp.dir / "index.bin";
    save_index(p, index);
    CandidateIndex back = load_index(p);
    exact = exact && back.ids == index.ids && back.dim == index.dim &&
            back.encoder_checksum == index.encoder_checksum &&
            back.vectors.size() == index.vectors.size() &&
            std::memcmp(back.vectors.data(), index.vectors.data(),
                        index.vectors.size() * sizeof(double)) == 0;
  }
  return {worst <= 1e-9 && exact,
          fmt("50x50 grid per aggregation, max abs diff %.2e; round trip %s",
              worst, exact ? "bit-exact" : "NOT exact")};
}

// --- 10. significance ----------------------------------------------------------

Outcome criterion_ttest() {
  // Reference p-values from an independent implementation.
  const std::vector<double> a{1, 1, 0, 1, 0.5, 1, 0.333333333333, 1, 1, 0.25};
  const std::vector<double> b{1, 0.5, 0, 1, 0.5, 0.2, 0.333333333333, 1, 0.5,
                              0.25};
  const std::vector<double> x{0.9, 0.7, 1.0, 0.4, 0.8, 0.6, 1.0, 0.5};
  const std::vector<double> y{0.6, 0.8, 0.7, 0.3, 0.5, 0.6, 0.9, 0.2};
  const double e1 = std::abs(paired_ttest(a, b) - 0.09128107834595117);
  const double e2 = std::abs(paired_ttest(x, y) - 0.02377915522868361);
  const double same = paired_ttest(a, a);
  return {e1 <= 1e-6 && e2 <= 1e-6 && same == 1.0,
          fmt("reference errors %.1e, %.1e; identical inputs p=%g", e1, e2,
              same)};
}

}  // namespace
}  // namespace kdrank

int main(int argc, char** argv) {
  using namespace kdrank;
  std::string cli = KDRANK_CLI_PATH;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string n; std::getline(ss, n, ',');) only.insert(std::stoi(n));
    } else {
      std::cerr << "usage: acceptance_tests [--cli PATH] [--only 1,2,...]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", criterion_gradients},
      {"straight-line oracle", criterion_oracle},
      {"metric oracles", criterion_metrics},
      {"distillation directional gain", criterion_distillation},
      {"enhanced vs plain cross-encoder", criterion_cross_heads},
      {"ablation wiring", [&] { return criterion_ablations(cli); }},
      {"latency scaling", criterion_latency},
      {"mixture degeneracy", criterion_mixture},
      {"index equivalence", criterion_index},
      {"significance machinery", criterion_ttest},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(number)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << number << " "
              << criteria[i].first << ": " << o.detail << " ["
              << fmt("%.1f", seconds_since(t0)) << "s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
