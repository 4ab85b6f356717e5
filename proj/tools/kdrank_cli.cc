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

// kdrank command-line pipeline: synthetic data, vocabulary, teacher and
// student training, teacher-logit caching, evaluation, candidate indexing and
// latency benchmarking.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 data error,
// 3 numeric divergence.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kdrank/data.h"
#include "kdrank/errors.h"
#include "kdrank/eval.h"
#include "kdrank/serialization.h"
#include "kdrank/training.h"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace kdrank {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

constexpr const char* kSplits[] = {"train", "valid", "test"};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t file_checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

// Everything needed to rerun a command: the argument vector, the resolved
// configuration, seeds and checksums of every file read and written.
class Manifest {
 public:
  Manifest(std::string command, int argc, char** argv)
      : command_(std::move(command)) {
    for (int i = 0; i < argc; ++i) argv_.push_back(argv[i]);
  }

  void input(const fs::path& path) { inputs_[path.string()] = hex64(file_checksum(path)); }
  void output(const fs::path& path) { outputs_.push_back(path); }
  void set(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write(const fs::path& path) const {
    ordered_json j;
    j["command"] = command_;
    j["argv"] = argv_;
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    j["inputs"] = inputs_;
    ordered_json outs = ordered_json::object();
    for (const fs::path& p : outputs_) {
      outs[p.string()] = fs::is_regular_file(p) ? hex64(file_checksum(p)) : "";
    }
    j["outputs"] = outs;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << j.dump(2) << '\n';
    std::cerr << "manifest: " << path.string() << '\n';
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  ordered_json inputs_ = ordered_json::object();
  std::vector<fs::path> outputs_;
  json extra_ = json::object();
};

fs::path manifest_path(const fs::path& out) {
  if (fs::is_directory(out)) return out / "manifest.json";
  return fs::path(out.string() + ".manifest.json");
}

std::vector<Example> load_split(const fs::path& dir, const std::string& split,
                                Manifest& manifest) {
  const fs::path p = dir / (split + ".jsonl");
  manifest.input(p);
  std::vector<Example> ex = load_dataset(p);
  std::cerr << "loaded " << ex.size() << " " << split << " examples from "
            << p.string() << '\n';
  return ex;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void print_epoch(const EpochStats& e) {
  std::cerr << "epoch " << e.epoch << " loss " << e.train_loss
            << " valid R@1 " << e.valid_recall_at_1 << " MRR " << e.valid_mrr
            << '\n';
}

// --- shared training plumbing -------------------------------------------------

struct TrainOptions {
  fs::path data;
  fs::path vocab;
  fs::path config;
  fs::path out;
  std::uint64_t seed = 0;
  std::optional<double> alpha;
  std::optional<double> lr;
  std::optional<std::size_t> epochs;
};

void add_train_options(CLI::App* sub, TrainOptions& o) {
  sub->add_option("--data", o.data, "Directory with train/valid/test.jsonl")
      ->required()
      ->check(CLI::ExistingDirectory);
  sub->add_option("--vocab", o.vocab, "Vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--config", o.config,
                  "JSON with optional \"model\" and \"train\" sections")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "Checkpoint path")->required();
  sub->add_option("--seed", o.seed, "Initialisation and shuffling seed");
  sub->add_option("--lr", o.lr, "Learning rate override");
  sub->add_option("--epochs", o.epochs, "Maximum epoch override");
}

struct Prepared {
  Vocab vocab;
  MaxLens lens;
  std::vector<RankingSample> train, valid;
  json config_file = json::object();
};

Prepared prepare(const TrainOptions& o, Manifest& manifest) {
  Prepared p;
  manifest.input(o.vocab);
  p.vocab = Vocab::load(o.vocab);
  if (!o.config.empty()) {
    manifest.input(o.config);
    p.config_file = read_json_file(o.config);
  }
  std::vector<Example> train = load_split(o.data, "train", manifest);
  std::vector<Example> valid = load_split(o.data, "valid", manifest);
  if (train.empty()) throw DataError("training split is empty");
  p.lens = choose_max_lens(train);
  p.train = to_samples(train, p.vocab, p.lens);
  p.valid = to_samples(valid, p.vocab, p.lens);
  return p;
}

ModelConfig resolve_model(const Prepared& p, HeadConfig head,
                          EncoderKind kind) {
  ModelConfig mc;
  if (auto it = p.config_file.find("model"); it != p.config_file.end()) {
    from_json(*it, mc);
  }
  mc.encoder.kind = kind;
  mc.encoder.vocab_size = p.vocab.size();
  // Room for the joint sequence of the plain cross-encoder.
  mc.encoder.max_len =
      std::max(mc.encoder.max_len, p.lens.context + p.lens.response);
  mc.head = head;
  return mc;
}

TrainConfig resolve_train(const Prepared& p, const TrainOptions& o,
                          EncoderKind kind, HeadKind head) {
  TrainConfig tc = default_train_config(kind);
  json train_json = json::object();
  if (auto it = p.config_file.find("train"); it != p.config_file.end()) {
    train_json = *it;
    from_json(train_json, tc);
  }
  // Each ranked candidate list matches the in-batch B - 1 negatives unless
  // the config says otherwise.
  if (head == HeadKind::kPlainCross && !train_json.contains("explicit_negatives")) {
    tc.explicit_negatives = tc.batch_size - 1;
  }
  if (kind == EncoderKind::kBiLstm && !train_json.contains("lr")) {
    tc.lr = kBiLstmLearningRate;
  }
  tc.seed = o.seed;
  if (o.alpha) tc.alpha = *o.alpha;
  if (o.lr) tc.lr = *o.lr;
  if (o.epochs) tc.epochs = *o.epochs;
  validate(tc);
  return tc;
}

int train_and_save(const char* command, const TrainOptions& o,
                   const Prepared& p, const ModelConfig& mc,
                   const TrainConfig& tc,
                   std::span<const DistillationRecord> records,
                   Manifest& manifest) {
  Checkpoint ckpt{init_model(mc, o.seed), tc, o.seed, p.lens.context,
                  p.lens.response, {}, {}};
  std::cerr << command << ": " << ckpt.model.parameters().total_values()
            << " parameters, context max_len " << p.lens.context
            << ", response max_len " << p.lens.response << '\n';
  TrainHistory h = train(ckpt.model, p.train, p.valid, tc, records, print_epoch);
  ckpt.history = h.epochs;
  ckpt.valid_metrics = summarize(evaluate(ckpt.model, p.valid));
  save_checkpoint(o.out, ckpt);
  std::cout << "best epoch " << h.best_epoch << ", valid R@1 "
            << 100.0 * ckpt.valid_metrics.recall_at_1 << ", MRR "
            << 100.0 * ckpt.valid_metrics.mrr << '\n';
  manifest.set("seed", o.seed);
  manifest.set("model", mc);
  manifest.set("train_config", tc);
  manifest.set("tokenization", {{"context_max_len", p.lens.context},
                                {"response_max_len", p.lens.response}});
  manifest.output(o.out);
  manifest.write(manifest_path(o.out));
  return kExitOk;
}

std::vector<RankingSample> samples_for(const Checkpoint& ckpt,
                                       const Vocab& vocab,
                                       const std::vector<Example>& ex) {
  return to_samples(ex, vocab, {ckpt.context_max_len, ckpt.response_max_len});
}

Checkpoint load_model(const fs::path& path, Manifest& manifest) {
  manifest.input(path);
  return load_checkpoint(path);
}

// --- subcommands --------------------------------------------------------------

struct GenDataOptions {
  fs::path spec;
  fs::path out;
  std::optional<std::uint64_t> seed;
};

int run_gen_data(const GenDataOptions& o, Manifest& manifest) {
  SyntheticSpec spec;
  if (!o.spec.empty()) {
    manifest.input(o.spec);
    spec = load_synthetic_spec(o.spec);
  }
  if (o.seed) spec.seed = *o.seed;
  DatasetSplits d = generate_synthetic(spec);
  fs::create_directories(o.out);
  const std::vector<Example>* parts[] = {&d.train, &d.valid, &d.test};
  for (int i = 0; i < 3; ++i) {
    const fs::path p = o.out / (std::string(kSplits[i]) + ".jsonl");
    save_dataset(p, *parts[i]);
    manifest.output(p);
  }
  save_synthetic_spec(o.out / "spec.json", spec);
  manifest.output(o.out / "spec.json");
  manifest.set("seed", spec.seed);
  std::cout << "wrote " << d.train.size() << "/" << d.valid.size() << "/"
            << d.test.size() << " examples to " << o.out.string() << '\n';
  manifest.write(o.out / "manifest.json");
  return kExitOk;
}

struct VocabOptions {
  fs::path data;
  std::size_t max_size = 30000;
  fs::path out;
};

int run_build_vocab(const VocabOptions& o, Manifest& manifest) {
  std::vector<Example> train = load_split(o.data, "train", manifest);
  Vocab v = Vocab::build(train, o.max_size);
  v.save(o.out);
  manifest.set("max_size", o.max_size);
  manifest.output(o.out);
  std::cout << "vocabulary of " << v.size() << " ids written to "
            << o.out.string() << '\n';
  manifest.write(manifest_path(o.out));
  return kExitOk;
}

struct TeacherOptions {
  TrainOptions train;
  std::string head = "enhanced_cross";
  std::vector<std::string> ablate;
};

int run_train_teacher(const TeacherOptions& o, Manifest& manifest) {
  Prepared p = prepare(o.train, manifest);
  HeadConfig head;
  head.kind = head_kind_from_string(o.head);
  if (head.kind == HeadKind::kBi) {
    throw ConfigError("train-teacher expects a cross head; use distill for bi");
  }
  for (const std::string& a : o.ablate) {
    if (a == "submult") {
      head.use_submult = false;
    } else if (a == "attention") {
      head.use_cross_attention = false;
    } else {
      throw ConfigError("unknown ablation '" + a + "' (submult|attention)");
    }
  }
  validate(head);
  ModelConfig mc = resolve_model(p, head, EncoderKind::kTransformer);
  TrainConfig tc =
      resolve_train(p, o.train, EncoderKind::kTransformer, head.kind);
  return train_and_save("train-teacher", o.train, p, mc, tc, {}, manifest);
}

struct CacheOptions {
  fs::path teacher;
  fs::path data;
  fs::path vocab;
  fs::path out;
};

int run_cache_logits(const CacheOptions& o, Manifest& manifest) {
  Checkpoint ckpt = load_model(o.teacher, manifest);
  manifest.input(o.vocab);
  Vocab vocab = Vocab::load(o.vocab);
  std::vector<Example> train = load_split(o.data, "train", manifest);
  auto records = cache_teacher_logits(ckpt.model, samples_for(ckpt, vocab, train));
  save_records(o.out, records);
  manifest.output(o.out);
  std::cout << records.size() << " teacher records written to "
            << o.out.string() << '\n';
  manifest.write(manifest_path(o.out));
  return kExitOk;
}

struct DistillOptions {
  TrainOptions train;
  std::string student = "bi";
  fs::path teacher_logits;
};

int run_distill(const DistillOptions& o, Manifest& manifest) {
  Prepared p = prepare(o.train, manifest);
  HeadConfig head;
  head.kind = HeadKind::kBi;
  EncoderKind kind = EncoderKind::kTransformer;
  if (o.student == "bilstm") {
    kind = EncoderKind::kBiLstm;
    head.bi_aggregation = Aggregation::kClsMaxMean;
  } else if (o.student != "bi") {
    throw ConfigError("unknown student '" + o.student + "' (bi|bilstm)");
  }
  ModelConfig mc = resolve_model(p, head, kind);
  TrainConfig tc = resolve_train(p, o.train, kind, head.kind);
  std::vector<DistillationRecord> records;
  if (!o.teacher_logits.empty()) {
    manifest.input(o.teacher_logits);
    records = load_records(o.teacher_logits);
  } else {
    std::cerr << "distill: no --teacher-logits, training the no-KD baseline\n";
  }
  return train_and_save("distill", o.train, p, mc, tc, records, manifest);
}

struct EvaluateOptions {
  fs::path model;
  fs::path data;
  fs::path vocab;
  std::string split = "test";
  fs::path compare;
  fs::path out;
};

ordered_json metrics_json(const Metrics& m) {
  ordered_json j;
  j["recall_at_1"] = 100.0 * m.recall_at_1;
  j["mrr"] = 100.0 * m.mrr;
  j["count"] = m.count;
  return j;
}

int run_evaluate(const EvaluateOptions& o, Manifest& manifest) {
  Checkpoint ckpt = load_model(o.model, manifest);
  manifest.input(o.vocab);
  Vocab vocab = Vocab::load(o.vocab);
  std::vector<Example> ex = load_split(o.data, o.split, manifest);
  if (ex.empty()) throw DataError("split '" + o.split + "' is empty");
  auto results = evaluate(ckpt.model, samples_for(ckpt, vocab, ex));
  ordered_json report;
  report["split"] = o.split;
  report["model"] = metrics_json(summarize(results));
  if (!o.compare.empty()) {
    Checkpoint other = load_model(o.compare, manifest);
    auto other_results = evaluate(other.model, samples_for(other, vocab, ex));
    report["compare"] = metrics_json(summarize(other_results));
    report["p_value"] =
        paired_ttest(reciprocal_ranks(results), reciprocal_ranks(other_results));
  }
  std::cout << report.dump(2) << '\n';
  const fs::path out =
      o.out.empty() ? fs::path(o.model.string() + ".evaluate.json") : o.out;
  std::ofstream(out, std::ios::trunc) << report.dump(2) << '\n';
  manifest.set("split", o.split);
  manifest.output(out);
  manifest.write(manifest_path(out));
  return kExitOk;
}

struct IndexOptions {
  fs::path model;
  fs::path responses;
  fs::path vocab;
  fs::path out;
};

int run_index(const IndexOptions& o, Manifest& manifest) {
  Checkpoint ckpt = load_model(o.model, manifest);
  manifest.input(o.vocab);
  manifest.input(o.responses);
  Vocab vocab = Vocab::load(o.vocab);
  std::ifstream in(o.responses);
  std::vector<std::string> ids;
  std::vector<TokenSequence> seqs;
  std::string line;
  for (std::size_t n = 0; std::getline(in, line); ++n) {
    ids.push_back(std::to_string(n));
    seqs.push_back(tokenize(line, vocab, ckpt.response_max_len, Side::kResponse));
  }
  CandidateIndex index = build_candidate_index(ckpt.model, ids, seqs);
  save_index(o.out, index);
  manifest.output(o.out);
  std::cout << index.size() << " vectors of width " << index.dim
            << " written to " << o.out.string() << '\n';
  manifest.write(manifest_path(o.out));
  return kExitOk;
}

struct BenchOptions {
  fs::path model;
  fs::path data;
  fs::path vocab;
  std::vector<std::size_t> candidates{10, 100};
  std::size_t warmup = 10;
  std::size_t samples = 50;
  std::uint64_t seed = 0;
  fs::path out;
};

int run_bench(const BenchOptions& o, Manifest& manifest) {
  Checkpoint ckpt = load_model(o.model, manifest);
  manifest.input(o.vocab);
  Vocab vocab = Vocab::load(o.vocab);
  std::vector<Example> test = load_split(o.data, "test", manifest);
  BenchmarkOptions opts{o.warmup, o.samples, o.seed};
  LatencyReport report = benchmark_latency(
      ckpt.model, samples_for(ckpt, vocab, test), o.candidates, opts);
  ordered_json rows = ordered_json::array();
  for (const LatencyRow& r : report.rows) {
    ordered_json j;
    j["head"] = to_string(r.head);
    j["candidates"] = r.candidates;
    j["mean_ms"] = r.mean_ms;
    j["median_ms"] = r.median_ms;
    j["samples"] = r.samples;
    j["warmup"] = r.warmup;
    rows.push_back(j);
  }
  std::cout << rows.dump(2) << '\n';
  const fs::path out =
      o.out.empty() ? fs::path(o.model.string() + ".bench.json") : o.out;
  std::ofstream(out, std::ios::trunc) << rows.dump(2) << '\n';
  manifest.set("seed", o.seed);
  manifest.output(out);
  manifest.write(manifest_path(out));
  return kExitOk;
}

int run(int argc, char** argv) {
  CLI::App app{"kdrank: response ranking with distilled cross-encoders"};
  app.require_subcommand(1);

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic corpus");
  gen_cmd->add_option("--spec", gen.spec, "Synthetic spec JSON")
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Overrides the spec seed");

  VocabOptions voc;
  auto* voc_cmd = app.add_subcommand("build-vocab", "Build a vocabulary");
  voc_cmd->add_option("--data", voc.data, "Dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  voc_cmd->add_option("--max-size", voc.max_size, "Non-reserved token budget");
  voc_cmd->add_option("--out", voc.out, "Vocabulary file")->required();
  std::uint64_t unused_seed = 0;
  voc_cmd->add_option("--seed", unused_seed, "Accepted for uniformity");

  TeacherOptions teacher;
  auto* teacher_cmd =
      app.add_subcommand("train-teacher", "Train a cross-encoder teacher");
  add_train_options(teacher_cmd, teacher.train);
  teacher_cmd->add_option("--head", teacher.head, "enhanced_cross|plain_cross")
      ->check(CLI::IsMember({"enhanced_cross", "plain_cross"}));
  teacher_cmd->add_option("--ablate", teacher.ablate, "submult|attention")
      ->check(CLI::IsMember({"submult", "attention"}));

  CacheOptions cache;
  auto* cache_cmd =
      app.add_subcommand("cache-logits", "Cache teacher logits on train");
  cache_cmd->add_option("--teacher", cache.teacher, "Teacher checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  cache_cmd->add_option("--data", cache.data, "Dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  cache_cmd->add_option("--vocab", cache.vocab, "Vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  cache_cmd->add_option("--out", cache.out, "Records JSONL")->required();
  cache_cmd->add_option("--seed", unused_seed, "Accepted for uniformity");

  DistillOptions distill;
  auto* distill_cmd = app.add_subcommand(
      "distill", "Train a bi-encoder student, with or without teacher logits");
  add_train_options(distill_cmd, distill.train);
  distill_cmd->add_option("--student", distill.student, "bi|bilstm")
      ->check(CLI::IsMember({"bi", "bilstm"}));
  distill_cmd->add_option("--alpha", distill.train.alpha,
                          "Weight of the cross-entropy term");
  distill_cmd->add_option("--teacher-logits", distill.teacher_logits,
                          "Records from cache-logits; omit for no-KD")
      ->check(CLI::ExistingFile);

  EvaluateOptions ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "R@1 and MRR (x100)");
  ev_cmd->add_option("--model", ev.model, "Checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  ev_cmd->add_option("--data", ev.data, "Dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  ev_cmd->add_option("--vocab", ev.vocab, "Vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  ev_cmd->add_option("--split", ev.split, "train|valid|test")
      ->check(CLI::IsMember({"train", "valid", "test"}));
  ev_cmd->add_option("--compare", ev.compare,
                     "Second checkpoint; adds a paired t-test p-value")
      ->check(CLI::ExistingFile);
  ev_cmd->add_option("--out", ev.out, "Report JSON");
  ev_cmd->add_option("--seed", unused_seed, "Accepted for uniformity");

  IndexOptions idx;
  auto* idx_cmd = app.add_subcommand("index", "Pre-encode candidate responses");
  idx_cmd->add_option("--model", idx.model, "Bi-encoder checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  idx_cmd->add_option("--responses", idx.responses, "One response per line")
      ->required()
      ->check(CLI::ExistingFile);
  idx_cmd->add_option("--vocab", idx.vocab, "Vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  idx_cmd->add_option("--out", idx.out, "Index file")->required();
  idx_cmd->add_option("--seed", unused_seed, "Accepted for uniformity");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Per-sample scoring latency");
  bench_cmd->add_option("--model", bench.model, "Checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--data", bench.data, "Dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  bench_cmd->add_option("--vocab", bench.vocab, "Vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--candidates", bench.candidates, "e.g. 10,100")
      ->delimiter(',');
  bench_cmd->add_option("--warmup", bench.warmup, "Untimed samples");
  bench_cmd->add_option("--samples", bench.samples, "Timed samples");
  bench_cmd->add_option("--seed", bench.seed, "Candidate pool sampling seed");
  bench_cmd->add_option("--out", bench.out, "Report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  Manifest manifest(sub->get_name(), argc, argv);
  try {
    if (sub == gen_cmd) return run_gen_data(gen, manifest);
    if (sub == voc_cmd) return run_build_vocab(voc, manifest);
    if (sub == teacher_cmd) return run_train_teacher(teacher, manifest);
    if (sub == cache_cmd) return run_cache_logits(cache, manifest);
    if (sub == distill_cmd) return run_distill(distill, manifest);
    if (sub == ev_cmd) return run_evaluate(ev, manifest);
    if (sub == idx_cmd) return run_index(idx, manifest);
    if (sub == bench_cmd) return run_bench(bench, manifest);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const VocabularyError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace kdrank

int main(int argc, char** argv) { return kdrank::run(argc, argv); }
