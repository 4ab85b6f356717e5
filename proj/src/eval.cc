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

#include "kdrank/eval.h"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "kdrank/errors.h"

namespace kdrank {

namespace {

constexpr char kIndexMagic[8] = {'K', 'D', 'R', 'I', 'D', 'X', '0', '1'};
constexpr std::uint32_t kIndexVersion = 1;

void require_non_empty(std::span<const RankingResult> results,
                       const char* what) {
  if (results.empty()) {
    throw ContractError(std::string(what) + " of an empty result list");
  }
}

template <typename T>
void write_le(std::ostream& out, T value) {
  std::uint64_t bits = 0;
  static_assert(sizeof(T) <= sizeof(bits));
  std::memcpy(&bits, &value, sizeof(T));
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  }
  out.write(bytes, sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw DataError("truncated index file");
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  }
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

std::size_t bi_width(const Model& model) {
  return model.config.head.bi_aggregation == Aggregation::kCls
             ? model.config.encoder.d
             : 3 * model.config.encoder.d;
}

void require_bi(const Model& model, const char* what) {
  if (model.config.head.kind != HeadKind::kBi) {
    throw UnsupportedHeadError(std::string(what) + " needs a bi head, model has " +
                               to_string(model.config.head.kind));
  }
}

}  // namespace

std::size_t rank_of_gold(std::span<const double> scores, std::size_t gold) {
  if (gold >= scores.size()) {
    throw ContractError("gold index " + std::to_string(gold) +
                        " out of range for " + std::to_string(scores.size()) +
                        " scores");
  }
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > scores[gold] || (scores[j] == scores[gold] && j < gold)) {
      ++rank;
    }
  }
  return rank;
}

RankingResult make_ranking_result(std::vector<double> scores,
                                  std::size_t gold) {
  const std::size_t rank = rank_of_gold(scores, gold);
  return {std::move(scores), gold, rank};
}

double recall_at_1(std::span<const RankingResult> results) {
  require_non_empty(results, "recall_at_1");
  std::size_t hits = 0;
  for (const auto& r : results) hits += r.rank == 1 ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double mrr(std::span<const RankingResult> results) {
  require_non_empty(results, "mrr");
  double total = 0.0;
  for (const auto& r : results) total += 1.0 / static_cast<double>(r.rank);
  return total / static_cast<double>(results.size());
}

std::vector<double> reciprocal_ranks(std::span<const RankingResult> results) {
  std::vector<double> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(1.0 / static_cast<double>(r.rank));
  return out;
}

double paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ContractError("paired_ttest: " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + " observations");
  }
  if (a.size() < 2) throw ContractError("paired_ttest needs at least 2 pairs");
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  const double mean_diff =
      std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double d : diff) ss += (d - mean_diff) * (d - mean_diff);
  const double var = ss / static_cast<double>(n - 1);
  // Relative threshold so that a constant shift with rounding noise in the
  // differences still counts as zero variance.
  const double scale_ref = std::max(1.0, std::abs(mean_diff));
  if (var <= 1e-24 * scale_ref * scale_ref) {
    return mean_diff == 0.0 ? 1.0 : 0.0;
  }
  const double t = mean_diff / std::sqrt(var / static_cast<double>(n));
  boost::math::students_t_distribution<double> dist(static_cast<double>(n - 1));
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

Metrics summarize(std::span<const RankingResult> results) {
  return {recall_at_1(results), mrr(results), results.size()};
}

std::vector<RankingResult> evaluate(const Model& model,
                                    std::span<const RankingSample> samples) {
  NoGradGuard no_grad;
  std::vector<RankingResult> out;
  out.reserve(samples.size());
  for (const RankingSample& s : samples) {
    Tensor scores = score_candidates(model, s.context, s.candidates);
    out.push_back(make_ranking_result(
        {scores.data().begin(), scores.data().end()}, s.gold));
  }
  return out;
}

// --- candidate index -------------------------------------------------------

std::uint64_t encoder_checksum(const Model& model) {
  std::uint64_t h = fingerprint(model.encoder.weights);
  const std::string agg = to_string(model.config.head.bi_aggregation);
  for (char c : agg) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

CandidateIndex build_candidate_index(const Model& model,
                                     std::span<const std::string> ids,
                                     std::span<const TokenSequence> responses) {
  require_bi(model, "build_candidate_index");
  if (ids.size() != responses.size()) {
    throw ContractError("index ids and responses differ in count");
  }
  NoGradGuard no_grad;
  CandidateIndex index;
  index.dim = bi_width(model);
  index.encoder_checksum = encoder_checksum(model);
  index.ids.assign(ids.begin(), ids.end());
  index.vectors.reserve(responses.size() * index.dim);
  for (const TokenSequence& r : responses) {
    Tensor v = bi_vector(encode(model.encoder, r), model.head);
    index.vectors.insert(index.vectors.end(), v.data().begin(), v.data().end());
  }
  return index;
}

void save_index(const std::filesystem::path& path,
                const CandidateIndex& index) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write index " + path.string());
  out.write(kIndexMagic, sizeof(kIndexMagic));
  write_le<std::uint32_t>(out, kIndexVersion);
  write_le<std::uint64_t>(out, index.dim);
  write_le<std::uint64_t>(out, index.size());
  write_le<std::uint64_t>(out, index.encoder_checksum);
  for (double v : index.vectors) write_le<double>(out, v);
  for (const std::string& id : index.ids) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  if (!out) throw DataError("failed writing index " + path.string());
}

CandidateIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index " + path.string());
  char magic[sizeof(kIndexMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) {
    throw DataError(path.string() + " is not a candidate index");
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != kIndexVersion) {
    throw DataError("unsupported index version " + std::to_string(version));
  }
  CandidateIndex index;
  index.dim = read_le<std::uint64_t>(in);
  const auto count = read_le<std::uint64_t>(in);
  index.encoder_checksum = read_le<std::uint64_t>(in);
  index.vectors.resize(count * index.dim);
  for (double& v : index.vectors) v = read_le<double>(in);
  index.ids.resize(count);
  for (std::string& id : index.ids) {
    const auto len = read_le<std::uint32_t>(in);
    id.resize(len);
    if (len && !in.read(id.data(), len)) throw DataError("truncated index ids");
  }
  return index;
}

std::vector<double> score_with_index(const Model& model,
                                     const CandidateIndex& index,
                                     const TokenSequence& context,
                                     std::span<const std::size_t> rows) {
  require_bi(model, "score_with_index");
  if (index.encoder_checksum != encoder_checksum(model)) {
    throw DataError("candidate index was built by a different model");
  }
  NoGradGuard no_grad;
  Tensor cv = bi_vector(encode(model.encoder, context), model.head);
  if (cv.numel() != index.dim) {
    throw DimensionError("context vector width " + std::to_string(cv.numel()) +
                         " vs index width " + std::to_string(index.dim));
  }
  auto dot = [&](std::size_t r) {
    auto v = index.row(r);
    double acc = 0.0;
    for (std::size_t j = 0; j < index.dim; ++j) acc += cv[j] * v[j];
    return acc;
  };
  std::vector<double> scores;
  if (rows.empty()) {
    scores.reserve(index.size());
    for (std::size_t r = 0; r < index.size(); ++r) scores.push_back(dot(r));
  } else {
    scores.reserve(rows.size());
    for (std::size_t r : rows) {
      if (r >= index.size()) throw ContractError("index row out of range");
      scores.push_back(dot(r));
    }
  }
  return scores;
}

// --- latency ----------------------------------------------------------------

LatencyReport benchmark_latency(const Model& model,
                                std::span<const RankingSample> test,
                                std::span<const std::size_t> candidate_counts,
                                const BenchmarkOptions& options) {
  if (test.empty()) throw ContractError("benchmark_latency on an empty test set");
  if (options.samples == 0) throw ContractError("benchmark needs samples > 0");
  NoGradGuard no_grad;

  std::vector<TokenSequence> pool;
  for (const RankingSample& s : test) {
    pool.insert(pool.end(), s.candidates.begin(), s.candidates.end());
  }
  const HeadKind kind = model.config.head.kind;

  // Pre-encoding happens offline, outside every timed region.
  CandidateIndex index;
  if (kind == HeadKind::kBi) {
    std::vector<std::string> ids(pool.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = std::to_string(i);
    index = build_candidate_index(model, ids, pool);
  }

  LatencyReport report;
  volatile double sink = 0.0;
  for (std::size_t k : candidate_counts) {
    if (k == 0) throw ContractError("candidate count must be positive");
    Rng rng(options.seed * 1000003ULL + k);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<double> times_ms;
    const std::size_t total = options.warmup + options.samples;
    for (std::size_t s = 0; s < total; ++s) {
      const TokenSequence& ctx = test[s % test.size()].context;
      std::vector<std::size_t> rows(k);
      for (auto& r : rows) r = pick(rng);

      const auto start = std::chrono::steady_clock::now();
      double acc = 0.0;
      switch (kind) {
        case HeadKind::kBi: {
          Tensor cv = bi_vector(encode(model.encoder, ctx), model.head);
          for (std::size_t r : rows) {
            auto v = index.row(r);
            double dot = 0.0;
            for (std::size_t j = 0; j < index.dim; ++j) dot += cv[j] * v[j];
            acc += dot;
          }
          break;
        }
        case HeadKind::kEnhancedCross:
          for (std::size_t r : rows) {
            acc += score_enhanced(encode(model.encoder, ctx),
                                  encode(model.encoder, pool[r]), model.head)
                       .item();
          }
          break;
        case HeadKind::kPlainCross:
          for (std::size_t r : rows) {
            acc += score_plain_cross(
                       encode(model.encoder, joint_sequence(ctx, pool[r])),
                       model.head)
                       .item();
          }
          break;
      }
      const auto stop = std::chrono::steady_clock::now();
      sink = sink + acc;
      if (s >= options.warmup) {
        times_ms.push_back(
            std::chrono::duration<double, std::milli>(stop - start).count());
      }
    }
    std::vector<double> sorted = times_ms;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2]
                                : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const double mean_ms =
        std::accumulate(times_ms.begin(), times_ms.end(), 0.0) /
        static_cast<double>(n);
    report.rows.push_back({kind, k, mean_ms, median, n, options.warmup});
  }
  return report;
}

}  // namespace kdrank
