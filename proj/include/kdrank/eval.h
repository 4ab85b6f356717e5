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

// Ranking metrics, significance testing, the pre-encoded candidate index and
// the per-sample latency benchmark.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kdrank/heads.h"

namespace kdrank {

struct RankingResult {
  std::vector<double> scores;
  std::size_t gold = 0;
  // 1-based; equal scores resolve in favour of the lower candidate index.
  std::size_t rank = 0;
};

std::size_t rank_of_gold(std::span<const double> scores, std::size_t gold);
RankingResult make_ranking_result(std::vector<double> scores, std::size_t gold);

double recall_at_1(std::span<const RankingResult> results);
double mrr(std::span<const RankingResult> results);
std::vector<double> reciprocal_ranks(std::span<const RankingResult> results);

// Two-tailed p-value of the paired t statistic on a - b. When the
// differences have zero variance the test is degenerate: p = 1 if they are
// all zero, else 0.
double paired_ttest(std::span<const double> a, std::span<const double> b);

struct Metrics {
  double recall_at_1 = 0.0;
  double mrr = 0.0;
  std::size_t count = 0;
};

Metrics summarize(std::span<const RankingResult> results);

// Scores every sample's candidate list without recording gradients.
std::vector<RankingResult> evaluate(const Model& model,
                                    std::span<const RankingSample> samples);

// --- candidate index -------------------------------------------------------

struct CandidateIndex {
  std::size_t dim = 0;
  std::uint64_t encoder_checksum = 0;
  std::vector<std::string> ids;
  // ids.size() rows of dim values, row-major.
  std::vector<double> vectors;

  std::size_t size() const { return ids.size(); }
  std::span<const double> row(std::size_t i) const {
    return {vectors.data() + i * dim, dim};
  }
};

// Binds an index to the exact weights and aggregation that produced it.
std::uint64_t encoder_checksum(const Model& model);

CandidateIndex build_candidate_index(const Model& model,
                                     std::span<const std::string> ids,
                                     std::span<const TokenSequence> responses);

// Layout: "KDRIDX01", u32 version, u64 dim, u64 count, u64 checksum, then
// count*dim little-endian float64 values, then count length-prefixed ids.
void save_index(const std::filesystem::path& path, const CandidateIndex& index);
CandidateIndex load_index(const std::filesystem::path& path);

// Dot products of the encoded context against the given index rows (all
// rows when rows is empty). Throws DataError when the index was built by a
// different model.
std::vector<double> score_with_index(const Model& model,
                                     const CandidateIndex& index,
                                     const TokenSequence& context,
                                     std::span<const std::size_t> rows = {});

// --- latency ----------------------------------------------------------------

struct LatencyRow {
  HeadKind head = HeadKind::kBi;
  std::size_t candidates = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  std::size_t samples = 0;
  std::size_t warmup = 0;
};

struct LatencyReport {
  std::vector<LatencyRow> rows;
};

struct BenchmarkOptions {
  std::size_t warmup = 10;
  std::size_t samples = 50;
  std::uint64_t seed = 0;
};

// Timed region per sample: for bi heads, encode the context and take K dot
// products against pre-encoded index rows; for cross heads, K full paired
// forward passes. Candidates for each sample are drawn from the pool of all
// candidate responses in test. Single-threaded.
LatencyReport benchmark_latency(const Model& model,
                                std::span<const RankingSample> test,
                                std::span<const std::size_t> candidate_counts,
                                const BenchmarkOptions& options = {});

}  // namespace kdrank
