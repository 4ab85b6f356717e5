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

// Dataset files, vocabulary, whitespace tokenizer and the synthetic
// topic-mixture corpus generator.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kdrank/encoders.h"
#include "kdrank/heads.h"

namespace kdrank {

// Literal token that separates turns inside Example::context.
inline constexpr const char* kTurnToken = "[TURN]";

struct Example {
  std::string id;
  std::string context;
  std::vector<std::string> candidates;
  std::size_t gold = 0;

  friend bool operator==(const Example&, const Example&) = default;
};

// Throws DataError naming the example when an invariant is broken.
void validate(const Example& example);

// One JSON object per line: {"id", "context", "candidates", "gold"}.
// "context" may also be an array of turns, joined with [TURN]. Blank lines
// are skipped.
std::vector<Example> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path,
                  std::span<const Example> examples);

class Vocab {
 public:
  Vocab();

  // Most frequent first, ties broken lexicographically; at most max_size
  // non-reserved tokens.
  static Vocab build(std::span<const Example> corpus, std::size_t max_size);

  // Unknown tokens map to kUnkId and the turn separator to kTurnId.
  std::int32_t id(const std::string& token) const;
  const std::string& token(std::int32_t id) const;
  std::size_t size() const { return tokens_.size(); }
  bool contains(const std::string& token) const;

  // One non-reserved token per line; line i holds id kNumReservedTokens + i.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  void push(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

std::vector<std::string> split_whitespace(const std::string& text);

enum class Side { kContext, kResponse };

// [CLS] + token ids. Contexts longer than max_len keep their most recent
// tokens; responses keep their first tokens.
TokenSequence tokenize(const std::string& text, const Vocab& vocab,
                       std::size_t max_len, Side side);

// Smallest L such that at least a quantile fraction of lengths are <= L.
std::size_t choose_max_len(std::span<const std::size_t> lengths,
                           double quantile = 0.8);

struct MaxLens {
  std::size_t context = 0;
  std::size_t response = 0;
};

// Untruncated tokenized lengths ([CLS] included), chosen per side.
MaxLens choose_max_lens(std::span<const Example> corpus, double quantile = 0.8);

std::vector<RankingSample> to_samples(std::span<const Example> examples,
                                      const Vocab& vocab, MaxLens lens);

struct SyntheticSpec {
  std::size_t vocab_size = 200;
  std::size_t topic_count = 20;
  std::size_t tokens_per_turn = 4;
  std::size_t turns_per_context = 2;
  std::size_t response_tokens = 4;
  std::size_t candidate_count = 10;
  std::size_t train_size = 2000;
  std::size_t valid_size = 500;
  std::size_t test_size = 500;
  double noise_rate = 0.3;
  std::uint64_t seed = 1;

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

void validate(const SyntheticSpec& spec);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);
void save_synthetic_spec(const std::filesystem::path& path,
                         const SyntheticSpec& spec);

struct DatasetSplits {
  std::vector<Example> train;
  std::vector<Example> valid;
  std::vector<Example> test;
};

// Each context draws a topic; its turns and the gold response sample the
// topic's word distribution, distractors sample other topics, and every
// token is replaced by a uniformly random word with probability noise_rate.
// Contexts are unique across all splits.
DatasetSplits generate_synthetic(const SyntheticSpec& spec);

}  // namespace kdrank
