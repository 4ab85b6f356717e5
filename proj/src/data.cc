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

#include "kdrank/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "kdrank/errors.h"

namespace kdrank {

namespace {

using ordered_json = nlohmann::ordered_json;

const char* const kReservedTokens[] = {"[PAD]", "[CLS]", "[SEP]", "[TURN]",
                                       "[UNK]"};

bool is_reserved(const std::string& token) {
  for (const char* r : kReservedTokens) {
    if (token == r) return true;
  }
  return false;
}

std::string word_name(std::size_t i, std::size_t vocab_size) {
  const std::size_t width = std::to_string(vocab_size - 1).size();
  std::string digits = std::to_string(i);
  return "w" + std::string(width - digits.size(), '0') + digits;
}

// Word distribution of one topic: a random subset of the vocabulary with
// Zipf-like weights.
struct Topic {
  std::vector<std::size_t> words;
  std::discrete_distribution<std::size_t> dist;
};

std::vector<Topic> make_topics(const SyntheticSpec& spec, Rng& rng) {
  const std::size_t core =
      std::clamp<std::size_t>(2 * spec.vocab_size / spec.topic_count, 2,
                              spec.vocab_size);
  std::vector<std::size_t> all(spec.vocab_size);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<Topic> topics;
  topics.reserve(spec.topic_count);
  for (std::size_t t = 0; t < spec.topic_count; ++t) {
    std::shuffle(all.begin(), all.end(), rng);
    Topic topic;
    topic.words.assign(all.begin(), all.begin() + core);
    std::vector<double> weights(core);
    for (std::size_t r = 0; r < core; ++r) weights[r] = 1.0 / (1.0 + r);
    topic.dist = std::discrete_distribution<std::size_t>(weights.begin(),
                                                         weights.end());
    topics.push_back(std::move(topic));
  }
  return topics;
}

// Share of gold-response tokens copied verbatim from the context. Exact
// token overlap rewards token-level interaction between the two sides.
constexpr double kEchoRate = 0.75;

class TextSampler {
 public:
  TextSampler(const SyntheticSpec& spec, Rng& rng)
      : spec_(spec),
        rng_(rng),
        topics_(make_topics(spec, rng)),
        uniform_word_(0, spec.vocab_size - 1),
        noise_(spec.noise_rate),
        echo_(kEchoRate) {}

  // Noise first; surviving tokens copy a word from echo (when given) with
  // probability kEchoRate, else sample the topic.
  std::vector<std::size_t> words(std::size_t topic, std::size_t count,
                                 std::span<const std::size_t> echo = {}) {
    std::vector<std::size_t> out;
    Topic& t = topics_[topic];
    for (std::size_t i = 0; i < count; ++i) {
      if (noise_(rng_)) {
        out.push_back(uniform_word_(rng_));
      } else if (!echo.empty() && echo_(rng_)) {
        std::uniform_int_distribution<std::size_t> pick(0, echo.size() - 1);
        out.push_back(echo[pick(rng_)]);
      } else {
        out.push_back(t.words[t.dist(rng_)]);
      }
    }
    return out;
  }

  std::string text(std::span<const std::size_t> words) const {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) out += ' ';
      out += word_name(words[i], spec_.vocab_size);
    }
    return out;
  }

 private:
  const SyntheticSpec& spec_;
  Rng& rng_;
  std::vector<Topic> topics_;
  std::uniform_int_distribution<std::size_t> uniform_word_;
  std::bernoulli_distribution noise_;
  std::bernoulli_distribution echo_;
};

}  // namespace

void validate(const Example& example) {
  if (example.candidates.size() < 2) {
    throw DataError("example '" + example.id + "' has " +
                    std::to_string(example.candidates.size()) +
                    " candidates, need at least 2");
  }
  if (example.gold >= example.candidates.size()) {
    throw DataError("example '" + example.id + "' gold index " +
                    std::to_string(example.gold) + " out of range");
  }
  if (split_whitespace(example.context).empty()) {
    throw DataError("example '" + example.id + "' has an empty context");
  }
}

std::vector<Example> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::vector<Example> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Example ex;
    try {
      const auto j = nlohmann::json::parse(line);
      ex.id = j.at("id").get<std::string>();
      const auto& ctx = j.at("context");
      if (ctx.is_array()) {
        for (std::size_t t = 0; t < ctx.size(); ++t) {
          if (t) ex.context += std::string(" ") + kTurnToken + " ";
          ex.context += ctx[t].get<std::string>();
        }
      } else {
        ex.context = ctx.get<std::string>();
      }
      ex.candidates = j.at("candidates").get<std::vector<std::string>>();
      const auto gold = j.at("gold").get<long long>();
      if (gold < 0) {
        throw DataError("example '" + ex.id + "' has negative gold index");
      }
      ex.gold = static_cast<std::size_t>(gold);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed example: " + e.what());
    }
    validate(ex);
    out.push_back(std::move(ex));
  }
  if (out.empty()) {
    std::clog << "warning: dataset " << path.string() << " is empty\n";
  }
  return out;
}

void save_dataset(const std::filesystem::path& path,
                  std::span<const Example> examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write dataset " + path.string());
  for (const Example& ex : examples) {
    ordered_json j;
    j["id"] = ex.id;
    j["context"] = ex.context;
    j["candidates"] = ex.candidates;
    j["gold"] = ex.gold;
    out << j.dump() << '\n';
  }
}

// --- vocabulary --------------------------------------------------------------

Vocab::Vocab() {
  for (const char* r : kReservedTokens) push(r);
}

void Vocab::push(const std::string& token) {
  ids_.emplace(token, static_cast<std::int32_t>(tokens_.size()));
  tokens_.push_back(token);
}

Vocab Vocab::build(std::span<const Example> corpus, std::size_t max_size) {
  std::unordered_map<std::string, std::size_t> counts;
  auto count_text = [&](const std::string& text) {
    for (const std::string& w : split_whitespace(text)) {
      if (!is_reserved(w)) ++counts[w];
    }
  };
  for (const Example& ex : corpus) {
    count_text(ex.context);
    for (const std::string& c : ex.candidates) count_text(c);
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocab vocab;
  for (std::size_t i = 0; i < ranked.size() && i < max_size; ++i) {
    vocab.push(ranked[i].first);
  }
  return vocab;
}

std::int32_t Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw VocabularyError("token id " + std::to_string(id) +
                          " outside vocabulary of size " +
                          std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

bool Vocab::contains(const std::string& token) const {
  return ids_.count(token) > 0;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write vocab " + path.string());
  for (std::size_t i = kNumReservedTokens; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\n';
  }
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocab " + path.string());
  Vocab vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.find_first_of(" \t") != std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": vocab lines must hold exactly one token");
    }
    if (vocab.contains(line)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": duplicate token '" + line + "'");
    }
    vocab.push(line);
  }
  return vocab;
}

// --- tokenization ------------------------------------------------------------

std::vector<std::string> split_whitespace(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(std::move(w));
  return out;
}

TokenSequence tokenize(const std::string& text, const Vocab& vocab,
                       std::size_t max_len, Side side) {
  if (max_len < 2) throw ContractError("tokenize needs max_len >= 2");
  const std::vector<std::string> words = split_whitespace(text);
  const std::size_t keep = std::min(words.size(), max_len - 1);
  const std::size_t first =
      side == Side::kContext ? words.size() - keep : 0;
  TokenSequence seq;
  seq.ids.reserve(keep + 1);
  seq.ids.push_back(kClsId);
  for (std::size_t i = first; i < first + keep; ++i) {
    seq.ids.push_back(vocab.id(words[i]));
  }
  seq.valid_len = seq.ids.size();
  return seq;
}

std::size_t choose_max_len(std::span<const std::size_t> lengths,
                           double quantile) {
  if (lengths.empty()) throw ContractError("choose_max_len of empty corpus");
  if (!(quantile > 0.0 && quantile <= 1.0)) {
    throw ContractError("quantile must lie in (0, 1]");
  }
  std::vector<std::size_t> sorted(lengths.begin(), lengths.end());
  std::sort(sorted.begin(), sorted.end());
  // Nudge down before ceil so 0.8 * 10 lands on 8, not 9.
  const double need = quantile * static_cast<double>(sorted.size());
  std::size_t count = static_cast<std::size_t>(std::ceil(need - 1e-9));
  count = std::clamp<std::size_t>(count, 1, sorted.size());
  return sorted[count - 1];
}

MaxLens choose_max_lens(std::span<const Example> corpus, double quantile) {
  std::vector<std::size_t> ctx, resp;
  for (const Example& ex : corpus) {
    ctx.push_back(split_whitespace(ex.context).size() + 1);
    for (const std::string& c : ex.candidates) {
      resp.push_back(split_whitespace(c).size() + 1);
    }
  }
  return {std::max<std::size_t>(2, choose_max_len(ctx, quantile)),
          std::max<std::size_t>(2, choose_max_len(resp, quantile))};
}

std::vector<RankingSample> to_samples(std::span<const Example> examples,
                                      const Vocab& vocab, MaxLens lens) {
  std::vector<RankingSample> out;
  out.reserve(examples.size());
  for (const Example& ex : examples) {
    RankingSample s;
    s.id = ex.id;
    s.gold = ex.gold;
    s.context = tokenize(ex.context, vocab, lens.context, Side::kContext);
    for (const std::string& c : ex.candidates) {
      s.candidates.push_back(tokenize(c, vocab, lens.response, Side::kResponse));
    }
    out.push_back(std::move(s));
  }
  return out;
}

// --- synthetic corpus --------------------------------------------------------

void validate(const SyntheticSpec& spec) {
  if (spec.vocab_size == 0 || spec.topic_count == 0 ||
      spec.tokens_per_turn == 0 || spec.turns_per_context == 0 ||
      spec.response_tokens == 0 || spec.train_size == 0 ||
      spec.valid_size == 0 || spec.test_size == 0) {
    throw ConfigError("synthetic spec sizes must all be positive");
  }
  if (spec.candidate_count < 2) {
    throw ConfigError("synthetic spec needs candidate_count >= 2");
  }
  if (spec.topic_count < 2) {
    throw ConfigError("distractors need at least 2 topics");
  }
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate < 1.0)) {
    throw ConfigError("noise_rate must lie in [0, 1)");
  }
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open synthetic spec " + path.string());
  SyntheticSpec spec;
  try {
    const auto j = nlohmann::json::parse(in);
    auto read = [&](const char* key, auto& field) {
      if (auto it = j.find(key); it != j.end()) it->get_to(field);
    };
    read("vocab_size", spec.vocab_size);
    read("topic_count", spec.topic_count);
    read("tokens_per_turn", spec.tokens_per_turn);
    read("turns_per_context", spec.turns_per_context);
    read("response_tokens", spec.response_tokens);
    read("candidate_count", spec.candidate_count);
    read("train_size", spec.train_size);
    read("valid_size", spec.valid_size);
    read("test_size", spec.test_size);
    read("noise_rate", spec.noise_rate);
    read("seed", spec.seed);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("synthetic spec " + path.string() + ": " + e.what());
  }
  validate(spec);
  return spec;
}

void save_synthetic_spec(const std::filesystem::path& path,
                         const SyntheticSpec& spec) {
  ordered_json j;
  j["vocab_size"] = spec.vocab_size;
  j["topic_count"] = spec.topic_count;
  j["tokens_per_turn"] = spec.tokens_per_turn;
  j["turns_per_context"] = spec.turns_per_context;
  j["response_tokens"] = spec.response_tokens;
  j["candidate_count"] = spec.candidate_count;
  j["train_size"] = spec.train_size;
  j["valid_size"] = spec.valid_size;
  j["test_size"] = spec.test_size;
  j["noise_rate"] = spec.noise_rate;
  j["seed"] = spec.seed;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write synthetic spec " + path.string());
  out << j.dump(2) << '\n';
}

DatasetSplits generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  if (spec.candidate_count - 1 > spec.topic_count - 1) {
    std::clog << "warning: " << spec.candidate_count - 1
              << " distractors but only " << spec.topic_count - 1
              << " other topics; distractor topics will repeat\n";
  }
  Rng rng(spec.seed);
  TextSampler sampler(spec, rng);
  std::uniform_int_distribution<std::size_t> pick_topic(0,
                                                        spec.topic_count - 1);
  std::uniform_int_distribution<std::size_t> pick_gold(
      0, spec.candidate_count - 1);
  std::unordered_set<std::string> seen_contexts;

  auto make_split = [&](const char* prefix, std::size_t count) {
    std::vector<Example> out;
    out.reserve(count);
    const std::size_t max_attempts = 100 * count + 1000;
    std::size_t attempts = 0;
    while (out.size() < count) {
      if (++attempts > max_attempts) {
        throw DataError(
            "synthetic spec cannot produce enough distinct contexts");
      }
      const std::size_t topic = pick_topic(rng);
      std::string context;
      std::vector<std::size_t> context_words;
      for (std::size_t t = 0; t < spec.turns_per_context; ++t) {
        const auto turn = sampler.words(topic, spec.tokens_per_turn);
        if (t) context += std::string(" ") + kTurnToken + " ";
        context += sampler.text(turn);
        context_words.insert(context_words.end(), turn.begin(), turn.end());
      }
      Example ex;
      ex.gold = pick_gold(rng);
      for (std::size_t c = 0; c < spec.candidate_count; ++c) {
        if (c == ex.gold) {
          ex.candidates.push_back(sampler.text(
              sampler.words(topic, spec.response_tokens, context_words)));
          continue;
        }
        std::size_t t = topic;
        while (t == topic) t = pick_topic(rng);
        ex.candidates.push_back(
            sampler.text(sampler.words(t, spec.response_tokens)));
      }
      if (!seen_contexts.insert(context).second) continue;
      std::ostringstream id;
      id << prefix << '-' << out.size();
      ex.id = id.str();
      ex.context = std::move(context);
      out.push_back(std::move(ex));
    }
    return out;
  };

  DatasetSplits splits;
  splits.train = make_split("train", spec.train_size);
  splits.valid = make_split("valid", spec.valid_size);
  splits.test = make_split("test", spec.test_size);
  return splits;
}

}  // namespace kdrank
