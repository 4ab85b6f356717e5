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

#include "kdrank/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <unordered_map>

#include "kdrank/errors.h"
#include "kdrank/serialization.h"

namespace kdrank {

namespace {

constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointFormat = "kdrank-checkpoint";

using RecordMap = std::unordered_map<std::string, const DistillationRecord*>;

Tensor mean_of(const std::vector<Tensor>& terms) {
  return mean(concat(std::span<const Tensor>(terms)));
}

// Which candidates an explicit-candidate CE term scores, and where the gold
// one sits among them.
struct CandidateSelection {
  std::vector<std::size_t> indices;
  std::size_t target = 0;
};

CandidateSelection select_candidates(const RankingSample& s,
                                     std::size_t negatives, Rng& rng) {
  const std::size_t k = s.candidates.size();
  CandidateSelection sel;
  if (negatives == 0 || negatives >= k - 1) {
    sel.indices.resize(k);
    std::iota(sel.indices.begin(), sel.indices.end(), 0);
    sel.target = s.gold;
    return sel;
  }
  std::vector<std::size_t> distractors;
  for (std::size_t i = 0; i < k; ++i) {
    if (i != s.gold) distractors.push_back(i);
  }
  for (std::size_t i = 0; i < negatives; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, distractors.size() - 1);
    std::swap(distractors[i], distractors[pick(rng)]);
  }
  sel.indices.push_back(s.gold);
  sel.indices.insert(sel.indices.end(), distractors.begin(),
                     distractors.begin() + negatives);
  sel.target = 0;
  return sel;
}

class BatchObjective {
 public:
  BatchObjective(const Model& model, const TrainConfig& config,
                 const RecordMap* records)
      : model_(model),
        config_(config),
        records_(records),
        use_distill_(records != nullptr && config.alpha < 1.0),
        use_ce_(config.alpha > 0.0 || !use_distill_) {}

  Tensor operator()(std::span<const RankingSample* const> batch, Rng& rng) {
    const bool explicit_ce =
        model_.config.head.kind == HeadKind::kPlainCross ||
        config_.negatives_mode == NegativesMode::kExplicit;
    std::vector<CandidateSelection> selections;
    if (explicit_ce) {
      for (const RankingSample* s : batch) {
        selections.push_back(
            select_candidates(*s, config_.explicit_negatives, rng));
      }
    }
    std::vector<Tensor> ce_terms, distill_terms;
    if (model_.config.head.kind == HeadKind::kPlainCross) {
      plain_terms(batch, selections, ce_terms, distill_terms);
    } else {
      separate_terms(batch, selections, explicit_ce, ce_terms, distill_terms);
    }
    // Without teacher logits the objective is plain cross entropy whatever
    // alpha says.
    if (!use_distill_) return mean_of(ce_terms);
    if (!use_ce_) return mean_of(distill_terms);
    return combined_loss(config_.alpha, mean_of(ce_terms),
                         mean_of(distill_terms));
  }

 private:
  Tensor teacher_logits(const RankingSample& s) const {
    const DistillationRecord* rec = records_->at(s.id);
    return Tensor::vector(rec->teacher_logits);
  }

  void separate_terms(std::span<const RankingSample* const> batch,
                      const std::vector<CandidateSelection>& selections,
                      bool explicit_ce, std::vector<Tensor>& ce_terms,
                      std::vector<Tensor>& distill_terms) {
    const std::size_t b = batch.size();
    std::vector<TokenEncodings> contexts, golds;
    contexts.reserve(b);
    golds.reserve(b);
    for (const RankingSample* s : batch) {
      contexts.push_back(encode(model_.encoder, s->context));
      golds.push_back(encode(model_.encoder, s->candidates[s->gold]));
    }
    if (use_ce_ && !explicit_ce) {
      Tensor scores = batch_score_matrix(contexts, golds, model_.head);
      for (std::size_t i = 0; i < b; ++i) {
        ce_terms.push_back(ce_loss(row(scores, i), i));
      }
    }
    if (!(use_ce_ && explicit_ce) && !use_distill_) return;

    for (std::size_t i = 0; i < b; ++i) {
      const RankingSample& s = *batch[i];
      std::vector<std::optional<TokenEncodings>> cands(s.candidates.size());
      cands[s.gold] = golds[i];
      auto encoded = [&](std::size_t c) -> const TokenEncodings& {
        if (!cands[c]) cands[c] = encode(model_.encoder, s.candidates[c]);
        return *cands[c];
      };
      if (use_ce_ && explicit_ce) {
        std::vector<TokenEncodings> chosen;
        for (std::size_t c : selections[i].indices) chosen.push_back(encoded(c));
        ce_terms.push_back(ce_loss(score_candidates(model_, contexts[i], chosen),
                                   selections[i].target));
      }
      if (use_distill_) {
        std::vector<TokenEncodings> all;
        for (std::size_t c = 0; c < s.candidates.size(); ++c) {
          all.push_back(encoded(c));
        }
        distill_terms.push_back(
            distill_loss(teacher_logits(s),
                         score_candidates(model_, contexts[i], all),
                         config_.normalize_distill, config_.center_distill));
      }
    }
  }

  void plain_terms(std::span<const RankingSample* const> batch,
                   const std::vector<CandidateSelection>& selections,
                   std::vector<Tensor>& ce_terms,
                   std::vector<Tensor>& distill_terms) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const RankingSample& s = *batch[i];
      std::vector<std::optional<Tensor>> scores(s.candidates.size());
      auto scored = [&](std::size_t c) -> const Tensor& {
        if (!scores[c]) {
          scores[c] = score_plain_cross(
              encode(model_.encoder,
                     joint_sequence(s.context, s.candidates[c])),
              model_.head);
        }
        return *scores[c];
      };
      if (use_ce_) {
        std::vector<Tensor> chosen;
        for (std::size_t c : selections[i].indices) chosen.push_back(scored(c));
        ce_terms.push_back(ce_loss(concat(std::span<const Tensor>(chosen)),
                                   selections[i].target));
      }
      if (use_distill_) {
        std::vector<Tensor> all;
        for (std::size_t c = 0; c < s.candidates.size(); ++c) {
          all.push_back(scored(c));
        }
        distill_terms.push_back(distill_loss(
            teacher_logits(s), concat(std::span<const Tensor>(all)),
            config_.normalize_distill, config_.center_distill));
      }
    }
  }

  const Model& model_;
  const TrainConfig& config_;
  const RecordMap* records_;
  bool use_distill_;
  bool use_ce_;
};

nlohmann::json params_to_json(const ParamSet& params) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [name, t] : params) {
    out.push_back({{"name", name},
                   {"shape", t.shape()},
                   {"values", std::vector<double>(t.data().begin(),
                                                  t.data().end())}});
  }
  return out;
}

void params_from_json(const nlohmann::json& j, ParamSet& params) {
  if (!j.is_array() || j.size() != params.size()) {
    throw DataError("checkpoint parameter list does not match architecture");
  }
  std::size_t i = 0;
  for (auto& [name, t] : params) {
    const auto& entry = j[i++];
    if (entry.at("name").get<std::string>() != name ||
        entry.at("shape").get<Shape>() != t.shape()) {
      throw DataError("checkpoint parameter '" +
                      entry.at("name").get<std::string>() +
                      "' does not match expected '" + name + "' " +
                      t.shape_string());
    }
    const auto values = entry.at("values").get<std::vector<double>>();
    if (values.size() != t.numel()) {
      throw DataError("checkpoint parameter '" + name + "' has " +
                      std::to_string(values.size()) + " values");
    }
    std::copy(values.begin(), values.end(), t.mutable_data().begin());
  }
}

}  // namespace

std::string to_string(NegativesMode mode) {
  return mode == NegativesMode::kInBatch ? "in_batch" : "explicit";
}

NegativesMode negatives_mode_from_string(const std::string& name) {
  if (name == "in_batch") return NegativesMode::kInBatch;
  if (name == "explicit") return NegativesMode::kExplicit;
  throw ConfigError("unknown negatives mode '" + name + "'");
}

TrainConfig default_train_config(EncoderKind encoder) {
  TrainConfig c;
  c.lr = encoder == EncoderKind::kBiLstm ? kBiLstmLearningRate
                                         : kTransformerLearningRate;
  return c;
}

void validate(const TrainConfig& config) {
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1], got " +
                      std::to_string(config.alpha));
  }
  if (!(config.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (config.epochs == 0) throw ConfigError("epochs must be positive");
  if (!(config.clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
}

Tensor ce_loss(const Tensor& scores, std::size_t target) {
  if (target >= scores.numel()) {
    throw ContractError("ce_loss target " + std::to_string(target) +
                        " out of range for " + std::to_string(scores.numel()) +
                        " scores");
  }
  return cross_entropy(scores, target);
}

Tensor distill_loss(const Tensor& teacher, const Tensor& student,
                    bool normalize, bool center) {
  if (teacher.shape() != student.shape()) {
    throw DimensionError("distill_loss: teacher " + teacher.shape_string() +
                         " vs student " + student.shape_string());
  }
  Tensor diff = sub(teacher, student);
  Tensor sq = sum(hadamard(diff, diff));
  if (center) {
    // sum((d - mean d)^2) = sum(d^2) - (sum d)^2 / K
    Tensor total = sum(diff);
    sq = sub(sq, scale(hadamard(total, total),
                       1.0 / static_cast<double>(teacher.numel())));
  }
  return normalize ? scale(sq, 1.0 / static_cast<double>(teacher.numel()))
                   : sq;
}

double combined_loss(double alpha, double l_ce, double l_distill) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1]");
  }
  return alpha * l_ce + (1.0 - alpha) * l_distill;
}

Tensor combined_loss(double alpha, const Tensor& l_ce,
                     const Tensor& l_distill) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1]");
  }
  // The degenerate mixtures return one term untouched so that a weightless
  // term contributes nothing at all, not even a signed zero.
  if (alpha == 1.0) return l_ce;
  if (alpha == 0.0) return l_distill;
  return add(scale(l_ce, alpha), scale(l_distill, 1.0 - alpha));
}

AdamState make_adam_state(const ParamSet& params) {
  AdamState state;
  for (const auto& [name, t] : params) {
    state.m.emplace_back(t.numel(), 0.0);
    state.v.emplace_back(t.numel(), 0.0);
  }
  return state;
}

void adam_step(ParamSet& params, AdamState& state, double lr) {
  if (state.m.size() != params.size()) {
    throw DimensionError("Adam state tracks " + std::to_string(state.m.size()) +
                         " tensors, parameters have " +
                         std::to_string(params.size()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  std::size_t i = 0;
  for (auto& [name, p] : params) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    ++i;
    if (m.size() != p.numel()) {
      throw DimensionError("Adam moments for '" + name + "' have wrong size");
    }
    auto w = p.mutable_data();
    auto g = p.grad();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      w[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

double clip_grad_norm(ParamSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, p] : params) {
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& [name, p] : params) {
      for (double& g : p.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

std::vector<DistillationRecord> cache_teacher_logits(
    const Model& teacher, std::span<const RankingSample> samples) {
  NoGradGuard no_grad;
  std::vector<DistillationRecord> records;
  records.reserve(samples.size());
  for (const RankingSample& s : samples) {
    Tensor logits = score_candidates(teacher, s.context, s.candidates);
    if (logits.numel() != s.candidates.size()) {
      throw DataError("teacher produced " + std::to_string(logits.numel()) +
                      " logits for example '" + s.id + "' with " +
                      std::to_string(s.candidates.size()) + " candidates");
    }
    records.push_back({s.id, {logits.data().begin(), logits.data().end()}});
  }
  return records;
}

void save_records(const std::filesystem::path& path,
                  std::span<const DistillationRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write records " + path.string());
  for (const DistillationRecord& r : records) {
    out << nlohmann::json{{"id", r.id}, {"teacher_logits", r.teacher_logits}}
               .dump()
        << '\n';
  }
}

std::vector<DistillationRecord> load_records(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open records " + path.string());
  std::vector<DistillationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      records.push_back({j.at("id").get<std::string>(),
                         j.at("teacher_logits").get<std::vector<double>>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    }
    for (double z : records.back().teacher_logits) {
      if (!std::isfinite(z)) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": non-finite teacher logit");
      }
    }
  }
  return records;
}

TrainHistory train(Model& model, std::span<const RankingSample> train_set,
                   std::span<const RankingSample> valid_set,
                   const TrainConfig& config,
                   std::span<const DistillationRecord> teacher_records,
                   const EpochCallback& on_epoch) {
  validate(config);
  if (train_set.empty()) throw ContractError("empty training set");

  RecordMap records;
  const bool distilling = !teacher_records.empty() && config.alpha < 1.0;
  if (distilling) {
    for (const DistillationRecord& r : teacher_records) records[r.id] = &r;
    for (const RankingSample& s : train_set) {
      auto it = records.find(s.id);
      if (it == records.end()) {
        throw ConfigError("no teacher logits for training example '" + s.id +
                          "'");
      }
      if (it->second->teacher_logits.size() != s.candidates.size()) {
        throw DataError("teacher logits for '" + s.id + "' cover " +
                        std::to_string(it->second->teacher_logits.size()) +
                        " candidates, example has " +
                        std::to_string(s.candidates.size()));
      }
    }
  }

  ParamSet params = model.parameters();
  AdamState adam = make_adam_state(params);
  BatchObjective objective(model, config, distilling ? &records : nullptr);
  Rng rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainHistory history;
  ParamSet best;
  double best_r1 = -1.0;
  std::size_t stale_epochs = 0;
  Tape& tape = current_tape();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const RankingSample*> batch;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&train_set[order[i]]);
      }
      tape.clear();
      params.zero_grad();
      Tensor loss = objective(batch, rng);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        tape.clear();
        throw DivergenceError("non-finite loss at epoch " +
                              std::to_string(epoch) + ", batch " +
                              std::to_string(batches + 1));
      }
      backward(loss);
      tape.clear();
      clip_grad_norm(params, config.clip_norm);
      adam_step(params, adam, config.lr);
      loss_total += value;
      ++batches;
    }

    EpochStats stats{epoch, loss_total / static_cast<double>(batches), 0.0,
                     0.0};
    if (!valid_set.empty()) {
      const auto results = evaluate(model, valid_set);
      stats.valid_recall_at_1 = recall_at_1(results);
      stats.valid_mrr = mrr(results);
    }
    history.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (valid_set.empty()) continue;
    if (stats.valid_recall_at_1 > best_r1) {
      best_r1 = stats.valid_recall_at_1;
      best = params.clone();
      history.best_epoch = epoch;
      history.best_valid = {stats.valid_recall_at_1, stats.valid_mrr,
                            valid_set.size()};
      stale_epochs = 0;
    } else if (config.early_stopping && ++stale_epochs >= config.patience) {
      break;
    }
  }
  if (!valid_set.empty()) params.assign_values(best);
  return history;
}

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& ckpt) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["model"] = ckpt.model.config;
  j["train_config"] = ckpt.train_config;
  j["init_seed"] = ckpt.init_seed;
  j["tokenization"] = {{"context_max_len", ckpt.context_max_len},
                       {"response_max_len", ckpt.response_max_len}};
  j["valid_metrics"] = ckpt.valid_metrics;
  j["history"] = ckpt.history;
  j["params"] = {{"encoder", params_to_json(ckpt.model.encoder.weights)},
                 {"head", params_to_json(ckpt.model.head.weights)}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != kCheckpointFormat) {
    throw DataError(path.string() + " is not a kdrank checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version in " + path.string());
  }
  try {
    Checkpoint ckpt;
    const auto config = j.at("model").get<ModelConfig>();
    ckpt.init_seed = j.at("init_seed").get<std::uint64_t>();
    ckpt.model = init_model(config, ckpt.init_seed);
    params_from_json(j.at("params").at("encoder"), ckpt.model.encoder.weights);
    params_from_json(j.at("params").at("head"), ckpt.model.head.weights);
    ckpt.train_config = j.at("train_config").get<TrainConfig>();
    ckpt.context_max_len =
        j.at("tokenization").at("context_max_len").get<std::size_t>();
    ckpt.response_max_len =
        j.at("tokenization").at("response_max_len").get<std::size_t>();
    ckpt.valid_metrics = j.at("valid_metrics").get<Metrics>();
    ckpt.history = j.at("history").get<std::vector<EpochStats>>();
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace kdrank
