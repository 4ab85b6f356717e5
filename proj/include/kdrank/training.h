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

// Losses, Adam, teacher-logit caching and the training loop.
//
// Training is two-phase: a teacher is trained on gold labels, its logits
// over every training example's explicit candidate list are cached, and a
// student is then trained on
//
//   L = alpha * L_ce + (1 - alpha) * L_distill
//
// where L_ce uses in-batch negatives (bi and enhanced heads) or the explicit
// candidate list (plain cross), and L_distill is the mean squared difference
// between cached teacher logits and the student's logits over the same
// explicit candidates.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kdrank/eval.h"
#include "kdrank/heads.h"
#include "kdrank/params.h"

namespace kdrank {

enum class NegativesMode { kInBatch, kExplicit };

std::string to_string(NegativesMode mode);
NegativesMode negatives_mode_from_string(const std::string& name);

// Learning rates used for pre-trained transformer fine-tuning and for the
// randomly initialised BiLSTM.
inline constexpr double kTransformerLearningRate = 5e-5;
inline constexpr double kBiLstmLearningRate = 1e-3;

struct TrainConfig {
  double alpha = 0.5;
  double lr = kTransformerLearningRate;
  std::size_t batch_size = 8;
  // Upper bound; early stopping may end training sooner.
  std::size_t epochs = 20;
  std::size_t patience = 3;
  bool early_stopping = true;
  std::uint64_t seed = 0;
  NegativesMode negatives_mode = NegativesMode::kInBatch;
  // Distractors sampled per example for explicit-candidate training; 0 uses
  // the whole list.
  std::size_t explicit_negatives = 0;
  double clip_norm = 1.0;
  // Divide the squared logit distance by the candidate count.
  bool normalize_distill = true;
  // Compare logits after removing each list's mean. Cross entropy leaves a
  // teacher's per-list offset arbitrary, so this matches only the part of
  // the logits that orders candidates.
  bool center_distill = false;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

TrainConfig default_train_config(EncoderKind encoder);
void validate(const TrainConfig& config);

// -log softmax(scores)[target].
Tensor ce_loss(const Tensor& scores, std::size_t target);
// ||teacher - student||^2, divided by K when normalize is set. With center,
// both vectors have their mean subtracted first.
Tensor distill_loss(const Tensor& teacher, const Tensor& student,
                    bool normalize = true, bool center = false);
double combined_loss(double alpha, double l_ce, double l_distill);
Tensor combined_loss(double alpha, const Tensor& l_ce, const Tensor& l_distill);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

AdamState make_adam_state(const ParamSet& params);
// One bias-corrected Adam update from the gradients stored in params.
void adam_step(ParamSet& params, AdamState& state, double lr);
// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(ParamSet& params, double max_norm);

struct DistillationRecord {
  std::string id;
  std::vector<double> teacher_logits;

  friend bool operator==(const DistillationRecord&,
                         const DistillationRecord&) = default;
};

// One record per sample, in sample order, computed without gradients.
std::vector<DistillationRecord> cache_teacher_logits(
    const Model& teacher, std::span<const RankingSample> samples);

// JSON lines: {"id": "...", "teacher_logits": [...]}.
void save_records(const std::filesystem::path& path,
                  std::span<const DistillationRecord> records);
std::vector<DistillationRecord> load_records(const std::filesystem::path& path);

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_recall_at_1 = 0.0;
  double valid_mrr = 0.0;

  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  // Epoch whose parameters the model holds after train(); 0 when no
  // validation set was given and the final epoch's weights are kept.
  std::size_t best_epoch = 0;
  Metrics best_valid;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Trains model in place. With a validation set, the parameters of the epoch
// with the best validation R@1 are restored at the end. teacher_records must
// cover every training sample id when supplied and alpha < 1.
TrainHistory train(Model& model, std::span<const RankingSample> train_set,
                   std::span<const RankingSample> valid_set,
                   const TrainConfig& config,
                   std::span<const DistillationRecord> teacher_records = {},
                   const EpochCallback& on_epoch = {});

// --- checkpoints -------------------------------------------------------------

struct Checkpoint {
  Model model;
  TrainConfig train_config;
  // Seed the model weights were initialised from.
  std::uint64_t init_seed = 0;
  std::size_t context_max_len = 0;
  std::size_t response_max_len = 0;
  Metrics valid_metrics;
  std::vector<EpochStats> history;
};

// Versioned JSON container; doubles are written in shortest round-trip form.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace kdrank
