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

#include "kdrank/serialization.h"

namespace kdrank {

namespace {

template <typename T>
void read_if_present(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

}  // namespace

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"kind", to_string(c.kind)}, {"vocab_size", c.vocab_size},
       {"d", c.d},                  {"n_layers", c.n_layers},
       {"n_heads", c.n_heads},      {"max_len", c.max_len},
       {"ffn_dim", c.ffn_dim}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  if (auto it = j.find("kind"); it != j.end()) {
    c.kind = encoder_kind_from_string(it->get<std::string>());
  }
  read_if_present(j, "vocab_size", c.vocab_size);
  read_if_present(j, "d", c.d);
  read_if_present(j, "n_layers", c.n_layers);
  read_if_present(j, "n_heads", c.n_heads);
  read_if_present(j, "max_len", c.max_len);
  read_if_present(j, "ffn_dim", c.ffn_dim);
}

void to_json(nlohmann::json& j, const HeadConfig& c) {
  j = {{"kind", to_string(c.kind)},
       {"bi_aggregation", to_string(c.bi_aggregation)},
       {"use_submult", c.use_submult},
       {"use_cross_attention", c.use_cross_attention},
       {"use_bias", c.use_bias}};
}

void from_json(const nlohmann::json& j, HeadConfig& c) {
  if (auto it = j.find("kind"); it != j.end()) {
    c.kind = head_kind_from_string(it->get<std::string>());
  }
  if (auto it = j.find("bi_aggregation"); it != j.end()) {
    c.bi_aggregation = aggregation_from_string(it->get<std::string>());
  }
  read_if_present(j, "use_submult", c.use_submult);
  read_if_present(j, "use_cross_attention", c.use_cross_attention);
  read_if_present(j, "use_bias", c.use_bias);
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"encoder", c.encoder}, {"head", c.head}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  read_if_present(j, "encoder", c.encoder);
  read_if_present(j, "head", c.head);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"alpha", c.alpha},
       {"lr", c.lr},
       {"batch_size", c.batch_size},
       {"epochs", c.epochs},
       {"patience", c.patience},
       {"early_stopping", c.early_stopping},
       {"seed", c.seed},
       {"negatives_mode", to_string(c.negatives_mode)},
       {"explicit_negatives", c.explicit_negatives},
       {"clip_norm", c.clip_norm},
       {"normalize_distill", c.normalize_distill},
       {"center_distill", c.center_distill}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  read_if_present(j, "alpha", c.alpha);
  read_if_present(j, "lr", c.lr);
  read_if_present(j, "batch_size", c.batch_size);
  read_if_present(j, "epochs", c.epochs);
  read_if_present(j, "patience", c.patience);
  read_if_present(j, "early_stopping", c.early_stopping);
  read_if_present(j, "seed", c.seed);
  if (auto it = j.find("negatives_mode"); it != j.end()) {
    c.negatives_mode = negatives_mode_from_string(it->get<std::string>());
  }
  read_if_present(j, "explicit_negatives", c.explicit_negatives);
  read_if_present(j, "clip_norm", c.clip_norm);
  read_if_present(j, "normalize_distill", c.normalize_distill);
  read_if_present(j, "center_distill", c.center_distill);
}

void to_json(nlohmann::json& j, const Metrics& m) {
  j = {{"recall_at_1", m.recall_at_1}, {"mrr", m.mrr}, {"count", m.count}};
}

void from_json(const nlohmann::json& j, Metrics& m) {
  read_if_present(j, "recall_at_1", m.recall_at_1);
  read_if_present(j, "mrr", m.mrr);
  read_if_present(j, "count", m.count);
}

void to_json(nlohmann::json& j, const EpochStats& e) {
  j = {{"epoch", e.epoch},
       {"train_loss", e.train_loss},
       {"valid_recall_at_1", e.valid_recall_at_1},
       {"valid_mrr", e.valid_mrr}};
}

void from_json(const nlohmann::json& j, EpochStats& e) {
  read_if_present(j, "epoch", e.epoch);
  read_if_present(j, "train_loss", e.train_loss);
  read_if_present(j, "valid_recall_at_1", e.valid_recall_at_1);
  read_if_present(j, "valid_mrr", e.valid_mrr);
}

}  // namespace kdrank
