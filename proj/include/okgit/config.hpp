// Copyright 2026 The OKGIT Authors.
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

#ifndef OKGIT_CONFIG_H_
#define OKGIT_CONFIG_H_

#include <cstdint>
#include <string>

#include <json.hpp>

namespace okgit {

enum class TypeScoreVariant { kEuclid, kDot };

TypeScoreVariant type_score_variant_from_name(const std::string &name);
const char *type_score_variant_name(TypeScoreVariant v);

enum class NpInit { kRandom, kLm, kLmProj };
enum class WordInit { kRandom, kLm };

// Every knob of one experiment; serialized verbatim into checkpoints so a
// config plus a seed reproduces a run.
struct ModelConfig {
  // embedding dimensions
  int d_e = 300;
  int d_r = 300;
  int d_tau = 300;
  int d_b = 0;  // context-vector dimension, bound from the provider/cache

  // convolutional predictor geometry (d_e == reshape_rows * reshape_cols)
  int reshape_rows = 15;
  int reshape_cols = 20;
  int conv_filters = 32;
  int conv_kernel = 3;
  double input_dropout = 0.2;
  double feature_dropout = 0.3;
  double hidden_dropout = 0.2;

  // score composition
  double gamma = 0.0;
  TypeScoreVariant type_variant = TypeScoreVariant::kEuclid;

  // loss and optimization
  double lambda = 0.0;
  double learning_rate = 1e-3;
  int batch_queries = 128;
  int max_epochs = 500;
  int patience = 20;  // stagnant validation checks before early stop
  double label_smoothing = 0.1;
  std::uint64_t seed = 0;

  std::string provider_id;

  NpInit np_init = NpInit::kRandom;
  WordInit word_init = WordInit::kRandom;
  std::string np_init_file;    // tensors for np_init != random
  std::string word_init_file;  // tensors for word_init != random

  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json &j);

  // Stable textual identity used for leaderboard keys and tie-breaking.
  std::string key() const;
};

}  // namespace okgit

#endif  // OKGIT_CONFIG_H_
