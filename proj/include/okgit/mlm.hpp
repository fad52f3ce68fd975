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

#ifndef OKGIT_MLM_H_
#define OKGIT_MLM_H_

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "okgit/wordpiece.hpp"

namespace okgit {

using MatF = Eigen::MatrixXf;
using VecF = Eigen::VectorXf;

struct MlmConfig {
  int vocab_size = 0;
  int hidden_size = 0;
  int num_layers = 0;
  int num_heads = 0;
  int intermediate_size = 0;
  int max_position = 512;
  float layer_norm_eps = 1e-12f;
  bool lowercase = true;
  std::string model_name;  // reported as the provider id suffix

  void validate() const;
};

// Frozen bidirectional transformer with a masked-token prediction head.
// Inference only; weights come from a tensor file produced by the exporter
// script or from the in-memory factory.
class MlmModel {
 public:
  MlmModel(MlmConfig cfg, WordPieceTokenizer tokenizer,
           std::map<std::string, MatF> weights);

  // Model directory: config.json, params.bin, vocab.txt.
  static MlmModel load(const std::filesystem::path &dir);

  // Randomly initialized weights; useful for pipeline tests where only
  // shape/determinism matters.
  static MlmModel random(MlmConfig cfg, WordPieceTokenizer tokenizer,
                         std::uint64_t seed);

  // Final-layer hidden states, one row per input token.
  MatF encode(const std::vector<std::int32_t> &token_ids) const;

  // Vocabulary scores of the prediction head for one hidden state.
  VecF vocab_logits(const VecF &hidden) const;

  const WordPieceTokenizer &tokenizer() const { return tokenizer_; }
  const MlmConfig &config() const { return cfg_; }
  int hidden_size() const { return cfg_.hidden_size; }

 private:
  const MatF &weight(const std::string &name) const;

  MlmConfig cfg_;
  WordPieceTokenizer tokenizer_;
  std::map<std::string, MatF> w_;
};

}  // namespace okgit

#endif  // OKGIT_MLM_H_
