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

#include "okgit/config.hpp"

#include <sstream>

#include "okgit/common.hpp"

namespace okgit {

namespace {

const char *np_init_name(NpInit v) {
  switch (v) {
    case NpInit::kRandom: return "random";
    case NpInit::kLm: return "lm";
    case NpInit::kLmProj: return "lm-proj";
  }
  throw Error("bad np_init");
}

NpInit np_init_from_name(const std::string &s) {
  if (s == "random") return NpInit::kRandom;
  if (s == "lm") return NpInit::kLm;
  if (s == "lm-proj") return NpInit::kLmProj;
  throw Error("unknown np_init: " + s);
}

const char *word_init_name(WordInit v) {
  return v == WordInit::kRandom ? "random" : "lm";
}

WordInit word_init_from_name(const std::string &s) {
  if (s == "random") return WordInit::kRandom;
  if (s == "lm") return WordInit::kLm;
  throw Error("unknown word_init: " + s);
}

}  // namespace

TypeScoreVariant type_score_variant_from_name(const std::string &name) {
  if (name == "euclid") return TypeScoreVariant::kEuclid;
  if (name == "dot") return TypeScoreVariant::kDot;
  throw Error("unknown type_score_variant: " + name);
}

const char *type_score_variant_name(TypeScoreVariant v) {
  return v == TypeScoreVariant::kEuclid ? "euclid" : "dot";
}

void ModelConfig::validate() const {
  if (d_e <= 0 || d_r <= 0 || d_tau <= 0) throw Error("dimensions must be positive");
  if (reshape_rows * reshape_cols != d_e) {
    throw Error("reshape geometry must factor d_e exactly");
  }
  // the relation encoding is reshaped with the same column width
  if (d_r % reshape_cols != 0) {
    throw Error("d_r must be divisible by the reshape column count");
  }
  if (gamma < 0.0 || lambda < 0.0) throw Error("gamma/lambda must be nonnegative");
  if (conv_kernel <= 0 || conv_filters <= 0) throw Error("bad conv geometry");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
    throw Error("label_smoothing must lie in [0, 1)");
  }
}

nlohmann::json ModelConfig::to_json() const {
  nlohmann::json j;
  j["d_e"] = d_e;
  j["d_r"] = d_r;
  j["type_dim"] = d_tau;
  j["d_b"] = d_b;
  j["reshape_rows"] = reshape_rows;
  j["reshape_cols"] = reshape_cols;
  j["conv_filters"] = conv_filters;
  j["conv_kernel"] = conv_kernel;
  j["input_dropout"] = input_dropout;
  j["feature_dropout"] = feature_dropout;
  j["hidden_dropout"] = hidden_dropout;
  j["gamma"] = gamma;
  j["type_score_variant"] = type_score_variant_name(type_variant);
  j["lambda"] = lambda;
  j["learning_rate"] = learning_rate;
  j["batch_queries"] = batch_queries;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["label_smoothing"] = label_smoothing;
  j["seed"] = seed;
  j["provider_id"] = provider_id;
  j["np_init"] = np_init_name(np_init);
  j["word_init"] = word_init_name(word_init);
  j["np_init_file"] = np_init_file;
  j["word_init_file"] = word_init_file;
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json &j) {
  ModelConfig c;
  c.d_e = j.value("d_e", c.d_e);
  c.d_r = j.value("d_r", c.d_r);
  c.d_tau = j.value("type_dim", c.d_tau);
  c.d_b = j.value("d_b", c.d_b);
  c.reshape_rows = j.value("reshape_rows", c.reshape_rows);
  c.reshape_cols = j.value("reshape_cols", c.reshape_cols);
  c.conv_filters = j.value("conv_filters", c.conv_filters);
  c.conv_kernel = j.value("conv_kernel", c.conv_kernel);
  c.input_dropout = j.value("input_dropout", c.input_dropout);
  c.feature_dropout = j.value("feature_dropout", c.feature_dropout);
  c.hidden_dropout = j.value("hidden_dropout", c.hidden_dropout);
  c.gamma = j.value("gamma", c.gamma);
  c.type_variant = type_score_variant_from_name(
      j.value("type_score_variant", std::string("euclid")));
  c.lambda = j.value("lambda", c.lambda);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_queries = j.value("batch_queries", c.batch_queries);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.label_smoothing = j.value("label_smoothing", c.label_smoothing);
  c.seed = j.value("seed", std::uint64_t{0});
  c.provider_id = j.value("provider_id", std::string());
  c.np_init = np_init_from_name(j.value("np_init", std::string("random")));
  c.word_init = word_init_from_name(j.value("word_init", std::string("random")));
  c.np_init_file = j.value("np_init_file", std::string());
  c.word_init_file = j.value("word_init_file", std::string());
  return c;
}

std::string ModelConfig::key() const {
  std::ostringstream os;
  os << "dtau=" << d_tau << ",lambda=" << lambda << ",gamma=" << gamma
     << ",provider=" << provider_id << ",variant="
     << type_score_variant_name(type_variant) << ",seed=" << seed;
  return os.str();
}

}  // namespace okgit
