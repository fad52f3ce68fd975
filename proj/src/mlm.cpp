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

#include "okgit/mlm.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "okgit/common.hpp"
#include "okgit/params_io.hpp"

namespace okgit {

namespace {

MatF layer_norm(const MatF &x, const MatF &gamma, const MatF &beta, float eps) {
  MatF y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    float mean = x.row(i).mean();
    float var = (x.row(i).array() - mean).square().mean();
    float inv = 1.0f / std::sqrt(var + eps);
    y.row(i) = ((x.row(i).array() - mean) * inv) * gamma.col(0).transpose().array() +
               beta.col(0).transpose().array();
  }
  return y;
}

inline float gelu(float x) {
  return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752440f));
}

MatF softmax_rows(MatF x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    float m = x.row(i).maxCoeff();
    x.row(i) = (x.row(i).array() - m).exp();
    x.row(i) /= x.row(i).sum();
  }
  return x;
}

}  // namespace

void MlmConfig::validate() const {
  if (vocab_size <= 0 || hidden_size <= 0 || num_layers <= 0 ||
      num_heads <= 0 || intermediate_size <= 0 || max_position <= 0) {
    throw Error("incomplete language-model config");
  }
  if (hidden_size % num_heads != 0) {
    throw Error("hidden size must divide evenly across heads");
  }
}

MlmModel::MlmModel(MlmConfig cfg, WordPieceTokenizer tokenizer,
                   std::map<std::string, MatF> weights)
    : cfg_(std::move(cfg)), tokenizer_(std::move(tokenizer)),
      w_(std::move(weights)) {
  cfg_.validate();
  if (static_cast<int>(tokenizer_.vocab_size()) != cfg_.vocab_size) {
    throw Error("tokenizer vocabulary does not match model config");
  }
}

const MatF &MlmModel::weight(const std::string &name) const {
  auto it = w_.find(name);
  if (it == w_.end()) throw Error("language model is missing tensor: " + name);
  return it->second;
}

MlmModel MlmModel::load(const std::filesystem::path &dir) {
  std::ifstream cfg_in(dir / "config.json");
  if (!cfg_in) throw IoError("missing file: " + (dir / "config.json").string());
  nlohmann::json j = nlohmann::json::parse(cfg_in);
  MlmConfig cfg;
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.hidden_size = j.at("hidden_size").get<int>();
  cfg.num_layers = j.at("num_layers").get<int>();
  cfg.num_heads = j.at("num_heads").get<int>();
  cfg.intermediate_size = j.at("intermediate_size").get<int>();
  cfg.max_position = j.value("max_position", 512);
  cfg.layer_norm_eps = j.value("layer_norm_eps", 1e-12f);
  cfg.lowercase = j.value("lowercase", true);
  cfg.model_name = j.value("model_name", std::string("mlm"));

  WordPieceTokenizer tok =
      WordPieceTokenizer::from_vocab_file(dir / "vocab.txt", cfg.lowercase);

  std::map<std::string, MatF> weights;
  for (const NamedTensor &t : read_params_file(dir / "params.bin")) {
    Eigen::Index rows = t.dims.empty() ? 1 : t.dims[0];
    Eigen::Index cols = t.dims.size() > 1 ? t.dims[1] : 1;
    MatF m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index jx = 0; jx < cols; ++jx) m(i, jx) = t.data[k++];
    }
    weights.emplace(t.name, std::move(m));
  }
  return MlmModel(std::move(cfg), std::move(tok), std::move(weights));
}

MlmModel MlmModel::random(MlmConfig cfg, WordPieceTokenizer tokenizer,
                          std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  std::map<std::string, MatF> w;
  auto randm = [&](const std::string &name, int rows, int cols, float scale) {
    MatF m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        m(i, j) = static_cast<float>(rng.normal(0.0, scale));
      }
    }
    w.emplace(name, std::move(m));
  };
  auto ones = [&](const std::string &name, int rows) {
    w.emplace(name, MatF::Ones(rows, 1));
  };
  auto zeros = [&](const std::string &name, int rows) {
    w.emplace(name, MatF::Zero(rows, 1));
  };

  const int h = cfg.hidden_size;
  randm("embeddings.word", cfg.vocab_size, h, 0.02f);
  randm("embeddings.position", cfg.max_position, h, 0.02f);
  randm("embeddings.token_type", 2, h, 0.02f);
  ones("embeddings.ln.gamma", h);
  zeros("embeddings.ln.beta", h);
  for (int l = 0; l < cfg.num_layers; ++l) {
    std::string p = "layer." + std::to_string(l) + ".";
    for (const char *name : {"attn.q", "attn.k", "attn.v", "attn.out"}) {
      randm(p + name + ".w", h, h, 0.02f);
      zeros(p + name + ".b", h);
    }
    ones(p + "attn_ln.gamma", h);
    zeros(p + "attn_ln.beta", h);
    randm(p + "ffn.w1", cfg.intermediate_size, h, 0.02f);
    zeros(p + "ffn.b1", cfg.intermediate_size);
    randm(p + "ffn.w2", h, cfg.intermediate_size, 0.02f);
    zeros(p + "ffn.b2", h);
    ones(p + "ffn_ln.gamma", h);
    zeros(p + "ffn_ln.beta", h);
  }
  randm("mlm.transform.w", h, h, 0.02f);
  zeros("mlm.transform.b", h);
  ones("mlm.ln.gamma", h);
  zeros("mlm.ln.beta", h);
  zeros("mlm.bias", cfg.vocab_size);
  return MlmModel(std::move(cfg), std::move(tokenizer), std::move(w));
}

MatF MlmModel::encode(const std::vector<std::int32_t> &token_ids) const {
  const int len = static_cast<int>(token_ids.size());
  if (len == 0) throw Error("empty token sequence");
  if (len > cfg_.max_position) {
    throw Error("token sequence exceeds the positional table");
  }
  const int h = cfg_.hidden_size;
  const MatF &word = weight("embeddings.word");
  const MatF &pos = weight("embeddings.position");
  const MatF &type = weight("embeddings.token_type");

  MatF x(len, h);
  for (int i = 0; i < len; ++i) {
    if (token_ids[i] < 0 || token_ids[i] >= cfg_.vocab_size) {
      throw Error("token id out of range");
    }
    x.row(i) = word.row(token_ids[i]) + pos.row(i) + type.row(0);
  }
  x = layer_norm(x, weight("embeddings.ln.gamma"), weight("embeddings.ln.beta"),
                 cfg_.layer_norm_eps);

  const int heads = cfg_.num_heads;
  const int head_dim = h / heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));

  for (int l = 0; l < cfg_.num_layers; ++l) {
    std::string p = "layer." + std::to_string(l) + ".";
    MatF q = x * weight(p + "attn.q.w").transpose();
    q.rowwise() += weight(p + "attn.q.b").col(0).transpose();
    MatF k = x * weight(p + "attn.k.w").transpose();
    k.rowwise() += weight(p + "attn.k.b").col(0).transpose();
    MatF v = x * weight(p + "attn.v.w").transpose();
    v.rowwise() += weight(p + "attn.v.b").col(0).transpose();

    MatF context(len, h);
    for (int head = 0; head < heads; ++head) {
      auto qh = q.middleCols(head * head_dim, head_dim);
      auto kh = k.middleCols(head * head_dim, head_dim);
      auto vh = v.middleCols(head * head_dim, head_dim);
      MatF attn = softmax_rows((qh * kh.transpose()) * scale);
      context.middleCols(head * head_dim, head_dim) = attn * vh;
    }
    MatF attn_out = context * weight(p + "attn.out.w").transpose();
    attn_out.rowwise() += weight(p + "attn.out.b").col(0).transpose();
    x = layer_norm(x + attn_out, weight(p + "attn_ln.gamma"),
                   weight(p + "attn_ln.beta"), cfg_.layer_norm_eps);

    MatF inter = x * weight(p + "ffn.w1").transpose();
    inter.rowwise() += weight(p + "ffn.b1").col(0).transpose();
    inter = inter.unaryExpr([](float a) { return gelu(a); });
    MatF ffn_out = inter * weight(p + "ffn.w2").transpose();
    ffn_out.rowwise() += weight(p + "ffn.b2").col(0).transpose();
    x = layer_norm(x + ffn_out, weight(p + "ffn_ln.gamma"),
                   weight(p + "ffn_ln.beta"), cfg_.layer_norm_eps);
  }
  return x;
}

VecF MlmModel::vocab_logits(const VecF &hidden) const {
  VecF t = weight("mlm.transform.w") * hidden + weight("mlm.transform.b").col(0);
  t = t.unaryExpr([](float a) { return gelu(a); });
  // layer norm over the single vector
  float mean = t.mean();
  float var = (t.array() - mean).square().mean();
  float inv = 1.0f / std::sqrt(var + cfg_.layer_norm_eps);
  VecF normed = ((t.array() - mean) * inv) *
                    weight("mlm.ln.gamma").col(0).array() +
                weight("mlm.ln.beta").col(0).array();
  // decoder shares the input embedding table
  return weight("embeddings.word") * normed + weight("mlm.bias").col(0);
}

}  // namespace okgit
