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

#ifndef OKGIT_ENCODER_H_
#define OKGIT_ENCODER_H_

#include <Eigen/Sparse>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "okgit/config.hpp"
#include "okgit/dataset.hpp"
#include "okgit/nn.hpp"
#include "okgit/params_io.hpp"

namespace okgit {

// Whitespace token vocabulary for the phrase encoder; id 0 is the shared
// trainable slot for out-of-vocabulary words.
struct WordVocab {
  static constexpr const char *kUnk = "<unk>";

  std::vector<std::string> words;  // words[0] == kUnk
  std::unordered_map<std::string, int> index;

  static WordVocab build(const std::vector<std::string> &phrases);
  int id(const std::string &word) const;
  std::size_t size() const { return words.size(); }

  void save(const std::filesystem::path &path) const;
  static WordVocab load(const std::filesystem::path &path);
};

// Row-averaging operator that realizes canonicalization-cluster aggregation:
// encoded NP i = mean of raw rows over i's cluster members.
class ClusterAggregator {
 public:
  explicit ClusterAggregator(const ClusterMap &clusters);

  // A * raw
  Mat encode(const Mat &raw) const { return op_ * raw; }
  // A^T * d_encoded
  Mat backward(const Mat &d_encoded) const { return op_.transpose() * d_encoded; }

  Eigen::Index size() const { return op_.rows(); }

 private:
  Eigen::SparseMatrix<double> op_;
};

// All trainable parameters plus batch-norm buffers.
struct ModelParams {
  ModelConfig cfg;
  int num_nps = 0;
  int num_words = 0;

  Tensor np_emb;    // num_nps x d_e (x source dim when np_proj is active)
  Tensor np_proj;   // d_e x source dim; empty unless cfg.np_init == kLmProj
  Tensor word_emb;  // num_words x d_e

  GruCell gru_fwd, gru_bwd;  // d_e -> d_r each direction
  Tensor rp_proj_w;          // d_r x 2*d_r
  Tensor rp_proj_b;          // d_r x 1

  BatchNorm bn0;   // stacked input, single channel
  Conv2d conv;
  BatchNorm bn1;   // conv channels
  Tensor fc_w;     // d_e x flat_dim
  Tensor fc_b;     // d_e x 1
  BatchNorm bn2;   // d_e features

  Tensor P;    // d_tau x d_e
  Tensor P_B;  // d_tau x d_b

  // Allocates and initializes every tensor from cfg.seed. Optional init
  // matrices override the random embedding tables.
  void build(const ModelConfig &config, int nps, int words,
             const Mat *np_init_vectors = nullptr,
             const Mat *word_init_vectors = nullptr);

  std::vector<ParamRef> trainable();
  std::vector<BufferRef> buffers();
  void zero_grads();

  int image_rows() const;  // stacked image height
  int conv_positions() const;
  int flat_dim() const;

  void save(const std::filesystem::path &params_bin) const;
  void load(const std::filesystem::path &params_bin);
};

// ---------------------------------------------------------------------------
// Relation-phrase encoder
// ---------------------------------------------------------------------------

struct RpTrace {
  std::vector<int> word_ids;
  GruTrace fwd, bwd;
  Vec concat;  // [h_fwd ; h_bwd]
};

// Bidirectional recurrence over the phrase tokens; final states of both
// directions concatenated and linearly projected to d_r.
Vec rp_encode_forward(const ModelParams &p, const std::vector<int> &word_ids,
                      RpTrace *trace);
// Accumulates gradients into the recurrent cells, the projection, and the
// word-embedding rows used by the phrase.
void rp_encode_backward(ModelParams &p, const RpTrace &trace, const Vec &d_out);

// ---------------------------------------------------------------------------
// Convolutional predictor
// ---------------------------------------------------------------------------

struct ConvTrace {
  BatchNormTrace bn0_tr;
  DropoutTrace inp_drop;
  Mat patches;           // (B*positions) x k*k, from the post-dropout image
  BatchNormTrace bn1_tr;
  Mat relu1;             // activations after first relu
  DropoutTrace feat_drop;
  Mat flat;              // B x flat_dim
  DropoutTrace hid_drop;
  BatchNormTrace bn2_tr;
  Mat relu2;             // == returned t_C
};

// Stacks the reshaped head and relation encodings, runs the convolution
// stack, and returns the candidate tail vectors t_C, one row per sample.
Mat conv_predict_forward(ModelParams &p, const Mat &head_enc, const Mat &rel_enc,
                         Mode mode, bool update_running, Rng &rng,
                         ConvTrace *trace);

struct ConvInputGrads {
  Mat d_head;  // B x d_e
  Mat d_rel;   // B x d_r
};

ConvInputGrads conv_predict_backward(ModelParams &p, const ConvTrace &trace,
                                     const Mat &d_tc);

// ---------------------------------------------------------------------------
// Whole-graph encoder facade (eval mode)
// ---------------------------------------------------------------------------

// Binds parameters to a graph: resolves cluster aggregation and phrase
// tokenization, and exposes the deterministic scoring primitives.
class Encoder {
 public:
  Encoder(const ModelParams &params, const OpenKG &kg, const WordVocab &words);

  Vec encode_np(NpId np) const;
  Vec encode_rp(RpId rp) const;
  Vec predict_tail_vector(NpId head, RpId rp) const;
  double score_pred(const Vec &t_c, NpId tail) const;

  // Raw NP rows after cluster aggregation (and optional projection), one row
  // per NP. Recomputed on demand; cache at call sites when params are frozen.
  Mat encoded_np_matrix() const;

  std::vector<int> rp_word_ids(RpId rp) const;

  const ModelParams &params() const { return params_; }
  const ClusterAggregator &aggregator() const { return agg_; }
  const WordVocab &word_vocab() const { return words_; }
  const OpenKG &kg() const { return kg_; }

 private:
  const ModelParams &params_;
  const OpenKG &kg_;
  const WordVocab &words_;
  ClusterAggregator agg_;
};

// Source rows prior to cluster aggregation: the embedding table itself, or
// its projection when the table holds frozen language-model vectors.
Mat np_source_matrix(const ModelParams &p);

}  // namespace okgit

#endif  // OKGIT_ENCODER_H_
