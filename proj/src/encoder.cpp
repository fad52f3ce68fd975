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

#include "okgit/encoder.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace okgit {

// ---------------------------------------------------------------------------
// WordVocab
// ---------------------------------------------------------------------------

WordVocab WordVocab::build(const std::vector<std::string> &phrases) {
  std::set<std::string> tokens;
  for (const std::string &p : phrases) {
    for (const std::string &w : split_whitespace(p)) tokens.insert(w);
  }
  tokens.insert(kInverseMarker);  // reserved for inverse relations
  WordVocab v;
  v.words.push_back(kUnk);
  for (const std::string &w : tokens) v.words.push_back(w);
  for (std::size_t i = 0; i < v.words.size(); ++i) {
    v.index.emplace(v.words[i], static_cast<int>(i));
  }
  return v;
}

int WordVocab::id(const std::string &word) const {
  auto it = index.find(word);
  return it == index.end() ? 0 : it->second;
}

void WordVocab::save(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const std::string &w : words) out << w << '\n';
}

WordVocab WordVocab::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing file: " + path.string());
  WordVocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    v.words.push_back(line);
  }
  if (v.words.empty() || v.words[0] != kUnk) {
    throw ValidationError("word vocabulary must start with the unk slot: " +
                          path.string());
  }
  for (std::size_t i = 0; i < v.words.size(); ++i) {
    v.index.emplace(v.words[i], static_cast<int>(i));
  }
  return v;
}

// ---------------------------------------------------------------------------
// ClusterAggregator
// ---------------------------------------------------------------------------

ClusterAggregator::ClusterAggregator(const ClusterMap &clusters) {
  const Eigen::Index n = static_cast<Eigen::Index>(clusters.np_to_cluster.size());
  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index np = 0; np < n; ++np) {
    const auto &members = clusters.cluster_to_nps[clusters.np_to_cluster[np]];
    const double w = 1.0 / static_cast<double>(members.size());
    for (NpId m : members) {
      entries.emplace_back(np, static_cast<Eigen::Index>(m), w);
    }
  }
  op_.resize(n, n);
  op_.setFromTriplets(entries.begin(), entries.end());
  op_.makeCompressed();
}

// ---------------------------------------------------------------------------
// ModelParams
// ---------------------------------------------------------------------------

int ModelParams::image_rows() const {
  return cfg.d_e / cfg.reshape_cols + cfg.d_r / cfg.reshape_cols;
}

int ModelParams::conv_positions() const {
  const int out_rows = image_rows() - cfg.conv_kernel + 1;
  const int out_cols = cfg.reshape_cols - cfg.conv_kernel + 1;
  return out_rows * out_cols;
}

int ModelParams::flat_dim() const { return conv_positions() * cfg.conv_filters; }

void ModelParams::build(const ModelConfig &config, int nps, int words,
                        const Mat *np_init_vectors,
                        const Mat *word_init_vectors) {
  cfg = config;
  cfg.validate();
  num_nps = nps;
  num_words = words;
  if (cfg.d_b <= 0) throw Error("context dimension d_b not set");

  Rng rng(cfg.seed);

  const bool proj = cfg.np_init == NpInit::kLmProj;
  int np_src_dim = cfg.d_e;
  if (cfg.np_init != NpInit::kRandom) {
    if (np_init_vectors == nullptr) {
      throw Error("np_init requires initialization vectors");
    }
    if (np_init_vectors->rows() != nps) {
      throw Error("np init vector count does not match NP count");
    }
    np_src_dim = static_cast<int>(np_init_vectors->cols());
    if (!proj && np_src_dim != cfg.d_e) {
      throw Error("np init dimension must equal d_e unless projecting");
    }
  }

  np_emb.resize(nps, np_src_dim);
  if (cfg.np_init == NpInit::kRandom) {
    init_embedding(np_emb.v, cfg.d_e, rng);
  } else {
    np_emb.v = *np_init_vectors;
  }
  if (proj) {
    np_proj.resize(cfg.d_e, np_src_dim);
    init_xavier_uniform(np_proj.v, np_src_dim, cfg.d_e, rng);
  } else {
    np_proj.resize(0, 0);
  }

  word_emb.resize(words, cfg.d_e);
  if (cfg.word_init == WordInit::kRandom) {
    init_embedding(word_emb.v, cfg.d_e, rng);
  } else {
    if (word_init_vectors == nullptr || word_init_vectors->rows() != words ||
        word_init_vectors->cols() != cfg.d_e) {
      throw Error("word init vectors missing or of wrong shape");
    }
    word_emb.v = *word_init_vectors;
  }

  gru_fwd.resize(cfg.d_e, cfg.d_r);
  gru_fwd.init(rng);
  gru_bwd.resize(cfg.d_e, cfg.d_r);
  gru_bwd.init(rng);
  rp_proj_w.resize(cfg.d_r, 2 * cfg.d_r);
  init_xavier_uniform(rp_proj_w.v, 2 * cfg.d_r, cfg.d_r, rng);
  rp_proj_b.resize(cfg.d_r, 1);

  bn0.resize(1);
  conv.resize(cfg.conv_filters, cfg.conv_kernel);
  init_xavier_uniform(conv.filters.v, cfg.conv_kernel * cfg.conv_kernel,
                      cfg.conv_filters, rng);
  bn1.resize(cfg.conv_filters);
  fc_w.resize(cfg.d_e, flat_dim());
  init_xavier_uniform(fc_w.v, flat_dim(), cfg.d_e, rng);
  fc_b.resize(cfg.d_e, 1);
  bn2.resize(cfg.d_e);

  P.resize(cfg.d_tau, cfg.d_e);
  init_xavier_uniform(P.v, cfg.d_e, cfg.d_tau, rng);
  P_B.resize(cfg.d_tau, cfg.d_b);
  init_xavier_uniform(P_B.v, cfg.d_b, cfg.d_tau, rng);
}

std::vector<ParamRef> ModelParams::trainable() {
  std::vector<ParamRef> refs;
  refs.push_back({"np_emb", &np_emb});
  if (np_proj.v.size() > 0) refs.push_back({"np_proj", &np_proj});
  refs.push_back({"word_emb", &word_emb});
  gru_fwd.collect("gru_fwd", &refs);
  gru_bwd.collect("gru_bwd", &refs);
  refs.push_back({"rp_proj_w", &rp_proj_w});
  refs.push_back({"rp_proj_b", &rp_proj_b});
  std::vector<BufferRef> unused;
  bn0.collect("bn0", &refs, &unused);
  conv.collect("conv", &refs);
  bn1.collect("bn1", &refs, &unused);
  refs.push_back({"fc_w", &fc_w});
  refs.push_back({"fc_b", &fc_b});
  bn2.collect("bn2", &refs, &unused);
  refs.push_back({"P", &P});
  refs.push_back({"P_B", &P_B});
  if (cfg.np_init == NpInit::kLmProj) {
    // the raw LM vectors stay frozen; only the projection trains
    std::erase_if(refs, [](const ParamRef &r) { return r.name == "np_emb"; });
  }
  return refs;
}

std::vector<BufferRef> ModelParams::buffers() {
  std::vector<BufferRef> refs;
  std::vector<ParamRef> unused;
  bn0.collect("bn0", &unused, &refs);
  bn1.collect("bn1", &unused, &refs);
  bn2.collect("bn2", &unused, &refs);
  return refs;
}

void ModelParams::zero_grads() {
  for (ParamRef &r : trainable()) r.tensor->zero_grad();
  if (cfg.np_init == NpInit::kLmProj) np_emb.zero_grad();
}

namespace {

NamedTensor to_named(const std::string &name, const Mat &m) {
  NamedTensor t;
  t.name = name;
  t.dims = {static_cast<std::uint32_t>(m.rows()),
            static_cast<std::uint32_t>(m.cols())};
  t.data.resize(static_cast<std::size_t>(m.size()));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      t.data[k++] = static_cast<float>(m(i, j));
    }
  }
  return t;
}

Mat from_named(const NamedTensor &t) {
  if (t.dims.size() != 2) throw Error("tensor '" + t.name + "' must be rank 2");
  Mat m(t.dims[0], t.dims[1]);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = static_cast<double>(t.data[k++]);
    }
  }
  return m;
}

}  // namespace

void ModelParams::save(const std::filesystem::path &params_bin) const {
  std::vector<NamedTensor> tensors;
  auto self = const_cast<ModelParams *>(this);
  if (cfg.np_init == NpInit::kLmProj) {
    tensors.push_back(to_named("np_emb", np_emb.v));
  }
  for (ParamRef &r : self->trainable()) {
    tensors.push_back(to_named(r.name, r.tensor->v));
  }
  for (BufferRef &r : self->buffers()) {
    tensors.push_back(to_named(r.name, *r.value));
  }
  write_params_file(params_bin, tensors);
}

void ModelParams::load(const std::filesystem::path &params_bin) {
  auto tensors = index_tensors(read_params_file(params_bin));
  auto fetch = [&](const std::string &name) -> const NamedTensor & {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw IoError("checkpoint is missing tensor '" + name + "'");
    }
    return it->second;
  };
  if (cfg.np_init == NpInit::kLmProj) {
    np_emb.v = from_named(fetch("np_emb"));
    np_emb.g.setZero(np_emb.v.rows(), np_emb.v.cols());
  }
  for (ParamRef &r : trainable()) {
    Mat m = from_named(fetch(r.name));
    if (m.rows() != r.tensor->v.rows() || m.cols() != r.tensor->v.cols()) {
      throw ValidationError("tensor '" + r.name + "' has unexpected shape");
    }
    r.tensor->v = std::move(m);
  }
  for (BufferRef &r : buffers()) {
    Mat m = from_named(fetch(r.name));
    if (m.rows() != r.value->rows() || m.cols() != r.value->cols()) {
      throw ValidationError("buffer '" + r.name + "' has unexpected shape");
    }
    *r.value = std::move(m);
  }
}

// ---------------------------------------------------------------------------
// Relation-phrase encoder
// ---------------------------------------------------------------------------

Vec rp_encode_forward(const ModelParams &p, const std::vector<int> &word_ids,
                      RpTrace *trace) {
  if (word_ids.empty()) throw Error("relation phrase has no tokens");
  std::vector<Vec> inputs;
  inputs.reserve(word_ids.size());
  for (int id : word_ids) inputs.push_back(p.word_emb.v.row(id).transpose());
  std::vector<Vec> reversed(inputs.rbegin(), inputs.rend());

  Vec h_fwd = gru_forward(p.gru_fwd, inputs, trace ? &trace->fwd : nullptr);
  Vec h_bwd = gru_forward(p.gru_bwd, reversed, trace ? &trace->bwd : nullptr);

  Vec concat(2 * p.cfg.d_r);
  concat << h_fwd, h_bwd;
  if (trace) {
    trace->word_ids = word_ids;
    trace->concat = concat;
  }
  return p.rp_proj_w.v * concat + p.rp_proj_b.v.col(0);
}

void rp_encode_backward(ModelParams &p, const RpTrace &trace, const Vec &d_out) {
  p.rp_proj_w.g += d_out * trace.concat.transpose();
  p.rp_proj_b.g.col(0) += d_out;
  Vec d_concat = p.rp_proj_w.v.transpose() * d_out;
  Vec d_fwd = d_concat.head(p.cfg.d_r);
  Vec d_bwd = d_concat.tail(p.cfg.d_r);

  std::vector<Vec> dx_fwd = gru_backward(p.gru_fwd, trace.fwd, d_fwd);
  std::vector<Vec> dx_bwd = gru_backward(p.gru_bwd, trace.bwd, d_bwd);

  const std::size_t len = trace.word_ids.size();
  for (std::size_t i = 0; i < len; ++i) {
    p.word_emb.g.row(trace.word_ids[i]) += dx_fwd[i].transpose();
    // backward pass consumed the sequence reversed
    p.word_emb.g.row(trace.word_ids[len - 1 - i]) += dx_bwd[i].transpose();
  }
}

// ---------------------------------------------------------------------------
// Convolutional predictor
// ---------------------------------------------------------------------------

namespace {

// Elementwise batch norm over every entry of x (single-channel image norm).
Mat bn_single_channel_forward(BatchNorm &bn, const Mat &x, Mode mode,
                              bool update_running, BatchNormTrace *trace) {
  Mat flat = Eigen::Map<const Mat>(x.data(), x.size(), 1);
  Mat y = batchnorm_forward(bn, flat, mode, update_running, trace);
  return Eigen::Map<const Mat>(y.data(), x.rows(), x.cols());
}

Mat bn_single_channel_backward(BatchNorm &bn, const BatchNormTrace &trace,
                               const Mat &dy) {
  Mat flat = Eigen::Map<const Mat>(dy.data(), dy.size(), 1);
  Mat dx = batchnorm_backward(bn, trace, flat);
  return Eigen::Map<const Mat>(dx.data(), dy.rows(), dy.cols());
}

}  // namespace

Mat conv_predict_forward(ModelParams &p, const Mat &head_enc, const Mat &rel_enc,
                         Mode mode, bool update_running, Rng &rng,
                         ConvTrace *trace) {
  const Eigen::Index batch = head_enc.rows();
  const int rows = p.image_rows();
  const int cols = p.cfg.reshape_cols;
  const int k = p.cfg.conv_kernel;
  const int positions = p.conv_positions();
  const int filters = p.cfg.conv_filters;

  // row-major reshape makes the stacked image just the concatenation
  Mat stacked(batch, p.cfg.d_e + p.cfg.d_r);
  stacked << head_enc, rel_enc;

  Mat x = bn_single_channel_forward(p.bn0, stacked, mode, update_running,
                                    trace ? &trace->bn0_tr : nullptr);
  x = dropout_forward(x, p.cfg.input_dropout, mode, rng,
                      trace ? &trace->inp_drop : nullptr);

  Mat patches(batch * positions, k * k);
  for (Eigen::Index b = 0; b < batch; ++b) {
    patches.middleRows(b * positions, positions) =
        im2col(x.row(b).transpose(), rows, cols, k);
  }
  if (trace) trace->patches = patches;

  Mat conv_out = patches * p.conv.filters.v.transpose();
  conv_out.rowwise() += p.conv.bias.v.col(0).transpose();

  Mat bn1_out = batchnorm_forward(p.bn1, conv_out, mode, update_running,
                                  trace ? &trace->bn1_tr : nullptr);
  Mat relu1 = bn1_out.cwiseMax(0.0);
  if (trace) trace->relu1 = relu1;
  Mat feat = dropout_forward(relu1, p.cfg.feature_dropout, mode, rng,
                             trace ? &trace->feat_drop : nullptr);

  Mat flat(batch, positions * filters);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int pos = 0; pos < positions; ++pos) {
      for (int f = 0; f < filters; ++f) {
        flat(b, pos * filters + f) = feat(b * positions + pos, f);
      }
    }
  }
  if (trace) trace->flat = flat;

  Mat fc = flat * p.fc_w.v.transpose();
  fc.rowwise() += p.fc_b.v.col(0).transpose();
  fc = dropout_forward(fc, p.cfg.hidden_dropout, mode, rng,
                       trace ? &trace->hid_drop : nullptr);
  Mat bn2_out = batchnorm_forward(p.bn2, fc, mode, update_running,
                                  trace ? &trace->bn2_tr : nullptr);
  Mat t_c = bn2_out.cwiseMax(0.0);
  if (trace) trace->relu2 = t_c;
  return t_c;
}

ConvInputGrads conv_predict_backward(ModelParams &p, const ConvTrace &trace,
                                     const Mat &d_tc) {
  const Eigen::Index batch = d_tc.rows();
  const int rows = p.image_rows();
  const int cols = p.cfg.reshape_cols;
  const int k = p.cfg.conv_kernel;
  const int positions = p.conv_positions();
  const int filters = p.cfg.conv_filters;

  Mat d_bn2 = (trace.relu2.array() > 0.0).cast<double>() * d_tc.array();
  Mat d_fc = batchnorm_backward(p.bn2, trace.bn2_tr, d_bn2);
  d_fc = dropout_backward(trace.hid_drop, d_fc);

  p.fc_w.g += d_fc.transpose() * trace.flat;
  p.fc_b.g.col(0) += d_fc.colwise().sum().transpose();
  Mat d_flat = d_fc * p.fc_w.v;

  Mat d_feat(batch * positions, filters);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int pos = 0; pos < positions; ++pos) {
      for (int f = 0; f < filters; ++f) {
        d_feat(b * positions + pos, f) = d_flat(b, pos * filters + f);
      }
    }
  }

  d_feat = dropout_backward(trace.feat_drop, d_feat);
  Mat d_bn1 = (trace.relu1.array() > 0.0).cast<double>() * d_feat.array();
  Mat d_conv = batchnorm_backward(p.bn1, trace.bn1_tr, d_bn1);

  p.conv.filters.g += d_conv.transpose() * trace.patches;
  p.conv.bias.g.col(0) += d_conv.colwise().sum().transpose();
  Mat d_patches = d_conv * p.conv.filters.v;

  Mat d_image(batch, rows * cols);
  for (Eigen::Index b = 0; b < batch; ++b) {
    d_image.row(b) =
        col2im(d_patches.middleRows(b * positions, positions), rows, cols, k)
            .transpose();
  }

  d_image = dropout_backward(trace.inp_drop, d_image);
  Mat d_stacked = bn_single_channel_backward(p.bn0, trace.bn0_tr, d_image);

  ConvInputGrads grads;
  grads.d_head = d_stacked.leftCols(p.cfg.d_e);
  grads.d_rel = d_stacked.rightCols(p.cfg.d_r);
  return grads;
}

// ---------------------------------------------------------------------------
// Encoder facade
// ---------------------------------------------------------------------------

Mat np_source_matrix(const ModelParams &p) {
  if (p.np_proj.v.size() > 0) {
    return p.np_emb.v * p.np_proj.v.transpose();
  }
  return p.np_emb.v;
}

Encoder::Encoder(const ModelParams &params, const OpenKG &kg,
                 const WordVocab &words)
    : params_(params), kg_(kg), words_(words), agg_(kg.clusters) {
  if (static_cast<int>(kg.num_nps()) != params.num_nps) {
    throw Error("parameter table does not match KG NP count");
  }
}

std::vector<int> Encoder::rp_word_ids(RpId rp) const {
  std::vector<int> ids;
  for (const std::string &w : split_whitespace(kg_.rps.at(rp))) {
    ids.push_back(words_.id(w));
  }
  if (ids.empty()) ids.push_back(0);  // blank phrase maps to the unk slot
  return ids;
}

Vec Encoder::encode_np(NpId np) const {
  const auto &members =
      kg_.clusters.cluster_to_nps[kg_.clusters.np_to_cluster[np]];
  Vec sum = Vec::Zero(params_.cfg.d_e);
  const bool proj = params_.np_proj.v.size() > 0;
  for (NpId m : members) {
    if (proj) {
      sum += params_.np_proj.v * params_.np_emb.v.row(m).transpose();
    } else {
      sum += params_.np_emb.v.row(m).transpose();
    }
  }
  return sum / static_cast<double>(members.size());
}

Vec Encoder::encode_rp(RpId rp) const {
  return rp_encode_forward(params_, rp_word_ids(rp), nullptr);
}

Vec Encoder::predict_tail_vector(NpId head, RpId rp) const {
  Mat head_enc = encode_np(head).transpose();
  Mat rel_enc = encode_rp(rp).transpose();
  Rng rng(0);  // eval mode draws nothing
  Mat t_c = conv_predict_forward(const_cast<ModelParams &>(params_), head_enc,
                                 rel_enc, Mode::kEval, false, rng, nullptr);
  return t_c.row(0).transpose();
}

double Encoder::score_pred(const Vec &t_c, NpId tail) const {
  return t_c.dot(encode_np(tail));
}

Mat Encoder::encoded_np_matrix() const { return agg_.encode(np_source_matrix(params_)); }

}  // namespace okgit
