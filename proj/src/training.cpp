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

#include "okgit/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace okgit {

namespace {

constexpr double kLogFloor = 1e-12;

double bce_term(double score, double label) {
  const double p = sigmoid(score);
  return -(label * std::log(std::max(p, kLogFloor)) +
           (1.0 - label) * std::log(std::max(1.0 - p, kLogFloor)));
}

// d bce_term / d score. Where the log has been clamped the objective is flat
// in that term, so its contribution vanishes.
double bce_grad(double score, double label) {
  const double p = sigmoid(score);
  double g = 0.0;
  if (p > kLogFloor) g -= label * (1.0 - p);
  if (1.0 - p > kLogFloor) g += (1.0 - label) * p;
  return g;
}

Vec smooth_labels(const Vec &labels, double smoothing) {
  const double n = static_cast<double>(labels.size());
  return (1.0 - smoothing) * labels.array() + smoothing / n;
}

}  // namespace

double triple_loss(const Vec &scores, const Vec &labels, double smoothing) {
  if (scores.size() != labels.size() || scores.size() == 0) {
    throw Error("scores and labels must be nonempty and aligned");
  }
  Vec y = smooth_labels(labels, smoothing);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    sum += bce_term(scores[i], y[i]);
  }
  return sum / static_cast<double>(scores.size());
}

double type_loss(const Vec &type_scores, const Vec &labels, double smoothing) {
  return triple_loss(type_scores, labels, smoothing);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

void AdamOptimizer::step(std::vector<ParamRef> &params) {
  if (m_.empty()) {
    for (ParamRef &p : params) {
      m_.emplace_back(Mat::Zero(p.tensor->v.rows(), p.tensor->v.cols()));
      v_.emplace_back(Mat::Zero(p.tensor->v.rows(), p.tensor->v.cols()));
    }
  }
  if (m_.size() != params.size()) {
    throw Error("optimizer bound to a different parameter registry");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Mat &g = params[i].tensor->g;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    Mat m_hat = m_[i] / bc1;
    Mat v_hat = v_[i] / bc2;
    params[i].tensor->v.array() -=
        lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
  }
}

// ---------------------------------------------------------------------------
// Batch forward/backward
// ---------------------------------------------------------------------------

TrainGraph TrainGraph::bind(const OpenKG &kg, const WordVocab &words) {
  TrainGraph g;
  g.kg = &kg;
  g.words = &words;
  g.aggregator = std::make_unique<ClusterAggregator>(kg.clusters);
  g.rp_tokens.resize(kg.num_rps());
  for (RpId rp = 0; rp < kg.num_rps(); ++rp) {
    for (const std::string &w : split_whitespace(kg.rps[rp])) {
      g.rp_tokens[rp].push_back(words.id(w));
    }
    if (g.rp_tokens[rp].empty()) g.rp_tokens[rp].push_back(0);
  }
  return g;
}

namespace {

struct BatchForward {
  Mat e_enc;                       // N x d_e
  Mat rel_distinct;                // nrp x d_r
  std::vector<RpId> rp_list;
  std::vector<int> rp_slot_by_row; // B
  std::vector<RpTrace> rp_traces;
  Mat head_enc;                    // B x d_e
  ConvTrace conv_trace;
  Mat t_c;                         // B x d_e
  Mat context;                     // B x d_b (resolved, incl. live modes)
  Mat psi_pred, psi_type, psi;     // B x N
  Mat labels;                      // smoothed, B x N
  Mat tau_b, tau_c;
};

double matrix_bce_sum(const Mat &scores, const Mat &labels) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      sum += bce_term(scores(i, j), labels(i, j));
    }
  }
  return sum;
}

BatchStats run_batch(ModelParams &p, const TrainGraph &graph,
                     const TrainBatch &batch, ScorePath path, Mode mode,
                     bool update_running, bool accumulate_grads,
                     Rng &dropout_rng, BatchForward *keep) {
  const Eigen::Index bsz = static_cast<Eigen::Index>(batch.queries.size());
  const Eigen::Index n = p.num_nps;
  if (bsz == 0) throw Error("empty batch");

  BatchForward local;
  BatchForward &fw = keep ? *keep : local;

  Mat e_src = np_source_matrix(p);
  fw.e_enc = graph.aggregator->encode(e_src);

  // distinct relation encodings
  std::map<RpId, int> slot;
  fw.rp_slot_by_row.resize(bsz);
  for (Eigen::Index b = 0; b < bsz; ++b) {
    RpId rp = batch.queries[b].second;
    auto [it, inserted] = slot.emplace(rp, static_cast<int>(fw.rp_list.size()));
    if (inserted) fw.rp_list.push_back(rp);
    fw.rp_slot_by_row[b] = it->second;
  }
  fw.rp_traces.resize(fw.rp_list.size());
  fw.rel_distinct.resize(static_cast<Eigen::Index>(fw.rp_list.size()), p.cfg.d_r);
  for (std::size_t i = 0; i < fw.rp_list.size(); ++i) {
    fw.rel_distinct.row(static_cast<Eigen::Index>(i)) =
        rp_encode_forward(p, graph.rp_tokens[fw.rp_list[i]],
                          accumulate_grads ? &fw.rp_traces[i] : nullptr)
            .transpose();
  }

  Mat rel_enc(bsz, p.cfg.d_r);
  fw.head_enc.resize(bsz, p.cfg.d_e);
  for (Eigen::Index b = 0; b < bsz; ++b) {
    rel_enc.row(b) = fw.rel_distinct.row(fw.rp_slot_by_row[b]);
    fw.head_enc.row(b) = fw.e_enc.row(batch.queries[b].first);
  }

  fw.t_c = conv_predict_forward(p, fw.head_enc, rel_enc, mode, update_running,
                                dropout_rng,
                                accumulate_grads ? &fw.conv_trace : nullptr);

  fw.psi_pred = fw.t_c * fw.e_enc.transpose();

  // one-vs-all labels with smoothing mass spread over the candidate set
  const double eps = p.cfg.label_smoothing;
  fw.labels.setConstant(bsz, n, eps / static_cast<double>(n));
  for (Eigen::Index b = 0; b < bsz; ++b) {
    for (NpId t : batch.positives[b]) {
      fw.labels(b, t) = (1.0 - eps) + eps / static_cast<double>(n);
    }
  }

  if (path == ScorePath::kFull) {
    // resolve the context block, including live ablation modes
    switch (batch.live) {
      case LiveContext::kNone:
        if (batch.context.rows() != bsz || batch.context.cols() != p.cfg.d_b) {
          throw Error("context block does not match batch/d_b");
        }
        fw.context = batch.context;
        break;
      case LiveContext::kConcat:
        fw.context.resize(bsz, p.cfg.d_e + p.cfg.d_r);
        fw.context << fw.head_enc, rel_enc;
        break;
      case LiveContext::kAdd:
        fw.context = fw.head_enc + rel_enc;
        break;
    }
    if (fw.context.cols() != p.cfg.d_b) {
      throw Error("context dimension does not match d_b");
    }
    fw.tau_c = fw.e_enc * p.P.v.transpose();
    fw.tau_b = fw.context * p.P_B.v.transpose();
    if (p.cfg.type_variant == TypeScoreVariant::kEuclid) {
      Vec bn = fw.tau_b.rowwise().squaredNorm();
      Vec cn = fw.tau_c.rowwise().squaredNorm();
      fw.psi_type = 2.0 * (fw.tau_b * fw.tau_c.transpose());
      fw.psi_type.colwise() -= bn;
      fw.psi_type.rowwise() -= cn.transpose();
    } else {
      fw.psi_type = fw.tau_b * fw.tau_c.transpose();
    }
    fw.psi = fw.psi_pred + p.cfg.gamma * fw.psi_type;
  } else {
    fw.psi = fw.psi_pred;
  }

  const double denom = static_cast<double>(bsz) * static_cast<double>(n);
  BatchStats stats;
  stats.loss.triple_loss = matrix_bce_sum(fw.psi, fw.labels) / denom;
  if (path == ScorePath::kFull) {
    stats.loss.type_loss = matrix_bce_sum(fw.psi_type, fw.labels) / denom;
  }
  stats.loss.total = stats.loss.triple_loss + p.cfg.lambda * stats.loss.type_loss;

  // positive-cell probability diagnostics
  {
    double sum_y = 0.0, sum_p = 0.0;
    std::size_t count = 0;
    for (Eigen::Index b = 0; b < bsz; ++b) {
      for (NpId t : batch.positives[b]) {
        sum_y += sigmoid(fw.psi(b, t));
        if (path == ScorePath::kFull) sum_p += sigmoid(fw.psi_type(b, t));
        ++count;
      }
    }
    if (count > 0) {
      stats.mean_yhat_positive = sum_y / static_cast<double>(count);
      stats.mean_phat_positive =
          path == ScorePath::kFull ? sum_p / static_cast<double>(count) : 0.0;
    }
  }

  if (!accumulate_grads) return stats;

  // ----- backward -----
  Mat dpsi = fw.psi.binaryExpr(fw.labels, [](double s, double y) {
    return bce_grad(s, y);
  }) / denom;

  Mat d_tc = dpsi * fw.e_enc;
  Mat d_eenc = dpsi.transpose() * fw.t_c;

  if (path == ScorePath::kFull) {
    Mat dpsi_type =
        p.cfg.gamma * dpsi +
        fw.psi_type.binaryExpr(fw.labels, [](double s, double y) {
          return bce_grad(s, y);
        }) * (p.cfg.lambda / denom);
    Mat d_tau_b, d_tau_c;
    if (p.cfg.type_variant == TypeScoreVariant::kEuclid) {
      Vec rowg = dpsi_type.rowwise().sum();
      Vec colg = dpsi_type.colwise().sum();
      d_tau_b = 2.0 * (dpsi_type * fw.tau_c) -
                2.0 * (fw.tau_b.array().colwise() * rowg.array()).matrix();
      d_tau_c = 2.0 * (dpsi_type.transpose() * fw.tau_b) -
                2.0 * (fw.tau_c.array().colwise() * colg.array()).matrix();
    } else {
      d_tau_b = dpsi_type * fw.tau_c;
      d_tau_c = dpsi_type.transpose() * fw.tau_b;
    }
    p.P_B.g += d_tau_b.transpose() * fw.context;
    p.P.g += d_tau_c.transpose() * fw.e_enc;
    d_eenc += d_tau_c * p.P.v;
  }

  ConvInputGrads in_grads = conv_predict_backward(p, fw.conv_trace, d_tc);
  for (Eigen::Index b = 0; b < bsz; ++b) {
    d_eenc.row(batch.queries[b].first) += in_grads.d_head.row(b);
  }

  Mat d_rel_distinct =
      Mat::Zero(static_cast<Eigen::Index>(fw.rp_list.size()), p.cfg.d_r);
  for (Eigen::Index b = 0; b < bsz; ++b) {
    d_rel_distinct.row(fw.rp_slot_by_row[b]) += in_grads.d_rel.row(b);
  }
  for (std::size_t i = 0; i < fw.rp_list.size(); ++i) {
    rp_encode_backward(p, fw.rp_traces[i],
                       d_rel_distinct.row(static_cast<Eigen::Index>(i))
                           .transpose());
  }

  Mat d_src = graph.aggregator->backward(d_eenc);
  if (p.np_proj.v.size() > 0) {
    p.np_proj.g += d_src.transpose() * p.np_emb.v;
  } else {
    p.np_emb.g += d_src;
  }
  return stats;
}

}  // namespace

BatchStats train_forward_backward(ModelParams &params, const TrainGraph &graph,
                                  const TrainBatch &batch, ScorePath path,
                                  Mode mode, bool update_running,
                                  bool accumulate_grads, Rng &dropout_rng) {
  return run_batch(params, graph, batch, path, mode, update_running,
                   accumulate_grads, dropout_rng, nullptr);
}

double batch_loss_only(ModelParams &params, const TrainGraph &graph,
                       const TrainBatch &batch, ScorePath path, Mode mode,
                       Rng &dropout_rng) {
  BatchStats s = run_batch(params, graph, batch, path, mode, false, false,
                           dropout_rng, nullptr);
  return s.loss.total;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const ModelParams &params, const WordVocab &words,
                     const nlohmann::json &metrics,
                     const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json cfg = params.cfg.to_json();
  cfg["num_nps"] = params.num_nps;
  cfg["num_words"] = params.num_words;
  cfg["np_src_dim"] = static_cast<int>(params.np_emb.v.cols());
  {
    std::ofstream out(dir / "config.json", std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint config");
    out << cfg.dump(2) << '\n';
  }
  params.save(dir / "params.bin");
  words.save(dir / "wordvocab.txt");
  {
    std::ofstream out(dir / "metrics.json", std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint metrics");
    out << metrics.dump(2) << '\n';
  }
}

Checkpoint Checkpoint::load(const std::filesystem::path &dir) {
  std::ifstream cfg_in(dir / "config.json");
  if (!cfg_in) throw IoError("missing file: " + (dir / "config.json").string());
  nlohmann::json j = nlohmann::json::parse(cfg_in);

  Checkpoint ckpt;
  ModelConfig cfg = ModelConfig::from_json(j);
  const int num_nps = j.at("num_nps").get<int>();
  const int num_words = j.at("num_words").get<int>();
  const int np_src_dim = j.value("np_src_dim", cfg.d_e);

  ckpt.words = WordVocab::load(dir / "wordvocab.txt");
  if (static_cast<int>(ckpt.words.size()) != num_words) {
    throw ValidationError("word vocabulary size mismatch in checkpoint");
  }

  // allocate with neutral init, then overwrite from the tensor file
  ModelConfig alloc_cfg = cfg;
  Mat zeros;
  const Mat *np_init = nullptr;
  if (cfg.np_init != NpInit::kRandom) {
    zeros = Mat::Zero(num_nps, np_src_dim);
    np_init = &zeros;
  }
  Mat word_zeros;
  const Mat *word_init = nullptr;
  if (cfg.word_init != WordInit::kRandom) {
    word_zeros = Mat::Zero(num_words, cfg.d_e);
    word_init = &word_zeros;
  }
  ckpt.params.build(alloc_cfg, num_nps, num_words, np_init, word_init);
  ckpt.params.load(dir / "params.bin");

  std::ifstream metrics_in(dir / "metrics.json");
  if (metrics_in) ckpt.metrics = nlohmann::json::parse(metrics_in);
  return ckpt;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

namespace {

Mat load_init_vectors(const std::string &path, const char *what) {
  if (path.empty()) {
    throw Error(std::string(what) + " initialization requires a vector file");
  }
  auto tensors = read_params_file(path);
  if (tensors.size() != 1 || tensors[0].dims.size() != 2) {
    throw ValidationError("vector file must hold one rank-2 tensor: " + path);
  }
  const NamedTensor &t = tensors[0];
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

FitResult fit(const OpenKG &kg, ContextSource *context, const ModelConfig &cfg_in,
              const std::filesystem::path &out_dir, std::ostream *log) {
  if (!kg.inverse_augmented) {
    throw Error("training requires an inverse-augmented graph");
  }
  std::filesystem::create_directories(out_dir);

  ModelConfig cfg = cfg_in;
  const ScorePath path = (cfg.gamma == 0.0 && cfg.lambda == 0.0)
                             ? ScorePath::kPredOnly
                             : ScorePath::kFull;
  LiveContext live = LiveContext::kNone;
  if (cfg.provider_id == "concat") live = LiveContext::kConcat;
  if (cfg.provider_id == "add") live = LiveContext::kAdd;

  if (path == ScorePath::kFull) {
    if (live != LiveContext::kNone) {
      // recomputed from the trainable embeddings; no external source needed
      cfg.d_b = live == LiveContext::kConcat ? cfg.d_e + cfg.d_r : cfg.d_e;
    } else {
      if (context == nullptr) {
        throw Error("gamma/lambda > 0 require a context source");
      }
      cfg.d_b = context->dim();
      if (cfg.provider_id.empty()) cfg.provider_id = context->id();
      if (cfg.provider_id != context->id()) {
        throw Error("config provider '" + cfg.provider_id +
                    "' does not match context source '" + context->id() + "'");
      }
    }
  } else if (cfg.d_b <= 0) {
    cfg.d_b = 1;  // projector exists but never participates
  }

  WordVocab words = WordVocab::build(kg.rps);

  Mat np_init_vectors, word_init_vectors;
  const Mat *np_init = nullptr, *word_init = nullptr;
  if (cfg.np_init != NpInit::kRandom) {
    np_init_vectors = load_init_vectors(cfg.np_init_file, "NP");
    np_init = &np_init_vectors;
  }
  if (cfg.word_init != WordInit::kRandom) {
    word_init_vectors = load_init_vectors(cfg.word_init_file, "word");
    word_init = &word_init_vectors;
  }

  ModelParams params;
  params.build(cfg, static_cast<int>(kg.num_nps()),
               static_cast<int>(words.size()), np_init, word_init);
  TrainGraph graph = TrainGraph::bind(kg, words);

  QueryIndex train_index = query_index(kg, Split::kTrain);
  std::vector<std::pair<NpId, RpId>> queries;
  queries.reserve(train_index.size());
  for (const auto &[key, tails] : train_index) queries.push_back(key);
  if (queries.empty()) throw Error("train split is empty");

  // validation needs a source tracking the current parameters in live modes
  std::unique_ptr<EmbeddingContextProvider> live_provider;
  std::unique_ptr<ProviderContextSource> live_source;
  ContextSource *eval_context = context;
  if (live != LiveContext::kNone) {
    live_provider = std::make_unique<EmbeddingContextProvider>(
        live == LiveContext::kConcat ? AblationMode::kConcat
                                     : AblationMode::kAdd,
        kg, params, words);
    live_source = std::make_unique<ProviderContextSource>(*live_provider, true);
    eval_context = live_source.get();
  }

  AdamOptimizer opt(cfg.learning_rate);
  Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  Rng dropout_rng(cfg.seed ^ 0xd1b54a32d192ed03ull);

  FitResult result;
  result.best_valid_mrr = -1.0;
  ModelParams best_params;
  int stagnant = 0;
  nlohmann::json history = nlohmann::json::array();

  std::ofstream train_log(out_dir / "train_log.txt", std::ios::binary);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(queries);
    double loss_sum = 0.0, triple_sum = 0.0, type_sum = 0.0;
    double phat_sum = 0.0, yhat_sum = 0.0;
    int steps = 0;

    for (std::size_t start = 0; start < queries.size();
         start += static_cast<std::size_t>(cfg.batch_queries)) {
      const std::size_t end =
          std::min(queries.size(), start + static_cast<std::size_t>(cfg.batch_queries));
      TrainBatch batch;
      batch.live = live;
      for (std::size_t qi = start; qi < end; ++qi) {
        batch.queries.push_back(queries[qi]);
        batch.positives.push_back(train_index.at(queries[qi]));
      }
      if (path == ScorePath::kFull && live == LiveContext::kNone) {
        batch.context.resize(static_cast<Eigen::Index>(batch.queries.size()),
                             cfg.d_b);
        for (std::size_t qi = 0; qi < batch.queries.size(); ++qi) {
          ContextQuery q = make_query(kg, batch.queries[qi].first,
                                      batch.queries[qi].second);
          batch.context.row(static_cast<Eigen::Index>(qi)) =
              context->get(q).cast<double>().transpose();
        }
      }

      params.zero_grads();
      BatchStats stats =
          train_forward_backward(params, graph, batch, path, Mode::kTrain,
                                 true, true, dropout_rng);
      if (!std::isfinite(stats.loss.total)) {
        std::ostringstream dump;
        dump << "non-finite loss at epoch " << epoch << " step " << steps
             << "; batch queries:";
        for (auto &[h, r] : batch.queries) dump << " (" << h << "," << r << ")";
        if (log) *log << dump.str() << '\n';
        train_log << dump.str() << '\n';
        throw Error(dump.str());
      }
      std::vector<ParamRef> refs = params.trainable();
      opt.step(refs);

      loss_sum += stats.loss.total;
      triple_sum += stats.loss.triple_loss;
      type_sum += stats.loss.type_loss;
      phat_sum += stats.mean_phat_positive;
      yhat_sum += stats.mean_yhat_positive;
      ++steps;
    }

    // validation MRR with frozen parameters
    Encoder eval_encoder(params, kg, words);
    FrozenScorer scorer(eval_encoder,
                        path == ScorePath::kFull ? eval_context : nullptr,
                        path == ScorePath::kFull ? cfg.gamma : 0.0,
                        cfg.type_variant);
    EvalOptions opts;
    opts.split = Split::kValid;
    EvalReport valid = evaluate_link_prediction(scorer, kg, opts);

    const double denom = std::max(steps, 1);
    nlohmann::json row = {{"epoch", epoch},
                          {"loss", loss_sum / denom},
                          {"triple_loss", triple_sum / denom},
                          {"type_loss", type_sum / denom},
                          {"mean_phat_positive", phat_sum / denom},
                          {"mean_yhat_positive", yhat_sum / denom},
                          {"valid_mrr", valid.metrics.mrr}};
    history.push_back(row);
    train_log << "epoch " << epoch << " loss " << loss_sum / denom
              << " triple " << triple_sum / denom << " type " << type_sum / denom
              << " phat+ " << phat_sum / denom << " yhat+ " << yhat_sum / denom
              << " valid_mrr " << valid.metrics.mrr << '\n';
    train_log.flush();
    if (log) {
      *log << "epoch " << epoch << " loss " << loss_sum / denom << " valid_mrr "
           << valid.metrics.mrr << '\n';
    }

    if (valid.metrics.mrr > result.best_valid_mrr) {
      result.best_valid_mrr = valid.metrics.mrr;
      result.best_epoch = epoch;
      result.best_valid_metrics = valid.metrics;
      best_params = params;
      stagnant = 0;
    } else {
      ++stagnant;
    }
    result.epochs_run = epoch + 1;
    if (stagnant >= cfg.patience) break;
  }

  nlohmann::json metrics = {{"best_epoch", result.best_epoch},
                            {"best_valid_mrr", result.best_valid_mrr},
                            {"best_valid_metrics", result.best_valid_metrics.to_json()},
                            {"epochs_run", result.epochs_run},
                            {"history", history}};
  save_checkpoint(best_params, words, metrics, out_dir);
  result.checkpoint_dir = out_dir;
  return result;
}

// ---------------------------------------------------------------------------
// grid search
// ---------------------------------------------------------------------------

GridResult grid_search(const OpenKG &kg, const std::vector<GridPoint> &points,
                       const std::filesystem::path &out_dir, std::ostream *log) {
  if (points.empty()) throw Error("grid has no points");
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path board_path = out_dir / "leaderboard.jsonl";

  struct Row {
    std::string key;
    nlohmann::json entry;
  };
  std::vector<Row> rows;
  std::set<std::string> done;
  if (std::filesystem::exists(board_path)) {
    std::ifstream in(board_path);
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line);
      rows.push_back({j.at("key").get<std::string>(), j});
      done.insert(rows.back().key);
    }
  }

  std::map<std::string, ContextVectorCache> caches;
  std::ofstream board(board_path, std::ios::binary | std::ios::app);

  GridResult result;
  std::size_t run_index = 0;
  for (const GridPoint &point : points) {
    const std::string key = point.config.key();
    if (done.count(key)) {
      ++result.points_skipped;
      ++run_index;
      continue;
    }
    ContextSource *ctx = nullptr;
    std::unique_ptr<CacheContextSource> source;
    if (point.config.gamma != 0.0 || point.config.lambda != 0.0) {
      if (point.cache_path.empty()) {
        throw Error("grid point '" + key + "' needs a context cache");
      }
      auto it = caches.find(point.cache_path);
      if (it == caches.end()) {
        it = caches.emplace(point.cache_path,
                            ContextVectorCache::open(point.cache_path)).first;
      }
      source = std::make_unique<CacheContextSource>(it->second);
      ctx = source.get();
    }
    const std::filesystem::path run_dir =
        out_dir / ("run_" + std::to_string(run_index));
    if (log) *log << "grid point " << key << " -> " << run_dir << '\n';
    FitResult fr = fit(kg, ctx, point.config, run_dir, log);

    nlohmann::json entry = {{"key", key},
                            {"config", point.config.to_json()},
                            {"checkpoint", run_dir.string()},
                            {"valid_metrics", fr.best_valid_metrics.to_json()},
                            {"best_epoch", fr.best_epoch}};
    board << entry.dump() << '\n';
    board.flush();
    rows.push_back({key, entry});
    ++result.points_run;
    ++run_index;
  }

  if (rows.empty()) throw Error("no grid results to rank");
  const Row *best = &rows[0];
  auto better = [](const Row &a, const Row &b) {
    const auto &ma = a.entry.at("valid_metrics");
    const auto &mb = b.entry.at("valid_metrics");
    double mrr_a = ma.at("mrr").get<double>();
    double mrr_b = mb.at("mrr").get<double>();
    if (mrr_a != mrr_b) return mrr_a > mrr_b;
    double h10_a = ma.at("hits10").get<double>();
    double h10_b = mb.at("hits10").get<double>();
    if (h10_a != h10_b) return h10_a > h10_b;
    return a.key < b.key;
  };
  for (const Row &row : rows) {
    if (better(row, *best)) best = &row;
  }
  result.best_checkpoint = best->entry.at("checkpoint").get<std::string>();
  result.best_config = ModelConfig::from_json(best->entry.at("config"));
  const auto &bm = best->entry.at("valid_metrics");
  result.best_valid_metrics.mrr = bm.at("mrr").get<double>();
  result.best_valid_metrics.mr = bm.at("mr").get<double>();
  result.best_valid_metrics.hits1 = bm.at("hits1").get<double>();
  result.best_valid_metrics.hits3 = bm.at("hits3").get<double>();
  result.best_valid_metrics.hits10 = bm.at("hits10").get<double>();
  return result;
}

}  // namespace okgit
