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

#include "okgit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace okgit {

// ---------------------------------------------------------------------------
// FrozenScorer
// ---------------------------------------------------------------------------

FrozenScorer::FrozenScorer(const Encoder &encoder, ContextSource *context,
                           double gamma, TypeScoreVariant variant)
    : enc_(encoder), ctx_(context), gamma_(gamma), variant_(variant) {
  if (gamma_ > 0.0 && ctx_ == nullptr) {
    throw Error("type score requires a context source");
  }
  e_enc_ = enc_.encoded_np_matrix();
  if (gamma_ > 0.0) {
    tau_c_ = e_enc_ * enc_.params().P.v.transpose();
    tau_c_norms_ = tau_c_.rowwise().squaredNorm();
  }
}

const Vec &FrozenScorer::rp_encoding(RpId rp) const {
  auto it = rp_cache_.find(rp);
  if (it == rp_cache_.end()) {
    it = rp_cache_.emplace(rp, enc_.encode_rp(rp)).first;
  }
  return it->second;
}

Vec FrozenScorer::score_pred_all(NpId head, RpId rp) const {
  Mat head_enc = e_enc_.row(head);
  Mat rel_enc = rp_encoding(rp).transpose();
  Rng rng(0);
  Mat t_c = conv_predict_forward(const_cast<ModelParams &>(enc_.params()),
                                 head_enc, rel_enc, Mode::kEval, false, rng,
                                 nullptr);
  return e_enc_ * t_c.row(0).transpose();
}

Vec FrozenScorer::score_all(NpId head, RpId rp) const {
  Vec psi = score_pred_all(head, rp);
  if (gamma_ == 0.0) return psi;

  ContextQuery q = make_query(enc_.kg(), head, rp);
  Vec tau_b =
      enc_.params().P_B.v * ctx_->get(q).cast<double>();
  if (variant_ == TypeScoreVariant::kEuclid) {
    // -|tau_b - tau_c|^2 = 2 tau_c.tau_b - |tau_b|^2 - |tau_c|^2
    Vec cross = tau_c_ * tau_b;
    psi += gamma_ * (2.0 * cross.array() - tau_b.squaredNorm() -
                     tau_c_norms_.array())
                        .matrix();
  } else {
    psi += gamma_ * (tau_c_ * tau_b);
  }
  return psi;
}

// ---------------------------------------------------------------------------
// LmBaselineScorer
// ---------------------------------------------------------------------------

LmBaselineScorer::LmBaselineScorer(const OpenKG &kg, MlmContextProvider &provider)
    : kg_(kg), provider_(provider) {
  const auto &tok = provider.model().tokenizer();
  np_token_.resize(kg.num_nps(), -1);
  for (NpId np = 0; np < kg.num_nps(); ++np) {
    std::vector<std::int32_t> ids = tok.encode(kg.nps[np]);
    if (ids.size() == 1 && ids[0] != tok.unk_id()) np_token_[np] = ids[0];
  }
}

Vec LmBaselineScorer::score_all(NpId head, RpId rp) const {
  ContextQuery q = make_query(kg_, head, rp);
  VecF logits = provider_.vocab_scores(q);
  Vec scores(kg_.num_nps());
  const double floor = -std::numeric_limits<double>::infinity();
  for (NpId np = 0; np < kg_.num_nps(); ++np) {
    scores[np] = np_token_[np] >= 0 ? static_cast<double>(logits[np_token_[np]])
                                    : floor;
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Ranking
// ---------------------------------------------------------------------------

std::vector<NpId> rank_all_nps(const Vec &scores, const std::set<NpId> &exclude) {
  std::vector<NpId> order;
  order.reserve(static_cast<std::size_t>(scores.size()));
  for (NpId i = 0; i < static_cast<NpId>(scores.size()); ++i) {
    if (!exclude.count(i)) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](NpId a, NpId b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return order;
}

std::uint32_t cluster_rank(const std::vector<NpId> &np_ranking,
                           const ClusterMap &clusters, NpId gold) {
  const ClusterId gold_cluster = clusters.np_to_cluster[gold];
  std::set<ClusterId> seen;
  for (NpId np : np_ranking) {
    seen.insert(clusters.np_to_cluster[np]);
    if (clusters.np_to_cluster[np] == gold_cluster) {
      return static_cast<std::uint32_t>(seen.size());
    }
  }
  throw Error("gold NP absent from the ranking");
}

Metrics compute_metrics(const RankResult &ranks) {
  if (ranks.rank_head.empty() || ranks.rank_head.size() != ranks.rank_tail.size()) {
    throw Error("rank lists must be nonempty and paired");
  }
  const double n = static_cast<double>(ranks.rank_head.size());
  Metrics m;
  double rr = 0.0, r = 0.0, h1 = 0.0, h3 = 0.0, h10 = 0.0;
  for (std::size_t i = 0; i < ranks.rank_head.size(); ++i) {
    for (std::uint32_t rank : {ranks.rank_head[i], ranks.rank_tail[i]}) {
      rr += 1.0 / rank;
      r += rank;
      h1 += rank <= 1;
      h3 += rank <= 3;
      h10 += rank <= 10;
    }
  }
  m.mrr = 100.0 * rr / (2.0 * n);
  m.mr = r / (2.0 * n);
  m.hits1 = 100.0 * h1 / (2.0 * n);
  m.hits3 = 100.0 * h3 / (2.0 * n);
  m.hits10 = 100.0 * h10 / (2.0 * n);
  return m;
}

nlohmann::json Metrics::to_json() const {
  return {{"mrr", mrr}, {"mr", mr}, {"hits1", hits1}, {"hits3", hits3},
          {"hits10", hits10}};
}

namespace {

std::set<NpId> filtered_exclusions(const QueryIndex &known, NpId head, RpId rp,
                                   NpId gold) {
  std::set<NpId> exclude;
  auto it = known.find({head, rp});
  if (it != known.end()) {
    for (NpId t : it->second) {
      if (t != gold) exclude.insert(t);
    }
  }
  return exclude;
}

}  // namespace

std::vector<ContextQuery> missing_queries(const OpenKG &kg, Split split,
                                          const ContextVectorCache &cache) {
  std::set<ContextQuery> queries;
  for (const Triple &t : kg.triples(split)) {
    queries.insert(make_query(kg, t.head, t.rp));
  }
  std::vector<ContextQuery> missing;
  for (const ContextQuery &q : queries) {
    if (!cache.get(q)) missing.push_back(q);
  }
  return missing;
}

void require_coverage(const OpenKG &kg, Split split,
                      const ContextVectorCache &cache) {
  std::vector<ContextQuery> missing = missing_queries(kg, split, cache);
  if (missing.empty()) return;
  std::string msg = "cache misses " + std::to_string(missing.size()) +
                    " queries of split " + split_name(split) + ":";
  std::size_t shown = 0;
  for (const ContextQuery &q : missing) {
    if (shown++ == 20) {
      msg += " ...";
      break;
    }
    msg += " (" + std::string(q.dir == Direction::kTail ? "t" : "h") + "," +
           std::to_string(q.head) + "," + std::to_string(q.rp) + ")";
  }
  throw Error(msg);
}

EvalReport evaluate_link_prediction(const QueryScorer &scorer, const OpenKG &kg,
                                    const EvalOptions &options) {
  if (!kg.inverse_augmented) {
    throw Error("evaluation requires an inverse-augmented graph");
  }
  QueryIndex known;
  if (options.filtered) known = known_true_index(kg);

  EvalReport report;
  report.filtered = options.filtered;
  report.split = split_name(options.split);

  for (const Triple &t : kg.triples(options.split)) {
    if (t.rp >= kg.num_original_rps) continue;  // evaluate originals once
    report.triples.push_back(t);

    // tail prediction
    {
      std::set<NpId> exclude =
          options.filtered ? filtered_exclusions(known, t.head, t.rp, t.tail)
                           : std::set<NpId>{};
      Vec scores = scorer.score_all(t.head, t.rp);
      std::vector<NpId> order = rank_all_nps(scores, exclude);
      report.ranks.rank_tail.push_back(cluster_rank(order, kg.clusters, t.tail));
    }
    // head prediction through the inverse relation
    {
      RpId inv = static_cast<RpId>(t.rp + kg.num_original_rps);
      std::set<NpId> exclude =
          options.filtered ? filtered_exclusions(known, t.tail, inv, t.head)
                           : std::set<NpId>{};
      Vec scores = scorer.score_all(t.tail, inv);
      std::vector<NpId> order = rank_all_nps(scores, exclude);
      report.ranks.rank_head.push_back(cluster_rank(order, kg.clusters, t.head));
    }
  }
  if (report.triples.empty()) throw Error("split has no triples to evaluate");
  report.metrics = compute_metrics(report.ranks);
  return report;
}

nlohmann::json EvalReport::to_json(const nlohmann::json &config_echo) const {
  nlohmann::json per;
  per = nlohmann::json::array();
  for (std::size_t i = 0; i < triples.size(); ++i) {
    per.push_back({{"head", triples[i].head},
                   {"rp", triples[i].rp},
                   {"tail", triples[i].tail},
                   {"rank_head", ranks.rank_head[i]},
                   {"rank_tail", ranks.rank_tail[i]}});
  }
  return {{"config", config_echo},
          {"split", split},
          {"filtered", filtered},
          {"metrics", metrics.to_json()},
          {"per_triple", per}};
}

// ---------------------------------------------------------------------------
// Typer-based type compatibility
// ---------------------------------------------------------------------------

TyperResults TyperResults::load(const std::filesystem::path &tsv) {
  std::ifstream in(tsv);
  if (!in) throw IoError("missing file: " + tsv.string());
  TyperResults r;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 3) {
      throw ValidationError("expected sentence<TAB>mention<TAB>types at " +
                            tsv.string() + ":" + std::to_string(lineno));
    }
    std::vector<std::string> types = split(fields[2], ',');
    if (types.size() == 1 && types[0].empty()) types.clear();
    r.add(fields[0], fields[1], std::move(types));
  }
  return r;
}

void TyperResults::add(const std::string &sentence, const std::string &mention,
                       std::vector<std::string> types) {
  if (types.size() > 5) types.resize(5);  // top five retained
  table_[{sentence, mention}] = std::move(types);
}

std::optional<std::vector<std::string>> TyperResults::lookup(
    const std::string &sentence, const std::string &mention) const {
  auto it = table_.find({sentence, mention});
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

void TyperResults::save(const std::filesystem::path &tsv) const {
  std::ofstream out(tsv, std::ios::binary);
  if (!out) throw IoError("cannot write " + tsv.string());
  for (const auto &[key, types] : table_) {
    out << key.first << '\t' << key.second << '\t' << join(types, ",") << '\n';
  }
}

double type_set_f1(const std::vector<std::string> &gold,
                   const std::vector<std::string> &predicted) {
  std::set<std::string> g(gold.begin(), gold.end());
  std::set<std::string> p(predicted.begin(), predicted.end());
  if (g.empty() && p.empty()) return 1.0;
  std::size_t inter = 0;
  for (const std::string &t : p) inter += g.count(t);
  return 2.0 * static_cast<double>(inter) /
         static_cast<double>(g.size() + p.size());
}

TypeCompatReport type_compat_f1(const QueryScorer &scorer, const OpenKG &kg,
                                Split split, const TyperResults &typer,
                                bool filtered) {
  if (!kg.inverse_augmented) {
    throw Error("type evaluation requires an inverse-augmented graph");
  }
  QueryIndex known;
  if (filtered) known = known_true_index(kg);

  TypeCompatReport report;
  auto sentence = [&](NpId h, RpId rp_orig, NpId t) {
    return kg.nps[h] + " " + kg.rps[rp_orig] + " " + kg.nps[t];
  };

  for (const Triple &t : kg.triples(split)) {
    if (t.rp >= kg.num_original_rps) continue;
    // tail task: compare types of the gold tail and of the top prediction
    {
      std::set<NpId> exclude =
          filtered ? filtered_exclusions(known, t.head, t.rp, t.tail)
                   : std::set<NpId>{};
      Vec scores = scorer.score_all(t.head, t.rp);
      NpId top = rank_all_nps(scores, exclude).front();
      auto gold_types = typer.lookup(sentence(t.head, t.rp, t.tail), kg.nps[t.tail]);
      auto pred_types = typer.lookup(sentence(t.head, t.rp, top), kg.nps[top]);
      if (gold_types && pred_types) {
        report.per_sample.push_back(type_set_f1(*gold_types, *pred_types));
      } else {
        ++report.skipped;
      }
    }
    // head task
    {
      RpId inv = static_cast<RpId>(t.rp + kg.num_original_rps);
      std::set<NpId> exclude =
          filtered ? filtered_exclusions(known, t.tail, inv, t.head)
                   : std::set<NpId>{};
      Vec scores = scorer.score_all(t.tail, inv);
      NpId top = rank_all_nps(scores, exclude).front();
      auto gold_types = typer.lookup(sentence(t.head, t.rp, t.tail), kg.nps[t.head]);
      auto pred_types = typer.lookup(sentence(top, t.rp, t.tail), kg.nps[top]);
      if (gold_types && pred_types) {
        report.per_sample.push_back(type_set_f1(*gold_types, *pred_types));
      } else {
        ++report.skipped;
      }
    }
  }
  if (!report.per_sample.empty()) {
    report.mean_f1 =
        std::accumulate(report.per_sample.begin(), report.per_sample.end(), 0.0) /
        static_cast<double>(report.per_sample.size());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Significance tests
// ---------------------------------------------------------------------------

SignificanceResult significance_tests(const std::vector<double> &sample_a,
                                      const std::vector<double> &sample_b,
                                      double alpha, std::uint64_t seed) {
  if (sample_a.size() != sample_b.size() || sample_a.empty()) {
    throw Error("significance tests require nonempty paired samples");
  }
  const std::size_t n = sample_a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = sample_b[i] - sample_a[i];

  SignificanceResult res;

  // paired sign-flip permutation test on the mean difference
  {
    const int resamples = 10000;
    double observed = std::abs(std::accumulate(diff.begin(), diff.end(), 0.0)) /
                      static_cast<double>(n);
    Rng rng(seed);
    int at_least = 0;
    for (int b = 0; b < resamples; ++b) {
      double s = 0.0;
      for (double d : diff) s += rng.bernoulli(0.5) ? d : -d;
      if (std::abs(s) / static_cast<double>(n) >= observed - 1e-15) ++at_least;
    }
    res.permutation_p =
        (at_least + 1.0) / (resamples + 1.0);
  }

  // Wilcoxon signed-rank with average ranks, tie correction, continuity
  {
    std::vector<double> nz;
    for (double d : diff) {
      if (d != 0.0) nz.push_back(d);
    }
    if (nz.empty()) {
      res.wilcoxon_p = 1.0;
    } else {
      std::vector<std::size_t> idx(nz.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(nz[a]) < std::abs(nz[b]);
      });
      std::vector<double> rank(nz.size());
      double tie_term = 0.0;
      for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() &&
               std::abs(nz[idx[j]]) == std::abs(nz[idx[i]])) {
          ++j;
        }
        double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) rank[idx[k]] = avg;
        double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
      }
      double w_plus = 0.0;
      for (std::size_t i = 0; i < nz.size(); ++i) {
        if (nz[i] > 0.0) w_plus += rank[i];
      }
      const double m = static_cast<double>(nz.size());
      const double mean = m * (m + 1.0) / 4.0;
      const double var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - tie_term / 48.0;
      if (var <= 0.0) {
        res.wilcoxon_p = 1.0;
      } else {
        double z = (w_plus - mean) / std::sqrt(var);
        boost::math::normal norm;
        res.wilcoxon_p = 2.0 * boost::math::cdf(norm, -std::abs(z));
        res.wilcoxon_p = std::min(1.0, res.wilcoxon_p);
      }
    }
  }

  // paired t-test
  {
    double mean = std::accumulate(diff.begin(), diff.end(), 0.0) /
                  static_cast<double>(n);
    double ss = 0.0;
    for (double d : diff) ss += (d - mean) * (d - mean);
    if (n < 2 || ss == 0.0) {
      res.ttest_p = mean == 0.0 ? 1.0 : 0.0;
    } else {
      double sd = std::sqrt(ss / static_cast<double>(n - 1));
      double t = mean / (sd / std::sqrt(static_cast<double>(n)));
      boost::math::students_t dist(static_cast<double>(n - 1));
      res.ttest_p = 2.0 * boost::math::cdf(dist, -std::abs(t));
    }
  }

  res.permutation_significant = res.permutation_p < alpha;
  res.wilcoxon_significant = res.wilcoxon_p < alpha;
  res.ttest_significant = res.ttest_p < alpha;
  return res;
}

nlohmann::json SignificanceResult::to_json() const {
  return {{"permutation_p", permutation_p},
          {"wilcoxon_p", wilcoxon_p},
          {"ttest_p", ttest_p},
          {"permutation_significant", permutation_significant},
          {"wilcoxon_significant", wilcoxon_significant},
          {"ttest_significant", ttest_significant}};
}

// ---------------------------------------------------------------------------
// Typed-graph probe
// ---------------------------------------------------------------------------

TypedKG TypedKG::load(const std::filesystem::path &triples_tsv,
                      const std::filesystem::path &types_tsv) {
  TypedKG tkg;
  std::map<std::string, NpId> ent_ids;
  std::map<std::string, RpId> rel_ids;

  {
    std::ifstream in(types_tsv);
    if (!in) throw IoError("missing file: " + types_tsv.string());
    std::string line;
    std::size_t lineno = 0;
    std::set<std::string> vocab;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      std::vector<std::string> fields = split(line, '\t');
      if (fields.size() != 2) {
        throw ValidationError("expected entity<TAB>types at " +
                              types_tsv.string() + ":" + std::to_string(lineno));
      }
      std::vector<std::string> types = split(fields[1], ',');
      if (types.empty() || (types.size() == 1 && types[0].empty())) {
        throw ValidationError("entity without types at " + types_tsv.string() +
                              ":" + std::to_string(lineno));
      }
      auto [it, inserted] =
          ent_ids.emplace(fields[0], static_cast<NpId>(tkg.entities.size()));
      if (inserted) {
        tkg.entities.push_back(fields[0]);
        tkg.types.emplace_back();
      }
      for (std::string &t : types) {
        vocab.insert(t);
        tkg.types[it->second].push_back(std::move(t));
      }
    }
    tkg.type_vocab.assign(vocab.begin(), vocab.end());
  }
  {
    std::ifstream in(triples_tsv);
    if (!in) throw IoError("missing file: " + triples_tsv.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      std::vector<std::string> fields = split(line, '\t');
      if (fields.size() != 3) {
        throw ValidationError("expected head<TAB>relation<TAB>tail at " +
                              triples_tsv.string() + ":" +
                              std::to_string(lineno));
      }
      auto hid = ent_ids.find(fields[0]);
      auto tid = ent_ids.find(fields[2]);
      if (hid == ent_ids.end() || tid == ent_ids.end()) {
        throw ValidationError("triple references untyped entity at " +
                              triples_tsv.string() + ":" +
                              std::to_string(lineno));
      }
      auto [rit, inserted] =
          rel_ids.emplace(fields[1], static_cast<RpId>(tkg.relations.size()));
      if (inserted) tkg.relations.push_back(fields[1]);
      tkg.triples.push_back({hid->second, rit->second, tid->second});
    }
  }
  return tkg;
}

std::vector<std::pair<std::string, float>> MlmMaskedPredictor::predict_tail_tokens(
    const std::string &head, const std::string &relation, int k) {
  std::size_t mask_pos = 0;
  std::vector<std::int32_t> prompt =
      build_cloze_prompt(model_.tokenizer(), model_.config().max_position, head,
                         relation, false, &mask_pos);
  MatF hidden = model_.encode(prompt);
  VecF logits = model_.vocab_logits(
      hidden.row(static_cast<Eigen::Index>(mask_pos)).transpose());
  const std::int32_t vocab = static_cast<std::int32_t>(logits.size());
  k = std::min<std::int32_t>(k, vocab);
  std::vector<std::int32_t> ids(vocab);
  std::iota(ids.begin(), ids.end(), 0);
  std::partial_sort(ids.begin(), ids.begin() + k, ids.end(),
                    [&](std::int32_t a, std::int32_t b) {
                      if (logits[a] != logits[b]) return logits[a] > logits[b];
                      return a < b;
                    });
  std::vector<std::pair<std::string, float>> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    out.emplace_back(model_.tokenizer().token(ids[i]), logits[ids[i]]);
  }
  return out;
}

ProbeReport freebase_type_probe(
    const TypedKG &tkg, MaskedTokenPredictor &predictor,
    std::uint64_t baseline_seed,
    const std::optional<std::filesystem::path> &human_tsv) {
  const WordPieceTokenizer &tok = predictor.tokenizer();

  // entities reachable from a predicted token string
  std::map<std::string, NpId> entity_by_surface;
  for (NpId e = 0; e < static_cast<NpId>(tkg.entities.size()); ++e) {
    std::string key = tok.lowercase() ? lowercase_ascii(tkg.entities[e])
                                      : tkg.entities[e];
    entity_by_surface.emplace(key, e);
  }

  // single-token-tail subset
  std::vector<std::size_t> subset;
  for (std::size_t i = 0; i < tkg.triples.size(); ++i) {
    if (tok.is_single_token(tkg.entities[tkg.triples[i].tail])) {
      subset.push_back(i);
    }
  }
  if (subset.empty()) throw Error("typed graph has no single-token tails");

  // corpus type frequencies for the most-frequent-types baseline
  std::map<std::string, std::size_t> freq;
  for (const auto &ts : tkg.types) {
    for (const std::string &t : ts) ++freq[t];
  }
  std::vector<std::string> by_freq;
  for (const auto &[t, c] : freq) by_freq.push_back(t);
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [&](const std::string &a, const std::string &b) {
                     if (freq[a] != freq[b]) return freq[a] > freq[b];
                     return a < b;
                   });

  struct Accum {
    double p = 0.0, r = 0.0, f1 = 0.0;
    std::size_t n = 0;
  };
  Accum lm, random_b, mft;
  std::size_t skipped = 0;
  Rng rng(baseline_seed);

  auto add = [](Accum &a, const std::set<std::string> &gold,
                const std::vector<std::string> &pred) {
    std::set<std::string> ps(pred.begin(), pred.end());
    std::size_t inter = 0;
    for (const std::string &t : ps) inter += gold.count(t);
    if (!ps.empty()) a.p += static_cast<double>(inter) / ps.size();
    a.r += static_cast<double>(inter) / gold.size();
    a.f1 += 2.0 * static_cast<double>(inter) /
            static_cast<double>(ps.size() + gold.size());
    ++a.n;
  };

  for (std::size_t i : subset) {
    const Triple &t = tkg.triples[i];
    auto preds = predictor.predict_tail_tokens(tkg.entities[t.head],
                                               tkg.relations[t.rp], 1);
    if (preds.empty()) {
      ++skipped;
      continue;
    }
    auto hit = entity_by_surface.find(preds[0].first);
    if (hit == entity_by_surface.end()) {
      ++skipped;  // predicted token maps to no typed entity
      continue;
    }
    const std::vector<std::string> &pred_types = tkg.types[hit->second];
    std::set<std::string> gold(tkg.types[t.tail].begin(),
                               tkg.types[t.tail].end());
    add(lm, gold, pred_types);

    // baselines size-matched to |predicted types|
    std::set<std::string> pred_set(pred_types.begin(), pred_types.end());
    const std::size_t k = pred_set.size();
    std::vector<std::string> rand_types;
    {
      std::set<std::size_t> chosen;
      while (chosen.size() < std::min(k, tkg.type_vocab.size())) {
        chosen.insert(static_cast<std::size_t>(rng.below(tkg.type_vocab.size())));
      }
      for (std::size_t c : chosen) rand_types.push_back(tkg.type_vocab[c]);
    }
    add(random_b, gold, rand_types);
    std::vector<std::string> mft_types(
        by_freq.begin(), by_freq.begin() + std::min(k, by_freq.size()));
    add(mft, gold, mft_types);
  }

  ProbeReport report;
  report.single_token_triples = subset.size();
  auto push = [&](const std::string &name, const Accum &a) {
    ProbeRow row;
    row.method = name;
    if (a.n > 0) {
      row.precision = a.p / a.n;
      row.recall = a.r / a.n;
      row.f1 = a.f1 / a.n;
    }
    row.evaluated = a.n;
    row.skipped = skipped;
    report.rows.push_back(row);
  };
  push("random", random_b);
  push("mft", mft);
  push("lm", lm);

  if (human_tsv) {
    // one row per annotated triple: tail surface <TAB> union of types
    std::ifstream in(*human_tsv);
    if (!in) throw IoError("missing file: " + human_tsv->string());
    Accum human;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      std::vector<std::string> fields = split(line, '\t');
      if (fields.size() != 2) {
        throw ValidationError("expected tail<TAB>types at " +
                              human_tsv->string() + ":" +
                              std::to_string(lineno));
      }
      auto ent = entity_by_surface.find(
          tok.lowercase() ? lowercase_ascii(fields[0]) : fields[0]);
      if (ent == entity_by_surface.end()) continue;
      std::set<std::string> gold(tkg.types[ent->second].begin(),
                                 tkg.types[ent->second].end());
      add(human, gold, split(fields[1], ','));
    }
    push("human", human);
  }
  return report;
}

nlohmann::json ProbeReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const ProbeRow &r : rows) {
    rows_json.push_back({{"method", r.method},
                         {"precision", r.precision},
                         {"recall", r.recall},
                         {"f1", r.f1},
                         {"evaluated", r.evaluated},
                         {"skipped", r.skipped}});
  }
  return {{"single_token_triples", single_token_triples}, {"rows", rows_json}};
}

}  // namespace okgit
