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

#ifndef OKGIT_EVALUATION_H_
#define OKGIT_EVALUATION_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "okgit/encoder.hpp"
#include "okgit/lm_context.hpp"
#include "okgit/typecomp.hpp"

namespace okgit {

// ---------------------------------------------------------------------------
// Frozen scoring
// ---------------------------------------------------------------------------

// Anything that can score every NP as candidate answer of a (head, rp) query.
class QueryScorer {
 public:
  virtual ~QueryScorer() = default;
  virtual Vec score_all(NpId head, RpId rp) const = 0;
};

// Scores candidates with frozen model parameters. Caches the encoded NP
// matrix, projected type vectors, and relation encodings; safe for read-only
// parallel use after warm-up.
class FrozenScorer : public QueryScorer {
 public:
  FrozenScorer(const Encoder &encoder, ContextSource *context, double gamma,
               TypeScoreVariant variant);

  // psi over all NPs; context source may be null only when gamma == 0.
  Vec score_all(NpId head, RpId rp) const override;

  // prediction-score component alone (the gamma == 0 path)
  Vec score_pred_all(NpId head, RpId rp) const;

  const Encoder &encoder() const { return enc_; }
  double gamma() const { return gamma_; }

 private:
  const Vec &rp_encoding(RpId rp) const;

  const Encoder &enc_;
  ContextSource *ctx_;
  double gamma_;
  TypeScoreVariant variant_;
  Mat e_enc_;       // N x d_e
  Mat tau_c_;       // N x d_tau, built when gamma > 0
  Vec tau_c_norms_;
  mutable std::map<RpId, Vec> rp_cache_;
};

// Language-model-only baseline: each single-token NP is scored by its
// vocabulary logit at the masked slot; multi-token NPs score -inf.
class LmBaselineScorer : public QueryScorer {
 public:
  LmBaselineScorer(const OpenKG &kg, MlmContextProvider &provider);
  Vec score_all(NpId head, RpId rp) const override;

 private:
  const OpenKG &kg_;
  MlmContextProvider &provider_;
  std::vector<std::int32_t> np_token_;  // -1 when the NP is not a single token
};

// ---------------------------------------------------------------------------
// Ranking protocol
// ---------------------------------------------------------------------------

// Candidate ids ordered by score descending, ties by id ascending; ids in
// `exclude` are removed from contention entirely.
std::vector<NpId> rank_all_nps(const Vec &scores, const std::set<NpId> &exclude);

// Rank of the cluster containing `gold`: clusters are represented by their
// best-ranked member and re-ranked.
std::uint32_t cluster_rank(const std::vector<NpId> &np_ranking,
                           const ClusterMap &clusters, NpId gold);

struct RankResult {
  std::vector<std::uint32_t> rank_head;
  std::vector<std::uint32_t> rank_tail;
};

struct Metrics {
  double mrr = 0.0;     // x100
  double mr = 0.0;      // unscaled
  double hits1 = 0.0;   // x100
  double hits3 = 0.0;
  double hits10 = 0.0;

  nlohmann::json to_json() const;
};

Metrics compute_metrics(const RankResult &ranks);

struct EvalOptions {
  bool filtered = true;
  Split split = Split::kTest;
};

// Queries of one split (both directions) that a cache cannot serve; used to
// fail fast with the full list before an evaluation begins.
std::vector<ContextQuery> missing_queries(const OpenKG &kg, Split split,
                                          const ContextVectorCache &cache);
// Throws an error enumerating the missing queries, when any.
void require_coverage(const OpenKG &kg, Split split,
                      const ContextVectorCache &cache);

struct EvalReport {
  Metrics metrics;
  RankResult ranks;
  std::vector<Triple> triples;  // original-direction triples evaluated
  bool filtered = true;
  std::string split;

  nlohmann::json to_json(const nlohmann::json &config_echo) const;
};

// Runs the full protocol over one split of an inverse-augmented graph: tail
// ranks from (h, r) queries, head ranks from (t, r_inv) queries, both mapped
// to gold-cluster ranks.
EvalReport evaluate_link_prediction(const QueryScorer &scorer, const OpenKG &kg,
                                    const EvalOptions &options);

// ---------------------------------------------------------------------------
// Typer-based type compatibility
// ---------------------------------------------------------------------------

// External typing-model outputs keyed by (sentence, mention); at most the
// five top predicted types are retained per entry.
class TyperResults {
 public:
  static TyperResults load(const std::filesystem::path &tsv);

  std::optional<std::vector<std::string>> lookup(const std::string &sentence,
                                                 const std::string &mention) const;
  void add(const std::string &sentence, const std::string &mention,
           std::vector<std::string> types);
  std::size_t size() const { return table_.size(); }
  void save(const std::filesystem::path &tsv) const;

 private:
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> table_;
};

// 2|A∩B| / (|A|+|B|) with types as sets; 1.0 when both sets are empty.
double type_set_f1(const std::vector<std::string> &gold,
                   const std::vector<std::string> &predicted);

struct TypeCompatReport {
  double mean_f1 = 0.0;
  std::vector<double> per_sample;  // one term per covered (triple, direction)
  std::size_t skipped = 0;         // queries without typer coverage
};

// Mean per-query type F1 between the gold answer's types and the top-ranked
// prediction's types, over both prediction directions of `split`.
TypeCompatReport type_compat_f1(const QueryScorer &scorer, const OpenKG &kg,
                                Split split, const TyperResults &typer,
                                bool filtered = true);

// ---------------------------------------------------------------------------
// Significance testing
// ---------------------------------------------------------------------------

struct SignificanceResult {
  double permutation_p = 1.0;
  double wilcoxon_p = 1.0;
  double ttest_p = 1.0;
  bool permutation_significant = false;
  bool wilcoxon_significant = false;
  bool ttest_significant = false;

  nlohmann::json to_json() const;
};

// Paired tests over equal-length samples: sign-flip permutation test with
// 10,000 seeded resamples, Wilcoxon signed-rank (normal approximation with
// tie correction), and paired t-test. Two-sided p-values.
SignificanceResult significance_tests(const std::vector<double> &sample_a,
                                      const std::vector<double> &sample_b,
                                      double alpha, std::uint64_t seed = 12345);

// ---------------------------------------------------------------------------
// Typed-graph probe
// ---------------------------------------------------------------------------

struct TypedKG {
  std::vector<std::string> entities;           // surface strings
  std::vector<std::vector<std::string>> types; // per entity, nonempty
  std::vector<Triple> triples;                 // ids into entities
  std::vector<std::string> relations;
  std::vector<std::string> type_vocab;         // distinct types sorted

  // triples TSV: head<TAB>relation<TAB>tail (surface strings);
  // types TSV: entity<TAB>type1,type2,...
  static TypedKG load(const std::filesystem::path &triples_tsv,
                      const std::filesystem::path &types_tsv);
};

struct ProbeRow {
  std::string method;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

struct ProbeReport {
  std::vector<ProbeRow> rows;
  std::size_t single_token_triples = 0;

  nlohmann::json to_json() const;
};

// Fills a masked tail slot for a (head, relation) pair and returns candidate
// tokens with scores, best first. Implemented by the language model; tests
// may substitute table-driven predictors.
class MaskedTokenPredictor {
 public:
  virtual ~MaskedTokenPredictor() = default;
  virtual const WordPieceTokenizer &tokenizer() const = 0;
  virtual std::vector<std::pair<std::string, float>> predict_tail_tokens(
      const std::string &head, const std::string &relation, int k) = 0;
};

class MlmMaskedPredictor : public MaskedTokenPredictor {
 public:
  explicit MlmMaskedPredictor(const MlmModel &model) : model_(model) {}
  const WordPieceTokenizer &tokenizer() const override {
    return model_.tokenizer();
  }
  std::vector<std::pair<std::string, float>> predict_tail_tokens(
      const std::string &head, const std::string &relation, int k) override;

 private:
  const MlmModel &model_;
};

// Masked-prediction type probe over the single-token-tail subset: the
// language model fills the tail slot, the predicted token is mapped to a
// typed entity, and its gold types are compared against the true tail's.
// Baselines draw |predicted types| random types (seeded) or take the most
// frequent types. An optional human-annotation TSV (tail<TAB>types, one row
// per annotated triple) adds an ingested row.
ProbeReport freebase_type_probe(
    const TypedKG &tkg, MaskedTokenPredictor &predictor,
    std::uint64_t baseline_seed = 7,
    const std::optional<std::filesystem::path> &human_tsv = std::nullopt);

}  // namespace okgit

#endif  // OKGIT_EVALUATION_H_
