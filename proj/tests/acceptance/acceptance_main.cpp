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

// Acceptance suite. One line per criterion:
//
//   PASS  criterion N: ...
//   FAIL  criterion N: ...
//   SKIP  criterion N: ... (why, and what input would enable it)
//
// Criteria that reproduce published numbers need the released datasets and
// exported language-model weights under $OKGIT_DATA_ROOT (see README).
// Each such criterion also has an always-on synthetic analogue (marked "s")
// that exercises the same machinery end to end at desk scale.
//
// Exit status is nonzero iff any criterion FAILs.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "okgit/reports.hpp"
#include "okgit/training.hpp"
#include "../synthetic.hpp"
#include "../test_util.hpp"

using namespace okgit;
using namespace okgit::test;

namespace {

struct Outcome {
  enum Status { kPass, kFail, kSkip } status;
  std::string detail;
};

Outcome pass(std::string d = "") { return {Outcome::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::kFail, std::move(d)}; }
Outcome skip(std::string d) { return {Outcome::kSkip, std::move(d)}; }

int g_failures = 0;

void report(const std::string &name, const Outcome &o) {
  const char *tag = o.status == Outcome::kPass   ? "PASS"
                    : o.status == Outcome::kFail ? "FAIL"
                                                 : "SKIP";
  if (o.status == Outcome::kFail) ++g_failures;
  std::cout << tag << "  " << name;
  if (!o.detail.empty()) std::cout << " — " << o.detail;
  std::cout << std::endl;
}

std::optional<std::filesystem::path> data_root() {
  const char *env = std::getenv("OKGIT_DATA_ROOT");
  if (env == nullptr || std::string(env).empty()) return std::nullopt;
  return std::filesystem::path(env);
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("missing file: " + p.string());
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Shared synthetic training run (used by criteria 1s and 8s)
// ---------------------------------------------------------------------------

struct SyntheticRun {
  SyntheticWorld world;
  OpenKG kg;  // augmented
  std::filesystem::path okgit_ckpt, reduced_ckpt;
  Metrics okgit_test, reduced_test;
  bool mrr_gap_held = false;
  std::unique_ptr<SyntheticContextProvider> provider;
  std::unique_ptr<ProviderContextSource> source;
};

std::unique_ptr<SyntheticRun> g_synth;  // built once by criterion 1s

SyntheticRun &synthetic_run(const std::filesystem::path &scratch) {
  if (g_synth) return *g_synth;
  g_synth = std::make_unique<SyntheticRun>();
  SyntheticWorld::Options opt;
  opt.num_types = 4;
  opt.nps_per_type = 12;
  opt.rps_per_type = 2;
  opt.triples_per_rp = 45;
  opt.context_dim = 16;
  opt.context_noise = 0.02;
  opt.seed = 2026;
  g_synth->world = SyntheticWorld::build(opt);
  g_synth->kg = augment_inverse_relations(g_synth->world.kg);
  g_synth->provider =
      std::make_unique<SyntheticContextProvider>(g_synth->world, g_synth->kg);
  g_synth->source =
      std::make_unique<ProviderContextSource>(*g_synth->provider, false);

  ModelConfig cfg = toy_config(7);
  cfg.d_tau = 8;
  cfg.max_epochs = 60;
  cfg.patience = 60;
  cfg.batch_queries = 128;
  cfg.provider_id = "synthetic";

  ModelConfig okgit_cfg = cfg;
  okgit_cfg.gamma = 2.0;
  okgit_cfg.lambda = 0.01;
  g_synth->okgit_ckpt = scratch / "okgit";
  fit(g_synth->kg, g_synth->source.get(), okgit_cfg, g_synth->okgit_ckpt,
      nullptr);

  ModelConfig reduced_cfg = cfg;
  reduced_cfg.gamma = 0.0;
  reduced_cfg.lambda = 0.0;
  reduced_cfg.provider_id.clear();
  g_synth->reduced_ckpt = scratch / "reduced";
  fit(g_synth->kg, nullptr, reduced_cfg, g_synth->reduced_ckpt, nullptr);

  auto eval = [&](const std::filesystem::path &dir, ContextSource *src) {
    Checkpoint ckpt = Checkpoint::load(dir);
    Encoder enc(ckpt.params, g_synth->kg, ckpt.words);
    FrozenScorer scorer(enc, src, ckpt.params.cfg.gamma,
                        ckpt.params.cfg.type_variant);
    EvalOptions opts;
    opts.split = Split::kTest;
    return evaluate_link_prediction(scorer, g_synth->kg, opts).metrics;
  };
  g_synth->okgit_test = eval(g_synth->okgit_ckpt, g_synth->source.get());
  g_synth->reduced_test = eval(g_synth->reduced_ckpt, nullptr);
  return *g_synth;
}

// ---------------------------------------------------------------------------
// criterion 1 — desk-scale reproduction on the filtered dataset
// ---------------------------------------------------------------------------

Outcome criterion1_real() {
  auto root = data_root();
  if (!root) {
    return skip(
        "needs $OKGIT_DATA_ROOT with care_release/ReVerb20K and mlm/base; "
        "synthetic analogue runs as criterion 1s");
  }
  const std::filesystem::path work = *root / "work";
  std::filesystem::create_directories(work);
  const bool downsample = std::getenv("OKGIT_CPU_DOWNSAMPLE") != nullptr;

  // prepare: convert, filter to single-token NPs with the base vocabulary
  OpenKG full = load_care_release(*root / "care_release" / "ReVerb20K");
  WordPieceTokenizer tok =
      WordPieceTokenizer::from_vocab_file(*root / "mlm" / "base" / "vocab.txt");
  OpenKG filtered = filter_single_token(full, tok);
  if (downsample) {
    Rng rng(1);
    rng.shuffle(filtered.train);
    filtered.train.resize(filtered.train.size() / 2);
  }
  save_openkg(filtered, work / "reverb20kf");
  OpenKG kg = augment_inverse_relations(filtered);

  // extract the context cache once
  const std::filesystem::path cache_path = work / "reverb20kf_base.okgc";
  {
    auto model =
        std::make_shared<MlmModel>(MlmModel::load(*root / "mlm" / "base"));
    MlmContextProvider provider("mlm-base", kg, model);
    ContextVectorCache cache =
        std::filesystem::exists(cache_path)
            ? ContextVectorCache::open(cache_path)
            : ContextVectorCache::create(cache_path, "mlm-base",
                                         provider.dim());
    std::set<ContextQuery> queries;
    for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
      for (const Triple &t : kg.triples(s)) {
        queries.insert(make_query(kg, t.head, t.rp));
      }
    }
    for (const ContextQuery &q : queries) cache.get_or_compute(q, provider);
    cache.write_index_sidecar();
  }
  ContextVectorCache cache = ContextVectorCache::open(cache_path);
  CacheContextSource source(cache);

  // optimal published row: d_tau 300, lambda 0.001, gamma 5.0, base model
  ModelConfig okgit_cfg;
  okgit_cfg.d_tau = 300;
  okgit_cfg.lambda = 0.001;
  okgit_cfg.gamma = 5.0;
  okgit_cfg.provider_id = "mlm-base";
  okgit_cfg.seed = 1;
  FitResult okgit_fit =
      fit(kg, &source, okgit_cfg, work / "okgit_reverb20kf", &std::cerr);

  ModelConfig reduced_cfg = okgit_cfg;
  reduced_cfg.gamma = 0.0;
  reduced_cfg.lambda = 0.0;
  reduced_cfg.provider_id.clear();
  FitResult reduced_fit =
      fit(kg, nullptr, reduced_cfg, work / "reduced_reverb20kf", &std::cerr);

  auto eval_test = [&](const std::filesystem::path &dir, ContextSource *src) {
    Checkpoint ckpt = Checkpoint::load(dir);
    Encoder enc(ckpt.params, kg, ckpt.words);
    FrozenScorer scorer(enc, src, ckpt.params.cfg.gamma,
                        ckpt.params.cfg.type_variant);
    EvalOptions opts;
    return evaluate_link_prediction(scorer, kg, opts).metrics;
  };
  Metrics okgit = eval_test(okgit_fit.checkpoint_dir, &source);
  Metrics reduced = eval_test(reduced_fit.checkpoint_dir, nullptr);
  const double gap = okgit.mrr - reduced.mrr;

  std::string detail = "okgit MRR " + fmt(okgit.mrr) + " hits10 " +
                       fmt(okgit.hits10) + ", reduced MRR " + fmt(reduced.mrr) +
                       ", gap " + fmt(gap) + ", valid MRR " +
                       fmt(okgit_fit.best_valid_mrr) + " (reference 31.7)";
  if (downsample) {
    return gap >= 2.0 ? pass(detail + " (downsampled run, gap bound only)")
                      : fail(detail + "; expected gap >= 2.0");
  }
  bool ok = std::abs(okgit.mrr - 34.6) <= 2.0 &&
            std::abs(okgit.hits10 - 50.2) <= 2.5 &&
            std::abs(reduced.mrr - 29.3) <= 2.0 && gap >= 3.0;
  return ok ? pass(detail)
            : fail(detail +
                   "; expected MRR 34.6±2.0, hits10 50.2±2.5, reduced 29.3±2.0, "
                   "gap >= 3.0");
}

Outcome criterion1_synthetic(const std::filesystem::path &scratch) {
  SyntheticRun &run = synthetic_run(scratch);
  const double gap = run.okgit_test.mrr - run.reduced_test.mrr;
  run.mrr_gap_held = gap >= 2.0;
  std::string detail = "okgit MRR " + fmt(run.okgit_test.mrr) + ", reduced MRR " +
                       fmt(run.reduced_test.mrr) + ", gap " + fmt(gap) +
                       " (synthetic typed world)";
  return run.mrr_gap_held ? pass(detail)
                          : fail(detail + "; expected gap >= 2.0");
}

// ---------------------------------------------------------------------------
// criterion 2 — full-dataset reproduction (optional, long)
// ---------------------------------------------------------------------------

Outcome criterion2() {
  auto root = data_root();
  if (!root || std::getenv("OKGIT_RUN_FULL") == nullptr) {
    return skip("long run; set $OKGIT_DATA_ROOT and OKGIT_RUN_FULL=1 "
                "(ReVerb20K MRR 35.9, ReVerb45K 33.2; non-gating)");
  }
  const std::filesystem::path work = *root / "work";
  std::filesystem::create_directories(work);

  struct Spec {
    const char *dir;
    const char *mlm;
    int d_tau;
    double lambda, gamma;
    double expect_mrr;
  };
  // published optima per dataset
  const Spec specs[] = {{"ReVerb20K", "large", 300, 0.01, 5.0, 35.9},
                        {"ReVerb45K", "large", 100, 0.0, 2.0, 33.2}};
  std::string detail;
  for (const Spec &s : specs) {
    OpenKG raw = load_care_release(*root / "care_release" / s.dir);
    save_openkg(raw, work / (std::string(s.dir) + "_canonical"));
    OpenKG kg = augment_inverse_relations(raw);
    auto model = std::make_shared<MlmModel>(
        MlmModel::load(*root / "mlm" / s.mlm));
    std::string provider_id = std::string("mlm-") + s.mlm;
    MlmContextProvider provider(provider_id, kg, model);
    const std::filesystem::path cache_path =
        work / (std::string(s.dir) + "_" + s.mlm + ".okgc");
    ContextVectorCache cache =
        std::filesystem::exists(cache_path)
            ? ContextVectorCache::open(cache_path)
            : ContextVectorCache::create(cache_path, provider_id,
                                         provider.dim());
    std::set<ContextQuery> queries;
    for (Split sp : {Split::kTrain, Split::kValid, Split::kTest}) {
      for (const Triple &t : kg.triples(sp)) {
        queries.insert(make_query(kg, t.head, t.rp));
      }
    }
    for (const ContextQuery &q : queries) cache.get_or_compute(q, provider);
    CacheContextSource source(cache);
    ModelConfig cfg;
    cfg.d_tau = s.d_tau;
    cfg.lambda = s.lambda;
    cfg.gamma = s.gamma;
    cfg.provider_id = provider_id;
    cfg.seed = 1;
    FitResult fr = fit(kg, &source, cfg,
                       work / (std::string("okgit_") + s.dir), &std::cerr);
    Checkpoint ckpt = Checkpoint::load(fr.checkpoint_dir);
    Encoder enc(ckpt.params, kg, ckpt.words);
    FrozenScorer scorer(enc, &source, cfg.gamma, cfg.type_variant);
    EvalOptions opts;
    Metrics m = evaluate_link_prediction(scorer, kg, opts).metrics;
    detail += std::string(s.dir) + " MRR " + fmt(m.mrr) + " (paper " +
              fmt(s.expect_mrr) + "); ";
    if (std::abs(m.mrr - s.expect_mrr) > 2.0) {
      return fail(detail + "outside ±2.0");
    }
  }
  return pass(detail);
}

// ---------------------------------------------------------------------------
// criterion 3 — metric oracle equivalence
// ---------------------------------------------------------------------------

// independent naive implementations, kept deliberately dumb
std::uint32_t oracle_cluster_rank(const std::vector<NpId> &ranking,
                                  const ClusterMap &clusters, NpId gold) {
  std::map<ClusterId, std::size_t> first_pos;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    ClusterId c = clusters.np_to_cluster[ranking[i]];
    if (!first_pos.count(c)) first_pos[c] = i;
  }
  std::vector<std::pair<std::size_t, ClusterId>> reps(first_pos.size());
  std::size_t k = 0;
  for (auto &[c, pos] : first_pos) reps[k++] = {pos, c};
  std::sort(reps.begin(), reps.end());
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (reps[i].second == clusters.np_to_cluster[gold]) {
      return static_cast<std::uint32_t>(i + 1);
    }
  }
  throw Error("oracle: gold cluster not found");
}

Outcome criterion3() {
  auto start = std::chrono::steady_clock::now();
  Rng rng(333);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(29));
    ClusterMap cm;
    cm.np_to_cluster.resize(n);
    const int clusters = 1 + static_cast<int>(rng.below(n));
    std::vector<NpId> seed_order(n);
    std::iota(seed_order.begin(), seed_order.end(), 0);
    rng.shuffle(seed_order);
    for (int i = 0; i < n; ++i) {
      cm.np_to_cluster[seed_order[i]] =
          i < clusters ? i : static_cast<ClusterId>(rng.below(clusters));
    }
    cm.cluster_to_nps.assign(clusters, {});
    for (int i = 0; i < n; ++i) {
      cm.cluster_to_nps[cm.np_to_cluster[i]].push_back(i);
    }
    Vec scores(n);
    for (int i = 0; i < n; ++i) scores[i] = rng.normal();
    std::vector<NpId> ranking = rank_all_nps(scores, {});
    NpId gold = static_cast<NpId>(rng.below(n));
    if (cluster_rank(ranking, cm, gold) !=
        oracle_cluster_rank(ranking, cm, gold)) {
      return fail("cluster_rank mismatch at trial " + std::to_string(trial));
    }

    // metric formulas against a scalar re-implementation
    const int triples = 1 + static_cast<int>(rng.below(20));
    RankResult rr;
    for (int i = 0; i < triples; ++i) {
      rr.rank_head.push_back(1 + static_cast<std::uint32_t>(rng.below(200)));
      rr.rank_tail.push_back(1 + static_cast<std::uint32_t>(rng.below(200)));
    }
    Metrics m = compute_metrics(rr);
    double mrr = 0, mr = 0, h1 = 0, h3 = 0, h10 = 0;
    for (int i = 0; i < triples; ++i) {
      for (std::uint32_t rank : {rr.rank_head[i], rr.rank_tail[i]}) {
        mrr += 1.0 / rank;
        mr += rank;
        h1 += rank <= 1;
        h3 += rank <= 3;
        h10 += rank <= 10;
      }
    }
    const double d = 2.0 * triples;
    if (m.mrr != 100.0 * mrr / d || m.mr != mr / d || m.hits1 != 100.0 * h1 / d ||
        m.hits3 != 100.0 * h3 / d || m.hits10 != 100.0 * h10 / d) {
      return fail("metric mismatch at trial " + std::to_string(trial));
    }
  }
  const double t = elapsed_s(start);
  if (t >= 60.0) return fail("took " + fmt(t) + "s; budget 60s");
  return pass("1000 instances, exact match, " + fmt(t) + "s");
}

// ---------------------------------------------------------------------------
// criterion 4 — finite-difference gradient suite on toy dims
// ---------------------------------------------------------------------------

Outcome criterion4() {
  auto start = std::chrono::steady_clock::now();

  // 5 NPs, d_e = 8, d_tau = 4
  OpenKG kg;
  kg.nps = {"n0", "n1", "n2", "n3", "n4"};
  kg.rps = {"r alpha", "r beta"};
  kg.num_original_rps = 2;
  kg.train = {{0, 0, 1}, {1, 0, 2}, {2, 1, 3}, {3, 1, 4}, {0, 1, 4}};
  kg.valid = {{1, 1, 3}};
  kg.test = {{2, 0, 4}};
  kg.clusters.np_to_cluster = {0, 0, 1, 2, 3};  // one two-member cluster
  kg.clusters.cluster_to_nps = {{0, 1}, {2}, {3}, {4}};
  OpenKG aug = augment_inverse_relations(kg);

  WordVocab words = WordVocab::build(aug.rps);
  ModelConfig cfg = toy_config(2027);
  cfg.gamma = 1.25;
  cfg.lambda = 0.5;
  ModelParams params;
  params.build(cfg, static_cast<int>(aug.num_nps()),
               static_cast<int>(words.size()));
  TrainGraph graph = TrainGraph::bind(aug, words);

  QueryIndex idx = query_index(aug, Split::kTrain);
  TrainBatch batch;
  for (const auto &[key, tails] : idx) {
    batch.queries.push_back(key);
    batch.positives.push_back(tails);
  }
  Rng crng(2028);
  batch.context.resize(static_cast<Eigen::Index>(batch.queries.size()), cfg.d_b);
  for (Eigen::Index i = 0; i < batch.context.rows(); ++i) {
    for (int j = 0; j < cfg.d_b; ++j) batch.context(i, j) = crng.normal();
  }

  Rng r0(0);
  params.zero_grads();
  train_forward_backward(params, graph, batch, ScorePath::kFull, Mode::kTrain,
                         false, true, r0);
  auto loss_at = [&] {
    Rng rng(0);
    return batch_loss_only(params, graph, batch, ScorePath::kFull,
                           Mode::kTrain, rng);
  };
  const double h = 1e-5;
  std::size_t checked = 0;
  double worst = 0.0;
  std::string worst_name;
  for (ParamRef &ref : params.trainable()) {
    Mat analytic = ref.tensor->g;
    for (Eigen::Index i = 0; i < ref.tensor->v.rows(); ++i) {
      for (Eigen::Index j = 0; j < ref.tensor->v.cols(); ++j) {
        const double orig = ref.tensor->v(i, j);
        ref.tensor->v(i, j) = orig + h;
        const double up = loss_at();
        ref.tensor->v(i, j) = orig - h;
        const double down = loss_at();
        ref.tensor->v(i, j) = orig;
        const double fd = (up - down) / (2.0 * h);
        const double a = analytic(i, j);
        if (std::abs(a - fd) >= 1e-8) {
          const double rel =
              std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
          if (rel > worst) {
            worst = rel;
            worst_name = ref.name;
          }
        }
        ++checked;
      }
    }
  }
  const double t = elapsed_s(start);
  if (worst >= 1e-4) {
    return fail("worst relative error " + fmt(worst) + " in " + worst_name);
  }
  if (t >= 60.0) return fail("took " + fmt(t) + "s; budget 60s");
  return pass(std::to_string(checked) + " partials, worst rel err " +
              fmt(worst) + ", " + fmt(t) + "s");
}

// ---------------------------------------------------------------------------
// criterion 5 — ablation identity
// ---------------------------------------------------------------------------

Outcome criterion5() {
  SyntheticWorld world = SyntheticWorld::build({});
  OpenKG kg = augment_inverse_relations(world.kg);
  WordVocab words = WordVocab::build(kg.rps);
  ModelConfig cfg = toy_config(555);
  cfg.gamma = 0.0;
  cfg.lambda = 0.0;
  cfg.d_b = world.opt.context_dim;
  ModelParams params;
  params.build(cfg, static_cast<int>(kg.num_nps()),
               static_cast<int>(words.size()));
  Encoder enc(params, kg, words);

  SyntheticContextProvider provider(world, kg);
  ProviderContextSource source(provider, false);
  // full path with gamma = 0 against the standalone prediction-only path
  FrozenScorer full(enc, &source, 0.0, cfg.type_variant);
  Rng rng(556);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    NpId h = static_cast<NpId>(rng.below(kg.num_nps()));
    RpId r = static_cast<RpId>(rng.below(kg.num_rps()));
    NpId t = static_cast<NpId>(rng.below(kg.num_nps()));
    double via_full = full.score_all(h, r)[t];
    double via_care = enc.score_pred(enc.predict_tail_vector(h, r), t);
    worst = std::max(worst, std::abs(via_full - via_care));
  }
  return worst < 1e-6
             ? pass("1000 triples, worst |delta| " + fmt(worst))
             : fail("worst |delta| " + fmt(worst) + " exceeds 1e-6");
}

// ---------------------------------------------------------------------------
// criterion 6 — type-score contracts
// ---------------------------------------------------------------------------

Outcome criterion6() {
  Rng rng(666);
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(12));
    Vec a(k), b(k);
    for (int i = 0; i < k; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    double s = type_score(a, b, TypeScoreVariant::kEuclid);
    if (s > 0.0) return fail("positive euclid type score");
    if (a != b && s == 0.0) return fail("zero score on unequal vectors");
    if (type_score(a, a, TypeScoreVariant::kEuclid) != 0.0) {
      return fail("nonzero score at equality");
    }
  }

  // combined-score arithmetic identity on a small graph
  OpenKG kg = augment_inverse_relations(toy_kg());
  WordVocab words = WordVocab::build(kg.rps);
  ModelConfig cfg = toy_config(667);
  ModelParams params;
  params.build(cfg, static_cast<int>(kg.num_nps()),
               static_cast<int>(words.size()));
  Encoder enc(params, kg, words);
  Rng crng(668);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    NpId h = static_cast<NpId>(crng.below(kg.num_nps()));
    RpId r = static_cast<RpId>(crng.below(kg.num_rps()));
    NpId t = static_cast<NpId>(crng.below(kg.num_nps()));
    VecF ctx(cfg.d_b);
    for (int i = 0; i < cfg.d_b; ++i) ctx[i] = static_cast<float>(crng.normal());
    double gamma = crng.uniform(0.0, 5.0);
    ScoreBundle s = combined_score(enc, h, r, t, ctx, gamma,
                                   TypeScoreVariant::kEuclid);
    worst = std::max(worst,
                     std::abs(s.psi_okgit - (s.psi_pred + gamma * s.psi_type)));
  }
  return worst < 1e-5 ? pass("10000 pairs nonpositive; identity worst " +
                             fmt(worst))
                      : fail("identity violation " + fmt(worst));
}

// ---------------------------------------------------------------------------
// criterion 7 — published ingestion statistics
// ---------------------------------------------------------------------------

Outcome criterion7() {
  auto root = data_root();
  if (!root) {
    return skip("needs $OKGIT_DATA_ROOT/care_release/{ReVerb20K,ReVerb45K} "
                "and mlm/base/vocab.txt");
  }
  struct Cells {
    std::size_t nps, rps, clusters, train, valid, test;
  };
  auto check = [](const OpenKG &kg, const Cells &c,
                  const std::string &name) -> std::optional<std::string> {
    if (kg.num_nps() != c.nps) return name + " NPs " + std::to_string(kg.num_nps());
    if (kg.num_rps() != c.rps) return name + " RPs " + std::to_string(kg.num_rps());
    if (kg.clusters.num_clusters() != c.clusters) {
      return name + " clusters " + std::to_string(kg.clusters.num_clusters());
    }
    if (kg.train.size() != c.train) return name + " train " + std::to_string(kg.train.size());
    if (kg.valid.size() != c.valid) return name + " valid " + std::to_string(kg.valid.size());
    if (kg.test.size() != c.test) return name + " test " + std::to_string(kg.test.size());
    return std::nullopt;
  };

  OpenKG r20 = load_care_release(*root / "care_release" / "ReVerb20K");
  OpenKG r45 = load_care_release(*root / "care_release" / "ReVerb45K");
  WordPieceTokenizer tok =
      WordPieceTokenizer::from_vocab_file(*root / "mlm" / "base" / "vocab.txt");
  OpenKG r20f = filter_single_token(r20, tok);
  OpenKG r45f = filter_single_token(r45, tok);

  for (auto &[kg, cells, name] :
       {std::tuple<const OpenKG &, Cells, const char *>(
            r20, {11064, 11057, 10897, 15498, 1549, 2324}, "ReVerb20K"),
        {r45, {27007, 21622, 18626, 35969, 3597, 5394}, "ReVerb45K"},
        {r20f, {3524, 6076, 3406, 6685, 1015, 1517}, "ReVerb20KF"},
        {r45f, {9400, 11249, 6749, 14775, 1781, 2650}, "ReVerb45KF"}}) {
    if (auto err = check(kg, cells, name)) return fail(*err);
  }
  return pass("all 24 cells exact");
}

// ---------------------------------------------------------------------------
// criterion 8 — typer-based type compatibility
// ---------------------------------------------------------------------------

Outcome criterion8_real() {
  auto root = data_root();
  if (!root || !std::filesystem::exists(*root / "typer" / "reverb20kf.tsv")) {
    return skip("needs criterion 1 checkpoints plus "
                "$OKGIT_DATA_ROOT/typer/reverb20kf.tsv; synthetic analogue "
                "runs as criterion 8s");
  }
  const std::filesystem::path work = *root / "work";
  if (!std::filesystem::exists(work / "okgit_reverb20kf" / "params.bin")) {
    return skip("run criterion 1 first to produce the checkpoints");
  }
  OpenKG kg = augment_inverse_relations(load_openkg(work / "reverb20kf"));
  ContextVectorCache cache =
      ContextVectorCache::open(work / "reverb20kf_base.okgc");
  CacheContextSource source(cache);
  TyperResults typer = TyperResults::load(*root / "typer" / "reverb20kf.tsv");

  Checkpoint okgit_ckpt = Checkpoint::load(work / "okgit_reverb20kf");
  Encoder okgit_enc(okgit_ckpt.params, kg, okgit_ckpt.words);
  FrozenScorer okgit(okgit_enc, &source, okgit_ckpt.params.cfg.gamma,
                     okgit_ckpt.params.cfg.type_variant);
  Checkpoint reduced_ckpt = Checkpoint::load(work / "reduced_reverb20kf");
  Encoder reduced_enc(reduced_ckpt.params, kg, reduced_ckpt.words);
  FrozenScorer reduced(reduced_enc, nullptr, 0.0, TypeScoreVariant::kEuclid);

  TypeCompatReport ro = type_compat_f1(okgit, kg, Split::kTest, typer);
  TypeCompatReport rc = type_compat_f1(reduced, kg, Split::kTest, typer);
  if (ro.per_sample.size() != rc.per_sample.size()) {
    return fail("typer coverage differs between models");
  }
  SignificanceResult sig =
      significance_tests(rc.per_sample, ro.per_sample, 0.05);
  std::string detail = "okgit F1 " + fmt(ro.mean_f1) + " reduced F1 " +
                       fmt(rc.mean_f1) + " perm p " + fmt(sig.permutation_p);
  bool ok = ro.mean_f1 >= rc.mean_f1 && sig.permutation_significant &&
            std::abs(ro.mean_f1 - 0.30) <= 0.05 &&
            std::abs(rc.mean_f1 - 0.23) <= 0.05;
  return ok ? pass(detail) : fail(detail);
}

Outcome criterion8_synthetic(const std::filesystem::path &scratch) {
  SyntheticRun &run = synthetic_run(scratch);
  if (!run.mrr_gap_held) {
    return skip("criterion 1s gap did not hold; significance not required");
  }
  // typer ground truth: each NP's latent category is its single type
  TyperResults typer;
  const OpenKG &kg = run.kg;
  for (const Triple &t : kg.test) {
    if (t.rp >= kg.num_original_rps) continue;
    for (NpId cand = 0; cand < kg.num_nps(); ++cand) {
      std::string tail_sent =
          kg.nps[t.head] + " " + kg.rps[t.rp] + " " + kg.nps[cand];
      typer.add(tail_sent, kg.nps[cand],
                {"cat" + std::to_string(run.world.np_type[cand])});
      typer.add(tail_sent, kg.nps[t.head],
                {"cat" + std::to_string(run.world.np_type[t.head])});
      std::string head_sent =
          kg.nps[cand] + " " + kg.rps[t.rp] + " " + kg.nps[t.tail];
      typer.add(head_sent, kg.nps[cand],
                {"cat" + std::to_string(run.world.np_type[cand])});
      typer.add(head_sent, kg.nps[t.tail],
                {"cat" + std::to_string(run.world.np_type[t.tail])});
    }
  }

  Checkpoint okgit_ckpt = Checkpoint::load(run.okgit_ckpt);
  Encoder okgit_enc(okgit_ckpt.params, kg, okgit_ckpt.words);
  FrozenScorer okgit(okgit_enc, run.source.get(), okgit_ckpt.params.cfg.gamma,
                     okgit_ckpt.params.cfg.type_variant);
  Checkpoint reduced_ckpt = Checkpoint::load(run.reduced_ckpt);
  Encoder reduced_enc(reduced_ckpt.params, kg, reduced_ckpt.words);
  FrozenScorer reduced(reduced_enc, nullptr, 0.0, TypeScoreVariant::kEuclid);

  TypeCompatReport ro = type_compat_f1(okgit, kg, Split::kTest, typer);
  TypeCompatReport rc = type_compat_f1(reduced, kg, Split::kTest, typer);
  if (ro.per_sample.empty() || ro.per_sample.size() != rc.per_sample.size()) {
    return fail("typer coverage mismatch in the synthetic world");
  }
  SignificanceResult sig =
      significance_tests(rc.per_sample, ro.per_sample, 0.05);
  std::string detail = "okgit F1 " + fmt(ro.mean_f1) + " reduced F1 " +
                       fmt(rc.mean_f1) + " perm p " + fmt(sig.permutation_p) +
                       " (synthetic typer)";
  bool ok = ro.mean_f1 >= rc.mean_f1 && sig.permutation_significant;
  return ok ? pass(detail) : fail(detail);
}

// ---------------------------------------------------------------------------
// criterion 9 — typed-graph probe
// ---------------------------------------------------------------------------

Outcome criterion9_real() {
  auto root = data_root();
  if (!root || !std::filesystem::exists(*root / "fb15k" / "triples.tsv")) {
    return skip("needs $OKGIT_DATA_ROOT/fb15k/{triples.tsv,entity_types.tsv} "
                "and mlm/base; synthetic analogue runs as criterion 9s");
  }
  TypedKG tkg = TypedKG::load(*root / "fb15k" / "triples.tsv",
                              *root / "fb15k" / "entity_types.tsv");
  MlmModel model = MlmModel::load(*root / "mlm" / "base");
  MlmMaskedPredictor predictor(model);
  std::optional<std::filesystem::path> human;
  if (std::filesystem::exists(*root / "fb15k" / "human.tsv")) {
    human = *root / "fb15k" / "human.tsv";
  }
  ProbeReport rep = freebase_type_probe(tkg, predictor, 7, human);
  const ProbeRow *lm = nullptr, *random_row = nullptr, *mft = nullptr;
  for (const ProbeRow &r : rep.rows) {
    if (r.method == "lm") lm = &r;
    if (r.method == "random") random_row = &r;
    if (r.method == "mft") mft = &r;
  }
  std::string detail = "lm F1 " + fmt(lm->f1) + " random F1 " +
                       fmt(random_row->f1) + " mft R " + fmt(mft->recall) +
                       " lm R " + fmt(lm->recall);
  bool ok = lm->f1 - random_row->f1 >= 0.15 && lm->recall - mft->recall >= 0.05;
  return ok ? pass(detail) : fail(detail);
}

Outcome criterion9_synthetic() {
  // typed world where the masked predictor knows the right category most of
  // the time: 70% correct entity, 30% a fixed off-category distractor
  const int kinds = 4, per_kind = 12;
  TempDir tmp("probe_synth");
  std::ostringstream triples, types;
  std::vector<std::string> vocab = {"[UNK]", "[CLS]", "[SEP]", "[MASK]",
                                    "takes", "to"};
  for (int k = 0; k < kinds; ++k) {
    for (int i = 0; i < per_kind; ++i) {
      std::string name = "e" + std::to_string(k) + "q" + std::to_string(i);
      types << name << "\tkind" << k << ",thing\n";
      vocab.push_back(name);
    }
  }
  Rng rng(909);
  std::map<std::pair<std::string, std::string>, std::string> table;
  for (int k = 0; k < kinds; ++k) {
    for (int i = 0; i < per_kind; ++i) {
      std::string head = "e" + std::to_string(k) + "q" + std::to_string(i);
      int tail_kind = (k + 1) % kinds;
      std::string tail =
          "e" + std::to_string(tail_kind) + "q" +
          std::to_string(static_cast<int>(rng.below(per_kind)));
      std::string rel = "takes to kind" + std::to_string(tail_kind);
      triples << head << '\t' << rel << '\t' << tail << '\n';
      // predictor: usually an in-category entity, sometimes a distractor
      bool correct_kind = rng.uniform(0.0, 1.0) < 0.7;
      int pred_kind = correct_kind ? tail_kind : (tail_kind + 2) % kinds;
      std::string pred =
          "e" + std::to_string(pred_kind) + "q" +
          std::to_string(static_cast<int>(rng.below(per_kind)));
      table[{head, rel}] = pred;
    }
  }
  write_file(tmp.path() / "triples.tsv", triples.str());
  write_file(tmp.path() / "types.tsv", types.str());
  TypedKG tkg = TypedKG::load(tmp.path() / "triples.tsv", tmp.path() / "types.tsv");

  WordPieceTokenizer tok(vocab, true);
  struct Predictor : MaskedTokenPredictor {
    Predictor(WordPieceTokenizer t,
              std::map<std::pair<std::string, std::string>, std::string> m)
        : tok(std::move(t)), table(std::move(m)) {}
    const WordPieceTokenizer &tokenizer() const override { return tok; }
    std::vector<std::pair<std::string, float>> predict_tail_tokens(
        const std::string &head, const std::string &relation, int) override {
      auto it = table.find({head, relation});
      if (it == table.end()) return {};
      return {{it->second, 1.0f}};
    }
    WordPieceTokenizer tok;
    std::map<std::pair<std::string, std::string>, std::string> table;
  } predictor(tok, table);

  ProbeReport rep = freebase_type_probe(tkg, predictor, 7);
  const ProbeRow *lm = nullptr, *random_row = nullptr, *mft = nullptr;
  for (const ProbeRow &r : rep.rows) {
    if (r.method == "lm") lm = &r;
    if (r.method == "random") random_row = &r;
    if (r.method == "mft") mft = &r;
  }
  std::string detail = "lm F1 " + fmt(lm->f1) + " random F1 " +
                       fmt(random_row->f1) + " lm R " + fmt(lm->recall) +
                       " mft R " + fmt(mft->recall) + " (synthetic probe)";
  bool ok = lm->f1 - random_row->f1 >= 0.15 && lm->recall - mft->recall >= 0.05;
  return ok ? pass(detail) : fail(detail);
}

// ---------------------------------------------------------------------------
// criterion 10 — manifest determinism
// ---------------------------------------------------------------------------

Outcome criterion10() {
  // identical manifests executed in two fresh directories must produce
  // byte-identical checkpoints and reports
  auto build_world = [](const std::filesystem::path &base) {
    SyntheticWorld world = SyntheticWorld::build({});
    save_openkg(world.kg, base / "data");
    OpenKG aug = augment_inverse_relations(world.kg);
    SyntheticContextProvider provider(world, aug);
    std::set<ContextQuery> queries;
    for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
      for (const Triple &t : aug.triples(s)) {
        queries.insert(make_query(aug, t.head, t.rp));
      }
    }
    std::ostringstream tsv;
    tsv << "#types";
    tsv << '\t';
    for (int i = 0; i < world.opt.context_dim; ++i) {
      tsv << (i ? "," : "") << "d" << i;
    }
    tsv << '\n';
    tsv.precision(9);
    for (const ContextQuery &q : queries) {
      VecF v = provider.context(q);
      tsv << (q.dir == Direction::kTail ? 't' : 'h') << '\t' << q.head << '\t'
          << q.rp << '\t';
      for (int i = 0; i < v.size(); ++i) tsv << (i ? "," : "") << v[i];
      tsv << '\n';
    }
    write_file(base / "typing.tsv", tsv.str());

    nlohmann::json manifest = {
        {"seed", 11},
        {"out_dir", "out"},
        {"data", {{"dir", "data"}}},
        {"extract",
         {{"provider", "typing"},
          {"typing_tsv", "typing.tsv"},
          {"cache", "out/ctx.okgc"}}},
        {"train",
         {{"provider", "typing"},
          {"d_type", 4},
          {"gamma", 1.0},
          {"lambda", 0.01},
          {"epochs", 3},
          {"d_e", 8},
          {"d_r", 8},
          {"reshape_rows", 2},
          {"reshape_cols", 4},
          {"conv_filters", 2}}},
        {"eval", {{"splits", {"test"}}, {"filtered", true}}}};
    write_file(base / "manifest.json", manifest.dump(2));
    return run_manifest(base / "manifest.json", nullptr);
  };

  TempDir a("accept_det_a"), b("accept_det_b");
  ManifestRun ra = build_world(a.path());
  ManifestRun rb = build_world(b.path());
  if (ra.manifest_hash != rb.manifest_hash) {
    return fail("manifest fingerprints differ");
  }
  for (const char *rel :
       {"checkpoint/params.bin", "checkpoint/config.json",
        "checkpoint/metrics.json", "report_test.json"}) {
    if (slurp(ra.out_dir / rel) != slurp(rb.out_dir / rel)) {
      return fail(std::string("bytes differ: ") + rel);
    }
  }
  return pass("checkpoints and reports byte-identical across runs");
}

}  // namespace

int main() {
  TempDir scratch("acceptance");
  std::cout << "acceptance suite\n";

  report("criterion 1: filtered-dataset reproduction (published data)",
         criterion1_real());
  report("criterion 1s: score-composition gain on the synthetic typed world",
         criterion1_synthetic(scratch.path()));
  report("criterion 2: full-dataset reproduction (nightly)", criterion2());
  report("criterion 3: ranking metric oracle equivalence", criterion3());
  report("criterion 4: finite-difference gradient suite", criterion4());
  report("criterion 5: reduced-path ablation identity", criterion5());
  report("criterion 6: type-score contracts", criterion6());
  report("criterion 7: ingestion statistics (published data)", criterion7());
  report("criterion 8: typer-based type F1 (published data)",
         criterion8_real());
  report("criterion 8s: type F1 gain with paired significance (synthetic)",
         criterion8_synthetic(scratch.path()));
  report("criterion 9: masked-prediction type probe (published data)",
         criterion9_real());
  report("criterion 9s: probe beats its baselines (synthetic)",
         criterion9_synthetic());
  report("criterion 10: manifest determinism", criterion10());

  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all runnable criteria passed\n";
  return 0;
}
