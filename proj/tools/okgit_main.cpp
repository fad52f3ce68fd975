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

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "okgit/reports.hpp"
#include "okgit/training.hpp"

namespace okgit {
namespace {

OpenKG load_model_kg(const std::string &dir) {
  return augment_inverse_relations(load_openkg(dir));
}

std::unique_ptr<ContextProvider> make_provider(
    const std::string &name, const OpenKG &kg, const std::string &model_dir,
    const std::string &typing_tsv, std::shared_ptr<MlmModel> *model_out) {
  if (name.rfind("mlm", 0) == 0) {
    if (model_dir.empty()) {
      throw Error("provider '" + name + "' needs --model-dir");
    }
    auto model = std::make_shared<MlmModel>(MlmModel::load(model_dir));
    if (model_out) *model_out = model;
    return std::make_unique<MlmContextProvider>(name, kg, model);
  }
  if (name == "typing") {
    if (typing_tsv.empty()) throw Error("provider 'typing' needs --typing-tsv");
    return std::make_unique<TypingContextProvider>(typing_tsv, "typing");
  }
  throw Error("provider '" + name +
              "' is recomputed live during training and cannot be extracted");
}

void write_report(const std::string &path, const nlohmann::json &j) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

// Context plumbing shared by eval/type-eval/dump/tsne.
struct ScorerBundle {
  Checkpoint ckpt;
  std::optional<ContextVectorCache> cache;
  std::unique_ptr<ContextSource> source;
  std::unique_ptr<EmbeddingContextProvider> live_provider;
  std::unique_ptr<Encoder> encoder;
  std::unique_ptr<FrozenScorer> scorer;
};

std::unique_ptr<ScorerBundle> open_scorer(const std::string &ckpt_dir,
                                          const OpenKG &kg,
                                          const std::string &cache_path,
                                          const WordVocab **words_out) {
  auto b = std::make_unique<ScorerBundle>();
  b->ckpt = Checkpoint::load(ckpt_dir);
  const ModelConfig &cfg = b->ckpt.params.cfg;
  b->encoder = std::make_unique<Encoder>(b->ckpt.params, kg, b->ckpt.words);
  if (cfg.gamma != 0.0) {
    if (cfg.provider_id == "concat" || cfg.provider_id == "add") {
      b->live_provider = std::make_unique<EmbeddingContextProvider>(
          cfg.provider_id == "concat" ? AblationMode::kConcat
                                      : AblationMode::kAdd,
          kg, b->ckpt.params, b->ckpt.words);
      b->source = std::make_unique<ProviderContextSource>(*b->live_provider,
                                                          true);
    } else {
      if (cache_path.empty()) {
        throw Error("checkpoint uses provider '" + cfg.provider_id +
                    "'; pass --cache");
      }
      b->cache.emplace(ContextVectorCache::open(cache_path));
      if (b->cache->provider_id() != cfg.provider_id) {
        throw Error("cache provider '" + b->cache->provider_id() +
                    "' does not match checkpoint provider '" +
                    cfg.provider_id + "'");
      }
      b->source = std::make_unique<CacheContextSource>(*b->cache);
    }
  }
  b->scorer = std::make_unique<FrozenScorer>(*b->encoder, b->source.get(),
                                             cfg.gamma, cfg.type_variant);
  if (words_out) *words_out = &b->ckpt.words;
  return b;
}

int run_cli(int argc, char **argv) {
  CLI::App app{"type-aware link prediction toolkit for open knowledge graphs"};
  app.require_subcommand(1);

  // ---- prepare ----
  auto *prepare = app.add_subcommand(
      "prepare", "convert and validate a dataset directory");
  std::string prep_data, prep_care, prep_vocab, prep_out;
  bool prep_filter = false;
  prepare->add_option("--data", prep_data, "canonical dataset directory")
      ->required();
  prepare->add_option("--from-care-release", prep_care,
                      "convert an upstream release layout");
  prepare->add_flag("--filter-single-token", prep_filter,
                    "keep only single-wordpiece NPs");
  prepare->add_option("--lm-vocab", prep_vocab,
                      "wordpiece vocabulary for the filter");
  prepare->add_option("--out", prep_out,
                      "output directory (defaults to --data)");
  prepare->callback([&] {
    OpenKG kg = prep_care.empty() ? load_openkg(prep_data)
                                  : load_care_release(prep_care);
    if (!prep_care.empty()) save_openkg(kg, prep_data);
    if (prep_filter) {
      if (prep_vocab.empty()) {
        throw Error("--filter-single-token needs --lm-vocab");
      }
      WordPieceTokenizer tok = WordPieceTokenizer::from_vocab_file(prep_vocab);
      kg = filter_single_token(kg, tok);
      save_openkg(kg, prep_out.empty() ? prep_data : prep_out);
    }
    std::cout << "nps\t" << kg.num_nps() << "\nrps\t" << kg.num_rps()
              << "\nclusters\t" << kg.clusters.num_clusters() << "\ntrain\t"
              << kg.train.size() << "\nvalid\t" << kg.valid.size() << "\ntest\t"
              << kg.test.size() << '\n';
  });

  // ---- extract ----
  auto *extract =
      app.add_subcommand("extract", "pre-compute context vectors into a cache");
  std::string ext_data, ext_provider, ext_out, ext_model, ext_typing,
      ext_queries;
  extract->add_option("--data", ext_data, "dataset directory")->required();
  extract
      ->add_option("--provider", ext_provider,
                   "mlm-base | mlm-large | mlm-alt | concat | add | typing")
      ->required();
  extract->add_option("--out", ext_out, "cache file")->required();
  extract->add_option("--model-dir", ext_model, "language model directory");
  extract->add_option("--typing-tsv", ext_typing, "typing distribution table");
  extract->add_option("--extra-queries", ext_queries,
                      "head<TAB>rp phrase file of extra pairs to warm");
  extract->callback([&] {
    OpenKG kg = load_model_kg(ext_data);
    auto provider =
        make_provider(ext_provider, kg, ext_model, ext_typing, nullptr);
    ContextVectorCache cache =
        ContextVectorCache::create(ext_out, provider->id(), provider->dim());
    std::set<ContextQuery> queries;
    for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
      for (const Triple &t : kg.triples(s)) {
        queries.insert(make_query(kg, t.head, t.rp));
      }
    }
    if (!ext_queries.empty()) {
      for (auto &[head, rp] : parse_query_file(ext_queries, kg)) {
        queries.insert(make_query(kg, head, rp));
      }
    }
    std::size_t done = 0;
    for (const ContextQuery &q : queries) {
      cache.get_or_compute(q, *provider);
      if (++done % 1000 == 0) {
        std::cerr << done << "/" << queries.size() << "\n";
      }
    }
    cache.write_index_sidecar();
    std::cout << "cached " << cache.count() << " vectors of dimension "
              << cache.dim() << " in " << ext_out << '\n';
  });

  // ---- train ----
  auto *train = app.add_subcommand("train", "fit one configuration");
  std::string tr_data, tr_cache, tr_out, tr_variant = "euclid", tr_provider;
  std::string tr_np_init = "random", tr_word_init = "random";
  std::string tr_np_init_file, tr_word_init_file;
  ModelConfig tr_cfg;
  train->add_option("--data", tr_data)->required();
  train->add_option("--cache", tr_cache, "context cache file");
  train->add_option("--provider", tr_provider,
                    "live provider (concat|add) instead of a cache");
  train->add_option("--d-type", tr_cfg.d_tau, "type-space dimension");
  train->add_option("--gamma", tr_cfg.gamma);
  train->add_option("--lambda", tr_cfg.lambda);
  train->add_option("--type-score", tr_variant, "euclid | dot");
  train->add_option("--seed", tr_cfg.seed);
  train->add_option("--out", tr_out)->required();
  train->add_option("--epochs", tr_cfg.max_epochs);
  train->add_option("--batch", tr_cfg.batch_queries);
  train->add_option("--lr", tr_cfg.learning_rate);
  train->add_option("--patience", tr_cfg.patience);
  train->add_option("--label-smoothing", tr_cfg.label_smoothing);
  train->add_option("--d-e", tr_cfg.d_e);
  train->add_option("--d-r", tr_cfg.d_r);
  train->add_option("--reshape-rows", tr_cfg.reshape_rows);
  train->add_option("--reshape-cols", tr_cfg.reshape_cols);
  train->add_option("--conv-filters", tr_cfg.conv_filters);
  train->add_option("--np-init", tr_np_init, "random | lm | lm-proj");
  train->add_option("--np-init-file", tr_np_init_file);
  train->add_option("--word-init", tr_word_init, "random | lm");
  train->add_option("--word-init-file", tr_word_init_file);
  train->callback([&] {
    OpenKG kg = load_model_kg(tr_data);
    tr_cfg.type_variant = type_score_variant_from_name(tr_variant);
    tr_cfg.np_init_file = tr_np_init_file;
    tr_cfg.word_init_file = tr_word_init_file;
    if (tr_np_init == "lm") tr_cfg.np_init = NpInit::kLm;
    if (tr_np_init == "lm-proj") tr_cfg.np_init = NpInit::kLmProj;
    if (tr_word_init == "lm") tr_cfg.word_init = WordInit::kLm;

    std::optional<ContextVectorCache> cache;
    std::unique_ptr<ContextSource> source;
    if (tr_cfg.gamma != 0.0 || tr_cfg.lambda != 0.0) {
      if (!tr_provider.empty()) {
        if (tr_provider != "concat" && tr_provider != "add") {
          throw Error("--provider accepts only live providers; use --cache");
        }
        tr_cfg.provider_id = tr_provider;  // fit recomputes these live
      } else {
        if (tr_cache.empty()) throw Error("training needs --cache or --provider");
        cache.emplace(ContextVectorCache::open(tr_cache));
        source = std::make_unique<CacheContextSource>(*cache);
      }
    }
    FitResult r = fit(kg, source.get(), tr_cfg, tr_out, &std::cerr);
    std::cout << "best epoch " << r.best_epoch << " valid MRR "
              << r.best_valid_mrr << " -> " << r.checkpoint_dir.string()
              << '\n';
  });

  // ---- grid ----
  auto *grid = app.add_subcommand("grid", "grid search from a JSON spec");
  std::string gr_data, gr_config, gr_out;
  grid->add_option("--data", gr_data)->required();
  grid->add_option("--config", gr_config, "grid spec JSON")->required();
  grid->add_option("--out", gr_out)->required();
  grid->callback([&] {
    OpenKG kg = load_model_kg(gr_data);
    std::ifstream in(gr_config);
    if (!in) throw IoError("missing file: " + gr_config);
    nlohmann::json g = nlohmann::json::parse(in);

    ModelConfig base;
    base.seed = g.value("seed", std::uint64_t{0});
    base.d_e = g.value("d_e", base.d_e);
    base.d_r = g.value("d_r", base.d_r);
    base.reshape_rows = g.value("reshape_rows", base.reshape_rows);
    base.reshape_cols = g.value("reshape_cols", base.reshape_cols);
    base.conv_filters = g.value("conv_filters", base.conv_filters);
    base.max_epochs = g.value("epochs", base.max_epochs);
    base.batch_queries = g.value("batch_queries", base.batch_queries);
    base.learning_rate = g.value("learning_rate", base.learning_rate);
    base.patience = g.value("patience", base.patience);

    std::vector<GridPoint> points;
    for (const auto &provider : g.at("providers")) {
      for (int d_tau : g.at("d_type")) {
        for (double lambda : g.at("lambda")) {
          for (double gamma : g.at("gamma")) {
            GridPoint p;
            p.config = base;
            p.config.d_tau = d_tau;
            p.config.lambda = lambda;
            p.config.gamma = gamma;
            p.config.provider_id = provider.at("id").get<std::string>();
            if (provider.contains("cache")) {
              p.cache_path = provider.at("cache").get<std::string>();
            }
            points.push_back(std::move(p));
          }
        }
      }
    }
    GridResult r = grid_search(kg, points, gr_out, &std::cerr);
    std::cout << "best " << r.best_config.key() << " valid MRR "
              << r.best_valid_metrics.mrr << " -> "
              << r.best_checkpoint.string() << '\n';
  });

  // ---- eval ----
  auto *eval = app.add_subcommand("eval", "link prediction evaluation");
  std::string ev_ckpt, ev_data, ev_cache, ev_split = "test", ev_report;
  std::string ev_lm_dir;
  bool ev_unfiltered = false;
  eval->add_option("--ckpt", ev_ckpt, "checkpoint directory");
  eval->add_option("--data", ev_data)->required();
  eval->add_option("--cache", ev_cache);
  eval->add_option("--split", ev_split, "train | valid | test");
  eval->add_flag("--unfiltered", ev_unfiltered,
                 "keep known-true answers in contention");
  eval->add_option("--lm-baseline", ev_lm_dir,
                   "rank by masked-slot logits of this language model instead "
                   "of a checkpoint");
  eval->add_option("--report", ev_report, "output JSON (stdout when absent)");
  eval->callback([&] {
    OpenKG kg = load_model_kg(ev_data);
    EvalOptions opts;
    opts.split = split_from_name(ev_split);
    opts.filtered = !ev_unfiltered;

    EvalReport report;
    nlohmann::json echo;
    if (!ev_lm_dir.empty()) {
      auto model = std::make_shared<MlmModel>(MlmModel::load(ev_lm_dir));
      MlmContextProvider provider("mlm-baseline", kg, model);
      LmBaselineScorer baseline(kg, provider);
      report = evaluate_link_prediction(baseline, kg, opts);
      echo = {{"scorer", "lm-baseline"}, {"model_dir", ev_lm_dir}};
    } else {
      if (ev_ckpt.empty()) throw Error("pass --ckpt or --lm-baseline");
      auto bundle = open_scorer(ev_ckpt, kg, ev_cache, nullptr);
      if (bundle->cache) require_coverage(kg, opts.split, *bundle->cache);
      report = evaluate_link_prediction(*bundle->scorer, kg, opts);
      echo = bundle->ckpt.params.cfg.to_json();
    }
    std::cerr << "MRR " << report.metrics.mrr << " MR " << report.metrics.mr
              << " Hits@1 " << report.metrics.hits1 << " Hits@3 "
              << report.metrics.hits3 << " Hits@10 " << report.metrics.hits10
              << '\n';
    write_report(ev_report, report.to_json(echo));
  });

  // ---- type-eval ----
  auto *type_eval = app.add_subcommand(
      "type-eval", "typer-based type compatibility of top predictions");
  std::string te_ckpt, te_base, te_data, te_cache, te_base_cache, te_typer,
      te_split = "test", te_report;
  type_eval->add_option("--ckpt", te_ckpt)->required();
  type_eval->add_option("--baseline-ckpt", te_base,
                        "second checkpoint for the paired comparison");
  type_eval->add_option("--data", te_data)->required();
  type_eval->add_option("--cache", te_cache);
  type_eval->add_option("--baseline-cache", te_base_cache);
  type_eval->add_option("--typer", te_typer, "typer output TSV")->required();
  type_eval->add_option("--split", te_split);
  type_eval->add_option("--report", te_report);
  type_eval->callback([&] {
    OpenKG kg = load_model_kg(te_data);
    TyperResults typer = TyperResults::load(te_typer);
    auto bundle = open_scorer(te_ckpt, kg, te_cache, nullptr);
    Split split = split_from_name(te_split);
    TypeCompatReport main = type_compat_f1(*bundle->scorer, kg, split, typer);
    nlohmann::json j = {{"config", bundle->ckpt.params.cfg.to_json()},
                        {"split", te_split},
                        {"mean_f1", main.mean_f1},
                        {"samples", main.per_sample.size()},
                        {"skipped", main.skipped}};
    if (!te_base.empty()) {
      auto base_bundle = open_scorer(te_base, kg, te_base_cache, nullptr);
      TypeCompatReport base =
          type_compat_f1(*base_bundle->scorer, kg, split, typer);
      if (base.per_sample.size() != main.per_sample.size()) {
        throw Error("typer coverage differs between the two checkpoints; "
                    "pair their samples before testing");
      }
      SignificanceResult sig =
          significance_tests(base.per_sample, main.per_sample, 0.05);
      j["baseline_mean_f1"] = base.mean_f1;
      j["significance"] = sig.to_json();
    }
    write_report(te_report, j);
  });

  // ---- probe-types ----
  auto *probe = app.add_subcommand(
      "probe-types", "typed-graph probe of masked predictions");
  std::string pr_triples, pr_types, pr_model, pr_human, pr_report;
  std::uint64_t pr_seed = 7;
  probe->add_option("--triples", pr_triples)->required();
  probe->add_option("--entity-types", pr_types)->required();
  probe->add_option("--model-dir", pr_model)->required();
  probe->add_option("--human", pr_human, "human annotation TSV");
  probe->add_option("--seed", pr_seed, "baseline sampling seed");
  probe->add_option("--report", pr_report);
  probe->callback([&] {
    TypedKG tkg = TypedKG::load(pr_triples, pr_types);
    MlmModel model = MlmModel::load(pr_model);
    MlmMaskedPredictor predictor(model);
    std::optional<std::filesystem::path> human;
    if (!pr_human.empty()) human = pr_human;
    ProbeReport report = freebase_type_probe(tkg, predictor, pr_seed, human);
    for (const ProbeRow &row : report.rows) {
      std::cerr << row.method << "\tP " << row.precision << "\tR " << row.recall
                << "\tF1 " << row.f1 << '\n';
    }
    write_report(pr_report, report.to_json());
  });

  // ---- dump ----
  auto *dump = app.add_subcommand("dump", "qualitative top-k predictions");
  std::string du_ckpt, du_data, du_cache, du_queries, du_out;
  int du_k = 5;
  dump->add_option("--ckpt", du_ckpt)->required();
  dump->add_option("--data", du_data)->required();
  dump->add_option("--cache", du_cache);
  dump->add_option("--queries", du_queries, "head<TAB>rp phrase file")
      ->required();
  dump->add_option("-k", du_k);
  dump->add_option("--out", du_out, "output TSV (stdout when absent)");
  dump->callback([&] {
    OpenKG kg = load_model_kg(du_data);
    auto bundle = open_scorer(du_ckpt, kg, du_cache, nullptr);
    auto queries = parse_query_file(du_queries, kg);
    TopkTable table = dump_topk_predictions(*bundle->scorer, kg, queries, du_k);
    if (du_out.empty()) {
      table.write_tsv(std::cout);
    } else {
      std::ofstream out(du_out, std::ios::binary);
      table.write_tsv(out);
    }
  });

  // ---- tsne ----
  auto *tsne = app.add_subcommand("tsne", "2-d export of annotated NPs");
  std::string ts_ckpt, ts_data, ts_ann, ts_space = "type", ts_out;
  double ts_perplexity = 15.0;
  int ts_iterations = 2000;
  std::uint64_t ts_seed = 0;
  tsne->add_option("--ckpt", ts_ckpt)->required();
  tsne->add_option("--data", ts_data)->required();
  tsne->add_option("--annotations", ts_ann, "np<TAB>label file")->required();
  tsne->add_option("--space", ts_space, "np | type");
  tsne->add_option("--perplexity", ts_perplexity);
  tsne->add_option("--iterations", ts_iterations);
  tsne->add_option("--seed", ts_seed);
  tsne->add_option("--out", ts_out)->required();
  tsne->callback([&] {
    OpenKG kg = load_model_kg(ts_data);
    Checkpoint ckpt = Checkpoint::load(ts_ckpt);
    Encoder encoder(ckpt.params, kg, ckpt.words);
    auto annotations = parse_annotation_file(ts_ann, kg);
    TsneOptions opt;
    opt.perplexity = ts_perplexity;
    opt.iterations = ts_iterations;
    opt.seed = ts_seed;
    EmbeddingSpace space =
        ts_space == "np" ? EmbeddingSpace::kNp : EmbeddingSpace::kType;
    std::string csv = export_tsne(encoder, annotations, space, opt);
    std::ofstream out(ts_out, std::ios::binary);
    if (!out) throw IoError("cannot write " + ts_out);
    out << csv;
    std::cerr << "silhouette "
              << annotation_silhouette(encoder, annotations, space) << '\n';
  });

  // ---- run ----
  auto *run = app.add_subcommand("run", "execute an experiment manifest");
  std::string rn_manifest;
  run->add_option("--manifest", rn_manifest)->required();
  run->callback([&] {
    ManifestRun r = run_manifest(rn_manifest, &std::cerr);
    std::cout << "manifest " << r.manifest_hash << ": " << r.stages_run.size()
              << " stages run, " << r.stages_skipped.size() << " skipped -> "
              << r.out_dir.string() << '\n';
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace
}  // namespace okgit

int main(int argc, char **argv) {
  try {
    return okgit::run_cli(argc, argv);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
