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

#include "okgit/reports.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "okgit/training.hpp"

namespace okgit {

// ---------------------------------------------------------------------------
// Qualitative dumps
// ---------------------------------------------------------------------------

TopkTable dump_topk_predictions(
    const QueryScorer &scorer, const OpenKG &kg,
    const std::vector<std::pair<NpId, RpId>> &queries, int k) {
  TopkTable table;
  for (const auto &[head, rp] : queries) {
    Vec scores = scorer.score_all(head, rp);
    std::vector<NpId> order = rank_all_nps(scores, {});
    TopkTable::Row row;
    row.head = kg.nps.at(head);
    row.rp = kg.rps.at(rp);
    std::set<ClusterId> seen;
    for (NpId np : order) {
      if (static_cast<int>(row.predictions.size()) >= k) break;
      ClusterId c = kg.clusters.np_to_cluster[np];
      if (seen.insert(c).second) row.predictions.push_back(kg.nps[np]);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void TopkTable::write_tsv(std::ostream &out) const {
  for (const Row &row : rows) {
    out << row.head << '\t' << row.rp << '\t' << join(row.predictions, " | ")
        << '\n';
  }
}

std::vector<std::pair<NpId, RpId>> parse_query_file(
    const std::filesystem::path &path, const OpenKG &kg) {
  std::ifstream in(path);
  if (!in) throw IoError("missing file: " + path.string());
  std::map<std::string, NpId> np_ids;
  for (NpId i = 0; i < kg.num_nps(); ++i) np_ids.emplace(kg.nps[i], i);
  std::map<std::string, RpId> rp_ids;
  for (RpId i = 0; i < kg.num_rps(); ++i) rp_ids.emplace(kg.rps[i], i);

  std::vector<std::pair<NpId, RpId>> queries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 2) {
      throw ValidationError("expected head<TAB>rp at " + path.string() + ":" +
                            std::to_string(lineno));
    }
    auto np = np_ids.find(fields[0]);
    if (np == np_ids.end()) throw Error("unknown phrase: " + fields[0]);
    auto rp = rp_ids.find(fields[1]);
    if (rp == rp_ids.end()) throw Error("unknown phrase: " + fields[1]);
    queries.emplace_back(np->second, rp->second);
  }
  return queries;
}

// ---------------------------------------------------------------------------
// t-SNE export
// ---------------------------------------------------------------------------

namespace {

Mat annotation_points(const Encoder &encoder,
                      const std::vector<AnnotatedNp> &annotations,
                      EmbeddingSpace space) {
  if (annotations.empty()) throw Error("no annotated NPs");
  const int dim = space == EmbeddingSpace::kNp
                      ? encoder.params().cfg.d_e
                      : encoder.params().cfg.d_tau;
  Mat points(static_cast<Eigen::Index>(annotations.size()), dim);
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    Vec v = encoder.encode_np(annotations[i].np);
    if (space == EmbeddingSpace::kType) v = encoder.params().P.v * v;
    points.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }
  return points;
}

}  // namespace

std::string export_tsne(const Encoder &encoder,
                        const std::vector<AnnotatedNp> &annotations,
                        EmbeddingSpace space, const TsneOptions &options) {
  Mat points = annotation_points(encoder, annotations, space);
  Mat y = tsne_2d(points, options);
  std::ostringstream csv;
  csv << "id,label,x,y\n";
  csv.precision(17);
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    csv << annotations[i].np << ',' << annotations[i].label << ','
        << y(static_cast<Eigen::Index>(i), 0) << ','
        << y(static_cast<Eigen::Index>(i), 1) << '\n';
  }
  return csv.str();
}

std::vector<AnnotatedNp> parse_annotation_file(const std::filesystem::path &path,
                                               const OpenKG &kg) {
  std::ifstream in(path);
  if (!in) throw IoError("missing file: " + path.string());
  std::map<std::string, NpId> np_ids;
  for (NpId i = 0; i < kg.num_nps(); ++i) np_ids.emplace(kg.nps[i], i);

  std::vector<AnnotatedNp> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 2) {
      throw ValidationError("expected np<TAB>label at " + path.string() + ":" +
                            std::to_string(lineno));
    }
    AnnotatedNp a;
    a.label = fields[1];
    bool numeric = !fields[0].empty() &&
                   std::all_of(fields[0].begin(), fields[0].end(),
                               [](unsigned char c) { return std::isdigit(c); });
    if (numeric) {
      a.np = static_cast<NpId>(std::stoul(fields[0]));
      if (a.np >= kg.num_nps()) {
        throw ValidationError("NP id out of range at " + path.string() + ":" +
                              std::to_string(lineno));
      }
    } else {
      auto it = np_ids.find(fields[0]);
      if (it == np_ids.end()) throw Error("unknown phrase: " + fields[0]);
      a.np = it->second;
    }
    out.push_back(std::move(a));
  }
  return out;
}

double annotation_silhouette(const Encoder &encoder,
                             const std::vector<AnnotatedNp> &annotations,
                             EmbeddingSpace space) {
  Mat points = annotation_points(encoder, annotations, space);
  std::map<std::string, int> label_ids;
  std::vector<int> labels;
  for (const AnnotatedNp &a : annotations) {
    auto [it, inserted] =
        label_ids.emplace(a.label, static_cast<int>(label_ids.size()));
    labels.push_back(it->second);
  }
  return silhouette_score(points, labels);
}

// ---------------------------------------------------------------------------
// Manifest runner
// ---------------------------------------------------------------------------

namespace {

std::filesystem::path resolve(const std::filesystem::path &base,
                              const std::string &p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

bool stage_done(const std::filesystem::path &out_dir, const std::string &name) {
  return std::filesystem::exists(out_dir / (".stage_" + name + ".done"));
}

void mark_stage(const std::filesystem::path &out_dir, const std::string &name) {
  std::ofstream out(out_dir / (".stage_" + name + ".done"), std::ios::binary);
  out << "done\n";
}

// Context plumbing for scoring a finished checkpoint.
struct EvalContext {
  std::optional<ContextVectorCache> cache;
  std::unique_ptr<EmbeddingContextProvider> live;
  std::unique_ptr<ContextSource> source;
};

EvalContext make_eval_context(
    const Checkpoint &ckpt, const OpenKG &kg,
    const std::optional<std::filesystem::path> &cache_path) {
  EvalContext ctx;
  const ModelConfig &cfg = ckpt.params.cfg;
  if (cfg.gamma == 0.0) return ctx;
  if (cfg.provider_id == "concat" || cfg.provider_id == "add") {
    ctx.live = std::make_unique<EmbeddingContextProvider>(
        cfg.provider_id == "concat" ? AblationMode::kConcat
                                    : AblationMode::kAdd,
        kg, ckpt.params, ckpt.words);
    ctx.source = std::make_unique<ProviderContextSource>(*ctx.live, true);
    return ctx;
  }
  if (!cache_path) throw Error("scoring this checkpoint needs the context cache");
  ctx.cache.emplace(ContextVectorCache::open(*cache_path));
  ctx.source = std::make_unique<CacheContextSource>(*ctx.cache);
  return ctx;
}

ModelConfig config_from_manifest(const nlohmann::json &t, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.seed = seed;
  cfg.d_tau = t.value("d_type", cfg.d_tau);
  cfg.gamma = t.value("gamma", cfg.gamma);
  cfg.lambda = t.value("lambda", cfg.lambda);
  cfg.type_variant = type_score_variant_from_name(
      t.value("type_score", std::string("euclid")));
  cfg.learning_rate = t.value("learning_rate", cfg.learning_rate);
  cfg.batch_queries = t.value("batch_queries", cfg.batch_queries);
  cfg.max_epochs = t.value("epochs", cfg.max_epochs);
  cfg.patience = t.value("patience", cfg.patience);
  cfg.label_smoothing = t.value("label_smoothing", cfg.label_smoothing);
  cfg.d_e = t.value("d_e", cfg.d_e);
  cfg.d_r = t.value("d_r", cfg.d_r);
  cfg.reshape_rows = t.value("reshape_rows", cfg.reshape_rows);
  cfg.reshape_cols = t.value("reshape_cols", cfg.reshape_cols);
  cfg.conv_filters = t.value("conv_filters", cfg.conv_filters);
  cfg.provider_id = t.value("provider", std::string());
  return cfg;
}

}  // namespace

ManifestRun run_manifest(const std::filesystem::path &manifest_path,
                         std::ostream *log) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("missing manifest: " + manifest_path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string manifest_text = buffer.str();
  nlohmann::json m = nlohmann::json::parse(manifest_text);

  const std::filesystem::path base = manifest_path.parent_path();
  const std::uint64_t seed = m.value("seed", std::uint64_t{0});

  ManifestRun run;
  {
    std::ostringstream hex;
    hex << std::hex << fnv1a64(manifest_text);
    run.manifest_hash = hex.str();
  }
  run.out_dir = resolve(base, m.at("out_dir").get<std::string>());
  std::filesystem::create_directories(run.out_dir);

  auto note = [&](const std::string &stage, bool ran) {
    (ran ? run.stages_run : run.stages_skipped).push_back(stage);
    if (log) {
      *log << "stage " << stage << (ran ? " done" : " skipped (marker present)")
           << '\n';
    }
  };

  // ---- prepare ----
  const nlohmann::json &data = m.at("data");
  const std::filesystem::path data_dir =
      resolve(base, data.at("dir").get<std::string>());
  if (!stage_done(run.out_dir, "prepare")) {
    if (data.contains("from_care_release")) {
      OpenKG kg = load_care_release(
          resolve(base, data["from_care_release"].get<std::string>()));
      save_openkg(kg, data_dir);
    }
    if (data.value("filter_single_token", false)) {
      OpenKG kg = load_openkg(data_dir);
      WordPieceTokenizer tok = WordPieceTokenizer::from_vocab_file(
          resolve(base, data.at("lm_vocab").get<std::string>()));
      OpenKG filtered = filter_single_token(kg, tok);
      save_openkg(filtered,
                  resolve(base, data.value("filtered_dir",
                                           data.at("dir").get<std::string>() +
                                               "_filtered")));
    }
    mark_stage(run.out_dir, "prepare");
    note("prepare", true);
  } else {
    note("prepare", false);
  }

  const std::filesystem::path model_data_dir =
      data.value("filter_single_token", false)
          ? resolve(base, data.value("filtered_dir",
                                     data.at("dir").get<std::string>() +
                                         "_filtered"))
          : data_dir;
  OpenKG kg = augment_inverse_relations(load_openkg(model_data_dir));

  // ---- extract ----
  std::optional<std::filesystem::path> cache_path;
  if (m.contains("extract")) {
    const nlohmann::json &ex = m.at("extract");
    cache_path = resolve(base, ex.at("cache").get<std::string>());
    if (!stage_done(run.out_dir, "extract")) {
      const std::string provider_name = ex.at("provider").get<std::string>();
      std::unique_ptr<ContextProvider> provider;
      std::shared_ptr<MlmModel> model;
      if (provider_name.rfind("mlm", 0) == 0) {
        model = std::make_shared<MlmModel>(MlmModel::load(
            resolve(base, ex.at("model_dir").get<std::string>())));
        provider = std::make_unique<MlmContextProvider>(provider_name, kg, model);
      } else if (provider_name == "typing") {
        provider = std::make_unique<TypingContextProvider>(
            resolve(base, ex.at("typing_tsv").get<std::string>()), "typing");
      } else {
        throw Error("provider '" + provider_name +
                    "' is live-only and cannot be extracted to a cache");
      }
      ContextVectorCache cache = ContextVectorCache::create(
          *cache_path, provider->id(), provider->dim());
      std::set<ContextQuery> queries;
      for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
        for (const Triple &t : kg.triples(s)) {
          queries.insert(make_query(kg, t.head, t.rp));
        }
      }
      // qualitative dumps may probe pairs outside the splits
      if (m.contains("reports") && m.at("reports").contains("dump_queries")) {
        for (auto &[head, rp] : parse_query_file(
                 resolve(base, m.at("reports").at("dump_queries")
                                   .get<std::string>()),
                 kg)) {
          queries.insert(make_query(kg, head, rp));
        }
      }
      std::size_t done_count = 0;
      for (const ContextQuery &q : queries) {
        cache.get_or_compute(q, *provider);
        if (log && (++done_count % 1000 == 0)) {
          *log << "extracted " << done_count << "/" << queries.size() << '\n';
        }
      }
      cache.write_index_sidecar();
      mark_stage(run.out_dir, "extract");
      note("extract", true);
    } else {
      note("extract", false);
    }
  }

  // ---- train / grid ----
  std::filesystem::path best_ckpt;
  if (m.contains("train")) {
    best_ckpt = run.out_dir / "checkpoint";
    if (!stage_done(run.out_dir, "train")) {
      ModelConfig cfg = config_from_manifest(m.at("train"), seed);
      std::optional<ContextVectorCache> cache;
      std::unique_ptr<ContextSource> src;
      const bool live =
          cfg.provider_id == "concat" || cfg.provider_id == "add";
      if ((cfg.gamma != 0.0 || cfg.lambda != 0.0) && !live) {
        if (!cache_path) throw Error("train stage needs an extract stage");
        cache.emplace(ContextVectorCache::open(*cache_path));
        src = std::make_unique<CacheContextSource>(*cache);
      }
      fit(kg, src.get(), cfg, best_ckpt, log);
      mark_stage(run.out_dir, "train");
      note("train", true);
    } else {
      note("train", false);
    }
  } else if (m.contains("grid")) {
    const nlohmann::json &g = m.at("grid");
    if (!stage_done(run.out_dir, "grid")) {
      std::vector<GridPoint> points;
      ModelConfig base_cfg = config_from_manifest(g, seed);
      for (const auto &provider : g.at("providers")) {
        const std::string pid = provider.at("id").get<std::string>();
        const std::string pcache =
            provider.contains("cache")
                ? resolve(base, provider.at("cache").get<std::string>()).string()
                : std::string();
        for (int d_tau : g.at("d_type")) {
          for (double lambda : g.at("lambda")) {
            for (double gamma : g.at("gamma")) {
              GridPoint p;
              p.config = base_cfg;
              p.config.d_tau = d_tau;
              p.config.lambda = lambda;
              p.config.gamma = gamma;
              p.config.provider_id = pid;
              p.cache_path = pcache;
              points.push_back(std::move(p));
            }
          }
        }
      }
      GridResult gr = grid_search(kg, points, run.out_dir / "grid", log);
      std::ofstream best(run.out_dir / "grid" / "best.json", std::ios::binary);
      best << nlohmann::json{{"checkpoint", gr.best_checkpoint.string()},
                             {"config", gr.best_config.to_json()}}
                  .dump(2)
           << '\n';
      mark_stage(run.out_dir, "grid");
      note("grid", true);
    } else {
      note("grid", false);
    }
    std::ifstream best(run.out_dir / "grid" / "best.json");
    if (!best) throw IoError("grid stage produced no best.json");
    best_ckpt = nlohmann::json::parse(best).at("checkpoint").get<std::string>();
  }

  // ---- eval ----
  if (m.contains("eval") && !best_ckpt.empty()) {
    if (!stage_done(run.out_dir, "eval")) {
      Checkpoint ckpt = Checkpoint::load(best_ckpt);
      Encoder encoder(ckpt.params, kg, ckpt.words);
      EvalContext ctx = make_eval_context(ckpt, kg, cache_path);
      FrozenScorer scorer(encoder, ctx.source.get(), ckpt.params.cfg.gamma,
                          ckpt.params.cfg.type_variant);
      for (const auto &split_name_json : m.at("eval").value(
               "splits", nlohmann::json::array({"test"}))) {
        EvalOptions opts;
        opts.split = split_from_name(split_name_json.get<std::string>());
        opts.filtered = m.at("eval").value("filtered", true);
        EvalReport report = evaluate_link_prediction(scorer, kg, opts);
        nlohmann::json echo = ckpt.params.cfg.to_json();
        echo["manifest_hash"] = run.manifest_hash;
        echo["seed"] = seed;
        std::ofstream out(run.out_dir /
                              ("report_" + std::string(split_name(opts.split)) +
                               ".json"),
                          std::ios::binary);
        out << report.to_json(echo).dump(2) << '\n';
      }
      mark_stage(run.out_dir, "eval");
      note("eval", true);
    } else {
      note("eval", false);
    }
  }

  // ---- reports ----
  if (m.contains("reports") && !best_ckpt.empty()) {
    if (!stage_done(run.out_dir, "reports")) {
      const nlohmann::json &r = m.at("reports");
      Checkpoint ckpt = Checkpoint::load(best_ckpt);
      Encoder encoder(ckpt.params, kg, ckpt.words);
      EvalContext ctx = make_eval_context(ckpt, kg, cache_path);
      FrozenScorer scorer(encoder, ctx.source.get(), ckpt.params.cfg.gamma,
                          ckpt.params.cfg.type_variant);
      if (r.contains("dump_queries")) {
        auto queries = parse_query_file(
            resolve(base, r.at("dump_queries").get<std::string>()), kg);
        TopkTable table =
            dump_topk_predictions(scorer, kg, queries, r.value("k", 5));
        std::ofstream out(run.out_dir / "predictions.tsv", std::ios::binary);
        table.write_tsv(out);
      }
      if (r.contains("tsne_annotations")) {
        auto annotations = parse_annotation_file(
            resolve(base, r.at("tsne_annotations").get<std::string>()), kg);
        EmbeddingSpace space = r.value("tsne_space", std::string("type")) == "np"
                                   ? EmbeddingSpace::kNp
                                   : EmbeddingSpace::kType;
        TsneOptions topt;
        topt.seed = seed;
        std::ofstream out(run.out_dir / "tsne.csv", std::ios::binary);
        out << export_tsne(encoder, annotations, space, topt);
      }
      mark_stage(run.out_dir, "reports");
      note("reports", true);
    } else {
      note("reports", false);
    }
  }
  return run;
}

}  // namespace okgit
