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

#ifndef OKGIT_REPORTS_H_
#define OKGIT_REPORTS_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "okgit/evaluation.hpp"
#include "okgit/tsne.hpp"

namespace okgit {

// ---------------------------------------------------------------------------
// Qualitative prediction dumps
// ---------------------------------------------------------------------------

struct TopkTable {
  struct Row {
    std::string head;
    std::string rp;
    std::vector<std::string> predictions;  // cluster representatives
  };
  std::vector<Row> rows;

  void write_tsv(std::ostream &out) const;
};

// Top-k cluster representatives (as surface strings) for each (head, rp)
// query, unfiltered, deterministic for a fixed checkpoint.
TopkTable dump_topk_predictions(
    const QueryScorer &scorer, const OpenKG &kg,
    const std::vector<std::pair<NpId, RpId>> &queries, int k);

// Resolves "head<TAB>rp" phrase rows to ids; unknown phrases are an error.
std::vector<std::pair<NpId, RpId>> parse_query_file(
    const std::filesystem::path &path, const OpenKG &kg);

// ---------------------------------------------------------------------------
// Embedding-space export
// ---------------------------------------------------------------------------

struct AnnotatedNp {
  NpId np;
  std::string label;
};

enum class EmbeddingSpace { kNp, kType };

// Projects the selected NP encodings (raw space or after the type projection)
// to 2-d and returns CSV text with columns id,label,x,y.
std::string export_tsne(const Encoder &encoder,
                        const std::vector<AnnotatedNp> &annotations,
                        EmbeddingSpace space, const TsneOptions &options);

// Annotation TSV rows are "<np id or surface string><TAB><category label>".
std::vector<AnnotatedNp> parse_annotation_file(const std::filesystem::path &path,
                                               const OpenKG &kg);

// Silhouette of the selected encodings (before the 2-d projection) under the
// annotation categories.
double annotation_silhouette(const Encoder &encoder,
                             const std::vector<AnnotatedNp> &annotations,
                             EmbeddingSpace space);

// ---------------------------------------------------------------------------
// Experiment manifests
// ---------------------------------------------------------------------------

// A manifest is a JSON file describing a full experiment; running it executes
// prepare -> extract -> train/grid -> eval -> reports with per-stage
// completion markers, so a rerun of a finished manifest is a no-op.
struct ManifestRun {
  std::filesystem::path out_dir;
  std::string manifest_hash;  // hex fingerprint embedded into every report
  std::vector<std::string> stages_run;
  std::vector<std::string> stages_skipped;
};

ManifestRun run_manifest(const std::filesystem::path &manifest_path,
                         std::ostream *log);

}  // namespace okgit

#endif  // OKGIT_REPORTS_H_
