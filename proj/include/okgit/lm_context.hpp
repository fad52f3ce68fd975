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

#ifndef OKGIT_LM_CONTEXT_H_
#define OKGIT_LM_CONTEXT_H_

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "okgit/dataset.hpp"
#include "okgit/mlm.hpp"

namespace okgit {

enum class Direction : std::uint8_t { kTail = 0, kHead = 1 };

// Identity of one context extraction: the known NP, the relation as indexed
// by the (inverse-augmented) graph, and the prediction direction. The unknown
// slot never enters the key.
struct ContextQuery {
  Direction dir;
  NpId head;
  RpId rp;

  friend auto operator<=>(const ContextQuery &, const ContextQuery &) = default;
};

// Canonical query for predicting the missing NP of (head, rp, ?): relations
// past the original vocabulary are head-prediction queries.
ContextQuery make_query(const OpenKG &kg, NpId head, RpId rp);

class ContextProvider {
 public:
  virtual ~ContextProvider() = default;

  virtual const std::string &id() const = 0;
  virtual int dim() const = 0;
  virtual VecF context(const ContextQuery &q) = 0;

  // Masked-vocabulary decoding; only language-model providers support it.
  virtual bool has_vocab_predictions() const { return false; }
  virtual std::vector<std::pair<std::int32_t, float>> vocab_predictions(
      const ContextQuery &q, int k);
};

// ---------------------------------------------------------------------------
// Language-model provider
// ---------------------------------------------------------------------------

class MlmContextProvider : public ContextProvider {
 public:
  MlmContextProvider(std::string provider_id, const OpenKG &kg,
                     std::shared_ptr<const MlmModel> model);

  const std::string &id() const override { return id_; }
  int dim() const override { return model_->hidden_size(); }
  VecF context(const ContextQuery &q) override;

  bool has_vocab_predictions() const override { return true; }
  // Top-k vocabulary tokens by prediction-head score at the masked slot,
  // descending, ties broken by vocabulary index.
  std::vector<std::pair<std::int32_t, float>> vocab_predictions(
      const ContextQuery &q, int k) override;

  // Full vocabulary logits at the masked slot.
  VecF vocab_scores(const ContextQuery &q) const;

  // Token ids of the cloze prompt, already truncated to the model's window.
  std::vector<std::int32_t> build_prompt(const ContextQuery &q,
                                         std::size_t *mask_pos) const;

  const MlmModel &model() const { return *model_; }

 private:
  std::string id_;
  const OpenKG &kg_;
  std::shared_ptr<const MlmModel> model_;
};

// [CLS] known relation [MASK] [SEP], or [CLS] [MASK] relation known [SEP]
// when `mask_first`. Relation tokens are truncated from the right when the
// prompt would exceed `max_position`.
std::vector<std::int32_t> build_cloze_prompt(const WordPieceTokenizer &tok,
                                             int max_position,
                                             const std::string &known_phrase,
                                             const std::string &relation,
                                             bool mask_first,
                                             std::size_t *mask_pos);

// ---------------------------------------------------------------------------
// Ablation providers
// ---------------------------------------------------------------------------

struct ModelParams;  // encoder.hpp
struct WordVocab;

enum class AblationMode { kConcat, kAdd };

// Replaces the language model with arithmetic over the current trainable
// embeddings. Depends on live parameters, so its outputs must never be
// written to a persistent cache.
class EmbeddingContextProvider : public ContextProvider {
 public:
  EmbeddingContextProvider(AblationMode mode, const OpenKG &kg,
                           const ModelParams &params, const WordVocab &words);

  const std::string &id() const override { return id_; }
  int dim() const override { return dim_; }
  VecF context(const ContextQuery &q) override;

 private:
  AblationMode mode_;
  std::string id_;
  int dim_;
  const OpenKG &kg_;
  const ModelParams &params_;
  const WordVocab &words_;
};

// Serves pre-computed typing distributions from a TSV file:
//   first line:  #types<TAB>name1,name2,...
//   data lines:  {t|h}<TAB>head_id<TAB>rp_id<TAB>p1,p2,...
class TypingContextProvider : public ContextProvider {
 public:
  TypingContextProvider(const std::filesystem::path &tsv, std::string provider_id);

  const std::string &id() const override { return id_; }
  int dim() const override { return dim_; }
  VecF context(const ContextQuery &q) override;

  const std::vector<std::string> &type_names() const { return type_names_; }

 private:
  std::string id_;
  int dim_ = 0;
  std::vector<std::string> type_names_;
  std::map<ContextQuery, VecF> table_;
};

// ---------------------------------------------------------------------------
// Context sources
// ---------------------------------------------------------------------------

// What training and evaluation read context vectors through: either a
// pre-extracted cache or a live provider recomputed from current parameters.
class ContextSource {
 public:
  virtual ~ContextSource() = default;
  virtual const std::string &id() const = 0;
  virtual int dim() const = 0;
  virtual VecF get(const ContextQuery &q) = 0;
  // Live sources depend on trainable parameters and are recomputed per step.
  virtual bool live() const { return false; }
};

class ProviderContextSource : public ContextSource {
 public:
  explicit ProviderContextSource(ContextProvider &provider, bool is_live)
      : provider_(provider), live_(is_live) {}
  const std::string &id() const override { return provider_.id(); }
  int dim() const override { return provider_.dim(); }
  VecF get(const ContextQuery &q) override { return provider_.context(q); }
  bool live() const override { return live_; }

 private:
  ContextProvider &provider_;
  bool live_;
};

// ---------------------------------------------------------------------------
// Persistent cache
// ---------------------------------------------------------------------------

// Append-only record file. Little-endian layout:
//   magic "OKGC" | format version u32 | provider id (u32 length + bytes)
//   | d_B u32 | record count u64
//   | records: direction u8, head u32, rp u32, d_B float32 values.
// A TSV sidecar `<file>.idx` maps each key to its record ordinal.
class ContextVectorCache {
 public:
  // Creates a new cache file (truncating any existing one).
  static ContextVectorCache create(const std::filesystem::path &path,
                                   const std::string &provider_id, int dim);
  // Opens an existing cache for reading and appending.
  static ContextVectorCache open(const std::filesystem::path &path);

  std::optional<VecF> get(const ContextQuery &q) const;
  void put(const ContextQuery &q, const VecF &v);
  VecF get_or_compute(const ContextQuery &q, ContextProvider &provider);

  const std::string &provider_id() const { return provider_id_; }
  int dim() const { return dim_; }
  std::uint64_t count() const { return records_.size(); }
  const std::filesystem::path &path() const { return path_; }

  void write_index_sidecar() const;

 private:
  ContextVectorCache() = default;

  std::filesystem::path path_;
  std::string provider_id_;
  int dim_ = 0;
  std::map<ContextQuery, VecF> records_;
  std::vector<ContextQuery> order_;  // append order, for the sidecar
};

// Read-only view over a loaded cache; misses raise an error naming the query.
class CacheContextSource : public ContextSource {
 public:
  explicit CacheContextSource(const ContextVectorCache &cache) : cache_(cache) {}
  const std::string &id() const override { return cache_.provider_id(); }
  int dim() const override { return cache_.dim(); }
  VecF get(const ContextQuery &q) override;

 private:
  const ContextVectorCache &cache_;
};

}  // namespace okgit

#endif  // OKGIT_LM_CONTEXT_H_
