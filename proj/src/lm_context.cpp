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

#include "okgit/lm_context.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>

#include "okgit/encoder.hpp"

namespace okgit {

namespace {

constexpr char kMagic[4] = {'O', 'K', 'G', 'C'};
constexpr std::uint32_t kFormatVersion = 1;

const char *direction_letter(Direction d) {
  return d == Direction::kTail ? "t" : "h";
}

}  // namespace

ContextQuery make_query(const OpenKG &kg, NpId head, RpId rp) {
  if (rp >= kg.num_rps()) throw Error("RP id out of range");
  Direction dir = (kg.inverse_augmented && rp >= kg.num_original_rps)
                      ? Direction::kHead
                      : Direction::kTail;
  return ContextQuery{dir, head, rp};
}

std::vector<std::pair<std::int32_t, float>> ContextProvider::vocab_predictions(
    const ContextQuery &, int) {
  throw Error("provider '" + id() + "' has no vocabulary prediction head");
}

// ---------------------------------------------------------------------------
// MlmContextProvider
// ---------------------------------------------------------------------------

MlmContextProvider::MlmContextProvider(std::string provider_id,
                                       const OpenKG &kg,
                                       std::shared_ptr<const MlmModel> model)
    : id_(std::move(provider_id)), kg_(kg), model_(std::move(model)) {}

std::vector<std::int32_t> build_cloze_prompt(const WordPieceTokenizer &tok,
                                             int max_position,
                                             const std::string &known_phrase,
                                             const std::string &relation,
                                             bool mask_first,
                                             std::size_t *mask_pos) {
  if (tok.cls_id() < 0 || tok.sep_id() < 0 || tok.mask_id() < 0) {
    throw Error("language-model vocabulary lacks [CLS]/[SEP]/[MASK]");
  }
  std::vector<std::int32_t> np_ids = tok.encode(known_phrase);
  std::vector<std::int32_t> rp_ids = tok.encode(relation);

  const std::size_t budget = static_cast<std::size_t>(max_position);
  const std::size_t fixed = 3;  // cls, mask, sep
  if (np_ids.size() + rp_ids.size() + fixed > budget) {
    std::size_t keep =
        budget > np_ids.size() + fixed ? budget - np_ids.size() - fixed : 0;
    std::cerr << "warning: prompt over model window; truncating relation from "
              << rp_ids.size() << " to " << keep << " tokens\n";
    rp_ids.resize(keep);
    if (np_ids.size() + fixed > budget) {
      np_ids.resize(budget - fixed);
    }
  }

  std::vector<std::int32_t> prompt;
  prompt.push_back(tok.cls_id());
  if (mask_first) {
    *mask_pos = prompt.size();
    prompt.push_back(tok.mask_id());
    prompt.insert(prompt.end(), rp_ids.begin(), rp_ids.end());
    prompt.insert(prompt.end(), np_ids.begin(), np_ids.end());
  } else {
    prompt.insert(prompt.end(), np_ids.begin(), np_ids.end());
    prompt.insert(prompt.end(), rp_ids.begin(), rp_ids.end());
    *mask_pos = prompt.size();
    prompt.push_back(tok.mask_id());
  }
  prompt.push_back(tok.sep_id());
  return prompt;
}

std::vector<std::int32_t> MlmContextProvider::build_prompt(
    const ContextQuery &q, std::size_t *mask_pos) const {
  if (q.head >= kg_.num_nps() || q.rp >= kg_.num_rps()) {
    throw Error("context query ids out of range");
  }
  std::string rp_string;
  const bool head_dir = q.dir == Direction::kHead;
  if (head_dir) {
    if (!kg_.inverse_augmented || q.rp < kg_.num_original_rps) {
      throw Error("head-direction query requires an inverse relation id");
    }
    // the masked prompt uses the original relation surface form
    rp_string = kg_.rps[q.rp - kg_.num_original_rps];
  } else {
    if (q.rp >= kg_.num_original_rps) {
      throw Error("tail-direction query carries an inverse relation id");
    }
    rp_string = kg_.rps[q.rp];
  }
  return build_cloze_prompt(model_->tokenizer(), model_->config().max_position,
                            kg_.nps[q.head], rp_string, head_dir, mask_pos);
}

VecF MlmContextProvider::context(const ContextQuery &q) {
  std::size_t mask_pos = 0;
  std::vector<std::int32_t> prompt = build_prompt(q, &mask_pos);
  MatF hidden = model_->encode(prompt);
  return hidden.row(static_cast<Eigen::Index>(mask_pos)).transpose();
}

VecF MlmContextProvider::vocab_scores(const ContextQuery &q) const {
  std::size_t mask_pos = 0;
  std::vector<std::int32_t> prompt = build_prompt(q, &mask_pos);
  MatF hidden = model_->encode(prompt);
  return model_->vocab_logits(
      hidden.row(static_cast<Eigen::Index>(mask_pos)).transpose());
}

std::vector<std::pair<std::int32_t, float>> MlmContextProvider::vocab_predictions(
    const ContextQuery &q, int k) {
  VecF logits = vocab_scores(q);

  const std::int32_t vocab = static_cast<std::int32_t>(logits.size());
  k = std::min<std::int32_t>(k, vocab);
  std::vector<std::int32_t> ids(vocab);
  for (std::int32_t i = 0; i < vocab; ++i) ids[i] = i;
  std::partial_sort(ids.begin(), ids.begin() + k, ids.end(),
                    [&](std::int32_t a, std::int32_t b) {
                      if (logits[a] != logits[b]) return logits[a] > logits[b];
                      return a < b;  // ties by vocabulary index
                    });
  std::vector<std::pair<std::int32_t, float>> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.emplace_back(ids[i], logits[ids[i]]);
  return out;
}

// ---------------------------------------------------------------------------
// EmbeddingContextProvider
// ---------------------------------------------------------------------------

EmbeddingContextProvider::EmbeddingContextProvider(AblationMode mode,
                                                   const OpenKG &kg,
                                                   const ModelParams &params,
                                                   const WordVocab &words)
    : mode_(mode),
      id_(mode == AblationMode::kConcat ? "concat" : "add"),
      kg_(kg),
      params_(params),
      words_(words) {
  dim_ = mode == AblationMode::kConcat ? params.cfg.d_e + params.cfg.d_r
                                       : params.cfg.d_e;
  if (mode == AblationMode::kAdd && params.cfg.d_e != params.cfg.d_r) {
    throw Error("additive context requires d_e == d_r");
  }
}

VecF EmbeddingContextProvider::context(const ContextQuery &q) {
  Encoder enc(params_, kg_, words_);
  Vec h = enc.encode_np(q.head);
  Vec r = enc.encode_rp(q.rp);
  Vec out;
  if (mode_ == AblationMode::kConcat) {
    out.resize(h.size() + r.size());
    out << h, r;
  } else {
    out = h + r;
  }
  return out.cast<float>();
}

// ---------------------------------------------------------------------------
// TypingContextProvider
// ---------------------------------------------------------------------------

TypingContextProvider::TypingContextProvider(const std::filesystem::path &tsv,
                                             std::string provider_id)
    : id_(std::move(provider_id)) {
  std::ifstream in(tsv);
  if (!in) throw IoError("missing file: " + tsv.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line, '\t');
    if (lineno == 1 && fields.size() == 2 && fields[0] == "#types") {
      type_names_ = split(fields[1], ',');
      dim_ = static_cast<int>(type_names_.size());
      continue;
    }
    if (fields.size() != 4) {
      throw ValidationError("expected dir<TAB>head<TAB>rp<TAB>probs at " +
                            tsv.string() + ":" + std::to_string(lineno));
    }
    Direction dir;
    if (fields[0] == "t") {
      dir = Direction::kTail;
    } else if (fields[0] == "h") {
      dir = Direction::kHead;
    } else {
      throw ValidationError("bad direction at " + tsv.string() + ":" +
                            std::to_string(lineno));
    }
    ContextQuery q{dir, static_cast<NpId>(std::stoul(fields[1])),
                   static_cast<RpId>(std::stoul(fields[2]))};
    std::vector<std::string> probs = split(fields[3], ',');
    if (dim_ == 0) dim_ = static_cast<int>(probs.size());
    if (static_cast<int>(probs.size()) != dim_) {
      throw ValidationError("distribution length mismatch at " + tsv.string() +
                            ":" + std::to_string(lineno));
    }
    VecF v(dim_);
    for (int i = 0; i < dim_; ++i) v[i] = std::stof(probs[i]);
    table_[q] = std::move(v);
  }
  if (table_.empty()) throw ValidationError("typing table is empty: " + tsv.string());
}

VecF TypingContextProvider::context(const ContextQuery &q) {
  auto it = table_.find(q);
  if (it == table_.end()) {
    throw Error("typing table has no entry for (" +
                std::string(direction_letter(q.dir)) + ", " +
                std::to_string(q.head) + ", " + std::to_string(q.rp) + ")");
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// ContextVectorCache
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put_pod(std::ofstream &out, T v) {
  out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T take_pod(std::ifstream &in, const std::filesystem::path &p) {
  T v;
  in.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!in) throw IoError("truncated cache file: " + p.string());
  return v;
}

// byte offset of the record-count field
std::size_t count_offset(const std::string &provider_id) {
  return 4 + 4 + 4 + provider_id.size() + 4;
}

}  // namespace

ContextVectorCache ContextVectorCache::create(const std::filesystem::path &path,
                                              const std::string &provider_id,
                                              int dim) {
  if (dim <= 0) throw Error("cache dimension must be positive");
  ContextVectorCache c;
  c.path_ = path;
  c.provider_id_ = provider_id;
  c.dim_ = dim;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, 4);
  put_pod<std::uint32_t>(out, kFormatVersion);
  put_pod<std::uint32_t>(out, static_cast<std::uint32_t>(provider_id.size()));
  out.write(provider_id.data(), static_cast<std::streamsize>(provider_id.size()));
  put_pod<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  put_pod<std::uint64_t>(out, 0);
  if (!out) throw IoError("write failed: " + path.string());
  return c;
}

ContextVectorCache ContextVectorCache::open(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing cache file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError("not a context cache: " + path.string());
  }
  std::uint32_t version = take_pod<std::uint32_t>(in, path);
  if (version != kFormatVersion) {
    throw ValidationError("unsupported cache version " + std::to_string(version));
  }
  std::uint32_t id_len = take_pod<std::uint32_t>(in, path);
  ContextVectorCache c;
  c.path_ = path;
  c.provider_id_.resize(id_len);
  in.read(c.provider_id_.data(), id_len);
  c.dim_ = static_cast<int>(take_pod<std::uint32_t>(in, path));
  std::uint64_t count = take_pod<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint8_t dir = take_pod<std::uint8_t>(in, path);
    std::uint32_t head = take_pod<std::uint32_t>(in, path);
    std::uint32_t rp = take_pod<std::uint32_t>(in, path);
    VecF v(c.dim_);
    in.read(reinterpret_cast<char *>(v.data()),
            static_cast<std::streamsize>(sizeof(float) * c.dim_));
    if (!in) throw IoError("truncated cache file: " + path.string());
    ContextQuery q{static_cast<Direction>(dir), head, rp};
    c.order_.push_back(q);
    c.records_.emplace(q, std::move(v));
  }
  return c;
}

std::optional<VecF> ContextVectorCache::get(const ContextQuery &q) const {
  auto it = records_.find(q);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void ContextVectorCache::put(const ContextQuery &q, const VecF &v) {
  if (v.size() != dim_) throw Error("vector dimension does not match cache header");
  if (records_.count(q)) return;  // append-only, first write wins
  std::ofstream out(path_, std::ios::binary | std::ios::in | std::ios::out);
  if (!out) throw IoError("cannot append to " + path_.string());
  out.seekp(0, std::ios::end);
  put_pod<std::uint8_t>(out, static_cast<std::uint8_t>(q.dir));
  put_pod<std::uint32_t>(out, q.head);
  put_pod<std::uint32_t>(out, q.rp);
  out.write(reinterpret_cast<const char *>(v.data()),
            static_cast<std::streamsize>(sizeof(float) * dim_));
  records_.emplace(q, v);
  order_.push_back(q);
  out.seekp(static_cast<std::streamoff>(count_offset(provider_id_)));
  put_pod<std::uint64_t>(out, static_cast<std::uint64_t>(records_.size()));
  if (!out) throw IoError("write failed: " + path_.string());
}

VecF ContextVectorCache::get_or_compute(const ContextQuery &q,
                                        ContextProvider &provider) {
  if (provider.id() != provider_id_) {
    throw Error("cache was built with provider '" + provider_id_ +
                "', not '" + provider.id() + "'");
  }
  if (auto hit = get(q)) return *hit;
  VecF v = provider.context(q);
  put(q, v);
  return v;
}

VecF CacheContextSource::get(const ContextQuery &q) {
  auto hit = cache_.get(q);
  if (!hit) {
    throw Error("context cache misses query (" +
                std::string(q.dir == Direction::kTail ? "t" : "h") + ", " +
                std::to_string(q.head) + ", " + std::to_string(q.rp) + ")");
  }
  return *hit;
}

void ContextVectorCache::write_index_sidecar() const {
  std::filesystem::path idx = path_;
  idx += ".idx";
  std::ofstream out(idx, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + idx.string());
  for (std::size_t i = 0; i < order_.size(); ++i) {
    const ContextQuery &q = order_[i];
    out << direction_letter(q.dir) << '\t' << q.head << '\t' << q.rp << '\t'
        << i << '\n';
  }
}

}  // namespace okgit
