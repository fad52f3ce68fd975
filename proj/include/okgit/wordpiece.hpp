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

#ifndef OKGIT_WORDPIECE_H_
#define OKGIT_WORDPIECE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace okgit {

// Greedy longest-match-first subword tokenizer over a fixed vocabulary, with
// the usual basic pre-tokenization (optional lowercasing, punctuation split).
// Continuation pieces are prefixed with "##".
class WordPieceTokenizer {
 public:
  WordPieceTokenizer(std::vector<std::string> vocab, bool lowercase);

  static WordPieceTokenizer from_vocab_file(const std::filesystem::path &path,
                                            bool lowercase = true);

  // Full pipeline: basic tokenization followed by wordpiece splitting.
  // Unknown words map to the unk token.
  std::vector<std::string> tokenize(const std::string &text) const;
  std::vector<std::int32_t> encode(const std::string &text) const;

  // True when `text` tokenizes to exactly one piece and that piece is an
  // in-vocabulary word (not unk, not a continuation).
  bool is_single_token(const std::string &text) const;

  std::optional<std::int32_t> token_id(const std::string &token) const;
  const std::string &token(std::int32_t id) const { return vocab_[id]; }
  std::size_t vocab_size() const { return vocab_.size(); }
  bool lowercase() const { return lowercase_; }

  std::int32_t unk_id() const { return unk_id_; }
  std::int32_t cls_id() const { return cls_id_; }
  std::int32_t sep_id() const { return sep_id_; }
  std::int32_t mask_id() const { return mask_id_; }

  // Splits on whitespace and isolates punctuation characters as their own
  // tokens; lowercases when configured.
  std::vector<std::string> basic_tokenize(const std::string &text) const;

 private:
  std::vector<std::string> wordpiece(const std::string &word) const;

  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::int32_t> index_;
  bool lowercase_;
  std::int32_t unk_id_ = -1, cls_id_ = -1, sep_id_ = -1, mask_id_ = -1;
  std::size_t max_word_chars_ = 100;
};

}  // namespace okgit

#endif  // OKGIT_WORDPIECE_H_
