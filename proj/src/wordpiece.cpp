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

#include "okgit/wordpiece.hpp"

#include <cctype>
#include <fstream>

#include "okgit/common.hpp"

namespace okgit {

namespace {

bool is_punct(unsigned char c) {
  return std::ispunct(c) != 0;
}

}  // namespace

WordPieceTokenizer::WordPieceTokenizer(std::vector<std::string> vocab,
                                       bool lowercase)
    : vocab_(std::move(vocab)), lowercase_(lowercase) {
  index_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    index_.emplace(vocab_[i], static_cast<std::int32_t>(i));
  }
  auto find = [&](const char *tok) -> std::int32_t {
    auto it = index_.find(tok);
    return it == index_.end() ? -1 : it->second;
  };
  unk_id_ = find("[UNK]");
  cls_id_ = find("[CLS]");
  sep_id_ = find("[SEP]");
  mask_id_ = find("[MASK]");
}

WordPieceTokenizer WordPieceTokenizer::from_vocab_file(
    const std::filesystem::path &path, bool lowercase) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary file: " + path.string());
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    vocab.push_back(line);
  }
  return WordPieceTokenizer(std::move(vocab), lowercase);
}

std::vector<std::string> WordPieceTokenizer::basic_tokenize(
    const std::string &text) const {
  std::string src = lowercase_ ? lowercase_ascii(text) : text;
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char c : src) {
    if (std::isspace(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      cur.push_back(static_cast<char>(c));
    }
  }
  flush();
  return out;
}

std::vector<std::string> WordPieceTokenizer::wordpiece(
    const std::string &word) const {
  if (word.size() > max_word_chars_) return {"[UNK]"};
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = word.size();
    std::string match;
    while (end > start) {
      std::string candidate = word.substr(start, end - start);
      if (start > 0) candidate = "##" + candidate;
      if (index_.count(candidate)) {
        match = candidate;
        break;
      }
      --end;
    }
    if (match.empty()) return {"[UNK]"};  // no piece covers this span
    pieces.push_back(match);
    start = end;
  }
  return pieces;
}

std::vector<std::string> WordPieceTokenizer::tokenize(
    const std::string &text) const {
  std::vector<std::string> out;
  for (const std::string &word : basic_tokenize(text)) {
    for (std::string &piece : wordpiece(word)) {
      out.push_back(std::move(piece));
    }
  }
  return out;
}

std::vector<std::int32_t> WordPieceTokenizer::encode(
    const std::string &text) const {
  std::vector<std::int32_t> ids;
  for (const std::string &tok : tokenize(text)) {
    auto it = index_.find(tok);
    ids.push_back(it == index_.end() ? unk_id_ : it->second);
  }
  return ids;
}

bool WordPieceTokenizer::is_single_token(const std::string &text) const {
  std::vector<std::string> toks = tokenize(text);
  if (toks.size() != 1) return false;
  const std::string &t = toks[0];
  return t != "[UNK]" && t.rfind("##", 0) != 0 && index_.count(t) > 0;
}

std::optional<std::int32_t> WordPieceTokenizer::token_id(
    const std::string &token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

}  // namespace okgit
