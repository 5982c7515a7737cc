// Copyright 2026 The popdrop Authors.
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

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "popdrop/error.hpp"

namespace popdrop::model {

using TokenId = std::int32_t;

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kBeginToken = "<bos>";
inline constexpr std::string_view kMaskToken = "<mask>";

// Lowercases and splits on whitespace; trailing sentence punctuation
// (. , ! ? ;) becomes its own token. Angle-bracket specials pass through.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    std::vector<std::string> trailing;
    while (word.size() > 1 && std::string_view(".,!?;").find(word.back()) != std::string_view::npos) {
      trailing.emplace_back(1, word.back());
      word.pop_back();
    }
    if (word.size() == 1 && std::string_view(".,!?;").find(word[0]) != std::string_view::npos) {
      trailing.push_back(word);
      word.clear();
    }
    if (!word.empty()) out.push_back(word);
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
    word.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return out;
}

class Vocab {
 public:
  Vocab() = default;

  // Tokens in id order. The three special tokens must be present.
  explicit Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      const auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
      require(inserted, ErrorCode::invalid_argument, "vocab: duplicate token '" + tokens_[i] + "'");
    }
    require(tokens_.size() >= 8, ErrorCode::invalid_argument,
            "vocab: need at least 8 tokens, got " + std::to_string(tokens_.size()));
    pad_ = lookup_special(kPadToken);
    begin_ = lookup_special(kBeginToken);
    mask_ = lookup_special(kMaskToken);
  }

  // Specials first, then every distinct corpus token in sorted order.
  static Vocab from_texts(std::span<const std::string> texts) {
    std::set<std::string> words;
    for (const auto& t : texts)
      for (auto& w : tokenize(t)) words.insert(std::move(w));
    std::vector<std::string> tokens{std::string(kPadToken), std::string(kBeginToken),
                                    std::string(kMaskToken)};
    for (const auto& w : words)
      if (w != kPadToken && w != kBeginToken && w != kMaskToken) tokens.push_back(w);
    return Vocab(std::move(tokens));
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  TokenId pad_id() const { return pad_; }
  TokenId begin_id() const { return begin_; }
  TokenId mask_id() const { return mask_; }

  bool contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

  TokenId id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) fail(ErrorCode::unknown_token, "unknown token '" + std::string(token) + "'");
    return it->second;
  }

  std::vector<TokenId> encode(std::string_view text) const {
    std::vector<TokenId> ids;
    for (const auto& w : tokenize(text)) ids.push_back(id(w));
    return ids;
  }

  std::string decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId t : ids) {
      if (!out.empty()) out.push_back(' ');
      out += token(t);
    }
    return out;
  }

 private:
  TokenId lookup_special(std::string_view s) const {
    auto it = index_.find(std::string(s));
    require(it != index_.end(), ErrorCode::invalid_argument, "vocab: missing special token " + std::string(s));
    return it->second;
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId pad_ = 0;
  TokenId begin_ = 1;
  TokenId mask_ = 2;
};

}  // namespace popdrop::model
