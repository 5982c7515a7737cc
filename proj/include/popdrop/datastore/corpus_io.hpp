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

// Corpus files: one JSON string (the sentence) per line. Ground-truth files:
// one JSON object per line with item, category, planted_rank,
// planted_frequency and filler_count.

#pragma once

#include <string>

#include <json.hpp>

#include "popdrop/datastore/binary.hpp"
#include "popdrop/datastore/fingerprint.hpp"
#include "popdrop/model/corpus.hpp"

namespace popdrop::datastore {

inline std::string serialize_corpus(const model::Corpus& c) {
  std::string out;
  for (const auto& s : c.sentences) out += nlohmann::json(s).dump() + "\n";
  return out;
}

inline std::string serialize_truth(const model::Corpus& c) {
  std::string out;
  for (const auto& r : c.truth) out += nlohmann::json(r).dump() + "\n";
  return out;
}

template <typename T>
std::vector<T> parse_jsonl(std::string_view text, const std::string& source) {
  std::vector<T> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<T>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse_error, source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline model::Corpus parse_corpus(std::string_view sentences, std::string_view truth, const std::string& source) {
  return {parse_jsonl<std::string>(sentences, source), parse_jsonl<model::GroundTruthRow>(truth, source + " (truth)")};
}

// Corpora are ordered, so the fingerprint depends on sentence order.
inline DatasetFingerprint fingerprint(const model::Corpus& c) {
  return fingerprint_of(serialize_corpus(c), c.sentences.size(), "popdrop.corpus/1");
}

inline void save_corpus(const std::string& sentences_path, const std::string& truth_path, const model::Corpus& c) {
  write_file(sentences_path, serialize_corpus(c));
  write_file(truth_path, serialize_truth(c));
}

inline model::Corpus load_corpus(const std::string& sentences_path, const std::string& truth_path) {
  return parse_corpus(read_text_file(sentences_path), read_text_file(truth_path), sentences_path);
}

}  // namespace popdrop::datastore
