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

// Model container:
//   "PDMODEL\0" | u32 version | str meta-json | u32 array count |
//   per array: str name, u32 rows, u32 cols, rows*cols f32 | u64 checksum
// All integers and floats little-endian; strings are u32 length + bytes.

#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "popdrop/datastore/binary.hpp"
#include "popdrop/model/scoring.hpp"
#include "popdrop/model/transformer.hpp"

namespace popdrop::datastore {

inline constexpr std::string_view kModelMagic{"PDMODEL\0", 8};
inline constexpr std::uint32_t kModelVersion = 1;

inline nlohmann::json config_to_json(const model::ToyLMConfig& c) {
  return {{"mode", model::to_string(c.mode)}, {"vocab_size", c.vocab_size}, {"layers", c.layers},
          {"model_dim", c.model_dim},         {"heads", c.heads},           {"ff_dim", c.ff_dim},
          {"max_seq_len", c.max_seq_len}};
}

inline model::ToyLMConfig config_from_json(const nlohmann::json& j) {
  model::ToyLMConfig c;
  c.mode = model::parse_mode(j.at("mode").get<std::string>());
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("layers").get_to(c.layers);
  j.at("model_dim").get_to(c.model_dim);
  j.at("heads").get_to(c.heads);
  j.at("ff_dim").get_to(c.ff_dim);
  j.at("max_seq_len").get_to(c.max_seq_len);
  c.validate();
  return c;
}

inline std::vector<char> encode_model(const model::ToyLM& lm) {
  model::check_params(lm.params, lm.config);
  const nlohmann::json meta = {{"config", config_to_json(lm.config)},
                               {"vocab", lm.vocab.tokens()},
                               {"seed", lm.params.seed}};
  ByteWriter w;
  w.bytes(kModelMagic);
  w.u32(kModelVersion);
  w.str(meta.dump());
  w.u32(static_cast<std::uint32_t>(lm.params.arrays.size()));
  for (const auto& a : lm.params.arrays) {
    w.str(a.name);
    w.u32(static_cast<std::uint32_t>(a.rows));
    w.u32(static_cast<std::uint32_t>(a.cols));
    for (double v : a.data) {
      require(v == static_cast<double>(static_cast<float>(v)), ErrorCode::invalid_argument,
              "parameter " + a.name + " is not representable in fp32");
      w.f32(static_cast<float>(v));
    }
  }
  w.seal();
  return w.data();
}

inline model::ToyLM decode_model(std::vector<char> bytes, const std::string& what = "model") {
  ByteReader r(std::move(bytes), what);
  r.verify_seal();
  r.expect_magic(kModelMagic);
  const std::uint32_t version = r.u32();
  require(version == kModelVersion, ErrorCode::parse_error,
          what + ": unsupported model version " + std::to_string(version));
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, what + ": bad metadata: " + e.what());
  }
  model::ToyLM lm{config_from_json(meta.at("config")), model::Vocab(meta.at("vocab").get<std::vector<std::string>>()),
                  {}};
  require(lm.vocab.size() == lm.config.vocab_size, ErrorCode::parse_error,
          what + ": vocabulary size disagrees with config");
  lm.params.seed = meta.value("seed", std::uint64_t{0});
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    model::NamedArray a;
    a.name = r.str();
    a.rows = r.u32();
    a.cols = r.u32();
    a.data.resize(a.rows * a.cols);
    for (auto& v : a.data) {
      v = r.f32();
      require(std::isfinite(v), ErrorCode::parse_error, what + ": non-finite value in " + a.name);
    }
    lm.params.arrays.push_back(std::move(a));
  }
  r.expect_end();
  try {
    model::check_params(lm.params, lm.config);
  } catch (const Error& e) {
    fail(ErrorCode::parse_error, what + ": " + e.what());
  }
  return lm;
}

inline void save_model(const std::string& path, const model::ToyLM& lm) { write_file(path, encode_model(lm)); }
inline model::ToyLM load_model(const std::string& path) { return decode_model(read_file(path), path); }

}  // namespace popdrop::datastore
