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

// Mask-set container:
//   "PDMASKS\0" | u32 version | str meta-json | f64 dropout rate |
//   per member, per selected site: ceil(n/8) bytes of keep bits (LSB first) |
//   u64 checksum

#pragma once

#include <string>

#include <json.hpp>

#include "popdrop/datastore/binary.hpp"
#include "popdrop/population/maskset.hpp"

namespace popdrop::datastore {

inline constexpr std::string_view kMaskMagic{"PDMASKS\0", 8};
inline constexpr std::uint32_t kMaskVersion = 1;

inline nlohmann::json population_config_to_json(const population::PopulationConfig& c) {
  return {{"population_size", c.size}, {"dropout_rate", c.dropout_rate}, {"seed", c.seed}, {"sites", c.sites}};
}

inline std::vector<char> encode_maskset(const population::MaskSet& set) {
  nlohmann::json declared = nlohmann::json::array();
  for (const auto& s : set.declared) declared.push_back({{"id", s.id}, {"rows", s.rows}, {"cols", s.cols}});
  std::vector<int> selected(set.selected.begin(), set.selected.end());
  const nlohmann::json meta = {{"config", population_config_to_json(set.config)},
                               {"model_fingerprint", set.model_fingerprint},
                               {"declared_sites", declared},
                               {"selected", selected}};
  ByteWriter w;
  w.bytes(kMaskMagic);
  w.u32(kMaskVersion);
  w.str(meta.dump());
  w.f64(set.config.dropout_rate);
  for (const auto& member : set.keep)
    for (std::size_t s = 0; s < set.declared.size(); ++s) {
      if (!set.selected[s]) continue;
      const auto& bits = member[s];
      for (std::size_t b = 0; b < bits.size(); b += 8) {
        std::uint8_t byte = 0;
        for (std::size_t k = 0; k < 8 && b + k < bits.size(); ++k) byte |= static_cast<std::uint8_t>(bits[b + k] << k);
        w.u8(byte);
      }
    }
  w.seal();
  return w.data();
}

inline population::MaskSet decode_maskset(std::vector<char> bytes, const std::string& what = "mask set") {
  ByteReader r(std::move(bytes), what);
  r.verify_seal();
  r.expect_magic(kMaskMagic);
  const std::uint32_t version = r.u32();
  require(version == kMaskVersion, ErrorCode::parse_error, what + ": unsupported version " + std::to_string(version));
  population::MaskSet set;
  try {
    const auto meta = nlohmann::json::parse(r.str());
    const auto& c = meta.at("config");
    c.at("population_size").get_to(set.config.size);
    c.at("seed").get_to(set.config.seed);
    c.at("sites").get_to(set.config.sites);
    meta.at("model_fingerprint").get_to(set.model_fingerprint);
    for (const auto& s : meta.at("declared_sites"))
      set.declared.push_back({s.at("id").get<std::string>(), s.at("rows").get<std::size_t>(), s.at("cols").get<std::size_t>()});
    for (int b : meta.at("selected").get<std::vector<int>>()) set.selected.push_back(b != 0);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, what + ": bad metadata: " + e.what());
  }
  set.config.dropout_rate = r.f64();
  require(set.selected.size() == set.declared.size(), ErrorCode::parse_error, what + ": site table inconsistent");
  try {
    set.config.validate();
  } catch (const Error& e) {
    fail(ErrorCode::parse_error, what + ": " + e.what());
  }
  set.keep.resize(set.config.size);
  for (auto& member : set.keep) {
    member.resize(set.declared.size());
    for (std::size_t s = 0; s < set.declared.size(); ++s) {
      if (!set.selected[s]) continue;
      member[s].resize(set.declared[s].size());
      for (std::size_t b = 0; b < member[s].size(); b += 8) {
        const std::uint8_t byte = r.u8();
        for (std::size_t k = 0; k < 8 && b + k < member[s].size(); ++k) member[s][b + k] = (byte >> k) & 1u;
      }
    }
  }
  r.expect_end();
  return set;
}

inline void save_maskset(const std::string& path, const population::MaskSet& set) {
  write_file(path, encode_maskset(set));
}
inline population::MaskSet load_maskset(const std::string& path) { return decode_maskset(read_file(path), path); }

}  // namespace popdrop::datastore
