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

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include <json.hpp>

#include "popdrop/rng.hpp"

namespace popdrop::datastore {

struct DatasetFingerprint {
  std::string content_hash;  // 16 lowercase hex digits
  std::size_t record_count = 0;
  std::string schema;

  bool operator==(const DatasetFingerprint&) const = default;
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline DatasetFingerprint fingerprint_of(std::string_view canonical_bytes, std::size_t records, std::string schema) {
  return {hex64(fnv1a64(canonical_bytes)), records, std::move(schema)};
}

inline void to_json(nlohmann::json& j, const DatasetFingerprint& f) {
  j = {{"content_hash", f.content_hash}, {"record_count", f.record_count}, {"schema", f.schema}};
}

}  // namespace popdrop::datastore
