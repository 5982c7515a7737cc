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

#include <span>
#include <string>
#include <vector>

#include "popdrop/error.hpp"

namespace popdrop::population {

// Dense member x stimulus matrix, row-major.
struct ScoreMatrix {
  std::size_t members = 0;
  std::vector<std::string> stimuli;
  std::vector<double> values;

  ScoreMatrix() = default;
  ScoreMatrix(std::size_t k, std::vector<std::string> ids)
      : members(k), stimuli(std::move(ids)), values(members * stimuli.size(), 0.0) {}

  std::size_t columns() const { return stimuli.size(); }
  double& at(std::size_t m, std::size_t s) { return values[m * columns() + s]; }
  double at(std::size_t m, std::size_t s) const { return values[m * columns() + s]; }
  std::span<const double> row(std::size_t m) const { return std::span<const double>(values).subspan(m * columns(), columns()); }
  std::vector<double> column(std::size_t s) const {
    std::vector<double> out(members);
    for (std::size_t m = 0; m < members; ++m) out[m] = at(m, s);
    return out;
  }

  bool operator==(const ScoreMatrix&) const = default;
};

}  // namespace popdrop::population
