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

// Synthetic priming world for calibrating the priming harness. Log-scores:
//   CT = base + member effect + record effect + noise
//   PT = CT + boost * u + noise
//   AT = CT + alt_fraction * boost * u + noise
// where u = 1 + susceptibility_sd * N(0, 1) is shared by PT and AT of a cell
// and the noise terms are independent N(0, noise_sd^2), all drawn from
// counter-based streams.

#pragma once

#include <string>

#include "popdrop/experiments/priming.hpp"
#include "popdrop/rng.hpp"

namespace popdrop::testing {

struct SyntheticPrimingWorld {
  std::size_t members = 50;
  std::size_t records = 400;  // split evenly between groups A and B
  double boost = 1.0;
  double alt_fraction = 0.9;
  double noise_sd = 0.3;
  double susceptibility_sd = 0.3;
  std::uint64_t seed = 0;

  experiments::PrimingDataset dataset() const {
    experiments::PrimingDataset d;
    for (std::size_t i = 0; i < records; ++i)
      d.records.push_back({"prime x " + std::to_string(i), "prime y " + std::to_string(i),
                           "target " + std::to_string(i), i % 2 == 0 ? 'A' : 'B'});
    return d;
  }

  experiments::TreatmentScores scores() const {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < records; ++i) ids.push_back(std::to_string(i));
    experiments::TreatmentScores s{{members, ids}, {members, ids}, {members, ids}};
    for (std::size_t m = 0; m < members; ++m) {
      const double member_effect = 0.5 * CounterRng{seed, 1, m}.normal();
      for (std::size_t r = 0; r < records; ++r) {
        const double record_effect = CounterRng{seed, 2, r}.normal();
        CounterRng noise{seed, 3, m, r};
        const double ct = -30.0 + member_effect + record_effect + noise_sd * noise.normal();
        s.ct.at(m, r) = ct;
        const double u = 1.0 + susceptibility_sd * noise.normal();
        s.pt.at(m, r) = ct + boost * u + noise_sd * noise.normal();
        s.at.at(m, r) = ct + alt_fraction * boost * u + noise_sd * noise.normal();
      }
    }
    return s;
  }
};

}  // namespace popdrop::testing
