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

#include "popdrop/stats/bootstrap.hpp"
#include "popdrop/stats/correlation.hpp"
#include "popdrop/stats/descriptive.hpp"
#include "popdrop/stats/ks.hpp"
#include "popdrop/stats/rank.hpp"
#include "popdrop/stats/regression.hpp"
#include "popdrop/stats/result.hpp"
#include "popdrop/stats/special.hpp"
#include "popdrop/stats/wilcoxon.hpp"
