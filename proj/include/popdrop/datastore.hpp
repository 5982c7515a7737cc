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

#include "popdrop/datastore/binary.hpp"
#include "popdrop/datastore/corpus_io.hpp"
#include "popdrop/datastore/csv.hpp"
#include "popdrop/datastore/datasets_io.hpp"
#include "popdrop/datastore/fingerprint.hpp"
#include "popdrop/datastore/maskset_io.hpp"
#include "popdrop/datastore/model_io.hpp"
#include "popdrop/datastore/score_records.hpp"
