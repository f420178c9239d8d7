// Copyright 2026 The QueryCat Authors. All Rights Reserved.
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

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "querycat/ingest.hpp"

namespace querycat {

enum class SynthMode {
  // Each class draws its words from a disjoint token pool.
  kSeparable,
  // Classes come in pairs that share two token groups; the class is decided
  // by which group's token comes first in an adjacent bigram. Shared filler
  // words pad the bigram at random offsets.
  kOrderSensitive,
};

struct SynthSpec {
  int n_classes = 8;
  int queries_per_class = 100;
  int clicks_per_query = 10;
  double noise_fraction = 0.02;
  int vocab_pool_size = 1000;
  SynthMode mode = SynthMode::kSeparable;
  // Reverses the within-pool token popularity ranking, so a log generated
  // with `shifted` favors the words that are rare in an unshifted log.
  bool shifted = false;

  // Throws InvalidSpec.
  void validate() const;
};

struct SyntheticLog {
  std::vector<ClickEvent> events;  // ascending timestamp
  // Normalized query -> category that generated it.
  std::map<std::string, CategoryId> truth;
  std::vector<CategoryId> categories;  // class index -> category id
};

// L1 category ids used for synthetic classes: the eight classifieds
// categories first, then 1000, 1001, ...
std::vector<CategoryId> synthetic_category_ids(int n_classes);

// Deterministic per (spec, seed). Every query receives exactly
// clicks_per_query clicks; each click independently goes to a uniformly
// chosen wrong category with probability noise_fraction.
SyntheticLog generate_synthetic_log(const SynthSpec& spec, std::uint64_t seed);

}  // namespace querycat
