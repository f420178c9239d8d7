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

#include "querycat/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "querycat/error.hpp"
#include "querycat/io.hpp"
#include "querycat/random.hpp"

namespace querycat {
namespace {

constexpr std::int64_t kWindowStart = 1467072000;  // 2016-06-28 00:00 UTC
constexpr std::int64_t kWindowSeconds = 90LL * 24 * 3600;

// Pronounceable, pairwise distinct three-syllable words.
std::string pool_word(int index) {
  static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  constexpr int kSyllables = static_cast<int>(kConsonants.size() * kVowels.size());
  std::string word;
  int rest = index;
  for (int i = 0; i < 3; ++i) {
    const int syllable = rest % kSyllables;
    rest /= kSyllables;
    word += kConsonants[syllable / kVowels.size()];
    word += kVowels[syllable % kVowels.size()];
  }
  return word;
}

constexpr int kMaxPoolWords = 70 * 70 * 70;

// Zipf(1) popularity over a contiguous block of word indices.
class TokenGroup {
 public:
  TokenGroup(int first, int count, bool shifted) : first_(first) {
    cumulative_.reserve(count);
    double total = 0.0;
    for (int r = 0; r < count; ++r) {
      const int rank = shifted ? count - 1 - r : r;
      total += 1.0 / static_cast<double>(rank + 1);
      cumulative_.push_back(total);
    }
    for (double& c : cumulative_) c /= total;
  }

  int draw(Rng& rng) const {
    const double u = rng.uniform01();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto offset = std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                                 static_cast<std::ptrdiff_t>(cumulative_.size()) - 1);
    return first_ + static_cast<int>(offset);
  }

 private:
  int first_;
  std::vector<double> cumulative_;
};

int draw_length(Rng& rng) {
  // Mean 2.15 words per query.
  const double u = rng.uniform01();
  if (u < 0.20) return 1;
  if (u < 0.70) return 2;
  if (u < 0.95) return 3;
  return 4;
}

std::string join_words(const std::vector<int>& ids) {
  std::string q;
  for (const int id : ids) {
    if (!q.empty()) q += ' ';
    q += pool_word(id);
  }
  return q;
}

// Surface noise that normalization undoes.
std::string perturb_surface(const std::string& query, Rng& rng) {
  std::string raw = query;
  if (rng.bernoulli(0.15)) raw[0] = static_cast<char>(std::toupper(raw[0]));
  if (rng.bernoulli(0.05)) {
    const auto space = raw.find(' ');
    if (space != std::string::npos) raw.insert(space, " ");
  }
  if (rng.bernoulli(0.05)) raw += rng.bernoulli(0.5) ? "!" : "?";
  return raw;
}

}  // namespace

void SynthSpec::validate() const {
  const auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidSpec, why); };
  if (n_classes < 2) fail("n_classes must be >= 2");
  if (queries_per_class < 1) fail("queries_per_class must be >= 1");
  if (clicks_per_query < 1) fail("clicks_per_query must be >= 1");
  if (vocab_pool_size < 1) fail("vocab_pool_size must be >= 1");
  if (vocab_pool_size > kMaxPoolWords) fail("vocab_pool_size too large");
  if (!(noise_fraction >= 0.0 && noise_fraction < 1.0)) fail("noise_fraction must be in [0, 1)");
  if (mode == SynthMode::kSeparable && vocab_pool_size / n_classes < 1) {
    fail("vocab_pool_size must give every class at least one word");
  }
  if (mode == SynthMode::kOrderSensitive) {
    if (n_classes % 2 != 0) fail("order-sensitive mode needs an even n_classes");
    const int fillers = std::max(1, vocab_pool_size / 5);
    if ((vocab_pool_size - fillers) / n_classes < 1) {
      fail("vocab_pool_size too small for order-sensitive groups");
    }
  }
}

std::vector<CategoryId> synthetic_category_ids(int n_classes) {
  static constexpr CategoryId kL1[] = {27, 45, 72, 10, 800, 112, 34, 1};
  std::vector<CategoryId> ids;
  for (int i = 0; i < n_classes; ++i) {
    ids.push_back(i < 8 ? kL1[i] : 1000 + (i - 8));
  }
  return ids;
}

SyntheticLog generate_synthetic_log(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  SyntheticLog log;
  log.categories = synthetic_category_ids(spec.n_classes);

  const auto query_budget = static_cast<std::size_t>(spec.queries_per_class);
  const std::size_t max_attempts = query_budget * 200 + 1000;
  std::vector<std::pair<std::string, int>> queries;  // (query, class)
  std::set<std::string> seen;

  if (spec.mode == SynthMode::kSeparable) {
    const int per_class = spec.vocab_pool_size / spec.n_classes;
    for (int c = 0; c < spec.n_classes; ++c) {
      const TokenGroup group(c * per_class, per_class, spec.shifted);
      std::size_t made = 0;
      for (std::size_t attempt = 0; made < query_budget; ++attempt) {
        if (attempt == max_attempts) {
          throw Error(ErrorCode::kInvalidSpec, "token pool too small for distinct queries");
        }
        std::vector<int> words(static_cast<std::size_t>(draw_length(rng)));
        for (int& w : words) w = group.draw(rng);
        std::string q = join_words(words);
        if (seen.insert(q).second) {
          queries.emplace_back(std::move(q), c);
          ++made;
        }
      }
    }
  } else {
    const int filler_count = std::max(1, spec.vocab_pool_size / 5);
    const int group_size = (spec.vocab_pool_size - filler_count) / spec.n_classes;
    const TokenGroup filler(spec.n_classes * group_size, filler_count, spec.shifted);
    for (int c = 0; c < spec.n_classes; ++c) {
      const int topic = c / 2;
      const TokenGroup first(2 * topic * group_size, group_size, spec.shifted);
      const TokenGroup second((2 * topic + 1) * group_size, group_size, spec.shifted);
      const bool reversed = c % 2 == 1;
      std::size_t made = 0;
      for (std::size_t attempt = 0; made < query_budget; ++attempt) {
        if (attempt == max_attempts) {
          throw Error(ErrorCode::kInvalidSpec, "token pool too small for distinct queries");
        }
        const int a = first.draw(rng);
        const int b = second.draw(rng);
        const int fillers = static_cast<int>(rng.uniform_index(4));
        const int before = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(fillers) + 1));
        std::vector<int> words;
        for (int i = 0; i < before; ++i) words.push_back(filler.draw(rng));
        words.push_back(reversed ? b : a);
        words.push_back(reversed ? a : b);
        for (int i = before; i < fillers; ++i) words.push_back(filler.draw(rng));
        std::string q = join_words(words);
        if (seen.insert(q).second) {
          queries.emplace_back(std::move(q), c);
          ++made;
        }
      }
    }
  }

  const auto n_classes = static_cast<std::uint64_t>(spec.n_classes);
  std::uint64_t session_counter = 0;
  for (const auto& [query, cls] : queries) {
    const CategoryId truth = log.categories[static_cast<std::size_t>(cls)];
    log.truth.emplace(query, truth);
    for (int k = 0; k < spec.clicks_per_query; ++k) {
      ClickEvent e;
      e.session_id = "s" + hex64(fnv1a64(std::to_string(session_counter++), seed));
      e.timestamp = kWindowStart + static_cast<std::int64_t>(
                                       rng.uniform_index(static_cast<std::uint64_t>(kWindowSeconds)));
      e.query_raw = perturb_surface(query, rng);
      std::size_t target = static_cast<std::size_t>(cls);
      if (spec.noise_fraction > 0.0 && rng.bernoulli(spec.noise_fraction)) {
        const auto offset = 1 + rng.uniform_index(n_classes - 1);
        target = static_cast<std::size_t>((static_cast<std::uint64_t>(cls) + offset) % n_classes);
      }
      e.category_id = log.categories[target];
      e.ad_id = "ad" + std::to_string(e.category_id) + "-" + std::to_string(rng.uniform_index(100000));
      log.events.push_back(std::move(e));
    }
  }
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const ClickEvent& x, const ClickEvent& y) { return x.timestamp < y.timestamp; });
  return log;
}

}  // namespace querycat
