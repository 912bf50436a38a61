// Copyright 2026-present the kkengine project
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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kk/catalog.hpp"
#include "kk/combiner.hpp"
#include "kk/index/vector_index.hpp"

namespace kk {

enum class Tier : std::uint8_t { kAccurate = 0, kApproximate = 1, kHeuristic = 2 };

std::string_view to_string(Tier tier) noexcept;

struct TieredEntry {
    std::string id;
    Tier tier;
    std::size_t rank;  // 1-indexed position in the ranking it was drawn from
};

struct TieredResults {
    std::vector<TieredEntry> entries;
    std::size_t n = 0;  // requested length; entries is shorter only when the ranking is
};

struct RankedItem {
    std::string id;
    float score;
};

/// Up to `depth` items of category `c` ranked by cosine to `q`, skipping
/// `exclude_row`. Over-fetches from the index (4x, doubling) and filters.
std::vector<RankedItem> category_ranking(const Catalog& catalog, const VectorIndex& index, std::span<const float> q,
                                         Category c, std::size_t depth,
                                         std::size_t exclude_row = static_cast<std::size_t>(-1));

/// Up to `depth` items of the reference's category ranked by cosine to the
/// reference, reference excluded. Over-fetches from the index (4x, doubling)
/// and filters by category. Throws kUnknownItem and kStoreMismatch.
std::vector<RankedItem> similar_ranking(const Catalog& catalog, const VectorIndex& index, std::string_view ref_id,
                                        std::size_t depth);

/// Top-n same-category ids. The category must hold more than n items.
std::vector<std::string> similar_items(const Catalog& catalog, const VectorIndex& index, std::string_view ref_id,
                                       std::size_t n);

/// Three-tier composition over an exact ranking:
///   ceil(n/2) accurate items (ranks 1..), ceil(n/4) sampled from ranks
///   [10, 100], the rest sampled from ranks [500, 1000].
/// Bands are clipped to the ranking and skip ranks already taken. A band that
/// comes up short is topped up from the best unused ranks, tagged heuristic.
TieredResults augment_results(std::span<const std::string> ranking, std::size_t n, std::uint64_t seed);

/// Whole-catalog ranking for combine(ref, text), reference excluded.
std::vector<RankedItem> feedback_ranking(const Catalog& catalog, const VectorIndex& index, std::string_view ref_id,
                                         std::span<const float> text_embedding, std::size_t depth,
                                         const CombinerParams& combiner);

/// feedback_ranking to depth 1000, then augment_results.
TieredResults feedback_search(const Catalog& catalog, const VectorIndex& index, std::string_view ref_id,
                              std::span<const float> text_embedding, std::size_t n, const CombinerParams& combiner,
                              std::uint64_t seed);

inline constexpr std::size_t kAugmentDepth = 1000;

}  // namespace kk
