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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kk/catalog.hpp"
#include "kk/index/vector_index.hpp"
#include "kk/outfit_transformer.hpp"

namespace kk {

// TONE_SUR_TONE: top-1 per category. MIX_AND_MATCH: seeded uniform pick from
// the category's top results, for more varied outfits.
enum class OutfitSetting : std::uint8_t { kToneSurTone = 0, kMixAndMatch = 1 };

std::string_view to_string(OutfitSetting setting) noexcept;
std::optional<OutfitSetting> parse_outfit_setting(std::string_view name) noexcept;

inline constexpr std::size_t kMixAndMatchPool = 1000;

/// Picks one item per predicted category. Throws kEmptyCategory and
/// kDimensionMismatch.
std::map<Category, std::string> pick_outfit(const Catalog& catalog, const VectorIndex& index,
                                            const std::map<Category, std::vector<float>>& predictions,
                                            OutfitSetting setting, std::uint64_t seed);

/// recommend_embeddings for the reference item, then pick_outfit.
std::map<Category, std::string> recommend_outfit(const Catalog& catalog, const VectorIndex& index,
                                                 const TransformerParams& transformer, std::string_view ref_id,
                                                 std::span<const Category> targets, OutfitSetting setting,
                                                 std::uint64_t seed);

/// Reference item as a transformer input.
OutfitEntry outfit_entry(const Catalog& catalog, std::string_view id);

}  // namespace kk
