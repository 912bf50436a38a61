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

#include "kk/recommendation.hpp"

#include <algorithm>
#include <cctype>
#include <random>

#include "kk/error.hpp"
#include "kk/retrieval.hpp"

namespace kk {

std::string_view to_string(OutfitSetting setting) noexcept {
    switch (setting) {
        case OutfitSetting::kToneSurTone: return "TONE_SUR_TONE";
        case OutfitSetting::kMixAndMatch: return "MIX_AND_MATCH";
    }
    return "UNKNOWN";
}

std::optional<OutfitSetting> parse_outfit_setting(std::string_view name) noexcept {
    std::string upper(name);
    for (auto& ch : upper) ch = ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (upper == "TONE_SUR_TONE") return OutfitSetting::kToneSurTone;
    if (upper == "MIX_AND_MATCH") return OutfitSetting::kMixAndMatch;
    return std::nullopt;
}

std::map<Category, std::string> pick_outfit(const Catalog& catalog, const VectorIndex& index,
                                            const std::map<Category, std::vector<float>>& predictions,
                                            OutfitSetting setting, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::map<Category, std::string> outfit;
    for (const auto& [c, q] : predictions) {
        if (q.size() != catalog.store().dim()) {
            throw Error(ErrorCode::kDimensionMismatch, "predicted embedding for " + std::string(name_of(c)) +
                                                           " has " + std::to_string(q.size()) + " values");
        }
        if (catalog.category_size(c) == 0) {
            throw Error(ErrorCode::kEmptyCategory, "catalog has no " + std::string(name_of(c)));
        }
        const std::size_t depth = setting == OutfitSetting::kToneSurTone ? 1 : kMixAndMatchPool;
        const auto pool = category_ranking(catalog, index, q, c, depth);
        std::size_t pick = 0;
        if (setting == OutfitSetting::kMixAndMatch) {
            pick = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
        }
        outfit.emplace(c, pool[pick].id);
    }
    return outfit;
}

OutfitEntry outfit_entry(const Catalog& catalog, std::string_view id) {
    const Item& item = catalog.at(id);
    const auto emb = catalog.embedding(item);
    return {item.category, item.id, {emb.begin(), emb.end()}};
}

std::map<Category, std::string> recommend_outfit(const Catalog& catalog, const VectorIndex& index,
                                                 const TransformerParams& transformer, std::string_view ref_id,
                                                 std::span<const Category> targets, OutfitSetting setting,
                                                 std::uint64_t seed) {
    if (transformer.config.dim != catalog.store().dim()) {
        throw Error(ErrorCode::kDimensionMismatch, "transformer dim " + std::to_string(transformer.config.dim) +
                                                       " differs from catalog dim " +
                                                       std::to_string(catalog.store().dim()));
    }
    const auto ref = outfit_entry(catalog, ref_id);
    return pick_outfit(catalog, index, recommend_embeddings(transformer, ref, targets), setting, seed);
}

}  // namespace kk
