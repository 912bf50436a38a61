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

#include "kk/retrieval.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "kk/error.hpp"

namespace kk {

namespace {

struct Band {
    std::size_t lo;
    std::size_t hi;
};

constexpr Band kApproximateBand{10, 100};
constexpr Band kHeuristicBand{500, 1000};

void require_same_store(const Catalog& catalog, const VectorIndex& index) {
    if (&catalog.store() == &index.store()) return;
    if (catalog.store().content_hash() != index.store().content_hash()) {
        throw Error(ErrorCode::kStoreMismatch, "index was not built over the catalog's embeddings");
    }
}

}  // namespace

std::string_view to_string(Tier tier) noexcept {
    switch (tier) {
        case Tier::kAccurate: return "ACCURATE";
        case Tier::kApproximate: return "APPROXIMATE";
        case Tier::kHeuristic: return "HEURISTIC";
    }
    return "UNKNOWN";
}

std::vector<RankedItem> category_ranking(const Catalog& catalog, const VectorIndex& index, std::span<const float> q,
                                         Category c, std::size_t depth, std::size_t exclude_row) {
    require_same_store(catalog, index);
    const std::size_t count = index.store().count();
    const auto& rows = catalog.category_rows(c);
    const bool excluded_here = exclude_row < count && catalog.category_of_row(exclude_row) == c;
    const std::size_t want = std::min(depth, rows.size() - (excluded_here ? 1 : 0));
    std::vector<RankedItem> out;
    if (want == 0) return out;

    std::size_t fetch = std::min(count, 4 * (want + 1));
    for (;;) {
        out.clear();
        for (const auto& nb : search(index, q, fetch)) {
            if (nb.row == exclude_row || catalog.category_of_row(nb.row) != c) continue;
            out.push_back({index.store().id(nb.row), nb.score});
            if (out.size() == want) return out;
        }
        if (fetch == count) return out;
        fetch = std::min(count, fetch * 2);
    }
}

std::vector<RankedItem> similar_ranking(const Catalog& catalog, const VectorIndex& index, std::string_view ref_id,
                                        std::size_t depth) {
    const Item& ref = catalog.at(ref_id);
    return category_ranking(catalog, index, catalog.embedding(ref), ref.category, depth, ref.embedding_row);
}

std::vector<std::string> similar_items(const Catalog& catalog, const VectorIndex& index, std::string_view ref_id,
                                       std::size_t n) {
    const Item& ref = catalog.at(ref_id);
    const std::size_t population = catalog.category_size(ref.category);
    if (population <= n) {
        throw Error(ErrorCode::kInsufficientCategoryPopulation,
                    "category " + std::string(name_of(ref.category)) + " has " + std::to_string(population) +
                        " items, need more than " + std::to_string(n));
    }
    std::vector<std::string> ids;
    for (auto& r : similar_ranking(catalog, index, ref_id, n)) ids.push_back(std::move(r.id));
    return ids;
}

TieredResults augment_results(std::span<const std::string> ranking, std::size_t n, std::uint64_t seed) {
    if (n < 4) throw Error(ErrorCode::kNTooSmall, "augmentation needs n >= 4, got " + std::to_string(n));
    if (ranking.empty()) throw Error(ErrorCode::kEmptyRanking, "cannot augment an empty ranking");

    const std::size_t accurate = (n + 1) / 2;
    const std::size_t approximate = (n + 3) / 4;
    const std::size_t heuristic = n - accurate - approximate;
    const std::size_t length = ranking.size();

    TieredResults out;
    out.n = n;
    std::vector<bool> used(length + 1, false);
    auto take = [&](std::size_t rank, Tier tier) {
        used[rank] = true;
        out.entries.push_back({ranking[rank - 1], tier, rank});
    };

    for (std::size_t r = 1; r <= std::min(accurate, length); ++r) take(r, Tier::kAccurate);

    std::mt19937_64 rng(seed);
    auto sample_band = [&](Band band, std::size_t count, Tier tier) {
        std::vector<std::size_t> pool;
        for (std::size_t r = band.lo; r <= std::min(band.hi, length); ++r) {
            if (!used[r]) pool.push_back(r);
        }
        const std::size_t k = std::min(count, pool.size());
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
            take(pool[i], tier);
        }
        std::size_t next = 1;
        for (std::size_t i = k; i < count; ++i) {
            while (next <= length && used[next]) ++next;
            if (next > length) break;
            take(next, Tier::kHeuristic);
        }
    };
    sample_band(kApproximateBand, approximate, Tier::kApproximate);
    sample_band(kHeuristicBand, heuristic, Tier::kHeuristic);
    return out;
}

std::vector<RankedItem> feedback_ranking(const Catalog& catalog, const VectorIndex& index, std::string_view ref_id,
                                         std::span<const float> text_embedding, std::size_t depth,
                                         const CombinerParams& combiner) {
    const Item& ref = catalog.at(ref_id);
    require_same_store(catalog, index);
    if (text_embedding.size() != catalog.store().dim() || combiner.dim != catalog.store().dim()) {
        throw Error(ErrorCode::kDimensionMismatch, "text embedding has " + std::to_string(text_embedding.size()) +
                                                       " values, catalog dim is " +
                                                       std::to_string(catalog.store().dim()));
    }
    const auto q = combine(combiner, catalog.embedding(ref), text_embedding);
    const std::size_t k = std::min(catalog.size(), depth + 1);
    std::vector<RankedItem> out;
    for (const auto& nb : search(index, q, k)) {
        if (nb.row == ref.embedding_row) continue;
        out.push_back({index.store().id(nb.row), nb.score});
        if (out.size() == depth) break;
    }
    return out;
}

TieredResults feedback_search(const Catalog& catalog, const VectorIndex& index, std::string_view ref_id,
                              std::span<const float> text_embedding, std::size_t n, const CombinerParams& combiner,
                              std::uint64_t seed) {
    auto ranked = feedback_ranking(catalog, index, ref_id, text_embedding, std::max(n, kAugmentDepth), combiner);
    std::vector<std::string> ids;
    ids.reserve(ranked.size());
    for (auto& r : ranked) ids.push_back(std::move(r.id));
    return augment_results(ids, n, seed);
}

}  // namespace kk
