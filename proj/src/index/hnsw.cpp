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

#include <algorithm>
#include <cmath>
#include <random>

#include "indexes.hpp"
#include "kk/error.hpp"
#include "kk/simd/kernels.hpp"
#include "topk.hpp"
#include "visited.hpp"

namespace kk::detail {

namespace {

constexpr int kMaxLevel = 16;

// Heap orders over (score, row). With ByScoreAsc the heap front is the worst
// kept result; with ByScoreDesc it is the best unexpanded candidate.
struct ByScoreAsc {
    bool operator()(const Neighbor& a, const Neighbor& b) const noexcept {
        if (a.score != b.score) return a.score > b.score;
        return a.row > b.row;
    }
};
struct ByScoreDesc {
    bool operator()(const Neighbor& a, const Neighbor& b) const noexcept {
        if (a.score != b.score) return a.score < b.score;
        return a.row < b.row;
    }
};

struct SearchBuffers {
    std::vector<Neighbor> candidates;
    std::vector<Neighbor> results;
    std::vector<std::uint32_t> pending;
    std::vector<float> scores;

    static SearchBuffers& local() {
        thread_local SearchBuffers b;
        return b;
    }
};

}  // namespace

HnswIndex::HnswIndex(Tag, std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config)
    : VectorIndex(std::move(store), config) {}

HnswIndex::HnswIndex(std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config)
    : VectorIndex(std::move(store), config) {
    const auto n = this->store().count();
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double ml = 1.0 / std::log(static_cast<double>(config.hnsw_M));

    levels_.resize(n);
    upper_begin_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = 1.0 - unit(rng);  // (0, 1]
        levels_[i] = static_cast<std::uint8_t>(std::min(kMaxLevel, static_cast<int>(-std::log(u) * ml)));
        upper_begin_[i] = static_cast<std::uint32_t>(upper_.size());
        upper_.resize(upper_.size() + levels_[i]);
    }
    layer0_.assign(n * stride0(), 0);
    for (std::uint32_t i = 0; i < n; ++i) insert(i, levels_[i]);
}

float HnswIndex::sim(std::uint32_t a, const float* q) const {
    float s;
    simd::active().dot_gather(q, store().data().data(), &a, 1, store().dim(), &s);
    return s;
}

std::span<const std::uint32_t> HnswIndex::neighbors(std::uint32_t node, int level) const {
    if (level == 0) {
        const auto* slot = layer0_.data() + std::size_t{node} * stride0();
        return {slot + 1, slot[0]};
    }
    return upper_[upper_begin_[node] + static_cast<std::size_t>(level) - 1];
}

void HnswIndex::set_links(std::uint32_t node, int level, std::span<const std::uint32_t> targets) {
    if (level == 0) {
        auto* slot = layer0_.data() + std::size_t{node} * stride0();
        slot[0] = static_cast<std::uint32_t>(targets.size());
        std::copy(targets.begin(), targets.end(), slot + 1);
    } else {
        upper_[upper_begin_[node] + static_cast<std::size_t>(level) - 1].assign(targets.begin(), targets.end());
    }
}

// Appends `target`; when the list is full, keeps the cap(level) most similar.
void HnswIndex::add_link(std::uint32_t node, int level, std::uint32_t target) {
    const auto current = neighbors(node, level);
    const auto limit = cap(level);
    std::vector<std::uint32_t> list(current.begin(), current.end());
    list.push_back(target);
    if (list.size() > limit) {
        const float* base = store().row(node).data();
        std::vector<Neighbor> scored;
        scored.reserve(list.size());
        for (auto nb : list) scored.push_back({nb, sim(nb, base)});
        std::sort(scored.begin(), scored.end(), ByScoreAsc{});
        list.resize(limit);
        for (std::size_t i = 0; i < limit; ++i) list[i] = scored[i].row;
    }
    set_links(node, level, list);
}

std::uint32_t HnswIndex::greedy(std::span<const float> q, std::uint32_t entry, int level) const {
    std::uint32_t cur = entry;
    float best = sim(cur, q.data());
    for (bool moved = true; moved;) {
        moved = false;
        for (auto nb : neighbors(cur, level)) {
            const float s = sim(nb, q.data());
            if (s > best || (s == best && nb < cur)) {
                best = s;
                cur = nb;
                moved = true;
            }
        }
    }
    return cur;
}

std::vector<Neighbor> HnswIndex::search_layer(std::span<const float> q, std::uint32_t entry, std::size_t ef,
                                              int level) const {
    const auto& kernels = simd::active();
    const float* base = store().data().data();
    const std::size_t dim = store().dim();
    auto& visited = VisitedSet::local();
    visited.reset(store().count());
    auto& buf = SearchBuffers::local();
    auto& candidates = buf.candidates;
    auto& results = buf.results;
    auto& pending = buf.pending;
    auto& scores = buf.scores;
    pending.resize(2 * config().hnsw_M);
    scores.resize(2 * config().hnsw_M);
    candidates.clear();
    results.clear();

    float start_score;
    kernels.dot_gather(q.data(), base, &entry, 1, dim, &start_score);
    const Neighbor start{entry, start_score};
    visited.test_and_set(entry);
    candidates.push_back(start);
    results.push_back(start);
    while (!candidates.empty()) {
        const auto cur = candidates.front();
        if (results.size() >= ef && cur.score < results.front().score) break;
        std::pop_heap(candidates.begin(), candidates.end(), ByScoreDesc{});
        candidates.pop_back();
        const auto links = neighbors(cur.row, level);
        std::size_t fresh = 0;
        for (auto nb : links) {
            if (visited.test_and_set(nb)) continue;
            const float* v = base + std::size_t{nb} * dim;
            __builtin_prefetch(v);
            __builtin_prefetch(v + 16);
            pending[fresh++] = nb;
        }
        kernels.dot_gather(q.data(), base, pending.data(), fresh, dim, scores.data());
        for (std::size_t i = 0; i < fresh; ++i) {
            const float s = scores[i];
            if (results.size() < ef || s > results.front().score) {
                const Neighbor n{pending[i], s};
                candidates.push_back(n);
                std::push_heap(candidates.begin(), candidates.end(), ByScoreDesc{});
                results.push_back(n);
                std::push_heap(results.begin(), results.end(), ByScoreAsc{});
                if (results.size() > ef) {
                    std::pop_heap(results.begin(), results.end(), ByScoreAsc{});
                    results.pop_back();
                }
            }
        }
    }
    std::vector<Neighbor> out(results.begin(), results.end());
    std::sort(out.begin(), out.end(), ByScoreAsc{});
    return out;
}

void HnswIndex::insert(std::uint32_t node, int level) {
    if (max_level_ < 0) {
        entry_ = node;
        max_level_ = level;
        return;
    }
    const auto q = store().row(node);
    std::uint32_t cur = entry_;
    for (int l = max_level_; l > level; --l) cur = greedy(q, cur, l);

    const std::size_t m = config().hnsw_M;
    std::vector<std::uint32_t> mine;
    for (int l = std::min(level, max_level_); l >= 0; --l) {
        const auto found = search_layer(q, cur, config().hnsw_ef_construction, l);
        cur = found.front().row;
        mine.clear();
        for (std::size_t i = 0; i < found.size() && mine.size() < m; ++i) mine.push_back(found[i].row);
        set_links(node, l, mine);
        for (auto nb : mine) add_link(nb, l, node);
    }
    if (level > max_level_) {
        entry_ = node;
        max_level_ = level;
    }
}

std::vector<Neighbor> HnswIndex::search_normalized(std::span<const float> q, std::size_t k) const {
    std::uint32_t cur = entry_;
    for (int l = max_level_; l > 0; --l) cur = greedy(q, cur, l);
    const std::size_t ef = std::max<std::size_t>(config().hnsw_ef_search, k);
    auto found = search_layer(q, cur, ef, 0);
    sort_neighbors(found, store());
    if (found.size() > k) found.resize(k);
    return found;
}

std::size_t HnswIndex::memory_footprint() const {
    const auto& s = store();
    const std::size_t m = config().hnsw_M;
    std::size_t upper_slots = 0;
    for (auto lv : levels_) upper_slots += lv * (m + 1);
    return s.count() * s.dim() * sizeof(float)                        // vectors
           + s.count() * (2 * m + 1) * sizeof(std::uint32_t)          // layer-0 slots + count
           + upper_slots * sizeof(std::uint32_t)                      // upper layers
           + s.count() * (sizeof(std::uint8_t) + sizeof(std::uint32_t))  // level + upper offset
           + s.id_table_bytes();
}

void HnswIndex::write_payload(ByteWriter& out) const {
    out.put_u32(entry_);
    out.put_u32(static_cast<std::uint32_t>(max_level_));
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        out.put_u8(levels_[i]);
        for (int l = 0; l <= levels_[i]; ++l) {
            const auto list = neighbors(static_cast<std::uint32_t>(i), l);
            out.put_u32(static_cast<std::uint32_t>(list.size()));
            out.put_u32s(list);
        }
    }
}

std::unique_ptr<HnswIndex> HnswIndex::load(ByteReader& in, std::shared_ptr<const EmbeddingStore> store,
                                           const IndexConfig& config) {
    std::unique_ptr<HnswIndex> index(new HnswIndex(Tag{}, std::move(store), config));
    const auto n = index->store().count();
    index->entry_ = in.get_u32();
    index->max_level_ = static_cast<int>(in.get_u32());
    if (index->entry_ >= n || index->max_level_ > kMaxLevel) {
        throw Error(ErrorCode::kMalformedRecord, "hnsw header out of range");
    }
    index->levels_.resize(n);
    index->upper_begin_.resize(n);
    index->layer0_.assign(n * index->stride0(), 0);
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto level = in.get_u8();
        if (level > index->max_level_) throw Error(ErrorCode::kMalformedRecord, "hnsw node level out of range");
        index->levels_[i] = level;
        index->upper_begin_[i] = static_cast<std::uint32_t>(index->upper_.size());
        index->upper_.resize(index->upper_.size() + level);
        for (int l = 0; l <= level; ++l) {
            const auto size = in.get_u32();
            if (size > index->cap(l)) throw Error(ErrorCode::kMalformedRecord, "hnsw neighbor list too long");
            std::vector<std::uint32_t> list(size);
            in.get_u32s(list);
            for (auto nb : list) {
                if (nb >= n) throw Error(ErrorCode::kMalformedRecord, "hnsw neighbor out of range");
            }
            index->set_links(i, l, list);
        }
    }
    return index;
}

}  // namespace kk::detail
