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

#include <algorithm>
#include <cstdint>
#include <vector>

#include "kk/catalog.hpp"
#include "kk/index/vector_index.hpp"

namespace kk::detail {

// Ordering shared by every index: higher score first, then lower id rank.
struct BetterNeighbor {
    const EmbeddingStore* store;
    bool operator()(const Neighbor& a, const Neighbor& b) const noexcept {
        if (a.score != b.score) return a.score > b.score;
        return store->id_rank(a.row) < store->id_rank(b.row);
    }
};

// Bounded selection of the k best neighbors; the heap front is the worst kept.
class TopK {
public:
    TopK(std::size_t k, const EmbeddingStore& store) : k_(k), better_{&store} { heap_.reserve(k + 1); }

    void push(std::uint32_t row, float score) {
        const Neighbor n{row, score};
        if (heap_.size() < k_) {
            heap_.push_back(n);
            std::push_heap(heap_.begin(), heap_.end(), better_);
        } else if (better_(n, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), better_);
            heap_.back() = n;
            std::push_heap(heap_.begin(), heap_.end(), better_);
        }
    }

    bool full() const noexcept { return heap_.size() == k_; }
    float worst_score() const noexcept { return heap_.front().score; }

    std::vector<Neighbor> take_sorted() && {
        std::sort(heap_.begin(), heap_.end(), better_);
        return std::move(heap_);
    }

private:
    std::size_t k_;
    BetterNeighbor better_;
    std::vector<Neighbor> heap_;
};

inline void sort_neighbors(std::vector<Neighbor>& v, const EmbeddingStore& store) {
    std::sort(v.begin(), v.end(), BetterNeighbor{&store});
}

}  // namespace kk::detail
