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

#include <array>

#include "indexes.hpp"
#include "kk/simd/kernels.hpp"
#include "topk.hpp"

namespace kk::detail {

namespace {
constexpr std::size_t kBlockRows = 256;
}

FlatIndex::FlatIndex(std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config)
    : VectorIndex(std::move(store), config) {}

std::unique_ptr<FlatIndex> FlatIndex::load(ByteReader&, std::shared_ptr<const EmbeddingStore> store,
                                           const IndexConfig& config) {
    return std::make_unique<FlatIndex>(std::move(store), config);
}

std::vector<Neighbor> FlatIndex::search_normalized(std::span<const float> q, std::size_t k) const {
    const auto& s = store();
    const auto& kernels = simd::active();
    const std::size_t n = s.count();
    const std::size_t dim = s.dim();
    TopK top(k, s);
    std::array<float, kBlockRows> scores{};
    for (std::size_t begin = 0; begin < n; begin += kBlockRows) {
        const std::size_t rows = std::min(kBlockRows, n - begin);
        kernels.dot_rows(q.data(), s.data().data() + begin * dim, rows, dim, scores.data());
        for (std::size_t i = 0; i < rows; ++i) {
            if (top.full() && scores[i] < top.worst_score()) continue;
            top.push(static_cast<std::uint32_t>(begin + i), scores[i]);
        }
    }
    return std::move(top).take_sorted();
}

std::size_t FlatIndex::memory_footprint() const {
    const auto& s = store();
    return s.count() * s.dim() * sizeof(float) + s.id_table_bytes();
}

void FlatIndex::write_payload(ByteWriter&) const {}

}  // namespace kk::detail
