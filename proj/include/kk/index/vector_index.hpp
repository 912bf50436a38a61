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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kk/catalog.hpp"

namespace kk {

class ByteWriter;
class ByteReader;

enum class IndexKind : std::uint8_t { kFlat = 0, kIvf = 1, kHnsw = 2, kForest = 3 };

inline constexpr std::array<IndexKind, 4> kAllIndexKinds{IndexKind::kFlat, IndexKind::kIvf, IndexKind::kHnsw,
                                                         IndexKind::kForest};

std::string_view to_string(IndexKind kind) noexcept;
std::optional<IndexKind> parse_index_kind(std::string_view name) noexcept;

struct IndexConfig {
    IndexKind kind = IndexKind::kFlat;
    std::uint32_t ivf_nlist = 256;
    std::uint32_t ivf_nprobe = 16;
    std::uint32_t hnsw_M = 16;
    std::uint32_t hnsw_ef_construction = 200;
    std::uint32_t hnsw_ef_search = 100;
    std::uint32_t forest_n_trees = 8;
    std::uint32_t forest_search_k = 2000;
    std::uint32_t forest_leaf_size = 64;
    std::uint64_t seed = 42;

    /// Throws kConfigInvalid when a field is out of range for a store of
    /// `count` rows.
    void validate(std::size_t count) const;

    bool operator==(const IndexConfig&) const = default;
};

struct Neighbor {
    std::uint32_t row;
    float score;
};

struct Hit {
    std::string id;
    std::uint32_t row;
    float score;
};

struct SearchResult {
    std::vector<Hit> hits;  // score descending, ties by ascending id
    double elapsed_us = 0.0;
};

/// Immutable top-k cosine index over an EmbeddingStore. Queries never mutate
/// the index and may run concurrently.
class VectorIndex {
public:
    virtual ~VectorIndex() = default;
    VectorIndex(const VectorIndex&) = delete;
    VectorIndex& operator=(const VectorIndex&) = delete;

    IndexKind kind() const noexcept { return config_.kind; }
    const IndexConfig& config() const noexcept { return config_; }
    const EmbeddingStore& store() const noexcept { return *store_; }
    const std::shared_ptr<const EmbeddingStore>& store_ptr() const noexcept { return store_; }

    /// `q` is unit-norm with store().dim() entries and 1 <= k <= count.
    /// Results are ordered by (score desc, id asc).
    virtual std::vector<Neighbor> search_normalized(std::span<const float> q, std::size_t k) const = 0;

    /// Deterministic accounting of vectors plus index structure, in bytes.
    virtual std::size_t memory_footprint() const = 0;

    virtual void write_payload(ByteWriter& out) const = 0;

protected:
    VectorIndex(std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config)
        : store_(std::move(store)), config_(config) {}

private:
    std::shared_ptr<const EmbeddingStore> store_;
    IndexConfig config_;
};

std::unique_ptr<VectorIndex> build_index(std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config);

/// Validates and normalizes `q`, then searches. No timing, no id strings.
std::vector<Neighbor> search(const VectorIndex& index, std::span<const float> q, std::size_t k);

/// Timed query returning ids; elapsed covers the search alone.
SearchResult query(const VectorIndex& index, std::span<const float> q, std::size_t k);

/// Mean over queries of |approx top-k ∩ exact top-k| / k. `oracle` must be a
/// FLAT index over the same store content.
double recall_against_oracle(const VectorIndex& index, const VectorIndex& oracle,
                             std::span<const std::vector<float>> queries, std::size_t k);

inline std::size_t memory_footprint(const VectorIndex& index) { return index.memory_footprint(); }

/// KKIX serialization. The store itself is not written; `load_index` checks
/// the supplied store against the recorded content hash.
std::string save_index(const VectorIndex& index);
std::unique_ptr<VectorIndex> load_index(std::string_view bytes, std::shared_ptr<const EmbeddingStore> store);

}  // namespace kk
