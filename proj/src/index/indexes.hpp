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

#include <memory>
#include <vector>

#include "kk/binary_io.hpp"
#include "kk/index/vector_index.hpp"

namespace kk::detail {

class FlatIndex final : public VectorIndex {
public:
    FlatIndex(std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config);
    static std::unique_ptr<FlatIndex> load(ByteReader& in, std::shared_ptr<const EmbeddingStore> store,
                                           const IndexConfig& config);

    std::vector<Neighbor> search_normalized(std::span<const float> q, std::size_t k) const override;
    std::size_t memory_footprint() const override;
    void write_payload(ByteWriter& out) const override;
};

class IvfIndex final : public VectorIndex {
public:
    IvfIndex(std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config);
    static std::unique_ptr<IvfIndex> load(ByteReader& in, std::shared_ptr<const EmbeddingStore> store,
                                          const IndexConfig& config);

    std::vector<Neighbor> search_normalized(std::span<const float> q, std::size_t k) const override;
    std::size_t memory_footprint() const override;
    void write_payload(ByteWriter& out) const override;

    std::size_t list_size(std::size_t list) const noexcept { return offsets_[list + 1] - offsets_[list]; }

private:
    struct Tag {};
    IvfIndex(Tag, std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config);
    void train();
    void build_lists(const std::vector<std::uint32_t>& assignment);

    std::vector<float> centroids_;         // nlist x dim, unit-norm
    std::vector<std::size_t> offsets_;     // nlist + 1
    std::vector<std::uint32_t> list_rows_; // rows grouped by list, ascending within a list
    std::vector<float> list_data_;         // vectors in list_rows_ order
};

class HnswIndex final : public VectorIndex {
public:
    HnswIndex(std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config);
    static std::unique_ptr<HnswIndex> load(ByteReader& in, std::shared_ptr<const EmbeddingStore> store,
                                           const IndexConfig& config);

    std::vector<Neighbor> search_normalized(std::span<const float> q, std::size_t k) const override;
    std::size_t memory_footprint() const override;
    void write_payload(ByteWriter& out) const override;

    int max_level() const noexcept { return max_level_; }
    std::span<const std::uint32_t> neighbors(std::uint32_t node, int level) const;

private:
    struct Tag {};
    HnswIndex(Tag, std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config);

    std::size_t cap(int level) const noexcept { return level == 0 ? 2 * config().hnsw_M : config().hnsw_M; }
    std::size_t stride0() const noexcept { return 2 * config().hnsw_M + 1; }
    void add_link(std::uint32_t node, int level, std::uint32_t target);
    void set_links(std::uint32_t node, int level, std::span<const std::uint32_t> targets);
    float sim(std::uint32_t a, const float* q) const;
    std::uint32_t greedy(std::span<const float> q, std::uint32_t entry, int level) const;
    std::vector<Neighbor> search_layer(std::span<const float> q, std::uint32_t entry, std::size_t ef,
                                       int level) const;
    void insert(std::uint32_t node, int level);
    void shrink(std::uint32_t node, int level);

    std::vector<std::uint8_t> levels_;
    std::vector<std::uint32_t> layer0_;  // per node: count, then up to 2M ids
    std::vector<std::uint32_t> upper_begin_;  // index into upper_ per node with level >= 1
    std::vector<std::vector<std::uint32_t>> upper_;
    std::uint32_t entry_ = 0;
    int max_level_ = -1;
};

class ForestIndex final : public VectorIndex {
public:
    ForestIndex(std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config);
    static std::unique_ptr<ForestIndex> load(ByteReader& in, std::shared_ptr<const EmbeddingStore> store,
                                             const IndexConfig& config);

    std::vector<Neighbor> search_normalized(std::span<const float> q, std::size_t k) const override;
    std::size_t memory_footprint() const override;
    void write_payload(ByteWriter& out) const override;

    std::size_t node_count() const noexcept { return nodes_.size(); }

private:
    struct Tag {};
    ForestIndex(Tag, std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config);

    struct Node {
        std::int32_t left = -1;   // -1 marks a leaf
        std::int32_t right = -1;
        std::uint32_t begin = 0;  // internal: offset into normals_; leaf: offset into leaf_rows_
        std::uint32_t size = 0;   // leaf row count
        float offset = 0.0f;
    };

    std::uint32_t build_tree(std::vector<std::uint32_t>& rows, std::uint64_t seed);

    std::vector<Node> nodes_;
    std::vector<std::uint32_t> roots_;
    std::vector<float> normals_;
    std::vector<std::uint32_t> leaf_rows_;
};

}  // namespace kk::detail
