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
#include <limits>
#include <queue>
#include <random>

#include "indexes.hpp"
#include "kk/error.hpp"
#include "kk/simd/kernels.hpp"
#include "topk.hpp"
#include "visited.hpp"

namespace kk::detail {

namespace {

constexpr int kSplitAttempts = 8;

struct Pending {
    std::uint32_t node;
    std::size_t lo;
    std::size_t hi;
};

}  // namespace

ForestIndex::ForestIndex(Tag, std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config)
    : VectorIndex(std::move(store), config) {}

ForestIndex::ForestIndex(std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config)
    : VectorIndex(std::move(store), config) {
    const auto n = this->store().count();
    std::vector<std::uint32_t> rows(n);
    for (std::uint32_t t = 0; t < config.forest_n_trees; ++t) {
        for (std::uint32_t i = 0; i < n; ++i) rows[i] = i;
        const std::uint64_t tree_seed = config.seed ^ ((t + 1) * 0x9E3779B97F4A7C15ull);
        roots_.push_back(build_tree(rows, tree_seed));
    }
}

std::uint32_t ForestIndex::build_tree(std::vector<std::uint32_t>& rows, std::uint64_t seed) {
    const auto& s = store();
    const auto& kernels = simd::active();
    const std::size_t dim = s.dim();
    const std::size_t leaf_cap = config().forest_leaf_size;
    std::mt19937_64 rng(seed);
    std::vector<float> normal(dim);

    const auto root = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    std::vector<Pending> stack{{root, 0, rows.size()}};
    while (!stack.empty()) {
        const auto [id, lo, hi] = stack.back();
        stack.pop_back();

        bool split = false;
        if (hi - lo > leaf_cap) {
            std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
            for (int attempt = 0; attempt < kSplitAttempts && !split; ++attempt) {
                const auto ia = pick(rng);
                auto ib = pick(rng);
                while (ib == ia) ib = pick(rng);
                const auto a = s.row(rows[ia]);
                const auto b = s.row(rows[ib]);
                // hyperplane bisecting a and b: <a - b, x> = <a - b, (a + b) / 2>
                for (std::size_t d = 0; d < dim; ++d) normal[d] = a[d] - b[d];
                const float sq = kernels.norm_sq(normal.data(), dim);
                if (!(sq > 0.0f)) continue;
                const float inv = 1.0f / std::sqrt(sq);
                float offset = 0.0f;
                for (std::size_t d = 0; d < dim; ++d) {
                    normal[d] *= inv;
                    offset += normal[d] * 0.5f * (a[d] + b[d]);
                }
                auto mid = std::partition(rows.begin() + lo, rows.begin() + hi, [&](std::uint32_t r) {
                    return kernels.dot(normal.data(), s.row(r).data(), dim) > offset;
                });
                const auto m = static_cast<std::size_t>(mid - rows.begin());
                if (m == lo || m == hi) continue;

                const auto left = static_cast<std::int32_t>(nodes_.size());
                nodes_.emplace_back();
                const auto right = static_cast<std::int32_t>(nodes_.size());
                nodes_.emplace_back();
                auto& node = nodes_[id];
                node.left = left;
                node.right = right;
                node.offset = offset;
                node.begin = static_cast<std::uint32_t>(normals_.size());
                normals_.insert(normals_.end(), normal.begin(), normal.end());
                stack.push_back({static_cast<std::uint32_t>(right), m, hi});
                stack.push_back({static_cast<std::uint32_t>(left), lo, m});
                split = true;
            }
        }
        if (!split) {
            // Small enough, or every attempt produced an empty side (duplicates).
            auto& node = nodes_[id];
            node.begin = static_cast<std::uint32_t>(leaf_rows_.size());
            node.size = static_cast<std::uint32_t>(hi - lo);
            std::sort(rows.begin() + lo, rows.begin() + hi);
            leaf_rows_.insert(leaf_rows_.end(), rows.begin() + lo, rows.begin() + hi);
        }
    }
    return root;
}

std::vector<Neighbor> ForestIndex::search_normalized(std::span<const float> q, std::size_t k) const {
    const auto& s = store();
    const auto& kernels = simd::active();
    const std::size_t dim = s.dim();
    const std::size_t budget = std::max<std::size_t>(config().forest_search_k, k);

    using Entry = std::pair<float, std::uint32_t>;  // (priority, node)
    auto cmp = [](const Entry& a, const Entry& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> frontier(cmp);
    for (auto r : roots_) frontier.push({std::numeric_limits<float>::infinity(), r});

    auto& seen = VisitedSet::local();
    seen.reset(s.count());
    std::vector<std::uint32_t> candidates;
    candidates.reserve(budget + config().forest_leaf_size);
    while (!frontier.empty() && candidates.size() < budget) {
        const auto [priority, id] = frontier.top();
        frontier.pop();
        const auto& node = nodes_[id];
        if (node.left < 0) {
            for (std::uint32_t i = 0; i < node.size; ++i) {
                const auto row = leaf_rows_[node.begin + i];
                if (!seen.test_and_set(row)) candidates.push_back(row);
            }
            continue;
        }
        const float margin = kernels.dot(normals_.data() + node.begin, q.data(), dim) - node.offset;
        frontier.push({std::min(priority, margin), static_cast<std::uint32_t>(node.left)});
        frontier.push({std::min(priority, -margin), static_cast<std::uint32_t>(node.right)});
    }

    TopK top(k, s);
    for (auto row : candidates) top.push(row, kernels.dot(q.data(), s.row(row).data(), dim));
    return std::move(top).take_sorted();
}

std::size_t ForestIndex::memory_footprint() const {
    const auto& s = store();
    constexpr std::size_t kNodeHeader = 2 * sizeof(std::int32_t) + sizeof(float);
    return s.count() * s.dim() * sizeof(float) + nodes_.size() * kNodeHeader + normals_.size() * sizeof(float) +
           leaf_rows_.size() * sizeof(std::uint32_t) + roots_.size() * sizeof(std::uint32_t) + s.id_table_bytes();
}

void ForestIndex::write_payload(ByteWriter& out) const {
    out.put_u32s(roots_);
    out.put_u32(static_cast<std::uint32_t>(nodes_.size()));
    for (const auto& node : nodes_) {
        out.put_u32(static_cast<std::uint32_t>(node.left));
        out.put_u32(static_cast<std::uint32_t>(node.right));
        out.put_u32(node.begin);
        out.put_u32(node.size);
        out.put_f32(node.offset);
    }
    out.put_u32(static_cast<std::uint32_t>(normals_.size()));
    out.put_f32s(normals_);
    out.put_u32(static_cast<std::uint32_t>(leaf_rows_.size()));
    out.put_u32s(leaf_rows_);
}

std::unique_ptr<ForestIndex> ForestIndex::load(ByteReader& in, std::shared_ptr<const EmbeddingStore> store,
                                               const IndexConfig& config) {
    std::unique_ptr<ForestIndex> index(new ForestIndex(Tag{}, std::move(store), config));
    auto bad = [](const char* what) { return Error(ErrorCode::kMalformedRecord, what); };
    const auto& s = index->store();
    index->roots_.resize(config.forest_n_trees);
    in.get_u32s(index->roots_);

    const auto node_count = in.get_u32();
    if (std::size_t{node_count} * 20 > in.remaining()) {
        throw Error(ErrorCode::kTruncatedInput, "forest node table is truncated");
    }
    index->nodes_.resize(node_count);
    for (auto& node : index->nodes_) {
        node.left = static_cast<std::int32_t>(in.get_u32());
        node.right = static_cast<std::int32_t>(in.get_u32());
        node.begin = in.get_u32();
        node.size = in.get_u32();
        node.offset = in.get_f32();
    }
    const auto normal_count = in.get_u32();
    if (std::size_t{normal_count} * sizeof(float) > in.remaining()) {
        throw Error(ErrorCode::kTruncatedInput, "forest normals are truncated");
    }
    index->normals_.resize(normal_count);
    in.get_f32s(index->normals_);
    const auto leaf_count = in.get_u32();
    if (std::size_t{leaf_count} * sizeof(std::uint32_t) > in.remaining()) {
        throw Error(ErrorCode::kTruncatedInput, "forest leaves are truncated");
    }
    index->leaf_rows_.resize(leaf_count);
    in.get_u32s(index->leaf_rows_);

    for (auto r : index->roots_) {
        if (r >= node_count) throw bad("forest root out of range");
    }
    for (const auto& node : index->nodes_) {
        if (node.left < 0) {
            if (std::size_t{node.begin} + node.size > leaf_count) throw bad("forest leaf out of range");
        } else if (static_cast<std::uint32_t>(node.left) >= node_count ||
                   static_cast<std::uint32_t>(node.right) >= node_count ||
                   std::size_t{node.begin} + s.dim() > normal_count) {
            throw bad("forest node out of range");
        }
    }
    for (auto row : index->leaf_rows_) {
        if (row >= s.count()) throw bad("forest leaf row out of range");
    }
    return index;
}

}  // namespace kk::detail
