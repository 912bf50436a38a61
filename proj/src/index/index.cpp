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
#include <chrono>
#include <cmath>
#include <unordered_set>

#include "indexes.hpp"
#include "kk/error.hpp"
#include "kk/simd/kernels.hpp"

namespace kk {

namespace {

constexpr std::string_view kIndexMagic = "KKIX";
constexpr std::uint32_t kIndexVersion = 1;

void invalid(const std::string& msg) { throw Error(ErrorCode::kConfigInvalid, msg); }

std::vector<float> normalized_query(const VectorIndex& index, std::span<const float> q, std::size_t k) {
    const auto& store = index.store();
    if (q.size() != store.dim()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "query has " + std::to_string(q.size()) + " values, index dim is " + std::to_string(store.dim()));
    }
    if (k < 1 || k > store.count()) {
        throw Error(ErrorCode::kKOutOfRange, "k=" + std::to_string(k) + " with " + std::to_string(store.count()) +
                                                 " stored vectors");
    }
    const float sq = simd::norm_sq(q);
    if (!(sq > 0.0f) || !std::isfinite(sq)) throw Error(ErrorCode::kZeroVector, "query cannot be normalized");
    const float inv = 1.0f / std::sqrt(sq);
    std::vector<float> out(q.begin(), q.end());
    for (auto& v : out) v *= inv;
    return out;
}

void write_config(ByteWriter& w, const IndexConfig& c) {
    for (auto v : {c.ivf_nlist, c.ivf_nprobe, c.hnsw_M, c.hnsw_ef_construction, c.hnsw_ef_search, c.forest_n_trees,
                   c.forest_search_k, c.forest_leaf_size}) {
        w.put_u32(v);
    }
    w.put_u64(c.seed);
}

IndexConfig read_config(ByteReader& r, IndexKind kind) {
    IndexConfig c;
    c.kind = kind;
    for (auto* v : {&c.ivf_nlist, &c.ivf_nprobe, &c.hnsw_M, &c.hnsw_ef_construction, &c.hnsw_ef_search,
                    &c.forest_n_trees, &c.forest_search_k, &c.forest_leaf_size}) {
        *v = r.get_u32();
    }
    c.seed = r.get_u64();
    return c;
}

}  // namespace

std::string_view to_string(IndexKind kind) noexcept {
    switch (kind) {
        case IndexKind::kFlat: return "FLAT";
        case IndexKind::kIvf: return "IVF";
        case IndexKind::kHnsw: return "HNSW";
        case IndexKind::kForest: return "FOREST";
    }
    return "UNKNOWN";
}

std::optional<IndexKind> parse_index_kind(std::string_view name) noexcept {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (auto kind : kAllIndexKinds) {
        if (upper == to_string(kind)) return kind;
    }
    return std::nullopt;
}

void IndexConfig::validate(std::size_t count) const {
    switch (kind) {
        case IndexKind::kFlat: break;
        case IndexKind::kIvf:
            if (ivf_nlist < 1) invalid("ivf_nlist must be >= 1");
            if (ivf_nprobe < 1 || ivf_nprobe > ivf_nlist) invalid("ivf_nprobe must be in [1, ivf_nlist]");
            if (ivf_nlist > count) invalid("ivf_nlist exceeds the number of stored vectors");
            break;
        case IndexKind::kHnsw:
            if (hnsw_M < 2) invalid("hnsw_M must be >= 2");
            if (hnsw_ef_construction < 1 || hnsw_ef_search < 1) invalid("hnsw ef values must be >= 1");
            break;
        case IndexKind::kForest:
            if (forest_n_trees < 1) invalid("forest_n_trees must be >= 1");
            if (forest_search_k < 1) invalid("forest_search_k must be >= 1");
            if (forest_leaf_size < 1) invalid("forest_leaf_size must be >= 1");
            break;
        default: invalid("unknown index kind");
    }
}

std::unique_ptr<VectorIndex> build_index(std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config) {
    if (!store || store->count() == 0) throw Error(ErrorCode::kEmptyStore, "cannot index an empty store");
    config.validate(store->count());
    switch (config.kind) {
        case IndexKind::kFlat: return std::make_unique<detail::FlatIndex>(std::move(store), config);
        case IndexKind::kIvf: return std::make_unique<detail::IvfIndex>(std::move(store), config);
        case IndexKind::kHnsw: return std::make_unique<detail::HnswIndex>(std::move(store), config);
        case IndexKind::kForest: return std::make_unique<detail::ForestIndex>(std::move(store), config);
    }
    invalid("unknown index kind");
    return nullptr;
}

std::vector<Neighbor> search(const VectorIndex& index, std::span<const float> q, std::size_t k) {
    const auto qn = normalized_query(index, q, k);
    return index.search_normalized(qn, k);
}

SearchResult query(const VectorIndex& index, std::span<const float> q, std::size_t k) {
    const auto qn = normalized_query(index, q, k);
    const auto start = std::chrono::steady_clock::now();
    auto found = index.search_normalized(qn, k);
    const auto stop = std::chrono::steady_clock::now();

    SearchResult out;
    out.elapsed_us = std::chrono::duration<double, std::micro>(stop - start).count();
    out.hits.reserve(found.size());
    for (const auto& n : found) out.hits.push_back(Hit{index.store().id(n.row), n.row, n.score});
    return out;
}

double recall_against_oracle(const VectorIndex& index, const VectorIndex& oracle,
                             std::span<const std::vector<float>> queries, std::size_t k) {
    if (oracle.kind() != IndexKind::kFlat) throw Error(ErrorCode::kStoreMismatch, "oracle must be a FLAT index");
    if (oracle.store().content_hash() != index.store().content_hash()) {
        throw Error(ErrorCode::kStoreMismatch, "index and oracle were built over different stores");
    }
    if (queries.empty()) return 1.0;
    double total = 0.0;
    for (const auto& q : queries) {
        const auto truth = search(oracle, q, k);
        const auto approx = search(index, q, k);
        std::unordered_set<std::uint32_t> exact;
        for (const auto& n : truth) exact.insert(n.row);
        std::size_t hit = 0;
        for (const auto& n : approx) hit += exact.contains(n.row) ? 1 : 0;
        total += static_cast<double>(hit) / static_cast<double>(k);
    }
    return total / static_cast<double>(queries.size());
}

std::string save_index(const VectorIndex& index) {
    ByteWriter w;
    w.put_bytes(kIndexMagic);
    w.put_u32(kIndexVersion);
    w.put_u8(static_cast<std::uint8_t>(index.kind()));
    const auto& hash = index.store().content_hash();
    w.put_bytes(std::string_view(reinterpret_cast<const char*>(hash.data()), hash.size()));
    write_config(w, index.config());
    index.write_payload(w);
    return std::move(w).bytes();
}

std::unique_ptr<VectorIndex> load_index(std::string_view bytes, std::shared_ptr<const EmbeddingStore> store) {
    if (!store) throw Error(ErrorCode::kEmptyStore, "no store supplied");
    ByteReader r(bytes);
    if (r.get_bytes(4) != kIndexMagic) throw Error(ErrorCode::kMalformedRecord, "bad index magic");
    const auto version = r.get_u32();
    if (version != kIndexVersion) throw Error(ErrorCode::kVersionMismatch, "index version " + std::to_string(version));
    const auto tag = r.get_u8();
    if (tag > static_cast<std::uint8_t>(IndexKind::kForest)) {
        throw Error(ErrorCode::kMalformedRecord, "unknown index kind tag " + std::to_string(tag));
    }
    const auto kind = static_cast<IndexKind>(tag);
    const auto hash = r.get_bytes(32);
    const auto& expected = store->content_hash();
    if (!std::equal(hash.begin(), hash.end(), reinterpret_cast<const char*>(expected.data()))) {
        throw Error(ErrorCode::kHashMismatch, "index was built over store " +
                                                  to_hex({reinterpret_cast<const std::uint8_t*>(hash.data()), 32}) +
                                                  ", got " + to_hex(expected));
    }
    const auto config = read_config(r, kind);
    config.validate(store->count());

    std::unique_ptr<VectorIndex> out;
    switch (kind) {
        case IndexKind::kFlat: out = detail::FlatIndex::load(r, std::move(store), config); break;
        case IndexKind::kIvf: out = detail::IvfIndex::load(r, std::move(store), config); break;
        case IndexKind::kHnsw: out = detail::HnswIndex::load(r, std::move(store), config); break;
        case IndexKind::kForest: out = detail::ForestIndex::load(r, std::move(store), config); break;
    }
    if (!r.at_end()) throw Error(ErrorCode::kMalformedRecord, "trailing bytes after index payload");
    return out;
}

}  // namespace kk
