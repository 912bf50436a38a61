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
#include <numeric>
#include <random>

#include "indexes.hpp"
#include "kk/error.hpp"
#include "kk/simd/kernels.hpp"
#include "topk.hpp"

namespace kk::detail {

namespace {

constexpr int kKmeansIterations = 25;
// Training sample cap per centroid; larger stores are subsampled for k-means
// and every row is assigned afterwards.
constexpr std::size_t kMaxPointsPerCentroid = 256;

std::uint32_t nearest_centroid(const float* v, const std::vector<float>& centroids, std::size_t nlist,
                               std::size_t dim, std::vector<float>& scratch, float* best_score) {
    simd::active().dot_rows(v, centroids.data(), nlist, dim, scratch.data());
    std::uint32_t best = 0;
    for (std::uint32_t c = 1; c < nlist; ++c) {
        if (scratch[c] > scratch[best]) best = c;
    }
    if (best_score) *best_score = scratch[best];
    return best;
}

}  // namespace

IvfIndex::IvfIndex(std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config)
    : VectorIndex(std::move(store), config) {
    train();
    const auto& s = this->store();
    const std::size_t nlist = config.ivf_nlist;
    std::vector<float> scratch(nlist);
    std::vector<std::uint32_t> assignment(s.count());
    for (std::size_t r = 0; r < s.count(); ++r) {
        assignment[r] = nearest_centroid(s.row(r).data(), centroids_, nlist, s.dim(), scratch, nullptr);
    }
    build_lists(assignment);
}

IvfIndex::IvfIndex(Tag, std::shared_ptr<const EmbeddingStore> store, const IndexConfig& config)
    : VectorIndex(std::move(store), config) {}

void IvfIndex::train() {
    const auto& s = store();
    const std::size_t dim = s.dim();
    const std::size_t nlist = config().ivf_nlist;
    std::mt19937_64 rng(config().seed);

    std::vector<std::uint32_t> pool(s.count());
    std::iota(pool.begin(), pool.end(), 0u);
    // Partial Fisher-Yates: the first nlist entries seed the centroids, the
    // first `sample` entries form the training set.
    const std::size_t sample = std::min(s.count(), nlist * kMaxPointsPerCentroid);
    for (std::size_t i = 0; i < sample; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(sample);

    centroids_.assign(nlist * dim, 0.0f);
    for (std::size_t c = 0; c < nlist; ++c) {
        const auto row = s.row(pool[c]);
        std::copy(row.begin(), row.end(), centroids_.begin() + c * dim);
    }

    std::vector<float> scratch(nlist);
    std::vector<std::uint32_t> assign(sample);
    std::vector<float> sims(sample);
    auto assign_all = [&] {
        std::size_t changed = 0;
        for (std::size_t i = 0; i < sample; ++i) {
            const auto c = nearest_centroid(s.row(pool[i]).data(), centroids_, nlist, dim, scratch, &sims[i]);
            changed += c != assign[i] ? 1 : 0;
            assign[i] = c;
        }
        return changed;
    };
    assign_all();

    const auto& kernels = simd::active();
    std::vector<float> sums(nlist * dim);
    std::vector<std::size_t> counts(nlist);
    for (int iter = 0; iter < kKmeansIterations; ++iter) {
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < sample; ++i) ++counts[assign[i]];

        // Re-seed empty clusters from the largest cluster's farthest member.
        for (std::size_t c = 0; c < nlist; ++c) {
            if (counts[c] != 0) continue;
            const auto largest = static_cast<std::uint32_t>(
                std::max_element(counts.begin(), counts.end()) - counts.begin());
            std::size_t far = sample;
            for (std::size_t i = 0; i < sample; ++i) {
                if (assign[i] == largest && (far == sample || sims[i] < sims[far])) far = i;
            }
            if (far == sample || counts[largest] < 2) break;
            assign[far] = static_cast<std::uint32_t>(c);
            sims[far] = 1.0f;
            --counts[largest];
            ++counts[c];
        }

        std::fill(sums.begin(), sums.end(), 0.0f);
        for (std::size_t i = 0; i < sample; ++i) {
            kernels.axpy(1.0f, s.row(pool[i]).data(), sums.data() + assign[i] * dim, dim);
        }
        for (std::size_t c = 0; c < nlist; ++c) {
            float* sum = sums.data() + c * dim;
            const float sq = kernels.norm_sq(sum, dim);
            if (!(sq > 0.0f)) continue;  // keep the previous centroid
            const float inv = 1.0f / std::sqrt(sq);
            for (std::size_t d = 0; d < dim; ++d) centroids_[c * dim + d] = sum[d] * inv;
        }
        if (assign_all() == 0) break;
    }
}

void IvfIndex::build_lists(const std::vector<std::uint32_t>& assignment) {
    const auto& s = store();
    const std::size_t nlist = config().ivf_nlist;
    offsets_.assign(nlist + 1, 0);
    for (auto c : assignment) ++offsets_[c + 1];
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    list_rows_.resize(s.count());
    auto cursor = offsets_;
    for (std::uint32_t r = 0; r < assignment.size(); ++r) list_rows_[cursor[assignment[r]]++] = r;

    list_data_.resize(s.count() * s.dim());
    for (std::size_t i = 0; i < list_rows_.size(); ++i) {
        const auto row = s.row(list_rows_[i]);
        std::copy(row.begin(), row.end(), list_data_.begin() + i * s.dim());
    }
}

std::vector<Neighbor> IvfIndex::search_normalized(std::span<const float> q, std::size_t k) const {
    const auto& s = store();
    const auto& kernels = simd::active();
    const std::size_t nlist = config().ivf_nlist;
    const std::size_t nprobe = std::min<std::size_t>(config().ivf_nprobe, nlist);
    const std::size_t dim = s.dim();

    std::vector<float> centroid_scores(nlist);
    kernels.dot_rows(q.data(), centroids_.data(), nlist, dim, centroid_scores.data());
    std::vector<std::uint32_t> order(nlist);
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nprobe), order.end(),
                      [&](auto a, auto b) {
                          if (centroid_scores[a] != centroid_scores[b]) return centroid_scores[a] > centroid_scores[b];
                          return a < b;
                      });

    TopK top(k, s);
    std::vector<float> scores;
    for (std::size_t p = 0; p < nprobe; ++p) {
        const auto list = order[p];
        const std::size_t begin = offsets_[list];
        const std::size_t size = offsets_[list + 1] - begin;
        scores.resize(size);
        kernels.dot_rows(q.data(), list_data_.data() + begin * dim, size, dim, scores.data());
        for (std::size_t i = 0; i < size; ++i) {
            if (top.full() && scores[i] < top.worst_score()) continue;
            top.push(list_rows_[begin + i], scores[i]);
        }
    }
    return std::move(top).take_sorted();
}

std::size_t IvfIndex::memory_footprint() const {
    const auto& s = store();
    return list_data_.size() * sizeof(float) + centroids_.size() * sizeof(float) +
           list_rows_.size() * sizeof(std::uint32_t) + offsets_.size() * sizeof(std::uint64_t) + s.id_table_bytes();
}

void IvfIndex::write_payload(ByteWriter& out) const {
    out.put_f32s(centroids_);
    for (std::size_t c = 0; c + 1 < offsets_.size(); ++c) out.put_u32(static_cast<std::uint32_t>(list_size(c)));
    out.put_u32s(list_rows_);
}

std::unique_ptr<IvfIndex> IvfIndex::load(ByteReader& in, std::shared_ptr<const EmbeddingStore> store,
                                         const IndexConfig& config) {
    std::unique_ptr<IvfIndex> index(new IvfIndex(Tag{}, std::move(store), config));
    const auto& s = index->store();
    const std::size_t nlist = config.ivf_nlist;
    index->centroids_.resize(nlist * s.dim());
    in.get_f32s(index->centroids_);

    std::vector<std::uint32_t> sizes(nlist);
    in.get_u32s(sizes);
    std::vector<std::uint32_t> rows(s.count());
    in.get_u32s(rows);
    std::vector<std::uint32_t> assignment(s.count(), static_cast<std::uint32_t>(nlist));
    std::size_t pos = 0;
    for (std::uint32_t c = 0; c < nlist; ++c) {
        for (std::uint32_t i = 0; i < sizes[c]; ++i, ++pos) {
            if (pos >= rows.size() || rows[pos] >= s.count() || assignment[rows[pos]] != nlist) {
                throw Error(ErrorCode::kMalformedRecord, "inverted lists do not partition the store");
            }
            assignment[rows[pos]] = c;
        }
    }
    if (pos != s.count()) throw Error(ErrorCode::kMalformedRecord, "inverted lists do not cover the store");
    index->build_lists(assignment);
    return index;
}

}  // namespace kk::detail
