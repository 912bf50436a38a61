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

#include "kk/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <random>

namespace kk::synthetic {

namespace {

void normalize(std::span<float> v) {
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
    for (float& x : v) x = static_cast<float>(x * inv);
}

std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    std::vector<float> v(dim);
    for (auto& x : v) x = gauss(rng);
    normalize(v);
    return v;
}

}  // namespace

std::vector<float> unit_gaussian(std::size_t n, std::size_t dim, std::uint64_t seed, double decay) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    std::vector<float> scale(dim, 1.0f);
    if (decay > 0.0) {
        for (std::size_t i = 0; i < dim; ++i) scale[i] = static_cast<float>(std::pow(double(i + 1), -decay / 2));
    }
    std::vector<float> out(n * dim);
    for (std::size_t r = 0; r < n; ++r) {
        auto row = std::span<float>(out).subspan(r * dim, dim);
        for (std::size_t i = 0; i < dim; ++i) row[i] = gauss(rng) * scale[i];
        normalize(row);
    }
    return out;
}

std::vector<std::string> sequential_ids(std::size_t n, const std::string& prefix) {
    std::vector<std::string> ids;
    ids.reserve(n);
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%07zu", i);
        ids.push_back(prefix + buf);
    }
    return ids;
}

std::shared_ptr<const EmbeddingStore> gaussian_store(std::size_t n, std::size_t dim, std::uint64_t seed,
                                                    double decay) {
    return std::make_shared<const EmbeddingStore>(dim, sequential_ids(n), unit_gaussian(n, dim, seed, decay));
}

std::vector<std::vector<float>> gaussian_queries(std::size_t n, std::size_t dim, std::uint64_t seed,
                                                 double decay) {
    const auto flat = unit_gaussian(n, dim, seed, decay);
    std::vector<std::vector<float>> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i].assign(flat.begin() + i * dim, flat.begin() + (i + 1) * dim);
    return out;
}

StyleClusterData style_clusters(const StyleClusterSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    std::vector<std::vector<float>> dirs;
    const std::size_t free_clusters = spec.antipodal ? (spec.clusters + 1) / 2 : spec.clusters;
    for (std::size_t c = 0; c < free_clusters + kNumCategories; ++c) dirs.push_back(random_unit(rng, spec.dim));
    if (dirs.size() <= spec.dim) {
        // Gram-Schmidt in double
        std::vector<std::vector<double>> basis;
        for (auto& v : dirs) {
            std::vector<double> u(v.begin(), v.end());
            for (const auto& b : basis) {
                double p = 0.0;
                for (std::size_t d = 0; d < u.size(); ++d) p += u[d] * b[d];
                for (std::size_t d = 0; d < u.size(); ++d) u[d] -= p * b[d];
            }
            double n = 0.0;
            for (double x : u) n += x * x;
            n = std::sqrt(n);
            for (double& x : u) x /= n;
            basis.push_back(u);
            std::copy(u.begin(), u.end(), v.begin());
        }
    }
    std::vector<std::vector<float>> cluster_dirs;
    for (std::size_t k = 0; k < spec.clusters; ++k) {
        if (!spec.antipodal) {
            cluster_dirs.push_back(dirs[k]);
            continue;
        }
        auto v = dirs[k / 2];
        if (k % 2 == 1) {
            for (float& x : v) x = -x;
        }
        cluster_dirs.push_back(std::move(v));
    }
    const auto cat_begin = dirs.begin() + static_cast<std::ptrdiff_t>(free_clusters);
    const std::vector<std::vector<float>> category_dirs(cat_begin, dirs.end());

    StyleClusterData out;
    out.embeddings.dim = static_cast<std::uint32_t>(spec.dim);
    const float noise_scale = spec.noise / std::sqrt(static_cast<float>(spec.dim));
    char id[64];
    for (std::size_t k = 0; k < spec.clusters; ++k) {
        for (std::size_t c = 0; c < kNumCategories; ++c) {
            for (std::size_t j = 0; j < spec.items_per_cluster_category; ++j) {
                std::snprintf(id, sizeof id, "s%02zu-%s-%02zu", k, kCategoryNames[c].data(), j);
                std::vector<float> v(spec.dim);
                for (std::size_t d = 0; d < spec.dim; ++d) {
                    v[d] = cluster_dirs[k][d] + spec.category_weight * category_dirs[c][d] + noise_scale * gauss(rng);
                }
                normalize(v);
                out.records.push_back({id, std::string(kCategoryNames[c]), std::string("img/") + id + ".svg"});
                out.embeddings.ids.emplace_back(id);
                out.embeddings.data.insert(out.embeddings.data.end(), v.begin(), v.end());
                out.cluster_of.push_back(k);
                out.category_of.push_back(static_cast<Category>(c));
            }
        }
    }
    return out;
}

StyleOutfits style_outfits(const StyleClusterSpec& spec, std::size_t held_out, std::size_t min_items,
                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    StyleOutfits out;
    const std::size_t first_held = spec.items_per_cluster_category - std::min(held_out, spec.items_per_cluster_category);
    const std::size_t lo = std::clamp<std::size_t>(min_items, 1, kNumCategories);
    std::uniform_int_distribution<std::size_t> size_pick(lo, kNumCategories);
    char id[64];
    for (std::size_t k = 0; k < spec.clusters; ++k) {
        for (std::size_t j = 0; j < spec.items_per_cluster_category; ++j) {
            std::vector<std::size_t> cats(kNumCategories);
            for (std::size_t c = 0; c < kNumCategories; ++c) cats[c] = c;
            std::shuffle(cats.begin(), cats.end(), rng);
            cats.resize(size_pick(rng));
            std::sort(cats.begin(), cats.end());
            OutfitRecord r;
            std::snprintf(id, sizeof id, "o%02zu-%02zu", k, j);
            r.outfit_id = id;
            for (auto c : cats) {
                std::snprintf(id, sizeof id, "s%02zu-%s-%02zu", k, kCategoryNames[c].data(), j);
                r.items.emplace_back(id, std::string(kCategoryNames[c]));
            }
            (j >= first_held ? out.held_out : out.train).push_back(std::move(r));
        }
    }
    return out;
}

std::vector<FeedbackTriple> feedback_triples(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<FeedbackTriple> out(n);
    for (auto& t : out) {
        t.ref = random_unit(rng, dim);
        t.text = random_unit(rng, dim);
        t.target.resize(dim);
        for (std::size_t d = 0; d < dim; ++d) t.target[d] = t.ref[d] + t.text[d];
        normalize(t.target);
    }
    return out;
}

}  // namespace kk::synthetic
