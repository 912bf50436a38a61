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
#include <string>
#include <vector>

#include "kk/catalog.hpp"
#include "kk/combiner.hpp"
#include "kk/outfit_transformer.hpp"

// Seeded synthetic data used by the benchmark harness, the demo generator and
// the test suites.

namespace kk::synthetic {

/// n x dim row-major standard Gaussian vectors, each row unit-normalized.
/// With decay > 0 coordinate i (0-based) has variance (i + 1)^-decay before
/// normalization, a power-law spectrum like that of learned embeddings.
std::vector<float> unit_gaussian(std::size_t n, std::size_t dim, std::uint64_t seed, double decay = 0.0);

/// Zero-padded ids ("v0000042") so lexicographic order equals row order.
std::vector<std::string> sequential_ids(std::size_t n, const std::string& prefix = "v");

std::shared_ptr<const EmbeddingStore> gaussian_store(std::size_t n, std::size_t dim, std::uint64_t seed,
                                                    double decay = 0.0);

std::vector<std::vector<float>> gaussian_queries(std::size_t n, std::size_t dim, std::uint64_t seed,
                                                 double decay = 0.0);

/// Style-cluster catalog: every cluster owns a random direction, every
/// category a random offset, and each item is
///     normalize(cluster_dir + category_weight * category_dir + noise * g).
/// When clusters + categories <= dim the directions are made mutually
/// orthogonal so no cluster sits closer to the category mean than another.
struct StyleClusterSpec {
    std::size_t clusters = 20;
    std::size_t items_per_cluster_category = 6;
    std::size_t dim = 32;
    float category_weight = 0.5f;
    float noise = 0.25f;
    std::uint64_t seed = 11;
    // Cluster 2i+1 points opposite cluster 2i, so with category_weight 0
    // every category is centred on the origin.
    bool antipodal = false;
};

struct StyleClusterData {
    std::vector<CatalogRecord> records;
    EmbeddingFile embeddings;
    std::vector<std::size_t> cluster_of;  // aligned with records
    std::vector<Category> category_of;    // aligned with records
};

StyleClusterData style_clusters(const StyleClusterSpec& spec);

/// Outfits over a style-cluster catalog: outfit j of cluster k takes item j of
/// that cluster in each of a random subset (at least `min_items`) of the
/// categories. Outfits j >= items_per_cluster_category - held_out go to the
/// held-out split.
struct StyleOutfits {
    std::vector<OutfitRecord> train;
    std::vector<OutfitRecord> held_out;
};

StyleOutfits style_outfits(const StyleClusterSpec& spec, std::size_t held_out, std::size_t min_items,
                           std::uint64_t seed);

/// Text-feedback triples with ref and text drawn as unit Gaussians and
/// target = normalize(ref + text).
std::vector<FeedbackTriple> feedback_triples(std::size_t n, std::size_t dim, std::uint64_t seed);

}  // namespace kk::synthetic
