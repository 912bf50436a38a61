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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "kk/retrieval.hpp"
#include "kk/synthetic.hpp"
#include "test_util.hpp"

namespace {

using kk::Catalog;
using kk::ErrorCode;
using kk::IndexConfig;
using kk::IndexKind;
using kk::Tier;

// Random catalog with categories assigned round-robin over the first
// `categories` labels.
Catalog random_catalog(std::size_t n, std::size_t dim, std::size_t categories, std::uint64_t seed) {
    kk::EmbeddingFile emb;
    emb.dim = static_cast<std::uint32_t>(dim);
    emb.ids = kk::synthetic::sequential_ids(n, "item");
    emb.data = kk::synthetic::unit_gaussian(n, dim, seed);
    std::vector<kk::CatalogRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
        records.push_back({emb.ids[i], std::string(kk::kCategoryNames[i % categories]), "img/" + emb.ids[i] + ".png"});
    }
    return Catalog(records, std::move(emb));
}

std::unique_ptr<kk::VectorIndex> flat_over(const Catalog& c) {
    IndexConfig cfg;
    cfg.kind = IndexKind::kFlat;
    return kk::build_index(c.store_ptr(), cfg);
}

// Ground truth: same-category scan in double precision, ties by id.
std::vector<std::string> brute_similar(const Catalog& c, const std::string& ref, std::size_t n) {
    const auto& r = c.at(ref);
    const auto q = c.embedding(r);
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& item : c.items()) {
        if (item.category != r.category || item.id == ref) continue;
        const auto v = c.embedding(item);
        double s = 0.0;
        for (std::size_t d = 0; d < q.size(); ++d) s += double(q[d]) * v[d];
        scored.emplace_back(-s, item.id);
    }
    std::sort(scored.begin(), scored.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(n, scored.size()); ++i) out.push_back(scored[i].second);
    return out;
}

TEST(SimilarItems, MatchesCategoryRestrictedBruteForce) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto catalog = random_catalog(600, 16, 10, seed);
        const auto flat = flat_over(catalog);
        for (std::size_t i = 0; i < 600; i += 37) {
            const auto& ref = catalog.items()[i].id;
            EXPECT_EQ(kk::similar_items(catalog, *flat, ref, 1), brute_similar(catalog, ref, 1));
            EXPECT_EQ(kk::similar_items(catalog, *flat, ref, 12), brute_similar(catalog, ref, 12));
        }
    }
}

TEST(SimilarItems, OverFetchReachesSparseCategories) {
    // one hat among 499 tops: the hat's neighbors must still be found
    kk::EmbeddingFile emb;
    emb.dim = 8;
    emb.ids = kk::synthetic::sequential_ids(500);
    emb.data = kk::synthetic::unit_gaussian(500, 8, 3);
    std::vector<kk::CatalogRecord> records;
    for (std::size_t i = 0; i < 500; ++i) records.push_back({emb.ids[i], i % 100 == 0 ? "hats" : "tops", "x"});
    const Catalog catalog(records, emb);
    const auto flat = flat_over(catalog);
    const auto got = kk::similar_items(catalog, *flat, emb.ids[0], 4);
    EXPECT_EQ(got, brute_similar(catalog, emb.ids[0], 4));
    for (const auto& id : got) EXPECT_EQ(catalog.at(id).category, kk::Category::kHats);
}

TEST(SimilarItems, ApproximateIndexesStayInCategory) {
    const auto catalog = random_catalog(3000, 16, 10, 9);
    for (auto kind : {IndexKind::kIvf, IndexKind::kHnsw, IndexKind::kForest}) {
        IndexConfig cfg;
        cfg.kind = kind;
        cfg.ivf_nlist = 32;
        cfg.ivf_nprobe = 8;
        auto index = kk::build_index(catalog.store_ptr(), cfg);
        const auto& ref = catalog.items()[17];
        const auto got = kk::similar_items(catalog, *index, ref.id, 10);
        std::set<std::string> seen(got.begin(), got.end());
        EXPECT_EQ(seen.size(), got.size());
        EXPECT_FALSE(seen.count(ref.id));
        for (const auto& id : got) EXPECT_EQ(catalog.at(id).category, ref.category);
    }
}

TEST(SimilarItems, OnlyItemInCategory) {
    auto catalog = random_catalog(20, 8, 9, 2);  // sunglasses absent, shoes has 2
    kk::EmbeddingFile emb;
    emb.dim = 2;
    emb.ids = {"A", "B", "C"};
    emb.data = {1, 0, 0, 1, 1, 1};
    const Catalog small({{"A", "hats", "a"}, {"B", "tops", "b"}, {"C", "tops", "c"}}, emb);
    const auto flat = flat_over(small);
    EXPECT_KK_ERROR(kk::similar_items(small, *flat, "A", 1), ErrorCode::kInsufficientCategoryPopulation);
    EXPECT_KK_ERROR(kk::similar_items(small, *flat, "B", 2), ErrorCode::kInsufficientCategoryPopulation);
    EXPECT_EQ(kk::similar_items(small, *flat, "B", 1), std::vector<std::string>{"C"});
    EXPECT_KK_ERROR(kk::similar_items(small, *flat, "nope", 1), ErrorCode::kUnknownItem);
    EXPECT_KK_ERROR(kk::similar_items(small, *flat_over(catalog), "B", 1), ErrorCode::kStoreMismatch);
}

TEST(SimilarItems, DuplicateVectorComesFirstWithScoreOne) {
    kk::EmbeddingFile emb;
    emb.dim = 3;
    emb.ids = {"A", "A2", "B", "C"};
    emb.data = {0.2f, 0.5f, 0.1f, 0.2f, 0.5f, 0.1f, 1, 0, 0, 0, 0, 1};
    const Catalog catalog({{"A", "tops", "a"}, {"A2", "tops", "a"}, {"B", "tops", "b"}, {"C", "tops", "c"}}, emb);
    const auto flat = flat_over(catalog);
    EXPECT_EQ(kk::similar_items(catalog, *flat, "A", 1), std::vector<std::string>{"A2"});
    const auto ranked = kk::similar_ranking(catalog, *flat, "A", 1);
    ASSERT_EQ(ranked.size(), 1u);
    EXPECT_NEAR(ranked[0].score, 1.0, 1e-6);
}

std::vector<std::string> rank_ids(std::size_t n) { return kk::synthetic::sequential_ids(n, "r"); }

TEST(Augment, ThousandLongRankingBands) {
    const auto ranking = rank_ids(1000);
    const auto res = kk::augment_results(ranking, 8, 0);
    ASSERT_EQ(res.entries.size(), 8u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(res.entries[i].rank, i + 1);
        EXPECT_EQ(res.entries[i].id, ranking[i]);
        EXPECT_EQ(res.entries[i].tier, Tier::kAccurate);
    }
    for (std::size_t i = 4; i < 6; ++i) {
        EXPECT_GE(res.entries[i].rank, 10u);
        EXPECT_LE(res.entries[i].rank, 100u);
        EXPECT_EQ(res.entries[i].tier, Tier::kApproximate);
    }
    for (std::size_t i = 6; i < 8; ++i) {
        EXPECT_GE(res.entries[i].rank, 500u);
        EXPECT_LE(res.entries[i].rank, 1000u);
        EXPECT_EQ(res.entries[i].tier, Tier::kHeuristic);
    }
    for (const auto& e : res.entries) EXPECT_EQ(e.id, ranking[e.rank - 1]);
}

TEST(Augment, ShortRankingClipsAndFills) {
    const auto ranking = rank_ids(12);
    const auto res = kk::augment_results(ranking, 8, 0);
    ASSERT_EQ(res.entries.size(), 8u);
    for (std::size_t i = 4; i < 6; ++i) {
        EXPECT_GE(res.entries[i].rank, 10u);
        EXPECT_LE(res.entries[i].rank, 12u);
        EXPECT_EQ(res.entries[i].tier, Tier::kApproximate);
    }
    // the deep band is empty: best unused ranks are 5 and 6
    EXPECT_EQ(res.entries[6].rank, 5u);
    EXPECT_EQ(res.entries[7].rank, 6u);
    EXPECT_EQ(res.entries[6].tier, Tier::kHeuristic);
    EXPECT_EQ(res.entries[7].tier, Tier::kHeuristic);
}

TEST(Augment, RankingShorterThanNIsTruncated) {
    const auto ranking = rank_ids(5);
    const auto res = kk::augment_results(ranking, 8, 1);
    EXPECT_EQ(res.n, 8u);
    ASSERT_EQ(res.entries.size(), 5u);
    std::set<std::size_t> ranks;
    for (const auto& e : res.entries) ranks.insert(e.rank);
    EXPECT_EQ(ranks.size(), 5u);
}

TEST(Augment, SeededDeterminism) {
    const auto ranking = rank_ids(1000);
    const auto a = kk::augment_results(ranking, 12, 77);
    const auto b = kk::augment_results(ranking, 12, 77);
    ASSERT_EQ(a.entries.size(), b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_EQ(a.entries[i].id, b.entries[i].id);
        EXPECT_EQ(a.entries[i].tier, b.entries[i].tier);
    }
    bool differs = false;
    for (std::uint64_t s = 0; s < 10 && !differs; ++s) {
        const auto c = kk::augment_results(ranking, 12, s);
        for (std::size_t i = 0; i < c.entries.size(); ++i) differs |= c.entries[i].id != a.entries[i].id;
    }
    EXPECT_TRUE(differs);
}

TEST(Augment, Errors) {
    const auto ranking = rank_ids(100);
    EXPECT_KK_ERROR(kk::augment_results(ranking, 3, 0), ErrorCode::kNTooSmall);
    EXPECT_KK_ERROR(kk::augment_results({}, 8, 0), ErrorCode::kEmptyRanking);
}

TEST(Augment, TierPartitionAndNoDuplicatesForAllN) {
    const auto ranking = rank_ids(1000);
    for (std::size_t n = 4; n <= 120; ++n) {
        const auto res = kk::augment_results(ranking, n, n * 31);
        ASSERT_EQ(res.entries.size(), n);
        const std::size_t a = (n + 1) / 2, b = (n + 3) / 4;
        std::set<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& e = res.entries[i];
            EXPECT_TRUE(ids.insert(e.id).second);
            if (i < a) {
                EXPECT_EQ(e.tier, Tier::kAccurate);
                EXPECT_EQ(e.rank, i + 1);
            } else if (i < a + b) {
                EXPECT_EQ(e.tier, Tier::kApproximate);
                EXPECT_GE(e.rank, 10u);
                EXPECT_LE(e.rank, 100u);
            } else {
                EXPECT_EQ(e.tier, Tier::kHeuristic);
                EXPECT_GE(e.rank, 500u);
                EXPECT_LE(e.rank, 1000u);
            }
        }
    }
}

TEST(Augment, BandSamplingIsUniform) {
    // every rank of the mid band should be drawn about equally often
    const auto ranking = rank_ids(1000);
    std::vector<int> hits(101, 0);
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
        const auto res = kk::augment_results(ranking, 4, t);
        ++hits[res.entries[2].rank];
    }
    const double expected = trials / 91.0;
    for (std::size_t r = 10; r <= 100; ++r) EXPECT_NEAR(hits[r], expected, 5 * std::sqrt(expected)) << r;
}

TEST(FeedbackSearch, IdentityCombinerWithZeroTextIsPlainSimilarity) {
    const auto catalog = random_catalog(400, 16, 10, 4);
    const auto flat = flat_over(catalog);
    const auto identity = kk::CombinerParams::identity(16);
    const std::vector<float> zero(16, 0.0f);
    for (std::size_t i = 0; i < 400; i += 41) {
        const auto& ref = catalog.items()[i];
        const auto got = kk::feedback_ranking(catalog, *flat, ref.id, zero, 20, identity);
        const auto hits = kk::search(*flat, catalog.embedding(ref), 21);
        std::vector<std::string> expected;
        for (const auto& h : hits) {
            if (h.row != ref.embedding_row) expected.push_back(catalog.store().id(h.row));
        }
        expected.resize(20);
        ASSERT_EQ(got.size(), 20u);
        for (std::size_t k = 0; k < 20; ++k) EXPECT_EQ(got[k].id, expected[k]);
    }
}

TEST(FeedbackSearch, WrongTextDimension) {
    const auto catalog = random_catalog(50, 16, 10, 4);
    const auto flat = flat_over(catalog);
    const std::vector<float> text(15, 1.0f);
    EXPECT_KK_ERROR(kk::feedback_search(catalog, *flat, catalog.items()[0].id, text, 8,
                                        kk::CombinerParams::identity(16), 0),
                    ErrorCode::kDimensionMismatch);
    EXPECT_KK_ERROR(kk::feedback_search(catalog, *flat, "missing", std::vector<float>(16, 1.0f), 8,
                                        kk::CombinerParams::identity(16), 0),
                    ErrorCode::kUnknownItem);
}

TEST(FeedbackSearch, ResultsAreTieredAndExcludeReference) {
    const auto catalog = random_catalog(1500, 16, 10, 5);
    const auto flat = flat_over(catalog);
    const auto text = kk::synthetic::unit_gaussian(1, 16, 8);
    const auto params = kk::CombinerParams::init(16, 64, 2);
    const auto& ref = catalog.items()[3];
    const auto res = kk::feedback_search(catalog, *flat, ref.id, text, 12, params, 99);
    ASSERT_EQ(res.entries.size(), 12u);
    std::set<std::string> ids;
    for (const auto& e : res.entries) {
        EXPECT_NE(e.id, ref.id);
        EXPECT_TRUE(ids.insert(e.id).second);
    }
    const auto ranked = kk::feedback_ranking(catalog, *flat, ref.id, text, 6, params);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(res.entries[i].id, ranked[i].id);
}

TEST(FeedbackSearch, TrainedCombinerFindsHeldOutTargets) {
    const std::size_t dim = 32;
    const auto triples = kk::synthetic::feedback_triples(300, dim, 3);
    const std::span<const kk::FeedbackTriple> train(triples.data(), 200);
    const std::span<const kk::FeedbackTriple> held_out(triples.data() + 200, 100);
    const auto trained = kk::train_combiner(kk::CombinerParams::init(dim, 4 * dim, 3), train, {});

    // catalog: every reference and every target of the held-out set plus
    // distractors
    kk::EmbeddingFile emb;
    emb.dim = dim;
    std::vector<kk::CatalogRecord> records;
    auto add = [&](const std::string& id, std::span<const float> v) {
        emb.ids.push_back(id);
        emb.data.insert(emb.data.end(), v.begin(), v.end());
        records.push_back({id, "tops", id});
    };
    for (std::size_t i = 0; i < held_out.size(); ++i) {
        add("ref" + std::to_string(i), held_out[i].ref);
        add("tgt" + std::to_string(i), held_out[i].target);
    }
    const auto distractors = kk::synthetic::unit_gaussian(800, dim, 12);
    for (std::size_t i = 0; i < 800; ++i) add("d" + std::to_string(i), std::span(distractors).subspan(i * dim, dim));
    const Catalog catalog(records, emb);
    const auto flat = flat_over(catalog);

    std::size_t found = 0;
    for (std::size_t i = 0; i < held_out.size(); ++i) {
        const auto ranked =
            kk::feedback_ranking(catalog, *flat, "ref" + std::to_string(i), held_out[i].text, 10, trained.params);
        for (const auto& r : ranked) found += r.id == "tgt" + std::to_string(i);
    }
    EXPECT_GE(double(found) / double(held_out.size()), 0.8);
}

}  // namespace
