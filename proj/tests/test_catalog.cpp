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

#include <cmath>
#include <cstring>
#include <set>

#include "kk/binary_io.hpp"
#include "kk/catalog.hpp"
#include "kk/simd/kernels.hpp"
#include "kk/synthetic.hpp"
#include "test_util.hpp"

namespace {

using kk::Catalog;
using kk::Category;
using kk::CatalogRecord;
using kk::EmbeddingFile;
using kk::ErrorCode;

EmbeddingFile small_embeddings() {
    EmbeddingFile f;
    f.dim = 4;
    f.ids = {"A", "B", "C"};
    f.data = {1, 2, 3, 4, 0, 0, 5, 0, 0.1f, 0.2f, 0.3f, 0.4f};
    return f;
}

std::vector<CatalogRecord> small_records() {
    return {{"A", "tops", "img/a.png"}, {"B", "shoes", "img/b.png"}, {"C", "tops", "img/c.png"}};
}

TEST(Category, CanonicalOrder) {
    const char* expected[] = {"bags",    "tops",    "outerwear",   "hats",  "bottoms",
                              "scarves", "jewelry", "accessories", "shoes", "sunglasses"};
    for (std::size_t i = 0; i < kk::kNumCategories; ++i) {
        auto c = kk::parse_category(expected[i]);
        ASSERT_TRUE(c);
        EXPECT_EQ(kk::index_of(*c), i);
        EXPECT_EQ(kk::name_of(*c), expected[i]);
    }
    EXPECT_FALSE(kk::parse_category("dresses"));
    EXPECT_FALSE(kk::parse_category("Tops"));
}

TEST(LoadCatalog, WellFormedFilesAreNormalized) {
    kk::test::TempDir dir;
    kk::write_file(dir.file("catalog.jsonl"), kk::encode_catalog_records(small_records()));
    kk::write_embeddings(dir.file("emb.kkem"), small_embeddings());

    const auto catalog = kk::load_catalog(dir.file("catalog.jsonl"), dir.file("emb.kkem"));
    ASSERT_EQ(catalog.size(), 3u);
    EXPECT_EQ(catalog.store().dim(), 4u);
    for (std::size_t r = 0; r < 3; ++r) {
        const double norm = std::sqrt(kk::simd::norm_sq(catalog.store().row(r)));
        EXPECT_GE(norm, 1.0 - 1e-4);
        EXPECT_LE(norm, 1.0 + 1e-4);
    }
    EXPECT_EQ(catalog.items()[0].id, "A");
    EXPECT_EQ(catalog.items()[2].image_ref, "img/c.png");
    EXPECT_EQ(catalog.at("B").category, Category::kShoes);
}

TEST(LoadCatalog, ItemOrderFollowsCatalogFileNotEmbeddingFile) {
    auto emb = small_embeddings();
    std::swap(emb.ids[0], emb.ids[2]);
    Catalog catalog(small_records(), emb);
    EXPECT_EQ(catalog.items()[0].id, "A");
    EXPECT_EQ(catalog.items()[0].embedding_row, 2u);
    EXPECT_EQ(catalog.store().id(catalog.items()[0].embedding_row), "A");
}

TEST(LoadCatalog, LoadingTwiceIsByteIdentical) {
    kk::test::TempDir dir;
    kk::write_file(dir.file("c.jsonl"), kk::encode_catalog_records(small_records()));
    kk::write_embeddings(dir.file("e.kkem"), small_embeddings());
    const auto a = kk::load_catalog(dir.file("c.jsonl"), dir.file("e.kkem"));
    const auto b = kk::load_catalog(dir.file("c.jsonl"), dir.file("e.kkem"));
    ASSERT_EQ(a.store().data().size(), b.store().data().size());
    EXPECT_EQ(std::memcmp(a.store().data().data(), b.store().data().data(), a.store().data().size_bytes()), 0);
    EXPECT_EQ(a.store().content_hash(), b.store().content_hash());
}

TEST(LoadCatalog, ShortRecordIsDimensionMismatch) {
    // header declares 640 values but the record carries 512
    kk::ByteWriter w;
    w.put_bytes("KKEM");
    w.put_u32(1);
    w.put_u32(1);
    w.put_u32(640);
    w.put_u32(1);
    w.put_bytes("A");
    std::vector<float> values(512, 0.5f);
    w.put_f32s(values);
    EXPECT_KK_ERROR(kk::decode_embeddings(w.bytes()), ErrorCode::kDimensionMismatch);

    // the same defect in a non-final record shifts the next length prefix
    kk::ByteWriter w2;
    w2.put_bytes("KKEM");
    w2.put_u32(1);
    w2.put_u32(2);
    w2.put_u32(640);
    for (const char* id : {"A", "B"}) {
        w2.put_u32(1);
        w2.put_bytes(id);
        w2.put_f32s(values);
    }
    EXPECT_KK_ERROR(kk::decode_embeddings(w2.bytes()), ErrorCode::kDimensionMismatch);
}

TEST(LoadCatalog, ExpectedDimDisagreement) {
    kk::test::TempDir dir;
    kk::write_file(dir.file("c.jsonl"), kk::encode_catalog_records(small_records()));
    kk::write_embeddings(dir.file("e.kkem"), small_embeddings());
    EXPECT_KK_ERROR(kk::load_catalog(dir.file("c.jsonl"), dir.file("e.kkem"), 640), ErrorCode::kDimensionMismatch);
}

TEST(LoadCatalog, UnknownCategoryNamesTheItem) {
    auto records = small_records();
    records[1].category = "dresses";
    try {
        Catalog(records, small_embeddings());
        FAIL() << "expected unknown-category";
    } catch (const kk::Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kUnknownCategory);
        EXPECT_NE(std::string(e.what()).find("B"), std::string::npos);
    }
}

TEST(LoadCatalog, DuplicateIdsAreRejected) {
    auto records = small_records();
    records[2].id = "A";
    EXPECT_KK_ERROR(Catalog(records, small_embeddings()), ErrorCode::kDuplicateId);

    auto emb = small_embeddings();
    emb.ids[2] = "A";
    EXPECT_KK_ERROR(Catalog(small_records(), emb), ErrorCode::kDuplicateId);
}

TEST(LoadCatalog, IdSetsMustMatch) {
    auto records = small_records();
    records.pop_back();
    EXPECT_KK_ERROR(Catalog(records, small_embeddings()), ErrorCode::kIdSetMismatch);

    auto emb = small_embeddings();
    emb.ids[1] = "Z";
    EXPECT_KK_ERROR(Catalog(small_records(), emb), ErrorCode::kIdSetMismatch);
}

TEST(LoadCatalog, MalformedRecords) {
    EXPECT_KK_ERROR(kk::parse_catalog_records("{\"id\":\"A\",\"category\":\"tops\"}\n"), ErrorCode::kMalformedRecord);
    EXPECT_KK_ERROR(kk::parse_catalog_records("not json\n"), ErrorCode::kMalformedRecord);
    EXPECT_KK_ERROR(kk::parse_catalog_records("{\"id\":3,\"category\":\"tops\",\"image_ref\":\"x\"}"),
                    ErrorCode::kMalformedRecord);
    const auto ok = kk::parse_catalog_records(
        "{\"id\":\"A\",\"category\":\"tops\",\"image_ref\":\"x\"}\r\n\n{\"id\":\"B\",\"category\":\"hats\",\"image_ref\":\"y\"}");
    EXPECT_EQ(ok.size(), 2u);
}

TEST(LoadCatalog, ZeroVectorIsAnError) {
    auto emb = small_embeddings();
    std::fill(emb.data.begin() + 4, emb.data.begin() + 8, 0.0f);
    EXPECT_KK_ERROR(Catalog(small_records(), emb), ErrorCode::kZeroVector);
}

TEST(LoadCatalog, HeaderErrors) {
    auto bytes = kk::encode_embeddings(small_embeddings());
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_KK_ERROR(kk::decode_embeddings(bad_magic), ErrorCode::kMalformedRecord);
    auto bad_version = bytes;
    bad_version[4] = 2;
    EXPECT_KK_ERROR(kk::decode_embeddings(bad_version), ErrorCode::kVersionMismatch);
    EXPECT_KK_ERROR(kk::decode_embeddings(bytes.substr(0, 10)), ErrorCode::kTruncatedInput);
}

TEST(LoadCatalog, EmbeddingFileLayoutIsLittleEndian) {
    EmbeddingFile f;
    f.dim = 1;
    f.ids = {"ab"};
    f.data = {1.0f};
    const auto bytes = kk::encode_embeddings(f);
    const std::string expected("KKEM\x01\x00\x00\x00\x01\x00\x00\x00\x01\x00\x00\x00\x02\x00\x00\x00"
                               "ab\x00\x00\x80\x3f",
                               26);
    EXPECT_EQ(bytes, expected);
    const auto back = kk::decode_embeddings(bytes);
    EXPECT_EQ(back.ids, f.ids);
    EXPECT_EQ(back.data, f.data);
}

TEST(ItemsByCategory, FilterAndEmptyCase) {
    Catalog catalog(small_records(), small_embeddings());
    const auto tops = catalog.items_by_category(Category::kTops);
    ASSERT_EQ(tops.size(), 2u);
    EXPECT_EQ(tops[0].id, "A");
    EXPECT_EQ(tops[1].id, "C");
    EXPECT_TRUE(catalog.items_by_category(Category::kHats).empty());
}

TEST(ItemsByCategory, CategoriesPartitionTheCatalog) {
    kk::synthetic::StyleClusterSpec spec;
    spec.clusters = 3;
    spec.items_per_cluster_category = 2;
    auto data = kk::synthetic::style_clusters(spec);
    // drop some items so category sizes differ
    data.records.erase(data.records.begin() + 5, data.records.begin() + 9);
    EmbeddingFile emb;
    emb.dim = data.embeddings.dim;
    for (const auto& r : data.records) {
        const auto idx = static_cast<std::size_t>(
            std::find(data.embeddings.ids.begin(), data.embeddings.ids.end(), r.id) - data.embeddings.ids.begin());
        emb.ids.push_back(r.id);
        emb.data.insert(emb.data.end(), data.embeddings.data.begin() + idx * emb.dim,
                        data.embeddings.data.begin() + (idx + 1) * emb.dim);
    }
    Catalog catalog(data.records, emb);
    std::set<std::string> seen;
    std::size_t total = 0;
    for (auto c : kk::all_categories()) {
        for (const auto& item : catalog.items_by_category(c)) {
            EXPECT_EQ(item.category, c);
            EXPECT_TRUE(seen.insert(item.id).second);
            ++total;
        }
    }
    EXPECT_EQ(total, catalog.size());
}

}  // namespace
