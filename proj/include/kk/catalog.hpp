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

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kk {

/// Garment categories in canonical order. The numeric value is also the
/// positional slot used by the outfit transformer.
enum class Category : std::uint8_t {
    kBags = 0,
    kTops,
    kOuterwear,
    kHats,
    kBottoms,
    kScarves,
    kJewelry,
    kAccessories,
    kShoes,
    kSunglasses,
};

inline constexpr std::size_t kNumCategories = 10;

inline constexpr std::array<std::string_view, kNumCategories> kCategoryNames{
    "bags", "tops", "outerwear", "hats", "bottoms", "scarves", "jewelry", "accessories", "shoes", "sunglasses",
};

inline constexpr std::size_t index_of(Category c) noexcept { return static_cast<std::size_t>(c); }
inline constexpr std::string_view name_of(Category c) noexcept { return kCategoryNames[index_of(c)]; }
std::optional<Category> parse_category(std::string_view name) noexcept;
Category category_at(std::size_t index);
std::array<Category, kNumCategories> all_categories() noexcept;

using Sha256 = std::array<std::uint8_t, 32>;

/// Row-major matrix of unit-normalized float32 embeddings with an id per row.
class EmbeddingStore {
public:
    /// Rows are re-normalized; a zero row throws kZeroVector, a repeated id
    /// kDuplicateId, and data.size() != ids.size() * dim kDimensionMismatch.
    EmbeddingStore(std::size_t dim, std::vector<std::string> ids, std::vector<float> data);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t count() const noexcept { return ids_.size(); }
    std::span<const float> data() const noexcept { return data_; }
    std::span<const float> row(std::size_t r) const noexcept { return {data_.data() + r * dim_, dim_}; }
    const std::string& id(std::size_t r) const noexcept { return ids_[r]; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::optional<std::size_t> find_row(std::string_view id) const;

    // Lexicographic rank of each row's id; used to break score ties by id.
    std::uint32_t id_rank(std::size_t r) const noexcept { return id_rank_[r]; }

    /// SHA-256 over dim, ids and normalized payload.
    const Sha256& content_hash() const noexcept { return hash_; }

    /// Bytes of the id table: string payloads plus an 8-byte offset per id.
    std::size_t id_table_bytes() const noexcept;

private:
    std::size_t dim_;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::vector<std::uint32_t> id_rank_;
    std::unordered_map<std::string, std::size_t> row_of_;
    Sha256 hash_{};
};

/// In-memory image of the KKEM embedding file: ids plus raw (not yet
/// normalized) vectors.
struct EmbeddingFile {
    std::uint32_t dim = 0;
    std::vector<std::string> ids;
    std::vector<float> data;
};

std::string encode_embeddings(const EmbeddingFile& file);
EmbeddingFile decode_embeddings(std::string_view bytes);
EmbeddingFile read_embeddings(const std::string& path);
void write_embeddings(const std::string& path, const EmbeddingFile& file);

struct Item {
    std::string id;
    Category category;
    std::string image_ref;
    std::size_t embedding_row;
};

struct CatalogRecord {
    std::string id;
    std::string category;
    std::string image_ref;
};

/// Immutable item catalog bound to its embedding store.
class Catalog {
public:
    /// Validates categories, id uniqueness and the id-set match; item order
    /// follows `records`.
    Catalog(const std::vector<CatalogRecord>& records, EmbeddingFile embeddings);

    const std::vector<Item>& items() const noexcept { return items_; }
    std::size_t size() const noexcept { return items_.size(); }
    const EmbeddingStore& store() const noexcept { return *store_; }
    std::shared_ptr<const EmbeddingStore> store_ptr() const noexcept { return store_; }

    const Item* find(std::string_view id) const;
    const Item& at(std::string_view id) const;  // throws kUnknownItem
    const Item& item_at_row(std::size_t row) const { return items_[item_of_row_[row]]; }
    std::span<const float> embedding(const Item& item) const noexcept { return store_->row(item.embedding_row); }

    std::vector<Item> items_by_category(Category c) const;
    std::size_t category_size(Category c) const noexcept { return by_category_[index_of(c)].size(); }
    const std::vector<std::size_t>& category_rows(Category c) const noexcept { return rows_by_category_[index_of(c)]; }
    Category category_of_row(std::size_t row) const noexcept { return items_[item_of_row_[row]].category; }

private:
    std::vector<Item> items_;
    std::shared_ptr<const EmbeddingStore> store_;
    std::unordered_map<std::string, std::size_t> index_of_id_;
    std::vector<std::size_t> item_of_row_;
    std::array<std::vector<std::size_t>, kNumCategories> by_category_;
    std::array<std::vector<std::size_t>, kNumCategories> rows_by_category_;
};

std::vector<CatalogRecord> parse_catalog_records(std::string_view jsonl);
std::string encode_catalog_records(const std::vector<CatalogRecord>& records);

/// Loads the JSON-lines catalog and its KKEM embeddings. When `expected_dim`
/// is set the embedding header must agree with it.
Catalog load_catalog(const std::string& catalog_path, const std::string& embeddings_path,
                     std::optional<std::size_t> expected_dim = std::nullopt);

Sha256 sha256(std::string_view bytes);
std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace kk
