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

#include "kk/catalog.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "kk/binary_io.hpp"
#include "kk/error.hpp"

namespace kk {

namespace {

constexpr std::string_view kEmbeddingMagic = "KKEM";
constexpr std::uint32_t kEmbeddingVersion = 1;

class Sha256Hasher {
public:
    Sha256Hasher() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw std::runtime_error("sha256 init failed");
        }
    }
    void update(const void* p, std::size_t n) { EVP_DigestUpdate(ctx_.get(), p, n); }
    Sha256 finish() {
        Sha256 out{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), out.data(), &len);
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::optional<Category> parse_category(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kNumCategories; ++i) {
        if (kCategoryNames[i] == name) return static_cast<Category>(i);
    }
    return std::nullopt;
}

Category category_at(std::size_t index) {
    if (index >= kNumCategories) throw Error(ErrorCode::kUnknownCategory, "index " + std::to_string(index));
    return static_cast<Category>(index);
}

std::array<Category, kNumCategories> all_categories() noexcept {
    std::array<Category, kNumCategories> out{};
    for (std::size_t i = 0; i < kNumCategories; ++i) out[i] = static_cast<Category>(i);
    return out;
}

Sha256 sha256(std::string_view bytes) {
    Sha256Hasher h;
    h.update(bytes.data(), bytes.size());
    return h.finish();
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0xf]);
    }
    return out;
}

// --- EmbeddingStore -------------------------------------------------------

EmbeddingStore::EmbeddingStore(std::size_t dim, std::vector<std::string> ids, std::vector<float> data)
    : dim_(dim), ids_(std::move(ids)), data_(std::move(data)) {
    if (dim_ == 0) throw Error(ErrorCode::kDimensionMismatch, "dim must be positive");
    if (data_.size() != ids_.size() * dim_) {
        throw Error(ErrorCode::kDimensionMismatch, "payload holds " + std::to_string(data_.size()) +
                                                       " floats, expected " + std::to_string(ids_.size() * dim_));
    }
    row_of_.reserve(ids_.size());
    for (std::size_t r = 0; r < ids_.size(); ++r) {
        if (!row_of_.emplace(ids_[r], r).second) throw Error(ErrorCode::kDuplicateId, ids_[r]);
    }
    for (std::size_t r = 0; r < ids_.size(); ++r) {
        float* v = data_.data() + r * dim_;
        double sq = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) sq += static_cast<double>(v[i]) * v[i];
        if (!(sq > 0.0) || !std::isfinite(sq)) {
            throw Error(ErrorCode::kZeroVector, "row for id " + ids_[r] + " cannot be normalized");
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (std::size_t i = 0; i < dim_; ++i) v[i] = static_cast<float>(v[i] * inv);
    }

    std::vector<std::uint32_t> order(ids_.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ids_[a] < ids_[b]; });
    id_rank_.resize(ids_.size());
    for (std::uint32_t rank = 0; rank < order.size(); ++rank) id_rank_[order[rank]] = rank;

    Sha256Hasher h;
    const auto d32 = static_cast<std::uint32_t>(dim_);
    const auto n32 = static_cast<std::uint32_t>(ids_.size());
    h.update(&d32, sizeof d32);
    h.update(&n32, sizeof n32);
    for (const auto& id : ids_) {
        const auto len = static_cast<std::uint32_t>(id.size());
        h.update(&len, sizeof len);
        h.update(id.data(), id.size());
    }
    h.update(data_.data(), data_.size() * sizeof(float));
    hash_ = h.finish();
}

std::optional<std::size_t> EmbeddingStore::find_row(std::string_view id) const {
    auto it = row_of_.find(std::string(id));
    if (it == row_of_.end()) return std::nullopt;
    return it->second;
}

std::size_t EmbeddingStore::id_table_bytes() const noexcept {
    std::size_t total = 0;
    for (const auto& id : ids_) total += id.size() + 8;
    return total;
}

// --- KKEM file ------------------------------------------------------------

std::string encode_embeddings(const EmbeddingFile& file) {
    if (file.data.size() != file.ids.size() * file.dim) {
        throw Error(ErrorCode::kDimensionMismatch, "payload size does not match count * dim");
    }
    ByteWriter w;
    w.put_bytes(kEmbeddingMagic);
    w.put_u32(kEmbeddingVersion);
    w.put_u32(static_cast<std::uint32_t>(file.ids.size()));
    w.put_u32(file.dim);
    for (std::size_t r = 0; r < file.ids.size(); ++r) {
        w.put_u32(static_cast<std::uint32_t>(file.ids[r].size()));
        w.put_bytes(file.ids[r]);
        w.put_f32s(std::span<const float>(file.data).subspan(r * file.dim, file.dim));
    }
    return std::move(w).bytes();
}

EmbeddingFile decode_embeddings(std::string_view bytes) {
    ByteReader r(bytes);
    if (r.get_bytes(4) != kEmbeddingMagic) throw Error(ErrorCode::kMalformedRecord, "bad embedding magic");
    const auto version = r.get_u32();
    if (version != kEmbeddingVersion) {
        throw Error(ErrorCode::kVersionMismatch, "embedding file version " + std::to_string(version));
    }
    EmbeddingFile out;
    const auto count = r.get_u32();
    out.dim = r.get_u32();
    if (out.dim == 0) throw Error(ErrorCode::kMalformedRecord, "embedding dim is zero");
    const std::size_t record_floats_bytes = std::size_t{out.dim} * sizeof(float);
    // count is untrusted; size buffers by what the input can actually hold
    const std::size_t plausible = std::min<std::size_t>(count, r.remaining() / (record_floats_bytes + 5));
    out.ids.reserve(plausible);
    out.data.reserve(plausible * out.dim);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto id_len = r.get_u32();
        if (id_len == 0 || id_len > r.remaining()) {
            // A record shorter than the declared dim shifts the stream, so the
            // next length prefix lands inside float payload.
            if (i > 0) {
                throw Error(ErrorCode::kDimensionMismatch,
                            "record for id " + out.ids.back() + " does not hold " + std::to_string(out.dim) + " values");
            }
            throw Error(ErrorCode::kMalformedRecord, "invalid id length " + std::to_string(id_len));
        }
        out.ids.emplace_back(r.get_bytes(id_len));
        if (r.remaining() < record_floats_bytes) {
            throw Error(ErrorCode::kDimensionMismatch,
                        "record for id " + out.ids.back() + " has fewer than " + std::to_string(out.dim) + " values");
        }
        out.data.resize(out.data.size() + out.dim);
        r.get_f32s(std::span<float>(out.data).last(out.dim));
    }
    if (!r.at_end()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    std::to_string(r.remaining()) + " trailing bytes; records longer than declared dim");
    }
    return out;
}

EmbeddingFile read_embeddings(const std::string& path) { return decode_embeddings(read_file(path)); }

void write_embeddings(const std::string& path, const EmbeddingFile& file) {
    write_file(path, encode_embeddings(file));
}

// --- Catalog --------------------------------------------------------------

std::vector<CatalogRecord> parse_catalog_records(std::string_view jsonl) {
    std::vector<CatalogRecord> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= jsonl.size()) {
        auto end = jsonl.find('\n', start);
        if (end == std::string_view::npos) end = jsonl.size();
        auto line = jsonl.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            if (end == jsonl.size()) break;
            continue;
        }
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error(ErrorCode::kMalformedRecord, "line " + std::to_string(line_no) + ": not a JSON object");
        }
        CatalogRecord rec;
        for (auto [key, field] : {std::pair{"id", &rec.id}, {"category", &rec.category}, {"image_ref", &rec.image_ref}}) {
            auto it = j.find(key);
            if (it == j.end() || !it->is_string()) {
                throw Error(ErrorCode::kMalformedRecord,
                            "line " + std::to_string(line_no) + ": missing string field '" + key + "'");
            }
            *field = it->get<std::string>();
        }
        if (rec.id.empty()) throw Error(ErrorCode::kMalformedRecord, "line " + std::to_string(line_no) + ": empty id");
        out.push_back(std::move(rec));
        if (end == jsonl.size()) break;
    }
    return out;
}

std::string encode_catalog_records(const std::vector<CatalogRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        nlohmann::json j = {{"id", r.id}, {"category", r.category}, {"image_ref", r.image_ref}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

Catalog::Catalog(const std::vector<CatalogRecord>& records, EmbeddingFile embeddings) {
    std::unordered_set<std::string> seen;
    std::vector<Category> categories;
    categories.reserve(records.size());
    for (const auto& rec : records) {
        auto cat = parse_category(rec.category);
        if (!cat) throw Error(ErrorCode::kUnknownCategory, "item " + rec.id + " has category '" + rec.category + "'");
        if (!seen.insert(rec.id).second) throw Error(ErrorCode::kDuplicateId, "catalog id " + rec.id);
        categories.push_back(*cat);
    }
    {
        std::unordered_set<std::string> emb_ids;
        for (const auto& id : embeddings.ids) {
            if (!emb_ids.insert(id).second) throw Error(ErrorCode::kDuplicateId, "embedding id " + id);
            if (!seen.contains(id)) throw Error(ErrorCode::kIdSetMismatch, "embedding id " + id + " not in catalog");
        }
        for (const auto& rec : records) {
            if (!emb_ids.contains(rec.id)) {
                throw Error(ErrorCode::kIdSetMismatch, "catalog id " + rec.id + " has no embedding");
            }
        }
    }

    store_ = std::make_shared<const EmbeddingStore>(embeddings.dim, std::move(embeddings.ids),
                                                    std::move(embeddings.data));
    items_.reserve(records.size());
    item_of_row_.resize(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto row = *store_->find_row(records[i].id);
        items_.push_back(Item{records[i].id, categories[i], records[i].image_ref, row});
        index_of_id_.emplace(records[i].id, i);
        item_of_row_[row] = i;
        by_category_[index_of(categories[i])].push_back(i);
        rows_by_category_[index_of(categories[i])].push_back(row);
    }
}

const Item* Catalog::find(std::string_view id) const {
    auto it = index_of_id_.find(std::string(id));
    return it == index_of_id_.end() ? nullptr : &items_[it->second];
}

const Item& Catalog::at(std::string_view id) const {
    if (const Item* item = find(id)) return *item;
    throw Error(ErrorCode::kUnknownItem, std::string(id));
}

std::vector<Item> Catalog::items_by_category(Category c) const {
    std::vector<Item> out;
    out.reserve(by_category_[index_of(c)].size());
    for (auto i : by_category_[index_of(c)]) out.push_back(items_[i]);
    return out;
}

Catalog load_catalog(const std::string& catalog_path, const std::string& embeddings_path,
                     std::optional<std::size_t> expected_dim) {
    auto records = parse_catalog_records(read_file(catalog_path));
    auto embeddings = read_embeddings(embeddings_path);
    if (expected_dim && *expected_dim != embeddings.dim) {
        throw Error(ErrorCode::kDimensionMismatch, "embeddings declare dim " + std::to_string(embeddings.dim) +
                                                       ", expected " + std::to_string(*expected_dim));
    }
    return Catalog(records, std::move(embeddings));
}

}  // namespace kk
