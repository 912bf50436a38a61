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

#include "kk/service.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <iostream>

#include <httplib.h>
#include <json.hpp>

#include "kk/binary_io.hpp"
#include "kk/error.hpp"
#include "kk/recommendation.hpp"
#include "kk/retrieval.hpp"

namespace kk {

using nlohmann::json;

namespace {

constexpr std::size_t kAlternates = 8;

[[noreturn]] void bad_request(const std::string& message) { throw Error(ErrorCode::kMalformedRecord, message); }

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::kUnknownItem: return 404;
        case ErrorCode::kIo:
        case ErrorCode::kEmptyStore:
        case ErrorCode::kHashMismatch:
        case ErrorCode::kNonFinite:
        case ErrorCode::kNonFiniteLoss: return 500;
        default: return 400;
    }
}

std::string code_name(ErrorCode code) {
    std::string out(to_string(code));
    for (auto& ch : out) ch = ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

Response json_response(const json& j, int status = 200) { return {status, j.dump(), "application/json"}; }

Response error_response(int status, const std::string& code, const std::string& message) {
    return json_response({{"error", {{"code", code}, {"message", message}}}}, status);
}

Response not_found(const std::string& what) { return error_response(404, "NOT_FOUND", what); }

template <class F>
Response guarded(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        return error_response(status_for(e.code()), code_name(e.code()), e.what());
    } catch (const json::exception& e) {
        return error_response(400, "MALFORMED_REQUEST", e.what());
    }
}

json parse_body(std::string_view body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        bad_request(std::string("request body is not JSON: ") + e.what());
    }
    if (!j.is_object()) bad_request("request body must be a JSON object");
    return j;
}

std::string require_string(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) bad_request(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::size_t optional_count(const json& j, const char* key, std::size_t fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_number_unsigned()) bad_request(std::string("field '") + key + "' must be a non-negative integer");
    return it->get<std::size_t>();
}

json item_json(const Item& item) {
    return {{"id", item.id}, {"category", name_of(item.category)}, {"image_ref", item.image_ref}};
}

json tiered_json(const Catalog& catalog, std::string_view ref_id, const TieredResults& results) {
    json entries = json::array();
    for (const auto& e : results.entries) {
        json j = item_json(catalog.at(e.id));
        j["tier"] = to_string(e.tier);
        j["rank"] = e.rank;
        entries.push_back(std::move(j));
    }
    return {{"ref_id", ref_id}, {"n", results.n}, {"results", std::move(entries)}};
}

TieredResults tiered_or_empty(std::span<const std::string> ids, std::size_t n, std::uint64_t seed) {
    if (n < 4) throw Error(ErrorCode::kNTooSmall, "n must be at least 4");
    if (ids.empty()) return {{}, n};
    return augment_results(ids, n, seed);
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += ch;
        }
    }
    return out;
}

// Garment pasted over the person's upper body at fixed fractions of the frame.
std::string tryon_svg(std::string_view person_ref, std::string_view garment_ref) {
    constexpr int kW = 384, kH = 512;
    constexpr int gx = kW / 4, gy = kH * 22 / 100, gw = kW / 2, gh = kH * 36 / 100;
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kW) + "\" height=\"" +
                      std::to_string(kH) + "\" viewBox=\"0 0 " + std::to_string(kW) + " " + std::to_string(kH) +
                      "\">";
    svg += "<image href=\"" + xml_escape(person_ref) + "\" x=\"0\" y=\"0\" width=\"" + std::to_string(kW) +
           "\" height=\"" + std::to_string(kH) + "\" preserveAspectRatio=\"xMidYMid slice\"/>";
    svg += "<image href=\"" + xml_escape(garment_ref) + "\" x=\"" + std::to_string(gx) + "\" y=\"" +
           std::to_string(gy) + "\" width=\"" + std::to_string(gw) + "\" height=\"" + std::to_string(gh) +
           "\" preserveAspectRatio=\"xMidYMid meet\"/>";
    svg += "</svg>";
    return svg;
}

std::string resolve_path(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return p;
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

template <class T>
void read_uint(const json& j, const char* key, T& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_number_unsigned()) {
        throw Error(ErrorCode::kConfigInvalid, std::string("config key '") + key + "' must be a non-negative integer");
    }
    out = it->get<T>();
}

void read_string(const json& j, const char* key, std::string& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_string()) throw Error(ErrorCode::kConfigInvalid, std::string("config key '") + key + "' must be a string");
    out = it->get<std::string>();
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error(ErrorCode::kConfigInvalid, "unknown " + where + " key '" + key + "'");
        }
    }
}

std::pair<std::string, int> split_listen(const std::string& listen) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos || colon == 0) {
        throw Error(ErrorCode::kConfigInvalid, "listen must be host:port, got '" + listen + "'");
    }
    int port = -1;
    const auto* first = listen.data() + colon + 1;
    const auto* last = listen.data() + listen.size();
    const auto [ptr, ec] = std::from_chars(first, last, port);
    if (ec != std::errc{} || ptr != last || port < 0 || port > 65535) {
        throw Error(ErrorCode::kConfigInvalid, "listen port is not a valid port: '" + listen + "'");
    }
    return {listen.substr(0, colon), port};
}

std::unique_ptr<VectorIndex> build_or_load_index(const ServiceConfig& config, const Catalog& catalog) {
    const auto& path = config.index_cache_path;
    if (!path.empty() && std::filesystem::exists(path)) {
        try {
            auto loaded = load_index(read_file(path), catalog.store_ptr());
            if (loaded->config() == config.index) return loaded;
            std::cerr << "index cache " << path << " was built with a different configuration; rebuilding\n";
        } catch (const Error& e) {
            std::cerr << "index cache " << path << " unusable (" << e.what() << "); rebuilding\n";
        }
    }
    auto index = build_index(catalog.store_ptr(), config.index);
    if (!path.empty()) write_file(path, save_index(*index));
    return index;
}

}  // namespace

void ServiceConfig::validate() const {
    if (catalog_path.empty() || embeddings_path.empty()) {
        throw Error(ErrorCode::kConfigInvalid, "catalog and embeddings paths are required");
    }
    if (n < 4) throw Error(ErrorCode::kConfigInvalid, "n must be at least 4 for tiered results");
    if (page_size == 0) throw Error(ErrorCode::kConfigInvalid, "page_size must be positive");
    split_listen(listen);
}

ServiceConfig parse_service_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kMalformedRecord, std::string("config is not JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::kMalformedRecord, "config must be a JSON object");
    reject_unknown(j,
                   {"listen", "catalog", "embeddings", "index", "index_cache", "combiner", "transformer",
                    "text_embeddings", "persons", "n", "page_size", "seed"},
                   "config");
    ServiceConfig c;
    read_string(j, "listen", c.listen);
    read_string(j, "catalog", c.catalog_path);
    read_string(j, "embeddings", c.embeddings_path);
    read_string(j, "index_cache", c.index_cache_path);
    read_string(j, "combiner", c.combiner_path);
    read_string(j, "transformer", c.transformer_path);
    read_string(j, "text_embeddings", c.text_embeddings_path);
    read_string(j, "persons", c.persons_path);
    read_uint(j, "n", c.n);
    read_uint(j, "page_size", c.page_size);
    read_uint(j, "seed", c.seed);
    if (const auto it = j.find("index"); it != j.end()) {
        if (!it->is_object()) throw Error(ErrorCode::kConfigInvalid, "config key 'index' must be an object");
        reject_unknown(*it,
                       {"kind", "ivf_nlist", "ivf_nprobe", "hnsw_M", "hnsw_ef_construction", "hnsw_ef_search",
                        "forest_n_trees", "forest_search_k", "forest_leaf_size", "seed"},
                       "index");
        std::string kind;
        read_string(*it, "kind", kind);
        if (!kind.empty()) {
            const auto k = parse_index_kind(kind);
            if (!k) throw Error(ErrorCode::kConfigInvalid, "unknown index kind '" + kind + "'");
            c.index.kind = *k;
        }
        read_uint(*it, "ivf_nlist", c.index.ivf_nlist);
        read_uint(*it, "ivf_nprobe", c.index.ivf_nprobe);
        read_uint(*it, "hnsw_M", c.index.hnsw_M);
        read_uint(*it, "hnsw_ef_construction", c.index.hnsw_ef_construction);
        read_uint(*it, "hnsw_ef_search", c.index.hnsw_ef_search);
        read_uint(*it, "forest_n_trees", c.index.forest_n_trees);
        read_uint(*it, "forest_search_k", c.index.forest_search_k);
        read_uint(*it, "forest_leaf_size", c.index.forest_leaf_size);
        read_uint(*it, "seed", c.index.seed);
    }
    return c;
}

ServiceConfig load_service_config(const std::string& path) {
    auto c = parse_service_config(read_file(path));
    // relative paths are relative to the config file
    const auto base = std::filesystem::path(path).parent_path();
    for (auto* p : {&c.catalog_path, &c.embeddings_path, &c.index_cache_path, &c.combiner_path, &c.transformer_path,
                    &c.text_embeddings_path, &c.persons_path}) {
        *p = resolve_path(base, *p);
    }
    return c;
}

std::vector<Person> parse_persons(std::string_view jsonl) {
    std::vector<Person> out;
    std::size_t line_no = 0;
    while (!jsonl.empty()) {
        const auto nl = jsonl.find('\n');
        std::string_view line = jsonl.substr(0, nl);
        jsonl = nl == std::string_view::npos ? std::string_view{} : jsonl.substr(nl + 1);
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const auto j = json::parse(line);
            out.push_back({j.at("id").get<std::string>(), j.at("image_ref").get<std::string>()});
        } catch (const json::exception& e) {
            throw Error(ErrorCode::kMalformedRecord, "person line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

Engine::Engine(ServiceConfig config, std::unique_ptr<Catalog> catalog, std::unique_ptr<VectorIndex> index,
               CombinerParams combiner, std::optional<TransformerParams> transformer,
               std::map<std::string, std::vector<float>> text_embeddings, std::vector<Person> persons)
    : config_(std::move(config)),
      catalog_(std::move(catalog)),
      index_(std::move(index)),
      combiner_(std::move(combiner)),
      transformer_(std::move(transformer)),
      text_embeddings_(std::move(text_embeddings)),
      persons_(std::move(persons)) {
    config_.validate();
    const std::size_t dim = catalog_->store().dim();
    if (&index_->store() != &catalog_->store() && index_->store().content_hash() != catalog_->store().content_hash()) {
        throw Error(ErrorCode::kStoreMismatch, "index was not built over the catalog's embeddings");
    }
    if (combiner_.dim != dim) {
        throw Error(ErrorCode::kDimensionMismatch, "combiner dim " + std::to_string(combiner_.dim) +
                                                       " differs from catalog dim " + std::to_string(dim));
    }
    if (transformer_ && transformer_->config.dim != dim) {
        throw Error(ErrorCode::kDimensionMismatch, "transformer dim " + std::to_string(transformer_->config.dim) +
                                                       " differs from catalog dim " + std::to_string(dim));
    }
    for (const auto& [key, v] : text_embeddings_) {
        if (v.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "text embedding '" + key + "' has wrong dim");
    }
    for (std::size_t i = 0; i < persons_.size(); ++i) {
        if (!person_index_.emplace(persons_[i].id, i).second) {
            throw Error(ErrorCode::kDuplicateId, "person id " + persons_[i].id + " appears twice");
        }
    }
}

std::unique_ptr<Engine> Engine::load(const ServiceConfig& config) {
    config.validate();
    auto catalog = std::make_unique<Catalog>(load_catalog(config.catalog_path, config.embeddings_path));
    auto index = build_or_load_index(config, *catalog);
    auto combiner = config.combiner_path.empty() ? CombinerParams::identity(catalog->store().dim())
                                                 : load_combiner(config.combiner_path);
    std::optional<TransformerParams> transformer;
    if (!config.transformer_path.empty()) transformer = load_transformer(config.transformer_path);
    std::map<std::string, std::vector<float>> texts;
    if (!config.text_embeddings_path.empty()) {
        const auto file = read_embeddings(config.text_embeddings_path);
        for (std::size_t i = 0; i < file.ids.size(); ++i) {
            texts.emplace(file.ids[i], std::vector<float>(file.data.begin() + i * file.dim,
                                                          file.data.begin() + (i + 1) * file.dim));
        }
    }
    std::vector<Person> persons;
    if (!config.persons_path.empty()) persons = parse_persons(read_file(config.persons_path));
    return std::make_unique<Engine>(config, std::move(catalog), std::move(index), std::move(combiner),
                                    std::move(transformer), std::move(texts), std::move(persons));
}

std::uint64_t Engine::request_seed(std::string_view route, std::string_view body) const {
    std::string keyed(route);
    keyed += '\n';
    keyed += body;
    const auto digest = sha256(keyed);
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < 8; ++i) h = (h << 8) | digest[i];
    return h ^ config_.seed;
}

Response Engine::health() const {
    return json_response({{"status", "ok"},
                          {"items", catalog_->size()},
                          {"dim", catalog_->store().dim()},
                          {"index", to_string(index_->kind())},
                          {"transformer", transformer_.has_value()}});
}

Response Engine::items(std::optional<std::string_view> category, std::optional<std::string_view> page) const {
    return guarded([&] {
        std::size_t p = 0;
        if (page && !page->empty()) {
            const auto [ptr, ec] = std::from_chars(page->data(), page->data() + page->size(), p);
            if (ec != std::errc{} || ptr != page->data() + page->size()) {
                return error_response(400, "BAD_PAGE", "page must be a non-negative integer");
            }
        }
        std::vector<const Item*> pool;
        if (category && !category->empty()) {
            const auto c = parse_category(*category);
            if (!c) return error_response(400, "UNKNOWN_CATEGORY", "unknown category '" + std::string(*category) + "'");
            for (const auto& item : catalog_->items()) {
                if (item.category == *c) pool.push_back(&item);
            }
        } else {
            for (const auto& item : catalog_->items()) pool.push_back(&item);
        }
        const std::size_t size = config_.page_size;
        const std::size_t pages = (pool.size() + size - 1) / size;
        json list = json::array();
        if (p < pages) {
            for (std::size_t i = p * size; i < std::min(pool.size(), (p + 1) * size); ++i) {
                list.push_back(item_json(*pool[i]));
            }
        }
        json j{{"page", p}, {"page_size", size}, {"pages", pages}, {"total", pool.size()}, {"items", std::move(list)}};
        if (category && !category->empty()) j["category"] = *category;
        return json_response(j);
    });
}

Response Engine::persons() const {
    json list = json::array();
    for (const auto& p : persons_) list.push_back({{"id", p.id}, {"image_ref", p.image_ref}});
    return json_response({{"persons", std::move(list)}});
}

Response Engine::text_keys() const {
    json keys = json::array();
    for (const auto& [k, v] : text_embeddings_) keys.push_back(k);
    return json_response({{"text_keys", std::move(keys)}});
}

Response Engine::search_similar(std::string_view body) const {
    return guarded([&] {
        const auto j = parse_body(body);
        const auto ref_id = require_string(j, "ref_id");
        const std::size_t n = optional_count(j, "n", config_.n);
        if (n < 4) throw Error(ErrorCode::kNTooSmall, "n must be at least 4");
        const auto ranked = similar_ranking(*catalog_, *index_, ref_id, std::max(n, kAugmentDepth));
        std::vector<std::string> ids;
        ids.reserve(ranked.size());
        for (const auto& r : ranked) ids.push_back(r.id);
        return json_response(
            tiered_json(*catalog_, ref_id, tiered_or_empty(ids, n, request_seed("/search/similar", body))));
    });
}

Response Engine::search_feedback(std::string_view body) const {
    return guarded([&] {
        const auto j = parse_body(body);
        const auto ref_id = require_string(j, "ref_id");
        const std::size_t n = optional_count(j, "n", config_.n);
        if (n < 4) throw Error(ErrorCode::kNTooSmall, "n must be at least 4");
        const bool has_vec = j.contains("text_embedding"), has_key = j.contains("text_key");
        if (has_vec == has_key) bad_request("exactly one of text_embedding and text_key is required");
        catalog_->at(ref_id);  // 404 before any text problem
        std::vector<float> text;
        if (has_key) {
            const auto key = require_string(j, "text_key");
            const auto it = text_embeddings_.find(key);
            if (it == text_embeddings_.end()) return not_found("unknown text_key '" + key + "'");
            text = it->second;
        } else {
            const auto& arr = j.at("text_embedding");
            if (!arr.is_array()) bad_request("text_embedding must be an array of numbers");
            for (const auto& v : arr) {
                if (!v.is_number()) bad_request("text_embedding must be an array of numbers");
                text.push_back(v.get<float>());
            }
        }
        std::string key_part = has_key ? j.at("text_key").get<std::string>() : std::string();
        const auto results = feedback_search(*catalog_, *index_, ref_id, text, n, combiner_,
                                             request_seed("/search/feedback", body));
        auto out = tiered_json(*catalog_, ref_id, results);
        if (has_key) out["text_key"] = key_part;
        return json_response(out);
    });
}

Response Engine::recommend(std::string_view body) const {
    return guarded([&] {
        const auto j = parse_body(body);
        const auto ref_id = require_string(j, "ref_id");
        const Item& ref = catalog_->at(ref_id);
        if (!transformer_) return error_response(503, "NO_TRANSFORMER", "no outfit transformer is loaded");

        std::vector<Category> targets;
        if (const auto it = j.find("targets"); it != j.end() && !it->is_null()) {
            if (!it->is_array()) bad_request("targets must be an array of category names");
            for (const auto& t : *it) {
                if (!t.is_string()) bad_request("targets must be an array of category names");
                const auto c = parse_category(t.get<std::string>());
                if (!c) throw Error(ErrorCode::kUnknownCategory, "unknown category '" + t.get<std::string>() + "'");
                if (std::find(targets.begin(), targets.end(), *c) == targets.end()) targets.push_back(*c);
            }
        } else {
            for (auto c : all_categories()) {
                if (c != ref.category && catalog_->category_size(c) > 0) targets.push_back(c);
            }
        }
        std::sort(targets.begin(), targets.end());

        OutfitSetting setting = OutfitSetting::kToneSurTone;
        if (const auto it = j.find("setting"); it != j.end() && !it->is_null()) {
            if (!it->is_string()) bad_request("setting must be a string");
            const auto s = parse_outfit_setting(it->get<std::string>());
            if (!s) bad_request("setting must be TONE_SUR_TONE or MIX_AND_MATCH");
            setting = *s;
        }
        std::uint64_t seed = request_seed("/recommend", body);
        if (const auto it = j.find("seed"); it != j.end() && !it->is_null()) {
            if (!it->is_number_unsigned()) bad_request("seed must be a non-negative integer");
            seed = it->get<std::uint64_t>();
        }

        const auto preds = recommend_embeddings(*transformer_, outfit_entry(*catalog_, ref_id), targets);
        const auto outfit = pick_outfit(*catalog_, *index_, preds, setting, seed);
        json slots = json::object(), alternates = json::object();
        for (const auto& [c, id] : outfit) {
            const std::string name(name_of(c));
            slots[name] = item_json(catalog_->at(id));
            json alts = json::array();
            for (const auto& r : category_ranking(*catalog_, *index_, preds.at(c), c, kAlternates)) {
                json a = item_json(catalog_->at(r.id));
                a["score"] = r.score;
                alts.push_back(std::move(a));
            }
            alternates[name] = std::move(alts);
        }
        return json_response({{"ref_id", ref_id},
                              {"setting", to_string(setting)},
                              {"seed", seed},
                              {"outfit", std::move(slots)},
                              {"alternates", std::move(alternates)}});
    });
}

Response Engine::tryon(std::string_view body) const {
    return guarded([&] {
        const auto j = parse_body(body);
        const auto person_id = require_string(j, "person_id");
        const auto garment_id = require_string(j, "garment_id");
        const auto p = person_index_.find(person_id);
        if (p == person_index_.end()) return not_found("unknown person '" + person_id + "'");
        const Item* garment = catalog_->find(garment_id);
        if (!garment) return not_found("unknown garment '" + garment_id + "'");
        return json_response({{"stub", true},
                              {"person_id", person_id},
                              {"garment_id", garment_id},
                              {"content_type", "image/svg+xml"},
                              {"image", tryon_svg(persons_[p->second].image_ref, garment->image_ref)}});
    });
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(const Engine& engine) : impl_(std::make_unique<Impl>()) {
    auto& server = impl_->server;
    auto send = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    auto optional_param = [](const httplib::Request& req, const char* key) -> std::optional<std::string> {
        if (!req.has_param(key)) return std::nullopt;
        return req.get_param_value(key);
    };
    const Engine* e = &engine;
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/health", [=](const httplib::Request&, httplib::Response& res) { send(res, e->health()); });
    server.Get("/items", [=](const httplib::Request& req, httplib::Response& res) {
        const auto category = optional_param(req, "category");
        const auto page = optional_param(req, "page");
        send(res, e->items(category ? std::optional<std::string_view>(*category) : std::nullopt,
                           page ? std::optional<std::string_view>(*page) : std::nullopt));
    });
    server.Get("/persons", [=](const httplib::Request&, httplib::Response& res) { send(res, e->persons()); });
    server.Get("/text-keys", [=](const httplib::Request&, httplib::Response& res) { send(res, e->text_keys()); });
    server.Post("/search/similar", [=](const httplib::Request& req, httplib::Response& res) {
        send(res, e->search_similar(req.body));
    });
    server.Post("/search/feedback", [=](const httplib::Request& req, httplib::Response& res) {
        send(res, e->search_feedback(req.body));
    });
    server.Post("/recommend",
                [=](const httplib::Request& req, httplib::Response& res) { send(res, e->recommend(req.body)); });
    server.Post("/tryon", [=](const httplib::Request& req, httplib::Response& res) { send(res, e->tryon(req.body)); });
    server.set_error_handler([=](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) send(res, error_response(res.status, "NOT_FOUND", "no such route"));
    });
    server.set_exception_handler([=](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "internal error";
        try {
            if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& ex) {
            message = ex.what();
        }
        send(res, error_response(500, "INTERNAL", message));
    });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::run() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

bool HttpServer::running() const { return impl_->server.is_running(); }

bool serve(const Engine& engine) {
    const auto [host, port] = split_listen(engine.config().listen);
    HttpServer server(engine);
    if (server.bind(host, port) < 0) {
        std::cerr << "cannot bind " << engine.config().listen << "\n";
        return false;
    }
    std::cerr << "serving " << engine.catalog().size() << " items on " << host << ":" << port << "\n";
    return server.run();
}

}  // namespace kk
