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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kk/catalog.hpp"
#include "kk/combiner.hpp"
#include "kk/index/vector_index.hpp"
#include "kk/outfit_transformer.hpp"

// HTTP JSON front end. Engine holds the immutable state loaded at startup and
// answers each endpoint as a pure function of the request; the httplib server
// only routes.
//
//   GET  /health
//   GET  /items?category=&page=       paged catalog listing
//   GET  /persons                     try-on models
//   GET  /text-keys                   fixture phrases usable as text_key
//   POST /search/similar   {ref_id, n?}
//   POST /search/feedback  {ref_id, text_embedding | text_key, n?}
//   POST /recommend        {ref_id, targets?, setting?, seed?}
//   POST /tryon            {person_id, garment_id}

namespace kk {

struct ServiceConfig {
    std::string listen = "127.0.0.1:8080";
    std::string catalog_path;
    std::string embeddings_path;
    IndexConfig index;
    std::string index_cache_path;  // optional KKIX file, built and written when absent or stale
    std::string combiner_path;     // optional; identity combiner when empty
    std::string transformer_path;  // optional; /recommend answers 503 when empty
    std::string text_embeddings_path;  // optional KKEM keyed by phrase
    std::string persons_path;          // optional JSON lines {id, image_ref}
    std::size_t n = 12;                // results per search
    std::size_t page_size = 12;        // items per /items page
    std::uint64_t seed = 42;

    /// Throws kConfigInvalid.
    void validate() const;
};

/// Reads a JSON config file. Unknown keys are rejected. Throws kIo,
/// kMalformedRecord and kConfigInvalid.
ServiceConfig parse_service_config(std::string_view json_text);
ServiceConfig load_service_config(const std::string& path);

struct Person {
    std::string id;
    std::string image_ref;
};

std::vector<Person> parse_persons(std::string_view jsonl);

struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

class Engine {
public:
    Engine(ServiceConfig config, std::unique_ptr<Catalog> catalog, std::unique_ptr<VectorIndex> index,
           CombinerParams combiner, std::optional<TransformerParams> transformer,
           std::map<std::string, std::vector<float>> text_embeddings, std::vector<Person> persons);

    /// Loads every configured file and builds (or loads) the index. Any
    /// failure throws; there is no partially initialized engine.
    static std::unique_ptr<Engine> load(const ServiceConfig& config);

    Response health() const;
    Response items(std::optional<std::string_view> category, std::optional<std::string_view> page) const;
    Response persons() const;
    Response text_keys() const;
    Response search_similar(std::string_view body) const;
    Response search_feedback(std::string_view body) const;
    Response recommend(std::string_view body) const;
    Response tryon(std::string_view body) const;

    const ServiceConfig& config() const noexcept { return config_; }
    const Catalog& catalog() const noexcept { return *catalog_; }

private:
    std::uint64_t request_seed(std::string_view route, std::string_view body) const;

    ServiceConfig config_;
    std::unique_ptr<Catalog> catalog_;
    std::unique_ptr<VectorIndex> index_;
    CombinerParams combiner_;
    std::optional<TransformerParams> transformer_;
    std::map<std::string, std::vector<float>> text_embeddings_;
    std::vector<Person> persons_;
    std::map<std::string, std::size_t, std::less<>> person_index_;
};

/// Routes HTTP requests to an Engine. bind() then run(); stop() may be called
/// from another thread.
class HttpServer {
public:
    explicit HttpServer(const Engine& engine);
    ~HttpServer();

    /// Port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    bool run();
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Blocks serving `engine` on config().listen ("host:port"). Returns false
/// when the address cannot be bound.
bool serve(const Engine& engine);

}  // namespace kk
