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

#include <CLI11.hpp>

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include "kk/error.hpp"
#include "kk/service.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Fashion retrieval and recommendation service"};
    std::string config_path, listen, catalog, embeddings, index_kind, combiner, transformer;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON config file (default: $KK_CONFIG)");
    app.add_option("--listen", listen, "host:port");
    app.add_option("--catalog", catalog, "catalog JSON lines");
    app.add_option("--embeddings", embeddings, "KKEM embeddings");
    app.add_option("--index-kind", index_kind, "FLAT, IVF, HNSW or FOREST");
    app.add_option("--combiner", combiner, "KKCM combiner weights");
    app.add_option("--transformer", transformer, "KKTF outfit transformer weights");
    auto* seed_opt = app.add_option("--seed", seed);
    CLI11_PARSE(app, argc, argv);

    if (config_path.empty()) {
        if (const char* env = std::getenv("KK_CONFIG")) config_path = env;
    }

    std::unique_ptr<kk::Engine> engine;
    try {
        kk::ServiceConfig config;
        if (!config_path.empty()) config = kk::load_service_config(config_path);
        if (!listen.empty()) config.listen = listen;
        if (!catalog.empty()) config.catalog_path = catalog;
        if (!embeddings.empty()) config.embeddings_path = embeddings;
        if (!combiner.empty()) config.combiner_path = combiner;
        if (!transformer.empty()) config.transformer_path = transformer;
        if (*seed_opt) config.seed = seed;
        if (!index_kind.empty()) {
            const auto kind = kk::parse_index_kind(index_kind);
            if (!kind) throw kk::Error(kk::ErrorCode::kConfigInvalid, "unknown index kind: " + index_kind);
            config.index.kind = *kind;
        }
        engine = kk::Engine::load(config);
    } catch (const std::exception& e) {
        std::cerr << "kk_serve: startup failed: " << e.what() << '\n';
        return 1;
    }

    if (!kk::serve(*engine)) {
        std::cerr << "kk_serve: cannot listen on " << engine->config().listen << '\n';
        return 1;
    }
    return 0;
}
