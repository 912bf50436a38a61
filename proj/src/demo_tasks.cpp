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

#include "kk/demo_tasks.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <unordered_map>

#include <json.hpp>

#include "kk/binary_io.hpp"
#include "kk/error.hpp"
#include "kk/index/vector_index.hpp"
#include "kk/retrieval.hpp"

namespace kk::demo {

OutfitTaskResult run_outfit_task(const OutfitTaskConfig& config) {
    auto data = synthetic::style_clusters(config.data);
    std::unordered_map<std::string, std::size_t> cluster_of;
    for (std::size_t i = 0; i < data.records.size(); ++i) cluster_of.emplace(data.records[i].id, data.cluster_of[i]);
    const Catalog catalog(data.records, std::move(data.embeddings));
    const auto outfits = synthetic::style_outfits(config.data, config.held_out, config.min_items, config.data.seed);

    std::vector<std::vector<OutfitEntry>> train;
    train.reserve(outfits.train.size());
    for (const auto& r : outfits.train) train.push_back(resolve_outfit(catalog, r));

    TransformerConfig model = config.model;
    model.dim = catalog.store().dim();
    auto trained =
        train_transformer(TransformerParams::init(model, config.train.seed), catalog, train, config.train);

    OutfitTaskResult result;
    result.loss_trace = std::move(trained.loss_trace);
    if (!result.loss_trace.empty()) result.loss_ratio = result.loss_trace.back() / result.loss_trace.front();
    result.params = std::move(trained.params);

    IndexConfig flat;
    flat.kind = IndexKind::kFlat;
    const auto index = build_index(catalog.store_ptr(), flat);

    std::mt19937_64 rng(config.eval_seed);
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> tally;  // hits, predictions
    for (const auto& record : outfits.held_out) {
        const auto entries = resolve_outfit(catalog, record);
        for (const auto& ref : entries) {
            ++result.references;
            const std::size_t cluster = cluster_of.at(ref.id);
            std::vector<Category> others;
            for (auto c : all_categories()) {
                if (c != ref.category) others.push_back(c);
            }
            for (auto k : config.out_counts) {
                std::shuffle(others.begin(), others.end(), rng);
                const std::vector<Category> targets(others.begin(),
                                                    others.begin() + static_cast<std::ptrdiff_t>(std::min(k, others.size())));
                for (const auto& [c, q] : recommend_embeddings(result.params, ref, targets)) {
                    const auto top = category_ranking(catalog, *index, q, c, 1);
                    auto& [hits, total] = tally[k];
                    ++total;
                    if (!top.empty() && cluster_of.at(top.front().id) == cluster) ++hits;
                }
            }
        }
    }
    for (const auto& [k, t] : tally) {
        result.cluster_hit_rate[k] = static_cast<double>(t.first) / static_cast<double>(t.second);
    }
    return result;
}

CombinerTaskResult run_combiner_task(const CombinerTaskConfig& config) {
    const auto train = synthetic::feedback_triples(config.train_triples, config.dim, config.seed);
    const auto eval = synthetic::feedback_triples(config.eval_triples, config.dim, config.seed + 1);
    auto trained =
        train_combiner(CombinerParams::init(config.dim, config.hidden, config.train.seed), train, config.train);

    CombinerTaskResult result;
    result.loss_trace = std::move(trained.loss_trace);
    if (!result.loss_trace.empty()) result.loss_ratio = result.loss_trace.back() / result.loss_trace.front();
    result.params = std::move(trained.params);

    std::size_t hits = 0;
    for (std::size_t i = 0; i < eval.size(); ++i) {
        const auto q = combine(result.params, eval[i].ref, eval[i].text);
        std::size_t best = 0;
        double best_score = -2.0;
        for (std::size_t j = 0; j < eval.size(); ++j) {
            double s = 0.0;
            for (std::size_t e = 0; e < q.size(); ++e) s += static_cast<double>(q[e]) * eval[j].target[e];
            if (s > best_score) {
                best_score = s;
                best = j;
            }
        }
        if (best == i) ++hits;
    }
    if (!eval.empty()) result.top1_accuracy = static_cast<double>(hits) / static_cast<double>(eval.size());
    return result;
}

namespace {

std::string placeholder_svg(std::size_t hue, std::string_view label) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"192\" height=\"256\" viewBox=\"0 0 192 256\">"
           "<rect width=\"192\" height=\"256\" fill=\"hsl(" +
           std::to_string(hue % 360) +
           ",55%,62%)\"/><text x=\"96\" y=\"132\" font-family=\"sans-serif\" font-size=\"14\" "
           "text-anchor=\"middle\">" +
           std::string(label) + "</text></svg>\n";
}

}  // namespace

std::string write_demo(const std::string& dir, const DemoOptions& options) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path root(dir);

    OutfitTaskConfig outfit_cfg;
    outfit_cfg.data.seed = options.seed;
    outfit_cfg.train.seed = options.seed;
    const auto outfit = run_outfit_task(outfit_cfg);
    save_transformer((root / "transformer.kktf").string(), outfit.params);

    auto data = synthetic::style_clusters(outfit_cfg.data);
    const std::size_t dim = data.embeddings.dim;
    write_file((root / "catalog.jsonl").string(), encode_catalog_records(data.records));
    write_embeddings((root / "embeddings.kkem").string(), data.embeddings);
    const auto outfits = synthetic::style_outfits(outfit_cfg.data, outfit_cfg.held_out, outfit_cfg.min_items,
                                                  outfit_cfg.data.seed);
    auto all_outfits = outfits.train;
    all_outfits.insert(all_outfits.end(), outfits.held_out.begin(), outfits.held_out.end());
    write_file((root / "outfits.jsonl").string(), encode_outfit_records(all_outfits));

    CombinerTaskConfig combiner_cfg;
    combiner_cfg.dim = dim;
    combiner_cfg.seed = options.seed;
    save_combiner((root / "combiner.kkcm").string(), run_combiner_task(combiner_cfg).params);

    EmbeddingFile text;
    text.dim = static_cast<std::uint32_t>(dim);
    text.data = synthetic::unit_gaussian(kDemoTextKeys.size(), dim, options.seed ^ 0x7465787473ULL);
    for (auto k : kDemoTextKeys) text.ids.emplace_back(k);
    write_embeddings((root / "text.kkem").string(), text);

    std::string persons;
    for (std::size_t i = 0; i < options.persons; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "p%02zu", i + 1);
        const std::string ref = std::string("persons/") + id + ".svg";
        persons += nlohmann::json{{"id", id}, {"image_ref", ref}}.dump() + "\n";
        if (options.images) {
            fs::create_directories(root / "persons");
            write_file((root / ref).string(), placeholder_svg(30 + 80 * i, id));
        }
    }
    write_file((root / "persons.jsonl").string(), persons);

    if (options.images) {
        fs::create_directories(root / "img");
        for (std::size_t i = 0; i < data.records.size(); ++i) {
            write_file((root / data.records[i].image_ref).string(),
                       placeholder_svg(data.cluster_of[i] * 360 / outfit_cfg.data.clusters, data.records[i].id));
        }
    }

    const nlohmann::json config{
        {"listen", "127.0.0.1:8080"},
        {"catalog", "catalog.jsonl"},
        {"embeddings", "embeddings.kkem"},
        {"index", {{"kind", options.index_kind}}},
        {"index_cache", "index.kkix"},
        {"combiner", "combiner.kkcm"},
        {"transformer", "transformer.kktf"},
        {"text_embeddings", "text.kkem"},
        {"persons", "persons.jsonl"},
        {"n", 12},
        {"page_size", 12},
        {"seed", options.seed},
    };
    const auto config_path = (root / "config.json").string();
    write_file(config_path, config.dump(2) + "\n");
    return config_path;
}

}  // namespace kk::demo
