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
#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kk/combiner.hpp"
#include "kk/outfit_transformer.hpp"
#include "kk/synthetic.hpp"

// End-to-end synthetic training tasks shared by the bench harness and the
// test suites.

namespace kk::demo {

// Defaults are tuned for the desk-scale model. The category offset is kept
// small and clusters come in antipodal pairs: with summed negative cosines a
// strong shared category direction lets the model lower the loss by pointing
// away from the category mean without ever learning the cluster.
struct OutfitTaskConfig {
    synthetic::StyleClusterSpec data{.category_weight = 0.06f, .noise = 0.1f, .antipodal = true};
    std::size_t held_out = 2;  // outfits per cluster kept out of training
    std::size_t min_items = 4;
    TransformerConfig model;
    TransformerTrainConfig train{.lr = 3e-3, .batch = 4};
    std::vector<std::size_t> out_counts{1, 2, 9};
    std::uint64_t eval_seed = 5;
};

struct OutfitTaskResult {
    std::vector<double> loss_trace;
    double loss_ratio = 0.0;  // last epoch over first
    std::size_t references = 0;
    // OUT-slot count -> fraction of predictions whose top-1 same-category
    // neighbour belongs to the reference's cluster
    std::map<std::size_t, double> cluster_hit_rate;
    TransformerParams params;
};

OutfitTaskResult run_outfit_task(const OutfitTaskConfig& config);

struct CombinerTaskConfig {
    std::size_t train_triples = 200;
    std::size_t eval_triples = 100;
    std::size_t dim = 32;
    std::size_t hidden = 64;
    std::uint64_t seed = 3;
    CombinerTrainConfig train;
};

struct CombinerTaskResult {
    std::vector<double> loss_trace;
    double loss_ratio = 0.0;
    double top1_accuracy = 0.0;  // held-out query retrieves its own target among all targets
    CombinerParams params;
};

CombinerTaskResult run_combiner_task(const CombinerTaskConfig& config);

inline constexpr std::array<std::string_view, 8> kDemoTextKeys{
    "colorful-top", "darker", "lighter", "more-casual", "more-formal", "longer", "shorter", "patterned",
};

struct DemoOptions {
    std::uint64_t seed = 11;
    bool images = true;  // placeholder SVGs for items and persons
    std::string index_kind = "HNSW";
    std::size_t persons = 4;
};

/// Writes a self-contained deployment under `dir` (created if needed):
/// catalog.jsonl, embeddings.kkem, text.kkem, persons.jsonl, combiner.kkcm,
/// transformer.kktf, outfits.jsonl and config.json. Models are trained on the
/// synthetic tasks. Returns the config path.
std::string write_demo(const std::string& dir, const DemoOptions& options = {});

}  // namespace kk::demo
