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
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kk/catalog.hpp"

// Complementary-item recommender over a category-ordered slot sequence. Slot s
// (s < 10) holds category s; an optional eleventh slot is always unavailable.
// Each slot enters the encoder as
//     INPUT: the item's embedding        OUT: shared <OUT> token
//     UN:    shared <UN> token
// plus the slot's positional embedding. Encoder layers are pre-norm:
//     x += MHA(LN1(x));  x += FFN(LN2(x))   with a GELU feed-forward.
// Outputs at OUT slots are the predicted item embeddings.

namespace kk {

enum class SlotRole : std::uint8_t { kInput = 0, kOut = 1, kUn = 2 };

std::string_view to_string(SlotRole role) noexcept;

struct Slot {
    std::size_t category = 0;  // slot index; kNumCategories for the extra slot
    SlotRole role = SlotRole::kUn;
    // INPUT: the item's embedding. OUT during training: the ground-truth
    // embedding (never fed to the encoder). Otherwise empty.
    std::vector<double> embedding;
    std::optional<std::string> ground_truth_id;
};

struct OutfitSample {
    std::vector<Slot> slots;

    std::size_t count(SlotRole role) const noexcept;
};

/// One garment of an outfit, with its embedding.
struct OutfitEntry {
    Category category;
    std::string id;
    std::vector<float> embedding;
};

/// Line-delimited outfit dataset record: {outfit_id, items: [{id, category}]}.
struct OutfitRecord {
    std::string outfit_id;
    std::vector<std::pair<std::string, std::string>> items;  // (id, category)
};

std::vector<OutfitRecord> parse_outfit_records(std::string_view jsonl);
std::string encode_outfit_records(const std::vector<OutfitRecord>& records);

/// Resolves ids against the catalog. Throws kUnknownItem, kUnknownCategory,
/// kMalformedRecord (category disagreeing with the catalog), kEmptyOutfit and
/// kDuplicateCategory.
std::vector<OutfitEntry> resolve_outfit(const Catalog& catalog, const OutfitRecord& record);

inline constexpr std::size_t kDefaultSlots = kNumCategories;

/// Training split with an explicit INPUT choice: bit i of `input_mask` makes
/// entries[i] an INPUT, the rest become OUT. Absent categories become UN.
OutfitSample split_training_roles(std::span<const OutfitEntry> entries, std::uint32_t input_mask,
                                  std::size_t slots = kDefaultSlots);

/// Uniformly random non-empty strict subset as INPUT. Returns nullopt for a
/// single-item outfit, which cannot yield both roles. Throws kEmptyOutfit and
/// kDuplicateCategory.
std::optional<OutfitSample> split_training_roles(std::span<const OutfitEntry> entries, std::mt19937_64& rng,
                                                 std::size_t slots = kDefaultSlots);

/// Reference as the only INPUT, `targets` as OUT. Throws kRefInTargets.
OutfitSample split_inference_roles(const OutfitEntry& ref, std::span<const Category> targets,
                                   std::size_t slots = kDefaultSlots);

struct TransformerConfig {
    std::size_t dim = 32;
    std::size_t slots = kDefaultSlots;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t ffn = 0;  // 0 selects 4 * dim

    std::size_t ffn_dim() const noexcept { return ffn == 0 ? 4 * dim : ffn; }
    void validate() const;
};

struct TransformerParams {
    TransformerConfig config;
    std::vector<double> values;

    static TransformerParams init(const TransformerConfig& config, std::uint64_t seed);

    std::size_t parameter_count() const noexcept { return values.size(); }
    std::span<const double> positional(std::size_t slot) const;
    std::span<const double> out_token() const;
    std::span<const double> un_token() const;
};

/// Per-slot encoder inputs (role token or embedding, plus positional).
std::vector<std::vector<double>> encoder_inputs(const TransformerParams& params, const OutfitSample& sample);

/// L x dim outputs. Throws kShapeMismatch when the sample does not fit the
/// params.
std::vector<std::vector<double>> encoder_forward(const TransformerParams& params, const OutfitSample& sample);

struct EncoderGradients {
    std::vector<double> params;
    std::vector<std::vector<double>> inputs;  // dL/d(slot input before positional add)
};

/// Backpropagates `d_outputs` (L x dim) through the encoder.
EncoderGradients encoder_backward(const TransformerParams& params, const OutfitSample& sample,
                                  const std::vector<std::vector<double>>& d_outputs);

///   L = -(1/N) sum_i log( e^{S_iP} / (e^{S_iP} + e^{S_iN}) )
///   S_iP = cos(pred_i, pos_i),  S_iN = sum_{j in neg_i} cos(pred_i, j)
/// Throws kEmptyNegativeSet, kShapeMismatch and kNonFinite.
double nce_loss(const std::vector<std::vector<double>>& preds, const std::vector<std::vector<double>>& positives,
                const std::vector<std::vector<std::vector<double>>>& negatives,
                std::vector<std::vector<double>>* grad_preds = nullptr);

struct OutTarget {
    std::size_t slot;
    std::vector<double> positive;
    std::vector<std::vector<double>> negatives;
};

struct TrainingExample {
    OutfitSample sample;
    std::vector<OutTarget> targets;
};

/// nce_loss over every OUT target of a batch; fills `grad` with dL/dparams.
double batch_nce_loss(const TransformerParams& params, std::span<const TrainingExample> batch,
                      std::vector<double>* grad = nullptr);

struct TransformerTrainConfig {
    double lr = 1e-4;
    double weight_decay = 0.3;
    std::size_t step_size = 20;
    double gamma = 0.5;
    std::size_t epochs = 50;
    std::size_t batch = 16;
    std::size_t negatives = 16;
    std::uint64_t seed = 11;
};

struct TransformerTrainResult {
    TransformerParams params;
    std::vector<double> loss_trace;  // per-epoch mean batch loss
    std::size_t skipped_outfits = 0;
};

/// Samples `negatives` distinct same-category catalog items other than
/// `positive_row`. Empty when the category has no other item.
std::vector<std::size_t> sample_negatives(const Catalog& catalog, Category category, std::size_t positive_row,
                                          std::size_t count, std::mt19937_64& rng);

/// AdamW with step decay. Roles are re-split every epoch; single-item
/// outfits are skipped with a warning. Throws kInsufficientData and
/// kNonFiniteLoss.
TransformerTrainResult train_transformer(TransformerParams params, const Catalog& catalog,
                                         std::span<const std::vector<OutfitEntry>> outfits,
                                         const TransformerTrainConfig& config);

/// Unit-normalized encoder output per target category.
std::map<Category, std::vector<float>> recommend_embeddings(const TransformerParams& params, const OutfitEntry& ref,
                                                            std::span<const Category> targets);

/// KKTF: "KKTF", u32 version, u32 dim, u32 slots, u32 layers, u32 heads,
/// u32 ffn, then every parameter as f32 in layout order.
std::string encode_transformer(const TransformerParams& params);
TransformerParams decode_transformer(std::string_view bytes);
void save_transformer(const std::string& path, const TransformerParams& params);
TransformerParams load_transformer(const std::string& path);

}  // namespace kk
