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
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Fusion of a reference image embedding and a text embedding into a single
// query embedding:
//
//     x   = [normalize(img), normalize(txt)]
//     m   = W2 relu(W1 x + b1) + b2
//     out = normalize(lambda * m + (1 - lambda) * (normalize(img) + normalize(txt)) / 2)
//
// lambda is a learnable gate kept in [0, 1].

namespace kk {

struct CombinerParams {
    std::size_t dim = 0;
    std::size_t hidden = 0;
    // W1 [hidden x 2dim] | b1 [hidden] | W2 [dim x hidden] | b2 [dim] | lambda
    std::vector<double> values;

    /// Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
    static CombinerParams init(std::size_t dim, std::size_t hidden, std::uint64_t seed, double lambda = 0.5);
    /// lambda = 0 with zero weights: the output is the normalized mean of the
    /// normalized inputs.
    static CombinerParams identity(std::size_t dim);

    std::size_t parameter_count() const noexcept { return values.size(); }
    double lambda() const noexcept { return values.back(); }
    void set_lambda(double lambda) { values.back() = lambda; }

    std::size_t w1_offset() const noexcept { return 0; }
    std::size_t b1_offset() const noexcept { return hidden * 2 * dim; }
    std::size_t w2_offset() const noexcept { return b1_offset() + hidden; }
    std::size_t b2_offset() const noexcept { return w2_offset() + dim * hidden; }
};

/// Unit-norm query embedding. Throws kDimensionMismatch on wrong input sizes
/// and kZeroVector when the image embedding is zero.
std::vector<float> combine(const CombinerParams& params, std::span<const float> img, std::span<const float> txt);

/// Mean of the query->target and target->query cross-entropies over the
/// B x B matrix of dot products divided by `temperature`, with the diagonal as
/// the positive class. When `grad_queries` is given it receives dL/dq.
double symmetric_contrastive_loss(const std::vector<std::vector<double>>& queries,
                                  const std::vector<std::vector<double>>& targets, double temperature,
                                  std::vector<std::vector<double>>* grad_queries = nullptr);

struct FeedbackTriple {
    std::vector<float> ref;
    std::vector<float> text;
    std::vector<float> target;
};

/// Loss of combine() outputs against normalized targets over one batch. When
/// `grad` is given it is resized to parameter_count() and filled.
double combiner_batch_loss(const CombinerParams& params, std::span<const FeedbackTriple> batch, double temperature,
                           std::vector<double>* grad = nullptr);

struct CombinerTrainConfig {
    double lr = 1e-3;
    double weight_decay = 1e-4;
    std::size_t epochs = 30;
    std::size_t batch = 32;
    std::uint64_t seed = 3;
    double temperature = 0.07;
};

struct CombinerTrainResult {
    CombinerParams params;
    std::vector<double> loss_trace;  // per-epoch mean batch loss
};

/// Throws kInsufficientData for fewer than two triples and kNonFiniteLoss when
/// a batch loss stops being finite.
CombinerTrainResult train_combiner(CombinerParams params, std::span<const FeedbackTriple> triples,
                                   const CombinerTrainConfig& config);

/// KKCM: "KKCM", u32 version, u32 dim, u32 hidden, f32 lambda, then W1, b1,
/// W2, b2 as f32.
std::string encode_combiner(const CombinerParams& params);
CombinerParams decode_combiner(std::string_view bytes);
void save_combiner(const std::string& path, const CombinerParams& params);
CombinerParams load_combiner(const std::string& path);

}  // namespace kk
