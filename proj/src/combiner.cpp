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

#include "kk/combiner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "kk/binary_io.hpp"
#include "kk/error.hpp"
#include "kk/nn/ops.hpp"
#include "kk/nn/optim.hpp"
#include "nn/param_io.hpp"

namespace kk {

namespace {

constexpr std::string_view kMagic = "KKCM";
constexpr std::uint32_t kVersion = 1;

using nn::Vec;

struct Forward {
    Vec x;   // [img_hat, txt_hat]
    Vec z1;  // pre-activation
    Vec h;
    Vec m;
    Vec mix;  // (img_hat + txt_hat) / 2
    Vec out;
    double u_norm = 0.0;  // 0 when the image-only fallback was taken
};

Vec normalized(std::span<const float> v, bool allow_zero) {
    Vec out(v.begin(), v.end());
    const double n = nn::l2_norm(out);
    if (!(n > 0.0) || !std::isfinite(n)) {
        if (allow_zero) return Vec(v.size(), 0.0);
        throw Error(ErrorCode::kZeroVector, "reference embedding cannot be normalized");
    }
    for (double& x : out) x /= n;
    return out;
}

Forward forward(const CombinerParams& p, std::span<const float> img, std::span<const float> txt) {
    if (img.size() != p.dim || txt.size() != p.dim) {
        throw Error(ErrorCode::kDimensionMismatch, "combiner expects dim " + std::to_string(p.dim) + ", got " +
                                                       std::to_string(img.size()) + " and " +
                                                       std::to_string(txt.size()));
    }
    const std::size_t d = p.dim;
    Forward f;
    const Vec ih = normalized(img, false);
    const Vec th = normalized(txt, true);
    f.x.resize(2 * d);
    std::copy(ih.begin(), ih.end(), f.x.begin());
    std::copy(th.begin(), th.end(), f.x.begin() + static_cast<std::ptrdiff_t>(d));

    const std::span<const double> w(p.values);
    f.z1.resize(p.hidden);
    f.h.resize(p.hidden);
    nn::linear(w.subspan(p.w1_offset(), p.hidden * 2 * d), w.subspan(p.b1_offset(), p.hidden), f.x, f.z1);
    for (std::size_t i = 0; i < p.hidden; ++i) f.h[i] = nn::relu(f.z1[i]);
    f.m.resize(d);
    nn::linear(w.subspan(p.w2_offset(), d * p.hidden), w.subspan(p.b2_offset(), d), f.h, f.m);

    const double lam = p.lambda();
    f.mix.resize(d);
    f.out.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        f.mix[i] = 0.5 * (ih[i] + th[i]);
        f.out[i] = lam * f.m[i] + (1.0 - lam) * f.mix[i];
    }
    f.u_norm = nn::l2_norm(f.out);
    if (f.u_norm == 0.0) {
        f.out = ih;
    } else {
        for (double& v : f.out) v /= f.u_norm;
    }
    return f;
}

void backward(const CombinerParams& p, const Forward& f, std::span<const double> dout, std::span<double> grad) {
    if (f.u_norm == 0.0) return;
    const std::size_t d = p.dim;
    Vec du(d, 0.0);
    nn::normalize_backward(f.out, f.u_norm, dout, du);

    const double lam = p.lambda();
    double dlam = 0.0;
    Vec dm(d);
    for (std::size_t i = 0; i < d; ++i) {
        dlam += du[i] * (f.m[i] - f.mix[i]);
        dm[i] = lam * du[i];
    }
    grad.back() += dlam;

    const std::span<const double> w(p.values);
    Vec dh(p.hidden, 0.0);
    nn::linear_backward(w.subspan(p.w2_offset(), d * p.hidden), f.h, dm, grad.subspan(p.w2_offset(), d * p.hidden),
                        grad.subspan(p.b2_offset(), d), dh);
    for (std::size_t i = 0; i < p.hidden; ++i) {
        if (f.z1[i] <= 0.0) dh[i] = 0.0;
    }
    nn::linear_backward(w.subspan(p.w1_offset(), p.hidden * 2 * d), f.x, dh,
                        grad.subspan(p.w1_offset(), p.hidden * 2 * d), grad.subspan(p.b1_offset(), p.hidden), {});
}

std::size_t value_count(std::size_t dim, std::size_t hidden) { return hidden * 2 * dim + hidden + dim * hidden + dim + 1; }

}  // namespace

CombinerParams CombinerParams::init(std::size_t dim, std::size_t hidden, std::uint64_t seed, double lambda) {
    if (dim == 0) throw Error(ErrorCode::kConfigInvalid, "combiner dim must be positive");
    CombinerParams p;
    p.dim = dim;
    p.hidden = hidden;
    p.values.assign(value_count(dim, hidden), 0.0);
    std::mt19937_64 rng(seed);
    const double a1 = 1.0 / std::sqrt(static_cast<double>(2 * dim));
    std::uniform_real_distribution<double> u1(-a1, a1);
    for (std::size_t i = 0; i < hidden * 2 * dim; ++i) p.values[p.w1_offset() + i] = u1(rng);
    if (hidden > 0) {
        const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
        std::uniform_real_distribution<double> u2(-a2, a2);
        for (std::size_t i = 0; i < dim * hidden; ++i) p.values[p.w2_offset() + i] = u2(rng);
    }
    p.set_lambda(std::clamp(lambda, 0.0, 1.0));
    return p;
}

CombinerParams CombinerParams::identity(std::size_t dim) {
    CombinerParams p;
    p.dim = dim;
    p.hidden = 0;
    p.values.assign(value_count(dim, 0), 0.0);
    return p;
}

std::vector<float> combine(const CombinerParams& params, std::span<const float> img, std::span<const float> txt) {
    const auto f = forward(params, img, txt);
    return {f.out.begin(), f.out.end()};
}

double symmetric_contrastive_loss(const std::vector<std::vector<double>>& queries,
                                  const std::vector<std::vector<double>>& targets, double temperature,
                                  std::vector<std::vector<double>>* grad_queries) {
    const std::size_t b = queries.size();
    if (b < 2 || targets.size() != b) {
        throw Error(ErrorCode::kBatchTooSmall, "contrastive loss needs B >= 2 matched pairs, got " +
                                                   std::to_string(b) + " queries and " +
                                                   std::to_string(targets.size()) + " targets");
    }
    if (!(temperature > 0.0)) throw Error(ErrorCode::kConfigInvalid, "temperature must be positive");

    std::vector<Vec> s(b, Vec(b));
    for (std::size_t i = 0; i < b; ++i) {
        if (queries[i].size() != targets[0].size() || targets[i].size() != targets[0].size()) {
            throw Error(ErrorCode::kDimensionMismatch, "contrastive loss inputs differ in dimension");
        }
        for (std::size_t j = 0; j < b; ++j) s[i][j] = nn::dot(queries[i], targets[j]) / temperature;
    }
    std::vector<Vec> rows = s;
    std::vector<Vec> cols(b, Vec(b));
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        nn::softmax(rows[i]);
        loss -= std::log(rows[i][i]);
    }
    for (std::size_t j = 0; j < b; ++j) {
        Vec col(b);
        for (std::size_t i = 0; i < b; ++i) col[i] = s[i][j];
        nn::softmax(col);
        loss -= std::log(col[j]);
        for (std::size_t i = 0; i < b; ++i) cols[i][j] = col[i];
    }
    const double scale = 0.5 / static_cast<double>(b);
    loss *= scale;

    if (grad_queries) {
        grad_queries->assign(b, Vec(targets[0].size(), 0.0));
        for (std::size_t i = 0; i < b; ++i) {
            auto& g = (*grad_queries)[i];
            for (std::size_t j = 0; j < b; ++j) {
                const double ds = scale * (rows[i][j] + cols[i][j] - (i == j ? 2.0 : 0.0)) / temperature;
                for (std::size_t k = 0; k < g.size(); ++k) g[k] += ds * targets[j][k];
            }
        }
    }
    return loss;
}

double combiner_batch_loss(const CombinerParams& params, std::span<const FeedbackTriple> batch, double temperature,
                           std::vector<double>* grad) {
    std::vector<Forward> fwd;
    fwd.reserve(batch.size());
    std::vector<Vec> queries;
    std::vector<Vec> targets;
    for (const auto& t : batch) {
        fwd.push_back(forward(params, t.ref, t.text));
        queries.push_back(fwd.back().out);
        if (t.target.size() != params.dim) {
            throw Error(ErrorCode::kDimensionMismatch, "target embedding has wrong dimension");
        }
        targets.push_back(normalized(t.target, false));
    }
    std::vector<Vec> gq;
    const double loss = symmetric_contrastive_loss(queries, targets, temperature, grad ? &gq : nullptr);
    if (grad) {
        grad->assign(params.parameter_count(), 0.0);
        for (std::size_t i = 0; i < batch.size(); ++i) backward(params, fwd[i], gq[i], *grad);
    }
    return loss;
}

CombinerTrainResult train_combiner(CombinerParams params, std::span<const FeedbackTriple> triples,
                                   const CombinerTrainConfig& config) {
    if (triples.size() < 2) {
        throw Error(ErrorCode::kInsufficientData, "combiner training needs at least 2 triples");
    }
    if (config.batch < 2) throw Error(ErrorCode::kConfigInvalid, "combiner batch must be >= 2");

    CombinerTrainResult result{std::move(params), {}};
    auto& p = result.params;
    nn::AdamW opt(p.parameter_count(), {.weight_decay = config.weight_decay});
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(triples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad;
    std::vector<FeedbackTriple> batch;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size();) {
            std::size_t end = std::min(order.size(), start + config.batch);
            if (order.size() - end == 1) ++end;  // never leave a single-triple batch behind
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(triples[order[i]]);
            const double loss = combiner_batch_loss(p, batch, config.temperature, &grad);
            if (!std::isfinite(loss)) {
                throw Error(ErrorCode::kNonFiniteLoss, "combiner loss became non-finite at epoch " +
                                                           std::to_string(epoch) + ", batch " +
                                                           std::to_string(batches));
            }
            opt.step(p.values, grad, config.lr);
            p.set_lambda(std::clamp(p.lambda(), 0.0, 1.0));
            sum += loss;
            ++batches;
            start = end;
        }
        result.loss_trace.push_back(sum / static_cast<double>(batches));
    }
    return result;
}

std::string encode_combiner(const CombinerParams& params) {
    ByteWriter w;
    w.put_bytes(kMagic);
    w.put_u32(kVersion);
    w.put_u32(static_cast<std::uint32_t>(params.dim));
    w.put_u32(static_cast<std::uint32_t>(params.hidden));
    w.put_f32(static_cast<float>(params.lambda()));
    nn::detail::put_as_f32(w, std::span<const double>(params.values).first(params.values.size() - 1));
    return std::move(w).bytes();
}

CombinerParams decode_combiner(std::string_view bytes) {
    ByteReader r(bytes);
    if (r.get_bytes(4) != kMagic) throw Error(ErrorCode::kMalformedRecord, "not a KKCM combiner file");
    const auto version = r.get_u32();
    if (version != kVersion) {
        throw Error(ErrorCode::kVersionMismatch, "KKCM version " + std::to_string(version) + " is not supported");
    }
    CombinerParams p;
    p.dim = r.get_u32();
    p.hidden = r.get_u32();
    if (p.dim == 0) throw Error(ErrorCode::kMalformedRecord, "KKCM dim is zero");
    const double lambda = r.get_f32();
    const std::size_t n = value_count(p.dim, p.hidden);
    nn::detail::require_payload(r, n - 1, "KKCM");
    p.values.assign(n, 0.0);
    nn::detail::get_from_f32(r, std::span<double>(p.values).first(n - 1));
    p.set_lambda(lambda);
    if (!r.at_end()) throw Error(ErrorCode::kMalformedRecord, "trailing bytes after KKCM payload");
    return p;
}

void save_combiner(const std::string& path, const CombinerParams& params) { write_file(path, encode_combiner(params)); }

CombinerParams load_combiner(const std::string& path) { return decode_combiner(read_file(path)); }

}  // namespace kk
