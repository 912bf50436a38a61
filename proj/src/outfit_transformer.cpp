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

#include "kk/outfit_transformer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

#include "kk/binary_io.hpp"
#include "kk/error.hpp"
#include "kk/nn/ops.hpp"
#include "kk/nn/optim.hpp"
#include "nn/param_io.hpp"

namespace kk {

namespace {

constexpr std::string_view kMagic = "KKTF";
constexpr std::uint32_t kVersion = 1;

using nn::Vec;

struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

struct LayerOffsets {
    std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
};

struct Layout {
    std::size_t pos = 0;
    std::size_t out_tok = 0;
    std::size_t un_tok = 0;
    std::vector<LayerOffsets> layers;
    std::size_t total = 0;
};

Layout layout_of(const TransformerConfig& c) {
    const std::size_t d = c.dim;
    const std::size_t f = c.ffn_dim();
    Layout l;
    std::size_t at = 0;
    auto take = [&](std::size_t n) {
        const std::size_t o = at;
        at += n;
        return o;
    };
    l.pos = take(c.slots * d);
    l.out_tok = take(d);
    l.un_tok = take(d);
    for (std::size_t i = 0; i < c.layers; ++i) {
        LayerOffsets o{};
        o.ln1_g = take(d);
        o.ln1_b = take(d);
        o.wq = take(d * d);
        o.bq = take(d);
        o.wk = take(d * d);
        o.bk = take(d);
        o.wv = take(d * d);
        o.bv = take(d);
        o.wo = take(d * d);
        o.bo = take(d);
        o.ln2_g = take(d);
        o.ln2_b = take(d);
        o.w1 = take(f * d);
        o.b1 = take(f);
        o.w2 = take(d * f);
        o.b2 = take(d);
        l.layers.push_back(o);
    }
    l.total = at;
    return l;
}

struct LayerTrace {
    Mat xhat1;
    Vec rstd1;
    Mat a;
    Mat q, k, v;
    std::vector<Mat> probs;  // per head, L x L
    Mat ctx;
    Mat x1;
    Mat xhat2;
    Vec rstd2;
    Mat b;
    Mat z;
    Mat g;
};

struct Trace {
    std::vector<LayerTrace> layers;
    Mat out;
};

void check_sample(const TransformerParams& p, const OutfitSample& s) {
    const auto& c = p.config;
    if (s.slots.size() != c.slots) {
        throw Error(ErrorCode::kShapeMismatch, "sample has " + std::to_string(s.slots.size()) +
                                                   " slots, model expects " + std::to_string(c.slots));
    }
    for (const auto& slot : s.slots) {
        if (slot.role == SlotRole::kInput && slot.embedding.size() != c.dim) {
            throw Error(ErrorCode::kShapeMismatch, "input slot embedding has " +
                                                       std::to_string(slot.embedding.size()) + " values, model dim is " +
                                                       std::to_string(c.dim));
        }
    }
}

Mat build_inputs(const TransformerParams& p, const OutfitSample& s) {
    check_sample(p, s);
    const auto& c = p.config;
    Mat x(c.slots, c.dim);
    for (std::size_t i = 0; i < c.slots; ++i) {
        const auto& slot = s.slots[i];
        std::span<const double> src = slot.role == SlotRole::kInput ? std::span<const double>(slot.embedding)
                                      : slot.role == SlotRole::kOut ? p.out_token()
                                                                    : p.un_token();
        const auto pos = p.positional(i);
        auto row = x.row(i);
        for (std::size_t d = 0; d < c.dim; ++d) row[d] = src[d] + pos[d];
    }
    return x;
}

void forward_layer(const TransformerParams& p, const LayerOffsets& o, LayerTrace& t, Mat& x) {
    const auto& c = p.config;
    const std::size_t L = c.slots, d = c.dim, f = c.ffn_dim(), H = c.heads, dh = d / H;
    const std::span<const double> w(p.values);
    t.xhat1 = Mat(L, d);
    t.rstd1.assign(L, 0.0);
    t.a = Mat(L, d);
    for (std::size_t i = 0; i < L; ++i) {
        t.rstd1[i] = nn::layer_norm(x.row(i), w.subspan(o.ln1_g, d), w.subspan(o.ln1_b, d), t.xhat1.row(i), t.a.row(i));
    }
    t.q = Mat(L, d);
    t.k = Mat(L, d);
    t.v = Mat(L, d);
    for (std::size_t i = 0; i < L; ++i) {
        nn::linear(w.subspan(o.wq, d * d), w.subspan(o.bq, d), t.a.row(i), t.q.row(i));
        nn::linear(w.subspan(o.wk, d * d), w.subspan(o.bk, d), t.a.row(i), t.k.row(i));
        nn::linear(w.subspan(o.wv, d * d), w.subspan(o.bv, d), t.a.row(i), t.v.row(i));
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    t.probs.assign(H, Mat(L, L));
    t.ctx = Mat(L, d);
    for (std::size_t h = 0; h < H; ++h) {
        const std::size_t off = h * dh;
        auto& P = t.probs[h];
        for (std::size_t i = 0; i < L; ++i) {
            auto prow = P.row(i);
            for (std::size_t j = 0; j < L; ++j) {
                double s = 0.0;
                for (std::size_t e = 0; e < dh; ++e) s += t.q.row(i)[off + e] * t.k.row(j)[off + e];
                prow[j] = s * scale;
            }
            nn::softmax(prow);
            auto crow = t.ctx.row(i);
            for (std::size_t j = 0; j < L; ++j) {
                for (std::size_t e = 0; e < dh; ++e) crow[off + e] += prow[j] * t.v.row(j)[off + e];
            }
        }
    }
    t.x1 = x;
    Vec o_row(d);
    for (std::size_t i = 0; i < L; ++i) {
        nn::linear(w.subspan(o.wo, d * d), w.subspan(o.bo, d), t.ctx.row(i), o_row);
        auto xr = t.x1.row(i);
        for (std::size_t e = 0; e < d; ++e) xr[e] += o_row[e];
    }
    t.xhat2 = Mat(L, d);
    t.rstd2.assign(L, 0.0);
    t.b = Mat(L, d);
    t.z = Mat(L, f);
    t.g = Mat(L, f);
    x = t.x1;
    Vec f_row(d);
    for (std::size_t i = 0; i < L; ++i) {
        t.rstd2[i] =
            nn::layer_norm(t.x1.row(i), w.subspan(o.ln2_g, d), w.subspan(o.ln2_b, d), t.xhat2.row(i), t.b.row(i));
        nn::linear(w.subspan(o.w1, f * d), w.subspan(o.b1, f), t.b.row(i), t.z.row(i));
        for (std::size_t e = 0; e < f; ++e) t.g.row(i)[e] = nn::gelu(t.z.row(i)[e]);
        nn::linear(w.subspan(o.w2, d * f), w.subspan(o.b2, d), t.g.row(i), f_row);
        auto xr = x.row(i);
        for (std::size_t e = 0; e < d; ++e) xr[e] += f_row[e];
    }
}

// dx holds dL/d(layer output) on entry and dL/d(layer input) on exit.
void backward_layer(const TransformerParams& p, const LayerOffsets& o, const LayerTrace& t, Mat& dx,
                    std::span<double> grad) {
    const auto& c = p.config;
    const std::size_t L = c.slots, d = c.dim, f = c.ffn_dim(), H = c.heads, dh = d / H;
    const std::span<const double> w(p.values);

    // feed-forward sublayer; the residual passes dx through unchanged
    Mat dx1 = dx;
    Vec dg(f), db(d);
    for (std::size_t i = 0; i < L; ++i) {
        std::fill(dg.begin(), dg.end(), 0.0);
        nn::linear_backward(w.subspan(o.w2, d * f), t.g.row(i), dx.row(i), grad.subspan(o.w2, d * f),
                            grad.subspan(o.b2, d), dg);
        for (std::size_t e = 0; e < f; ++e) dg[e] *= nn::gelu_grad(t.z.row(i)[e]);
        std::fill(db.begin(), db.end(), 0.0);
        nn::linear_backward(w.subspan(o.w1, f * d), t.b.row(i), dg, grad.subspan(o.w1, f * d), grad.subspan(o.b1, f),
                            db);
        nn::layer_norm_backward(t.xhat2.row(i), t.rstd2[i], w.subspan(o.ln2_g, d), db, grad.subspan(o.ln2_g, d),
                                grad.subspan(o.ln2_b, d), dx1.row(i));
    }

    // attention sublayer
    Mat dctx(L, d);
    for (std::size_t i = 0; i < L; ++i) {
        nn::linear_backward(w.subspan(o.wo, d * d), t.ctx.row(i), dx1.row(i), grad.subspan(o.wo, d * d),
                            grad.subspan(o.bo, d), dctx.row(i));
    }
    Mat dq(L, d), dk(L, d), dv(L, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Vec dp(L);
    for (std::size_t h = 0; h < H; ++h) {
        const std::size_t off = h * dh;
        const auto& P = t.probs[h];
        for (std::size_t i = 0; i < L; ++i) {
            const auto prow = P.row(i);
            const auto dc = dctx.row(i);
            double dot_pd = 0.0;
            for (std::size_t j = 0; j < L; ++j) {
                double s = 0.0;
                for (std::size_t e = 0; e < dh; ++e) {
                    s += dc[off + e] * t.v.row(j)[off + e];
                    dv.row(j)[off + e] += prow[j] * dc[off + e];
                }
                dp[j] = s;
                dot_pd += prow[j] * s;
            }
            for (std::size_t j = 0; j < L; ++j) {
                const double ds = prow[j] * (dp[j] - dot_pd) * scale;
                if (ds == 0.0) continue;
                for (std::size_t e = 0; e < dh; ++e) {
                    dq.row(i)[off + e] += ds * t.k.row(j)[off + e];
                    dk.row(j)[off + e] += ds * t.q.row(i)[off + e];
                }
            }
        }
    }
    dx = dx1;
    Vec da(d);
    for (std::size_t i = 0; i < L; ++i) {
        std::fill(da.begin(), da.end(), 0.0);
        nn::linear_backward(w.subspan(o.wq, d * d), t.a.row(i), dq.row(i), grad.subspan(o.wq, d * d),
                            grad.subspan(o.bq, d), da);
        nn::linear_backward(w.subspan(o.wk, d * d), t.a.row(i), dk.row(i), grad.subspan(o.wk, d * d),
                            grad.subspan(o.bk, d), da);
        nn::linear_backward(w.subspan(o.wv, d * d), t.a.row(i), dv.row(i), grad.subspan(o.wv, d * d),
                            grad.subspan(o.bv, d), da);
        nn::layer_norm_backward(t.xhat1.row(i), t.rstd1[i], w.subspan(o.ln1_g, d), da, grad.subspan(o.ln1_g, d),
                                grad.subspan(o.ln1_b, d), dx.row(i));
    }
}

Trace run_forward(const TransformerParams& p, const OutfitSample& s) {
    const Layout lay = layout_of(p.config);
    Trace tr;
    Mat x = build_inputs(p, s);
    tr.layers.resize(p.config.layers);
    for (std::size_t l = 0; l < p.config.layers; ++l) forward_layer(p, lay.layers[l], tr.layers[l], x);
    tr.out = std::move(x);
    return tr;
}

// Accumulates parameter gradients into `grad`; returns dL/d(encoder input).
Mat run_backward(const TransformerParams& p, const OutfitSample& s, const Trace& tr, Mat dy, std::span<double> grad) {
    const Layout lay = layout_of(p.config);
    for (std::size_t l = p.config.layers; l-- > 0;) backward_layer(p, lay.layers[l], tr.layers[l], dy, grad);
    const std::size_t d = p.config.dim;
    for (std::size_t i = 0; i < p.config.slots; ++i) {
        const auto row = dy.row(i);
        for (std::size_t e = 0; e < d; ++e) grad[lay.pos + i * d + e] += row[e];
        const auto role = s.slots[i].role;
        if (role == SlotRole::kInput) continue;
        const std::size_t tok = role == SlotRole::kOut ? lay.out_tok : lay.un_tok;
        for (std::size_t e = 0; e < d; ++e) grad[tok + e] += row[e];
    }
    return dy;
}

std::vector<std::vector<double>> to_rows(const Mat& m) {
    std::vector<std::vector<double>> out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) out[i].assign(m.row(i).begin(), m.row(i).end());
    return out;
}

void check_entries(std::span<const OutfitEntry> entries) {
    if (entries.empty()) throw Error(ErrorCode::kEmptyOutfit, "outfit has no items");
    std::set<Category> seen;
    for (const auto& e : entries) {
        if (!seen.insert(e.category).second) {
            throw Error(ErrorCode::kDuplicateCategory,
                        "outfit has more than one item in category " + std::string(name_of(e.category)));
        }
    }
}

OutfitSample empty_sample(std::size_t slots) {
    if (slots < kNumCategories) {
        throw Error(ErrorCode::kShapeMismatch, "need at least " + std::to_string(kNumCategories) + " slots");
    }
    OutfitSample s;
    s.slots.resize(slots);
    for (std::size_t i = 0; i < slots; ++i) s.slots[i].category = i;
    return s;
}

}  // namespace

std::string_view to_string(SlotRole role) noexcept {
    switch (role) {
        case SlotRole::kInput: return "INPUT";
        case SlotRole::kOut: return "OUT";
        case SlotRole::kUn: return "UN";
    }
    return "UNKNOWN";
}

std::size_t OutfitSample::count(SlotRole role) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(slots.begin(), slots.end(), [role](const Slot& s) { return s.role == role; }));
}

std::vector<OutfitRecord> parse_outfit_records(std::string_view jsonl) {
    std::vector<OutfitRecord> out;
    std::size_t line_no = 0;
    while (!jsonl.empty()) {
        const auto nl = jsonl.find('\n');
        std::string_view line = jsonl.substr(0, nl);
        jsonl = nl == std::string_view::npos ? std::string_view{} : jsonl.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            OutfitRecord r;
            r.outfit_id = j.at("outfit_id").get<std::string>();
            for (const auto& item : j.at("items")) {
                r.items.emplace_back(item.at("id").get<std::string>(), item.at("category").get<std::string>());
            }
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::kMalformedRecord, "outfit line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string encode_outfit_records(const std::vector<OutfitRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        nlohmann::json j;
        j["outfit_id"] = r.outfit_id;
        j["items"] = nlohmann::json::array();
        for (const auto& [id, category] : r.items) j["items"].push_back({{"id", id}, {"category", category}});
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<OutfitEntry> resolve_outfit(const Catalog& catalog, const OutfitRecord& record) {
    std::vector<OutfitEntry> entries;
    for (const auto& [id, category_name] : record.items) {
        const auto category = parse_category(category_name);
        if (!category) {
            throw Error(ErrorCode::kUnknownCategory,
                        "outfit " + record.outfit_id + ": item " + id + " has category " + category_name);
        }
        const Item& item = catalog.at(id);
        if (item.category != *category) {
            throw Error(ErrorCode::kMalformedRecord, "outfit " + record.outfit_id + ": item " + id +
                                                         " is listed as " + category_name + " but the catalog says " +
                                                         std::string(name_of(item.category)));
        }
        const auto emb = catalog.embedding(item);
        entries.push_back({item.category, item.id, {emb.begin(), emb.end()}});
    }
    check_entries(entries);
    return entries;
}

OutfitSample split_training_roles(std::span<const OutfitEntry> entries, std::uint32_t input_mask, std::size_t slots) {
    check_entries(entries);
    const std::uint32_t full = (std::uint32_t{1} << entries.size()) - 1;
    if ((input_mask & full) == 0 || (input_mask & full) == full) {
        throw Error(ErrorCode::kConfigInvalid, "input mask must select a non-empty strict subset");
    }
    OutfitSample s = empty_sample(slots);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto& slot = s.slots[index_of(entries[i].category)];
        slot.embedding.assign(entries[i].embedding.begin(), entries[i].embedding.end());
        if (input_mask & (std::uint32_t{1} << i)) {
            slot.role = SlotRole::kInput;
        } else {
            slot.role = SlotRole::kOut;
            slot.ground_truth_id = entries[i].id;
        }
    }
    return s;
}

std::optional<OutfitSample> split_training_roles(std::span<const OutfitEntry> entries, std::mt19937_64& rng,
                                                 std::size_t slots) {
    check_entries(entries);
    if (entries.size() < 2) return std::nullopt;
    const std::uint32_t full = (std::uint32_t{1} << entries.size()) - 1;
    std::uniform_int_distribution<std::uint32_t> pick(1, full - 1);
    return split_training_roles(entries, pick(rng), slots);
}

OutfitSample split_inference_roles(const OutfitEntry& ref, std::span<const Category> targets, std::size_t slots) {
    OutfitSample s = empty_sample(slots);
    for (auto c : targets) {
        if (c == ref.category) {
            throw Error(ErrorCode::kRefInTargets,
                        "reference category " + std::string(name_of(c)) + " is also a target");
        }
        s.slots[index_of(c)].role = SlotRole::kOut;
    }
    auto& r = s.slots[index_of(ref.category)];
    r.role = SlotRole::kInput;
    r.embedding.assign(ref.embedding.begin(), ref.embedding.end());
    return s;
}

void TransformerConfig::validate() const {
    if (dim == 0 || heads == 0 || dim % heads != 0) {
        throw Error(ErrorCode::kConfigInvalid,
                    "dim " + std::to_string(dim) + " must be a positive multiple of heads " + std::to_string(heads));
    }
    if (slots == 0) throw Error(ErrorCode::kConfigInvalid, "slots must be positive");
}

TransformerParams TransformerParams::init(const TransformerConfig& config, std::uint64_t seed) {
    config.validate();
    const Layout lay = layout_of(config);
    TransformerParams p;
    p.config = config;
    p.values.assign(lay.total, 0.0);
    std::mt19937_64 rng(seed);
    const std::size_t d = config.dim;
    const std::size_t f = config.ffn_dim();
    auto fill = [&](std::size_t at, std::size_t n, double bound) {
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < n; ++i) p.values[at + i] = u(rng);
    };
    const double unit = 1.0 / std::sqrt(static_cast<double>(d));
    fill(lay.pos, config.slots * d, unit);
    fill(lay.out_tok, d, unit);
    fill(lay.un_tok, d, unit);
    for (const auto& o : lay.layers) {
        std::fill_n(p.values.begin() + static_cast<std::ptrdiff_t>(o.ln1_g), d, 1.0);
        std::fill_n(p.values.begin() + static_cast<std::ptrdiff_t>(o.ln2_g), d, 1.0);
        for (auto w : {o.wq, o.wk, o.wv, o.wo}) fill(w, d * d, unit);
        fill(o.w1, f * d, unit);
        fill(o.w2, d * f, 1.0 / std::sqrt(static_cast<double>(f)));
    }
    return p;
}

std::span<const double> TransformerParams::positional(std::size_t slot) const {
    return std::span<const double>(values).subspan(slot * config.dim, config.dim);
}

std::span<const double> TransformerParams::out_token() const {
    return std::span<const double>(values).subspan(config.slots * config.dim, config.dim);
}

std::span<const double> TransformerParams::un_token() const {
    return std::span<const double>(values).subspan((config.slots + 1) * config.dim, config.dim);
}

std::vector<std::vector<double>> encoder_inputs(const TransformerParams& params, const OutfitSample& sample) {
    return to_rows(build_inputs(params, sample));
}

std::vector<std::vector<double>> encoder_forward(const TransformerParams& params, const OutfitSample& sample) {
    return to_rows(run_forward(params, sample).out);
}

EncoderGradients encoder_backward(const TransformerParams& params, const OutfitSample& sample,
                                  const std::vector<std::vector<double>>& d_outputs) {
    const auto tr = run_forward(params, sample);
    const auto& c = params.config;
    if (d_outputs.size() != c.slots) throw Error(ErrorCode::kShapeMismatch, "output gradient has wrong slot count");
    Mat dy(c.slots, c.dim);
    for (std::size_t i = 0; i < c.slots; ++i) {
        if (d_outputs[i].size() != c.dim) throw Error(ErrorCode::kShapeMismatch, "output gradient has wrong dim");
        std::copy(d_outputs[i].begin(), d_outputs[i].end(), dy.row(i).begin());
    }
    EncoderGradients g;
    g.params.assign(params.parameter_count(), 0.0);
    g.inputs = to_rows(run_backward(params, sample, tr, std::move(dy), g.params));
    return g;
}

double nce_loss(const std::vector<std::vector<double>>& preds, const std::vector<std::vector<double>>& positives,
                const std::vector<std::vector<std::vector<double>>>& negatives,
                std::vector<std::vector<double>>* grad_preds) {
    const std::size_t n = preds.size();
    if (n == 0 || positives.size() != n || negatives.size() != n) {
        throw Error(ErrorCode::kShapeMismatch, "nce_loss needs N >= 1 aligned preds, positives and negative sets");
    }
    if (grad_preds) grad_preds->assign(n, {});
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (negatives[i].empty()) {
            throw Error(ErrorCode::kEmptyNegativeSet, "negative set " + std::to_string(i) + " is empty");
        }
        const auto& p = preds[i];
        if (positives[i].size() != p.size()) throw Error(ErrorCode::kShapeMismatch, "positive has wrong dim");
        const double sp = nn::cosine(p, positives[i]);
        double sn = 0.0;
        for (const auto& neg : negatives[i]) {
            if (neg.size() != p.size()) throw Error(ErrorCode::kShapeMismatch, "negative has wrong dim");
            sn += nn::cosine(p, neg);
        }
        // -log(e^sp / (e^sp + e^sn)) = softplus(sn - sp)
        total += nn::softplus(sn - sp);
        if (grad_preds) {
            auto& g = (*grad_preds)[i];
            g.assign(p.size(), 0.0);
            const double w = nn::sigmoid(sn - sp) / static_cast<double>(n);
            nn::cosine_backward_a(p, positives[i], -w, g);
            for (const auto& neg : negatives[i]) nn::cosine_backward_a(p, neg, w, g);
        }
    }
    const double loss = total / static_cast<double>(n);
    if (!std::isfinite(loss)) throw Error(ErrorCode::kNonFinite, "nce_loss is not finite");
    return loss;
}

double batch_nce_loss(const TransformerParams& params, std::span<const TrainingExample> batch,
                      std::vector<double>* grad) {
    std::vector<Trace> traces;
    traces.reserve(batch.size());
    std::vector<std::vector<double>> preds, positives;
    std::vector<std::vector<std::vector<double>>> negatives;
    for (const auto& ex : batch) {
        traces.push_back(run_forward(params, ex.sample));
        for (const auto& t : ex.targets) {
            const auto row = traces.back().out.row(t.slot);
            preds.emplace_back(row.begin(), row.end());
            positives.push_back(t.positive);
            negatives.push_back(t.negatives);
        }
    }
    std::vector<std::vector<double>> gp;
    const double loss = nce_loss(preds, positives, negatives, grad ? &gp : nullptr);
    if (grad) {
        grad->assign(params.parameter_count(), 0.0);
        std::size_t k = 0;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            Mat dy(params.config.slots, params.config.dim);
            for (const auto& t : batch[b].targets) {
                auto row = dy.row(t.slot);
                for (std::size_t e = 0; e < row.size(); ++e) row[e] += gp[k][e];
                ++k;
            }
            run_backward(params, batch[b].sample, traces[b], std::move(dy), *grad);
        }
    }
    return loss;
}

std::vector<std::size_t> sample_negatives(const Catalog& catalog, Category category, std::size_t positive_row,
                                          std::size_t count, std::mt19937_64& rng) {
    const auto& rows = catalog.category_rows(category);
    std::vector<std::size_t> pool;
    pool.reserve(rows.size());
    for (auto r : rows) {
        if (r != positive_row) pool.push_back(r);
    }
    const std::size_t k = std::min(count, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}

TransformerTrainResult train_transformer(TransformerParams params, const Catalog& catalog,
                                         std::span<const std::vector<OutfitEntry>> outfits,
                                         const TransformerTrainConfig& config) {
    params.config.validate();
    if (config.batch == 0 || config.negatives == 0) {
        throw Error(ErrorCode::kConfigInvalid, "batch and negatives must be positive");
    }
    if (catalog.store().dim() != params.config.dim) {
        throw Error(ErrorCode::kDimensionMismatch, "catalog dim differs from model dim");
    }
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < outfits.size(); ++i) {
        check_entries(outfits[i]);
        if (outfits[i].size() >= 2) usable.push_back(i);
    }
    TransformerTrainResult result{std::move(params), {}, outfits.size() - usable.size()};
    if (result.skipped_outfits > 0) {
        std::cerr << "warning: skipping " << result.skipped_outfits
                  << " single-item outfit(s); an outfit needs two items to yield INPUT and OUT roles\n";
    }
    if (usable.empty()) throw Error(ErrorCode::kInsufficientData, "no outfit with at least two items");

    auto& p = result.params;
    nn::AdamW opt(p.parameter_count(), {.weight_decay = config.weight_decay});
    const nn::StepLR sched(config.lr, config.step_size, config.gamma);
    std::mt19937_64 rng(config.seed);
    std::vector<double> grad;
    std::vector<TrainingExample> batch;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(usable.begin(), usable.end(), rng);
        const double lr = sched.lr_at(epoch);
        double sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < usable.size(); start += config.batch) {
            batch.clear();
            for (std::size_t i = start; i < std::min(usable.size(), start + config.batch); ++i) {
                const auto& outfit = outfits[usable[i]];
                auto sample = split_training_roles(outfit, rng, p.config.slots);
                TrainingExample ex{std::move(*sample), {}};
                for (std::size_t s = 0; s < ex.sample.slots.size(); ++s) {
                    const auto& slot = ex.sample.slots[s];
                    if (slot.role != SlotRole::kOut) continue;
                    const Item& item = catalog.at(*slot.ground_truth_id);
                    const auto neg_rows =
                        sample_negatives(catalog, item.category, item.embedding_row, config.negatives, rng);
                    if (neg_rows.empty()) continue;  // no same-category negative exists
                    OutTarget t{s, slot.embedding, {}};
                    for (auto r : neg_rows) {
                        const auto v = catalog.store().row(r);
                        t.negatives.emplace_back(v.begin(), v.end());
                    }
                    ex.targets.push_back(std::move(t));
                }
                if (!ex.targets.empty()) batch.push_back(std::move(ex));
            }
            if (batch.empty()) continue;
            double loss = std::numeric_limits<double>::quiet_NaN();
            try {
                loss = batch_nce_loss(p, batch, &grad);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::kNonFinite) throw;
            }
            if (!std::isfinite(loss)) {
                throw Error(ErrorCode::kNonFiniteLoss, "transformer loss became non-finite at epoch " +
                                                           std::to_string(epoch));
            }
            opt.step(p.values, grad, lr);
            sum += loss;
            ++batches;
        }
        if (batches == 0) {
            throw Error(ErrorCode::kInsufficientData, "no OUT item has a same-category negative");
        }
        result.loss_trace.push_back(sum / static_cast<double>(batches));
    }
    return result;
}

std::map<Category, std::vector<float>> recommend_embeddings(const TransformerParams& params, const OutfitEntry& ref,
                                                            std::span<const Category> targets) {
    const auto sample = split_inference_roles(ref, targets, params.config.slots);
    const auto out = run_forward(params, sample).out;
    std::map<Category, std::vector<float>> result;
    for (auto c : targets) {
        const auto row = out.row(index_of(c));
        const double n = nn::l2_norm(row);
        if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::kNonFinite, "predicted embedding is degenerate");
        std::vector<float> v(row.size());
        for (std::size_t e = 0; e < row.size(); ++e) v[e] = static_cast<float>(row[e] / n);
        result.emplace(c, std::move(v));
    }
    return result;
}

std::string encode_transformer(const TransformerParams& params) {
    const auto& c = params.config;
    ByteWriter w;
    w.put_bytes(kMagic);
    w.put_u32(kVersion);
    for (auto v : {c.dim, c.slots, c.layers, c.heads, c.ffn_dim()}) w.put_u32(static_cast<std::uint32_t>(v));
    nn::detail::put_as_f32(w, params.values);
    return std::move(w).bytes();
}

TransformerParams decode_transformer(std::string_view bytes) {
    ByteReader r(bytes);
    if (r.get_bytes(4) != kMagic) throw Error(ErrorCode::kMalformedRecord, "not a KKTF transformer file");
    const auto version = r.get_u32();
    if (version != kVersion) {
        throw Error(ErrorCode::kVersionMismatch, "KKTF version " + std::to_string(version) + " is not supported");
    }
    TransformerParams p;
    p.config.dim = r.get_u32();
    p.config.slots = r.get_u32();
    p.config.layers = r.get_u32();
    p.config.heads = r.get_u32();
    p.config.ffn = r.get_u32();
    try {
        p.config.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::kMalformedRecord, std::string("KKTF header: ") + e.what());
    }
    if (p.config.ffn == 0 || p.config.dim > (1u << 16) || p.config.ffn > (1u << 18) || p.config.slots > 64 || p.config.layers > 256) {
        throw Error(ErrorCode::kMalformedRecord, "KKTF header has implausible shapes");
    }
    const auto total = layout_of(p.config).total;
    nn::detail::require_payload(r, total, "KKTF");
    p.values.assign(total, 0.0);
    nn::detail::get_from_f32(r, p.values);
    if (!r.at_end()) throw Error(ErrorCode::kMalformedRecord, "trailing bytes after KKTF payload");
    return p;
}

void save_transformer(const std::string& path, const TransformerParams& params) {
    write_file(path, encode_transformer(params));
}

TransformerParams load_transformer(const std::string& path) { return decode_transformer(read_file(path)); }

}  // namespace kk
