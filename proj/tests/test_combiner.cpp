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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "kk/binary_io.hpp"
#include "kk/combiner.hpp"
#include "kk/synthetic.hpp"
#include "test_util.hpp"

namespace {

using kk::CombinerParams;
using kk::ErrorCode;

std::vector<float> gaussian(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

double norm(std::span<const float> v) {
    double s = 0.0;
    for (float x : v) s += double(x) * x;
    return std::sqrt(s);
}

TEST(Combine, GateClosedWithZeroTextReturnsNormalizedImage) {
    std::mt19937_64 rng(1);
    auto params = CombinerParams::init(16, 64, 5, 0.0);
    const auto img = gaussian(rng, 16);
    const std::vector<float> txt(16, 0.0f);
    const auto out = kk::combine(params, img, txt);
    const double n = norm(img);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(out[i], img[i] / n, 1e-6);

    const auto id_out = kk::combine(CombinerParams::identity(16), img, txt);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(id_out[i], img[i] / n, 1e-6);
}

TEST(Combine, GateClosedWithEqualInputs) {
    std::mt19937_64 rng(2);
    auto params = CombinerParams::init(16, 64, 5, 0.0);
    const auto v = gaussian(rng, 16);
    const auto out = kk::combine(params, v, v);
    const double n = norm(v);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(out[i], v[i] / n, 1e-6);
}

TEST(Combine, OutputIsAlwaysUnitNorm) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        auto params = CombinerParams::init(8, 32, trial, std::uniform_real_distribution<double>(0, 1)(rng));
        auto img = gaussian(rng, 8);
        auto txt = gaussian(rng, 8);
        if (trial % 7 == 0) std::fill(txt.begin(), txt.end(), 0.0f);
        for (auto& x : img) x *= 1000.0f;
        EXPECT_NEAR(norm(kk::combine(params, img, txt)), 1.0, 1e-5);
    }
}

TEST(Combine, DimensionMismatch) {
    auto params = CombinerParams::init(8, 32, 1);
    std::vector<float> a(8, 1.0f), b(7, 1.0f);
    EXPECT_KK_ERROR(kk::combine(params, a, b), ErrorCode::kDimensionMismatch);
    EXPECT_KK_ERROR(kk::combine(params, b, a), ErrorCode::kDimensionMismatch);
}

TEST(Combine, Deterministic) {
    std::mt19937_64 rng(4);
    auto params = CombinerParams::init(8, 32, 1);
    const auto img = gaussian(rng, 8);
    const auto txt = gaussian(rng, 8);
    EXPECT_EQ(kk::combine(params, img, txt), kk::combine(params, img, txt));
}

TEST(ContrastiveLoss, OrthogonalPairAnchor) {
    const std::vector<std::vector<double>> q{{1, 0}, {0, 1}};
    const double loss = kk::symmetric_contrastive_loss(q, q, 1.0);
    EXPECT_NEAR(loss, -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0)), 1e-12);
    EXPECT_NEAR(loss, 0.3133, 1e-4);
}

TEST(ContrastiveLoss, UniformSimilarityGivesLog2) {
    const std::vector<std::vector<double>> q{{1, 0}, {1, 0}};
    const std::vector<std::vector<double>> t{{0.6, 0.8}, {0.6, 0.8}};
    EXPECT_NEAR(kk::symmetric_contrastive_loss(q, t, 0.07), std::log(2.0), 1e-12);
}

TEST(ContrastiveLoss, InvariantUnderJointPermutation) {
    std::mt19937_64 rng(5);
    std::vector<std::vector<double>> q(6), t(6);
    for (std::size_t i = 0; i < 6; ++i) {
        auto a = gaussian(rng, 4);
        auto b = gaussian(rng, 4);
        const double na = norm(a), nb = norm(b);
        for (std::size_t k = 0; k < 4; ++k) {
            q[i].push_back(a[k] / na);
            t[i].push_back(b[k] / nb);
        }
    }
    const double base = kk::symmetric_contrastive_loss(q, t, 0.1);
    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    std::vector<std::vector<double>> qp, tp;
    for (auto i : perm) {
        qp.push_back(q[i]);
        tp.push_back(t[i]);
    }
    EXPECT_NEAR(kk::symmetric_contrastive_loss(qp, tp, 0.1), base, 1e-12);
}

TEST(ContrastiveLoss, MatchesDirectEvaluation) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t b = 2 + trial % 5;
        std::vector<std::vector<double>> q(b), t(b);
        for (std::size_t i = 0; i < b; ++i) {
            for (int k = 0; k < 3; ++k) {
                q[i].push_back(std::normal_distribution<double>()(rng));
                t[i].push_back(std::normal_distribution<double>()(rng));
            }
        }
        const double tau = 0.5;
        double rows = 0.0, cols = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
            double zr = 0.0, zc = 0.0;
            for (std::size_t j = 0; j < b; ++j) {
                double sij = 0.0, sji = 0.0;
                for (int k = 0; k < 3; ++k) {
                    sij += q[i][k] * t[j][k];
                    sji += q[j][k] * t[i][k];
                }
                zr += std::exp(sij / tau);
                zc += std::exp(sji / tau);
            }
            double sii = 0.0;
            for (int k = 0; k < 3; ++k) sii += q[i][k] * t[i][k];
            rows += std::log(zr) - sii / tau;
            cols += std::log(zc) - sii / tau;
        }
        const double expected = 0.5 * (rows + cols) / double(b);
        EXPECT_NEAR(kk::symmetric_contrastive_loss(q, t, tau), expected, 1e-10);
    }
}

TEST(ContrastiveLoss, BatchTooSmall) {
    const std::vector<std::vector<double>> one{{1, 0}};
    EXPECT_KK_ERROR(kk::symmetric_contrastive_loss(one, one, 1.0), ErrorCode::kBatchTooSmall);
}

TEST(ContrastiveLoss, QueryGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    std::vector<std::vector<double>> q(4, std::vector<double>(3)), t(4, std::vector<double>(3));
    for (auto* m : {&q, &t}) {
        for (auto& row : *m) {
            for (auto& x : row) x = std::normal_distribution<double>()(rng);
        }
    }
    std::vector<std::vector<double>> grad;
    kk::symmetric_contrastive_loss(q, t, 0.2, &grad);
    std::vector<double> flat, analytic;
    for (std::size_t i = 0; i < 4; ++i) {
        flat.insert(flat.end(), q[i].begin(), q[i].end());
        analytic.insert(analytic.end(), grad[i].begin(), grad[i].end());
    }
    auto loss = [&] {
        for (std::size_t i = 0; i < 4; ++i) std::copy(flat.begin() + 3 * i, flat.begin() + 3 * i + 3, q[i].begin());
        return kk::symmetric_contrastive_loss(q, t, 0.2);
    };
    EXPECT_EQ(kk::test::check_gradient(flat, analytic, loss).failures, 0u);
}

TEST(CombinerTraining, ParameterGradientMatchesFiniteDifferences) {
    auto triples = kk::synthetic::feedback_triples(5, 8, 21);
    auto params = CombinerParams::init(8, 32, 9, 0.5);
    std::vector<double> grad;
    kk::combiner_batch_loss(params, triples, 0.07, &grad);
    auto loss = [&] { return kk::combiner_batch_loss(params, triples, 0.07); };
    const auto report = kk::test::check_gradient(params.values, grad, loss);
    EXPECT_EQ(report.checked, params.parameter_count());
    EXPECT_EQ(report.failures, 0u) << "worst rel " << report.worst_rel << " at " << report.worst_index;
}

TEST(CombinerTraining, LossHalvesOnSeparableTask) {
    const auto triples = kk::synthetic::feedback_triples(200, 32, 3);
    const auto result = kk::train_combiner(CombinerParams::init(32, 128, 3), triples, {});
    ASSERT_FALSE(result.loss_trace.empty());
    EXPECT_LT(result.loss_trace.back(), 0.5 * result.loss_trace.front());
    EXPECT_GE(result.params.lambda(), 0.0);
    EXPECT_LE(result.params.lambda(), 1.0);
}

TEST(CombinerTraining, ZeroEpochsIsANoOp) {
    const auto triples = kk::synthetic::feedback_triples(10, 8, 3);
    const auto init = CombinerParams::init(8, 32, 3);
    kk::CombinerTrainConfig cfg;
    cfg.epochs = 0;
    const auto result = kk::train_combiner(init, triples, cfg);
    EXPECT_TRUE(result.loss_trace.empty());
    EXPECT_EQ(result.params.values, init.values);
}

TEST(CombinerTraining, SameSeedSameTrace) {
    const auto triples = kk::synthetic::feedback_triples(40, 8, 3);
    kk::CombinerTrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch = 8;
    const auto a = kk::train_combiner(CombinerParams::init(8, 32, 3), triples, cfg);
    const auto b = kk::train_combiner(CombinerParams::init(8, 32, 3), triples, cfg);
    EXPECT_EQ(a.loss_trace, b.loss_trace);
    EXPECT_EQ(a.params.values, b.params.values);
}

TEST(CombinerTraining, InsufficientData) {
    const auto triples = kk::synthetic::feedback_triples(1, 8, 3);
    EXPECT_KK_ERROR(kk::train_combiner(CombinerParams::init(8, 32, 3), triples, {}), ErrorCode::kInsufficientData);
}

TEST(CombinerTraining, NonFiniteInputsAbort) {
    auto triples = kk::synthetic::feedback_triples(4, 8, 3);
    triples[2].target[0] = std::numeric_limits<float>::infinity();
    kk::CombinerTrainConfig cfg;
    cfg.epochs = 1;
    EXPECT_KK_ERROR(kk::train_combiner(CombinerParams::init(8, 32, 3), triples, cfg), ErrorCode::kZeroVector);
    triples = kk::synthetic::feedback_triples(4, 8, 3);
    auto params = CombinerParams::init(8, 32, 3);
    params.values[params.b2_offset()] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_KK_ERROR(kk::train_combiner(params, triples, cfg), ErrorCode::kNonFiniteLoss);
}

TEST(CombinerFormat, RoundTripAndHeader) {
    auto params = CombinerParams::init(8, 16, 4, 0.25);
    const auto bytes = kk::encode_combiner(params);
    EXPECT_EQ(bytes.substr(0, 4), "KKCM");
    EXPECT_EQ(bytes.size(), 4u + 4 + 4 + 4 + 4 + 4 * (params.parameter_count() - 1));
    const auto back = kk::decode_combiner(bytes);
    EXPECT_EQ(back.dim, 8u);
    EXPECT_EQ(back.hidden, 16u);
    EXPECT_DOUBLE_EQ(back.lambda(), 0.25);
    for (std::size_t i = 0; i < params.parameter_count(); ++i) {
        EXPECT_EQ(back.values[i], double(float(params.values[i])));
    }
    EXPECT_EQ(kk::encode_combiner(back), bytes);

    EXPECT_KK_ERROR(kk::decode_combiner(bytes.substr(0, bytes.size() - 3)), ErrorCode::kTruncatedInput);
    auto bad = bytes;
    bad[4] = 9;
    EXPECT_KK_ERROR(kk::decode_combiner(bad), ErrorCode::kVersionMismatch);
    bad = bytes;
    bad[0] = 'X';
    EXPECT_KK_ERROR(kk::decode_combiner(bad), ErrorCode::kMalformedRecord);
    EXPECT_KK_ERROR(kk::decode_combiner(bytes + "x"), ErrorCode::kMalformedRecord);
}

}  // namespace
