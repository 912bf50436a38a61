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

#include <arm_neon.h>

#include "kk/simd/kernels.hpp"

namespace kk::simd::neon {
namespace {

float dot(const float* a, const float* b, std::size_t dim) {
    float32x4_t acc0 = vdupq_n_f32(0.0f);
    float32x4_t acc1 = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 8 <= dim; i += 8) {
        acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
        acc1 = vfmaq_f32(acc1, vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
    }
    float acc = vaddvq_f32(vaddq_f32(acc0, acc1));
    for (; i < dim; ++i) acc += a[i] * b[i];
    return acc;
}

float norm_sq(const float* a, std::size_t dim) { return dot(a, a, dim); }

void dot_rows(const float* q, const float* rows, std::size_t n, std::size_t dim, float* out) {
    for (std::size_t r = 0; r < n; ++r) out[r] = dot(q, rows + r * dim, dim);
}

void dot_gather(const float* q, const float* base, const std::uint32_t* rows, std::size_t n, std::size_t dim,
                float* out) {
    for (std::size_t r = 0; r < n; ++r) out[r] = dot(q, base + std::size_t{rows[r]} * dim, dim);
}

void axpy(float alpha, const float* x, float* y, std::size_t dim) {
    std::size_t i = 0;
    for (; i + 4 <= dim; i += 4) vst1q_f32(y + i, vfmaq_n_f32(vld1q_f32(y + i), vld1q_f32(x + i), alpha));
    for (; i < dim; ++i) y[i] += alpha * x[i];
}

}  // namespace

const Kernels kKernels{Isa::kNeon, &dot, &norm_sq, &dot_rows, &dot_gather, &axpy};

}  // namespace kk::simd::neon
