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

// Compiled with -mavx2 -mfma; only reached when the CPU reports both.
#include <immintrin.h>

#include "kk/simd/kernels.hpp"

namespace kk::simd::avx2 {
namespace {

inline float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
}

float dot(const float* a, const float* b, std::size_t dim) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= dim; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
    }
    if (i + 8 <= dim) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        i += 8;
    }
    float acc = hsum(_mm256_add_ps(acc0, acc1));
    for (; i < dim; ++i) acc += a[i] * b[i];
    return acc;
}

float norm_sq(const float* a, std::size_t dim) { return dot(a, a, dim); }

// Four rows per call so the query loads are shared. dim % 8 == 0.
inline void dot4(const float* q, const float* r0, const float* r1, const float* r2, const float* r3, std::size_t dim,
                 float* out) {
    __m256 a0 = _mm256_setzero_ps(), a1 = _mm256_setzero_ps();
    __m256 a2 = _mm256_setzero_ps(), a3 = _mm256_setzero_ps();
    for (std::size_t i = 0; i < dim; i += 8) {
        __m256 qv = _mm256_loadu_ps(q + i);
        a0 = _mm256_fmadd_ps(qv, _mm256_loadu_ps(r0 + i), a0);
        a1 = _mm256_fmadd_ps(qv, _mm256_loadu_ps(r1 + i), a1);
        a2 = _mm256_fmadd_ps(qv, _mm256_loadu_ps(r2 + i), a2);
        a3 = _mm256_fmadd_ps(qv, _mm256_loadu_ps(r3 + i), a3);
    }
    out[0] = hsum(a0);
    out[1] = hsum(a1);
    out[2] = hsum(a2);
    out[3] = hsum(a3);
}

// Same accumulation order as one lane of dot4, so a row scores identically
// wherever it falls in a batch.
inline float dot1(const float* q, const float* r0, std::size_t dim) {
    __m256 a0 = _mm256_setzero_ps();
    for (std::size_t i = 0; i < dim; i += 8) a0 = _mm256_fmadd_ps(_mm256_loadu_ps(q + i), _mm256_loadu_ps(r0 + i), a0);
    return hsum(a0);
}

void dot_rows(const float* q, const float* rows, std::size_t n, std::size_t dim, float* out) {
    std::size_t r = 0;
    if (dim % 8 == 0) {
        for (; r + 4 <= n; r += 4) {
            const float* r0 = rows + r * dim;
            dot4(q, r0, r0 + dim, r0 + 2 * dim, r0 + 3 * dim, dim, out + r);
        }
        for (; r < n; ++r) out[r] = dot1(q, rows + r * dim, dim);
    }
    for (; r < n; ++r) out[r] = dot(q, rows + r * dim, dim);
}

void dot_gather(const float* q, const float* base, const std::uint32_t* rows, std::size_t n, std::size_t dim,
                float* out) {
    std::size_t r = 0;
    if (dim % 8 == 0) {
        for (; r + 4 <= n; r += 4) {
            dot4(q, base + std::size_t{rows[r]} * dim, base + std::size_t{rows[r + 1]} * dim,
                 base + std::size_t{rows[r + 2]} * dim, base + std::size_t{rows[r + 3]} * dim, dim, out + r);
        }
        for (; r < n; ++r) out[r] = dot1(q, base + std::size_t{rows[r]} * dim, dim);
    }
    for (; r < n; ++r) out[r] = dot(q, base + std::size_t{rows[r]} * dim, dim);
}

void axpy(float alpha, const float* x, float* y, std::size_t dim) {
    const __m256 av = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= dim; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (; i < dim; ++i) y[i] += alpha * x[i];
}

}  // namespace

const Kernels kKernels{Isa::kAvx2, &dot, &norm_sq, &dot_rows, &dot_gather, &axpy};

}  // namespace kk::simd::avx2
