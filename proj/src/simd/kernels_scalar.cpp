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

#include "kk/simd/kernels.hpp"

namespace kk::simd::scalar {
namespace {

float dot(const float* a, const float* b, std::size_t dim) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < dim; ++i) acc += a[i] * b[i];
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
    for (std::size_t i = 0; i < dim; ++i) y[i] += alpha * x[i];
}

}  // namespace

const Kernels kKernels{Isa::kScalar, &dot, &norm_sq, &dot_rows, &dot_gather, &axpy};

}  // namespace kk::simd::scalar
