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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Data-parallel inner loops shared by every index. Each ISA variant lives in
// its own translation unit; `active()` picks the widest one the CPU supports
// at startup. KK_SIMD=scalar|avx2|neon overrides the choice.

namespace kk::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view to_string(Isa isa) noexcept;

struct Kernels {
    Isa isa;
    float (*dot)(const float* a, const float* b, std::size_t dim);
    float (*norm_sq)(const float* a, std::size_t dim);
    // out[i] = <q, rows[i*dim .. i*dim+dim)> for i in [0, n)
    void (*dot_rows)(const float* q, const float* rows, std::size_t n, std::size_t dim, float* out);
    // out[i] = <q, base[rows[i]*dim .. rows[i]*dim+dim)> for i in [0, n)
    void (*dot_gather)(const float* q, const float* base, const std::uint32_t* rows, std::size_t n, std::size_t dim,
                       float* out);
    // y += alpha * x
    void (*axpy)(float alpha, const float* x, float* y, std::size_t dim);
};

namespace scalar {
extern const Kernels kKernels;
}
#if defined(KK_HAVE_AVX2)
namespace avx2 {
extern const Kernels kKernels;
}
#endif
#if defined(KK_HAVE_NEON)
namespace neon {
extern const Kernels kKernels;
}
#endif

bool isa_supported(Isa isa) noexcept;

/// Kernel table for a specific ISA; throws std::invalid_argument when the
/// variant was not compiled in or the CPU lacks it.
const Kernels& kernels_for(Isa isa);

const Kernels& active() noexcept;

inline float dot(std::span<const float> a, std::span<const float> b) noexcept {
    return active().dot(a.data(), b.data(), a.size());
}

inline float norm_sq(std::span<const float> a) noexcept {
    return active().norm_sq(a.data(), a.size());
}

}  // namespace kk::simd
