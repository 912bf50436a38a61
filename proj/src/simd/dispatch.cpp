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

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kk/simd/kernels.hpp"

namespace kk::simd {

std::string_view to_string(Isa isa) noexcept {
    switch (isa) {
        case Isa::kScalar: return "scalar";
        case Isa::kAvx2: return "avx2";
        case Isa::kNeon: return "neon";
    }
    return "unknown";
}

bool isa_supported(Isa isa) noexcept {
    switch (isa) {
        case Isa::kScalar: return true;
        case Isa::kAvx2:
#if defined(KK_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::kNeon:
#if defined(KK_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const Kernels& kernels_for(Isa isa) {
    if (!isa_supported(isa)) {
        throw std::invalid_argument("SIMD variant not available: " + std::string(to_string(isa)));
    }
    switch (isa) {
#if defined(KK_HAVE_AVX2)
        case Isa::kAvx2: return avx2::kKernels;
#endif
#if defined(KK_HAVE_NEON)
        case Isa::kNeon: return neon::kKernels;
#endif
        default: return scalar::kKernels;
    }
}

namespace {

const Kernels& select() noexcept {
    if (const char* forced = std::getenv("KK_SIMD")) {
        const std::string_view name(forced);
        for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
            if (name == to_string(isa) && isa_supported(isa)) return kernels_for(isa);
        }
    }
    if (isa_supported(Isa::kAvx2)) return kernels_for(Isa::kAvx2);
    if (isa_supported(Isa::kNeon)) return kernels_for(Isa::kNeon);
    return scalar::kKernels;
}

}  // namespace

const Kernels& active() noexcept {
    static const Kernels& chosen = select();
    return chosen;
}

}  // namespace kk::simd
