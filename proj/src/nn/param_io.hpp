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

#include <span>
#include <string>
#include <vector>

#include "kk/binary_io.hpp"

namespace kk::nn::detail {

// Model weights live in double during training and are persisted as f32.
inline void put_as_f32(ByteWriter& w, std::span<const double> values) {
    std::vector<float> tmp(values.begin(), values.end());
    w.put_f32s(tmp);
}

inline void get_from_f32(ByteReader& r, std::span<double> out) {
    std::vector<float> tmp(out.size());
    r.get_f32s(tmp);
    std::copy(tmp.begin(), tmp.end(), out.begin());
}

// Refuses headers whose declared payload cannot fit in what is left.
inline void require_payload(const ByteReader& r, std::size_t floats, const char* what) {
    if (floats > r.remaining() / 4) {
        throw Error(ErrorCode::kTruncatedInput, std::string(what) + " payload larger than the input");
    }
}

}  // namespace kk::nn::detail
