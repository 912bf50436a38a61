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

#include "kk/error.hpp"

namespace kk {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::kIo: return "io";
        case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
        case ErrorCode::kUnknownCategory: return "unknown-category";
        case ErrorCode::kDuplicateId: return "duplicate-id";
        case ErrorCode::kIdSetMismatch: return "id-set-mismatch";
        case ErrorCode::kMalformedRecord: return "malformed-record";
        case ErrorCode::kZeroVector: return "zero-vector";
        case ErrorCode::kEmptyStore: return "empty-store";
        case ErrorCode::kConfigInvalid: return "config-invalid";
        case ErrorCode::kKOutOfRange: return "k-out-of-range";
        case ErrorCode::kStoreMismatch: return "store-mismatch";
        case ErrorCode::kHashMismatch: return "hash-mismatch";
        case ErrorCode::kVersionMismatch: return "version-mismatch";
        case ErrorCode::kTruncatedInput: return "truncated-input";
        case ErrorCode::kUnknownItem: return "unknown-item";
        case ErrorCode::kInsufficientCategoryPopulation: return "insufficient-category-population";
        case ErrorCode::kNTooSmall: return "n-too-small";
        case ErrorCode::kEmptyRanking: return "empty-ranking";
        case ErrorCode::kBatchTooSmall: return "batch-too-small";
        case ErrorCode::kInsufficientData: return "insufficient-data";
        case ErrorCode::kNonFiniteLoss: return "non-finite-loss";
        case ErrorCode::kEmptyOutfit: return "empty-outfit";
        case ErrorCode::kDuplicateCategory: return "duplicate-category";
        case ErrorCode::kRefInTargets: return "ref-in-targets";
        case ErrorCode::kShapeMismatch: return "shape-mismatch";
        case ErrorCode::kEmptyNegativeSet: return "empty-negative-set";
        case ErrorCode::kNonFinite: return "non-finite";
        case ErrorCode::kEmptyCategory: return "empty-category";
    }
    return "unknown";
}

}  // namespace kk
