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

#include <stdexcept>
#include <string>
#include <string_view>

namespace kk {

enum class ErrorCode {
    kIo,
    kDimensionMismatch,
    kUnknownCategory,
    kDuplicateId,
    kIdSetMismatch,
    kMalformedRecord,
    kZeroVector,
    kEmptyStore,
    kConfigInvalid,
    kKOutOfRange,
    kStoreMismatch,
    kHashMismatch,
    kVersionMismatch,
    kTruncatedInput,
    kUnknownItem,
    kInsufficientCategoryPopulation,
    kNTooSmall,
    kEmptyRanking,
    kBatchTooSmall,
    kInsufficientData,
    kNonFiniteLoss,
    kEmptyOutfit,
    kDuplicateCategory,
    kRefInTargets,
    kShapeMismatch,
    kEmptyNegativeSet,
    kNonFinite,
    kEmptyCategory,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure in the library surfaces as this exception; `code()` is the
/// stable discriminator, `what()` carries a human-readable diagnostic.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace kk
