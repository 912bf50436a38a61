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

#include <cstdint>
#include <vector>

namespace kk::detail {

// Epoch-tagged visited set. One instance lives per thread, so resetting it
// between queries is O(1) and the index itself stays read-only.
class VisitedSet {
public:
    void reset(std::size_t n) {
        if (tags_.size() < n) tags_.resize(n, 0);
        if (++epoch_ == 0) {
            std::fill(tags_.begin(), tags_.end(), 0);
            epoch_ = 1;
        }
    }
    bool test_and_set(std::uint32_t i) noexcept {
        if (tags_[i] == epoch_) return true;
        tags_[i] = epoch_;
        return false;
    }

    static VisitedSet& local() {
        thread_local VisitedSet set;
        return set;
    }

private:
    std::vector<std::uint32_t> tags_;
    std::uint32_t epoch_ = 0;
};

}  // namespace kk::detail
