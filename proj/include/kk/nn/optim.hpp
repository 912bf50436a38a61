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
#include <span>
#include <vector>

namespace kk::nn {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

/// Adam with decoupled weight decay.
class AdamW {
public:
    AdamW(std::size_t n, AdamWConfig config = {});

    void step(std::span<double> params, std::span<const double> grads, double lr);
    std::size_t steps() const noexcept { return t_; }

private:
    AdamWConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_ = 0;
};

/// lr(epoch) = base * gamma^floor(epoch / step_size)
class StepLR {
public:
    StepLR(double base_lr, std::size_t step_size, double gamma) : base_(base_lr), step_(step_size), gamma_(gamma) {}
    double lr_at(std::size_t epoch) const;

private:
    double base_;
    std::size_t step_;
    double gamma_;
};

}  // namespace kk::nn
