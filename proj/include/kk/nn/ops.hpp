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

#include <cmath>
#include <span>
#include <vector>

// Dense building blocks for the small trainable models. Everything runs in
// double precision; weight matrices are row-major [out x in]. Backward
// functions accumulate into their gradient outputs.

namespace kk::nn {

using Vec = std::vector<double>;

/// y = W x + b
void linear(std::span<const double> W, std::span<const double> b, std::span<const double> x, std::span<double> y);

/// dW += dy x^T, db += dy, dx += W^T dy. `dx` may be empty.
void linear_backward(std::span<const double> W, std::span<const double> x, std::span<const double> dy,
                     std::span<double> dW, std::span<double> db, std::span<double> dx);

inline constexpr double kLayerNormEps = 1e-5;

/// y = gamma * xhat + beta. Writes xhat and returns 1/sqrt(var + eps).
double layer_norm(std::span<const double> x, std::span<const double> gamma, std::span<const double> beta,
                  std::span<double> xhat, std::span<double> y);

void layer_norm_backward(std::span<const double> xhat, double rstd, std::span<const double> gamma,
                         std::span<const double> dy, std::span<double> dgamma, std::span<double> dbeta,
                         std::span<double> dx);

/// Exact (erf) GELU.
inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }
inline double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    const double pdf = std::exp(-0.5 * x * x) * (0.5 * M_2_SQRTPI * M_SQRT1_2);
    return cdf + x * pdf;
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

/// In-place max-shifted softmax.
void softmax(std::span<double> v);

/// cos(a, b) and its gradient with respect to `a` accumulated into `da`
/// scaled by `scale`.
double cosine(std::span<const double> a, std::span<const double> b);
void cosine_backward_a(std::span<const double> a, std::span<const double> b, double scale, std::span<double> da);

/// dx += (dy - y (y . dy)) / |x| for y = x / |x|.
void normalize_backward(std::span<const double> y, double norm, std::span<const double> dy, std::span<double> dx);

}  // namespace kk::nn
