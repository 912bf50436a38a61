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

#include "kk/nn/ops.hpp"

#include <algorithm>

namespace kk::nn {

void linear(std::span<const double> W, std::span<const double> b, std::span<const double> x, std::span<double> y) {
    const std::size_t in = x.size();
    for (std::size_t o = 0; o < y.size(); ++o) {
        const double* w = W.data() + o * in;
        double acc = b.empty() ? 0.0 : b[o];
        for (std::size_t i = 0; i < in; ++i) acc += w[i] * x[i];
        y[o] = acc;
    }
}

void linear_backward(std::span<const double> W, std::span<const double> x, std::span<const double> dy,
                     std::span<double> dW, std::span<double> db, std::span<double> dx) {
    const std::size_t in = x.size();
    for (std::size_t o = 0; o < dy.size(); ++o) {
        const double g = dy[o];
        if (g == 0.0) continue;
        double* dw = dW.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) dw[i] += g * x[i];
        if (!db.empty()) db[o] += g;
        if (!dx.empty()) {
            const double* w = W.data() + o * in;
            for (std::size_t i = 0; i < in; ++i) dx[i] += g * w[i];
        }
    }
}

double layer_norm(std::span<const double> x, std::span<const double> gamma, std::span<const double> beta,
                  std::span<double> xhat, std::span<double> y) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t i = 0; i < x.size(); ++i) {
        xhat[i] = (x[i] - mean) * rstd;
        y[i] = gamma[i] * xhat[i] + beta[i];
    }
    return rstd;
}

void layer_norm_backward(std::span<const double> xhat, double rstd, std::span<const double> gamma,
                         std::span<const double> dy, std::span<double> dgamma, std::span<double> dbeta,
                         std::span<double> dx) {
    const std::size_t d = xhat.size();
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        dgamma[i] += dy[i] * xhat[i];
        dbeta[i] += dy[i];
        const double g = dy[i] * gamma[i];
        sum_g += g;
        sum_gx += g * xhat[i];
    }
    const double inv_n = 1.0 / static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double g = dy[i] * gamma[i];
        dx[i] += rstd * (g - inv_n * sum_g - xhat[i] * inv_n * sum_gx);
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void softmax(std::span<double> v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    return dot(a, b) / (l2_norm(a) * l2_norm(b));
}

void cosine_backward_a(std::span<const double> a, std::span<const double> b, double scale, std::span<double> da) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    const double c = dot(a, b) / (na * nb);
    for (std::size_t i = 0; i < a.size(); ++i) da[i] += scale * (b[i] / (na * nb) - c * a[i] / (na * na));
}

void normalize_backward(std::span<const double> y, double norm, std::span<const double> dy, std::span<double> dx) {
    const double yd = dot(y, dy);
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += (dy[i] - y[i] * yd) / norm;
}

}  // namespace kk::nn
