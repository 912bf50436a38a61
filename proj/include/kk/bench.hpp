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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kk/index/vector_index.hpp"

// Index benchmarks over seeded synthetic unit vectors. Timing columns come
// from a monotonic clock after 100 warm-up queries; every other column is a
// pure function of the seed.
//
// The default data has a power-law spectrum (decay 1, coordinate variance
// 1/(i+1)), which is closer to learned image embeddings than isotropic noise.
// decay 0 gives isotropic Gaussians, where nearest neighbours barely stand out
// from the bulk at dim 32 and every partitioning index needs far more probes.

namespace kk::bench {

inline constexpr std::size_t kWarmupQueries = 100;

struct Timing {
    double mean_us = 0.0;
    double p99_us = 0.0;
};

/// Runs the warm-up, then times each query once.
Timing time_queries(const VectorIndex& index, std::span<const std::vector<float>> queries, std::size_t k);

struct SweepRow {
    std::size_t size;
    IndexKind kind;
    Timing timing;
};

struct SweepOptions {
    std::vector<std::size_t> sizes{10000, 30000, 100000, 300000};
    std::size_t dim = 32;
    std::size_t k = 10;
    std::size_t queries = 1000;
    std::uint64_t seed = 7;
    double decay = 1.0;
    IndexConfig index;  // kind is overridden per row
};

/// One row per (size, kind), kinds in FLAT, IVF, HNSW, FOREST order.
std::vector<SweepRow> run_sweep(const SweepOptions& options);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

struct TableRow {
    IndexKind kind;
    Timing timing;
    double recall;
    std::size_t bytes;
};

struct TableOptions {
    std::size_t size = 100000;
    std::size_t dim = 32;
    std::size_t k = 10;
    std::size_t queries = 1000;
    std::uint64_t seed = 7;
    double decay = 1.0;
    IndexConfig index;
};

std::vector<TableRow> run_table(const TableOptions& options);
void write_table_csv(std::ostream& out, std::span<const TableRow> rows);

/// Index config with `kind` and the remaining fields from `base`.
IndexConfig with_kind(IndexConfig base, IndexKind kind);

}  // namespace kk::bench
