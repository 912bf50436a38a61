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

#include "kk/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "kk/error.hpp"
#include "kk/synthetic.hpp"

namespace kk::bench {

IndexConfig with_kind(IndexConfig base, IndexKind kind) {
    base.kind = kind;
    return base;
}

Timing time_queries(const VectorIndex& index, std::span<const std::vector<float>> queries, std::size_t k) {
    if (queries.empty()) throw Error(ErrorCode::kConfigInvalid, "no queries to time");
    for (std::size_t i = 0; i < kWarmupQueries; ++i) query(index, queries[i % queries.size()], k);
    std::vector<double> us;
    us.reserve(queries.size());
    for (const auto& q : queries) us.push_back(query(index, q, k).elapsed_us);
    Timing t;
    t.mean_us = std::accumulate(us.begin(), us.end(), 0.0) / static_cast<double>(us.size());
    std::sort(us.begin(), us.end());
    // nearest-rank percentile
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(us.size())));
    t.p99_us = us[std::max<std::size_t>(rank, 1) - 1];
    return t;
}

std::vector<SweepRow> run_sweep(const SweepOptions& options) {
    if (options.sizes.empty()) throw Error(ErrorCode::kConfigInvalid, "sweep needs at least one size");
    const auto queries = synthetic::gaussian_queries(options.queries, options.dim, options.seed + 1, options.decay);
    std::vector<SweepRow> rows;
    for (auto size : options.sizes) {
        const auto store = synthetic::gaussian_store(size, options.dim, options.seed, options.decay);
        for (auto kind : kAllIndexKinds) {
            const auto index = build_index(store, with_kind(options.index, kind));
            rows.push_back({size, kind, time_queries(*index, queries, options.k)});
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "size,kind,mean_us,p99_us\n";
    for (const auto& r : rows) {
        out << r.size << ',' << to_string(r.kind) << ',' << r.timing.mean_us << ',' << r.timing.p99_us << '\n';
    }
}

std::vector<TableRow> run_table(const TableOptions& options) {
    const auto store = synthetic::gaussian_store(options.size, options.dim, options.seed, options.decay);
    const auto queries = synthetic::gaussian_queries(options.queries, options.dim, options.seed + 1, options.decay);
    const auto oracle = build_index(store, with_kind(options.index, IndexKind::kFlat));
    std::vector<TableRow> rows;
    for (auto kind : kAllIndexKinds) {
        const auto index = build_index(store, with_kind(options.index, kind));
        const double recall = recall_against_oracle(*index, *oracle, queries, options.k);
        rows.push_back({kind, time_queries(*index, queries, options.k), recall, index->memory_footprint()});
    }
    return rows;
}

void write_table_csv(std::ostream& out, std::span<const TableRow> rows) {
    out << "kind,mean_us,recall,bytes\n";
    for (const auto& r : rows) {
        out << to_string(r.kind) << ',' << r.timing.mean_us << ',' << r.recall << ',' << r.bytes << '\n';
    }
}

}  // namespace kk::bench
