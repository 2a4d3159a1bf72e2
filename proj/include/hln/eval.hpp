#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hln/matrix.hpp"
#include "hln/search.hpp"

namespace hln {

// Exact K nearest neighbors per query, ascending (distance, id).
struct GroundTruth {
    int k = 0;
    Matrix<std::int32_t> ids;  // num_queries x k

    bool operator==(const GroundTruth&) const = default;
};

GroundTruth brute_force_ground_truth(const Matrix<float>& base,
                                     const Matrix<float>& queries, int k,
                                     int threads = 1);

// |result ∩ truth| / |truth|. Order-insensitive; truth must be non-empty.
double recall(std::span<const std::int32_t> result_ids,
              std::span<const std::int32_t> truth_ids);

// One row of a recall-time sweep. Time columns are milliseconds; qps counts
// whole queries per second. p50/p99 are nearest-rank percentiles of per-query
// time. When timings are suppressed (parallel sweep) all time fields are 0.
struct SweepRecord {
    SearchMode mode = SearchMode::hamming_ranking;
    int code_bits = 0;
    int tables = 0;
    int probes = 0;
    std::int64_t pool = 0;
    double mean_recall = 0.0;
    double qps = 0.0;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p99_ms = 0.0;
    double coding_ms = 0.0;
    double locating_ms = 0.0;
    double scanning_ms = 0.0;
};

struct SweepOptions {
    // Per-query time and qps count locating + scanning only; coding stays in
    // its own column unless include_coding is set.
    bool include_coding = false;
    bool warmup = true;
    // threads > 1 (or 0 = auto) computes recall in parallel and suppresses
    // all timing columns; timed sweeps run on one thread.
    int threads = 1;
};

// Runs every grid point over all queries and averages. Grid points that do
// not match the index (missing section, bad parameters) are skipped with a
// note to stderr; the others proceed.
std::vector<SweepRecord> run_sweep(const HashIndex& index, const Matrix<float>& base,
                                   const Matrix<float>& queries, const GroundTruth& gt,
                                   std::span<const SearchParams> grid,
                                   const SweepOptions& options = {});

}  // namespace hln
