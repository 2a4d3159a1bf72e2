#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hln/matrix.hpp"

namespace hln {

// Coarse kmeans partition of the base set: centroids plus inverted lists.
// Inverted lists hold ascending base ids and partition {0..n-1}; after
// training, assignments[i] is the nearest centroid to point i (ties to the
// lowest cluster id).
struct KmeansPartition {
    int k = 0;
    int dim = 0;
    Matrix<float> centroids;                               // k x dim
    std::vector<std::int32_t> assignments;                 // point -> cluster
    std::vector<std::vector<std::int32_t>> inverted_lists; // per cluster, ascending
    int iterations_run = 0;

    bool operator==(const KmeansPartition&) const = default;
};

// Lloyd kmeans with kmeans++ seeding.
//
// Deterministic protocol (re-implementable from this comment alone):
//   rng = mt19937_64(seed); unit() = (rng() >> 11) * 2^-53.
//   Seeding: first centroid index = floor(unit() * n); each further pick
//   draws r = unit() * sum(d2) and takes the first point whose running d2
//   prefix exceeds r, where d2 is the squared distance to the nearest
//   chosen centroid; if sum(d2) == 0 the lowest unchosen index is taken.
//   Iteration: assign (nearest centroid, ties to lowest cluster id), then
//   update means in double; an emptied cluster is re-seeded at the point
//   farthest from the largest cluster's centroid (largest by count, ties to
//   lowest cluster id; farthest ties to lowest point id). Stops at
//   assignment fixpoint or max_iters.
KmeansPartition kmeans_train(const Matrix<float>& x, int k, int max_iters,
                             std::uint64_t seed, int threads = 1);

// Ids of the probe_count clusters whose centroids are nearest to q,
// ascending by squared distance, ties to the lowest cluster id.
std::vector<std::int32_t> nearest_clusters(const KmeansPartition& p,
                                           std::span<const float> q,
                                           int probe_count);

// Sum of squared distances from each point to its assigned centroid.
double kmeans_objective(const Matrix<float>& x, const KmeansPartition& p);

}  // namespace hln
