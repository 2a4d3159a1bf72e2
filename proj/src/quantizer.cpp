#include "hln/quantizer.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hln/distance.hpp"
#include "hln/parallel.hpp"

namespace hln {

namespace {

double unit(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

// kmeans++ picks; returns k point indices.
std::vector<std::int64_t> seed_centroids(const Matrix<float>& x, int k,
                                         std::mt19937_64& rng) {
    const std::int64_t n = x.rows();
    std::vector<std::int64_t> picks;
    picks.reserve(k);
    std::vector<char> chosen(n, 0);

    std::int64_t first = static_cast<std::int64_t>(unit(rng) * n);
    if (first >= n) first = n - 1;
    picks.push_back(first);
    chosen[first] = 1;

    std::vector<double> d2(n);
    for (std::int64_t i = 0; i < n; ++i) {
        d2[i] = l2_sq(x.row(i), x.row(first));
    }

    for (int t = 1; t < k; ++t) {
        double total = 0.0;
        for (std::int64_t i = 0; i < n; ++i) total += d2[i];

        std::int64_t pick = -1;
        if (total <= 0.0) {
            for (std::int64_t i = 0; i < n; ++i) {
                if (!chosen[i]) { pick = i; break; }
            }
            if (pick < 0) pick = 0;  // all points identical and chosen
        } else {
            double r = unit(rng) * total;
            double acc = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > r) { pick = i; break; }
            }
            if (pick < 0) {
                for (std::int64_t i = n - 1; i >= 0; --i) {
                    if (d2[i] > 0.0) { pick = i; break; }
                }
                if (pick < 0) pick = n - 1;
            }
        }
        picks.push_back(pick);
        chosen[pick] = 1;
        for (std::int64_t i = 0; i < n; ++i) {
            double d = l2_sq(x.row(i), x.row(pick));
            if (d < d2[i]) d2[i] = d;
        }
    }
    return picks;
}

// Nearest centroid of x_i, ties to the lowest cluster id.
std::int32_t nearest_centroid(const Matrix<float>& centroids,
                              std::span<const float> point) {
    std::int32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::int64_t c = 0; c < centroids.rows(); ++c) {
        double d = l2_sq(point, centroids.row(c));
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::int32_t>(c);
        }
    }
    return best;
}

}  // namespace

KmeansPartition kmeans_train(const Matrix<float>& x, int k, int max_iters,
                             std::uint64_t seed, int threads) {
    const std::int64_t n = x.rows();
    const int dim = static_cast<int>(x.cols());
    if (n < 1) throw std::invalid_argument("kmeans_train: empty input");
    if (k < 1 || k > n) {
        std::ostringstream msg;
        msg << "kmeans_train: k = " << k << " outside [1, " << n << "]";
        throw std::invalid_argument(msg.str());
    }
    if (max_iters < 1) throw std::invalid_argument("kmeans_train: max_iters must be >= 1");

    std::mt19937_64 rng(seed);
    auto picks = seed_centroids(x, k, rng);

    KmeansPartition part;
    part.k = k;
    part.dim = dim;
    part.centroids = Matrix<float>(k, dim);
    for (int c = 0; c < k; ++c) {
        auto src = x.row(picks[c]);
        std::copy(src.begin(), src.end(), part.centroids.row(c).begin());
    }

    part.assignments.assign(n, 0);
    auto assign_all = [&](std::vector<std::int32_t>& out) {
        bool changed = false;
        parallel_for(n, threads, [&](std::int64_t begin, std::int64_t end) {
            bool local = false;
            for (std::int64_t i = begin; i < end; ++i) {
                std::int32_t c = nearest_centroid(part.centroids, x.row(i));
                if (out[i] != c) {
                    out[i] = c;
                    local = true;
                }
            }
            if (local) changed = true;  // only ever flips false -> true
        });
        return changed;
    };
    assign_all(part.assignments);

    std::vector<double> sums(static_cast<std::size_t>(k) * dim);
    std::vector<std::int64_t> counts(k);
    for (int iter = 0; iter < max_iters; ++iter) {
        // Update: means in double, sequential for a fixed summation order.
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::int64_t i = 0; i < n; ++i) {
            std::int32_t c = part.assignments[i];
            ++counts[c];
            auto row = x.row(i);
            double* acc = sums.data() + static_cast<std::size_t>(c) * dim;
            for (int d = 0; d < dim; ++d) acc[d] += row[d];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            auto dst = part.centroids.row(c);
            const double* acc = sums.data() + static_cast<std::size_t>(c) * dim;
            for (int d = 0; d < dim; ++d) {
                dst[d] = static_cast<float>(acc[d] / counts[c]);
            }
        }

        // Re-seed emptied clusters so k never shrinks.
        std::vector<char> claimed(n, 0);
        for (int c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            int largest = 0;
            for (int g = 1; g < k; ++g) {
                if (counts[g] > counts[largest]) largest = g;
            }
            std::int64_t far_id = -1;
            double far_d = -1.0;
            for (std::int64_t i = 0; i < n; ++i) {
                if (part.assignments[i] != largest || claimed[i]) continue;
                double d = l2_sq(x.row(i), part.centroids.row(largest));
                if (d > far_d) {
                    far_d = d;
                    far_id = i;
                }
            }
            if (far_id < 0) continue;  // nothing left to donate
            claimed[far_id] = 1;
            --counts[largest];
            counts[c] = 1;
            auto src = x.row(far_id);
            std::copy(src.begin(), src.end(), part.centroids.row(c).begin());
        }

        part.iterations_run = iter + 1;
        if (!assign_all(part.assignments)) break;
    }

    part.inverted_lists.assign(k, {});
    for (std::int64_t i = 0; i < n; ++i) {
        part.inverted_lists[part.assignments[i]].push_back(static_cast<std::int32_t>(i));
    }
    return part;
}

std::vector<std::int32_t> nearest_clusters(const KmeansPartition& p,
                                           std::span<const float> q,
                                           int probe_count) {
    if (probe_count < 1 || probe_count > p.k) {
        std::ostringstream msg;
        msg << "nearest_clusters: probe count " << probe_count << " outside [1, " << p.k
            << "]";
        throw std::invalid_argument(msg.str());
    }
    if (q.size() != static_cast<std::size_t>(p.dim)) {
        throw std::invalid_argument("nearest_clusters: query dimension mismatch");
    }
    std::vector<std::pair<double, std::int32_t>> dists(p.k);
    for (int c = 0; c < p.k; ++c) {
        dists[c] = {l2_sq(q, p.centroids.row(c)), static_cast<std::int32_t>(c)};
    }
    std::partial_sort(dists.begin(), dists.begin() + probe_count, dists.end());
    std::vector<std::int32_t> out(probe_count);
    for (int i = 0; i < probe_count; ++i) out[i] = dists[i].second;
    return out;
}

double kmeans_objective(const Matrix<float>& x, const KmeansPartition& p) {
    double total = 0.0;
    for (std::int64_t i = 0; i < x.rows(); ++i) {
        total += l2_sq(x.row(i), p.centroids.row(p.assignments[i]));
    }
    return total;
}

}  // namespace hln
