#pragma once

#include <cstddef>
#include <span>

namespace hln {

// Squared Euclidean distance, float inputs with double accumulation.
// Every exact-distance path in the library (kmeans, rerank, ground truth)
// goes through this one kernel so distance ties resolve identically.
inline double l2_sq(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

}  // namespace hln
