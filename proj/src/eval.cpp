#include "hln/eval.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "hln/distance.hpp"
#include "hln/parallel.hpp"

namespace hln {

GroundTruth brute_force_ground_truth(const Matrix<float>& base,
                                     const Matrix<float>& queries, int k,
                                     int threads) {
    if (base.rows() < 1) throw std::invalid_argument("ground truth: empty base");
    if (k < 1 || k > base.rows()) {
        std::ostringstream msg;
        msg << "ground truth: k = " << k << " outside [1, " << base.rows() << "]";
        throw std::invalid_argument(msg.str());
    }
    if (queries.cols() != base.cols()) {
        throw std::invalid_argument("ground truth: query dimension mismatch");
    }

    GroundTruth gt;
    gt.k = k;
    gt.ids = Matrix<std::int32_t>(queries.rows(), k);

    parallel_for(queries.rows(), threads, [&](std::int64_t begin, std::int64_t end) {
        std::vector<std::pair<double, std::int32_t>> scored(base.rows());
        for (std::int64_t qi = begin; qi < end; ++qi) {
            auto q = queries.row(qi);
            for (std::int64_t i = 0; i < base.rows(); ++i) {
                scored[i] = {l2_sq(q, base.row(i)), static_cast<std::int32_t>(i)};
            }
            std::nth_element(scored.begin(), scored.begin() + (k - 1), scored.end());
            std::sort(scored.begin(), scored.begin() + k);
            auto row = gt.ids.row(qi);
            for (int j = 0; j < k; ++j) row[j] = scored[j].second;
        }
    });
    return gt;
}

double recall(std::span<const std::int32_t> result_ids,
              std::span<const std::int32_t> truth_ids) {
    if (truth_ids.empty()) throw std::invalid_argument("recall: empty truth set");
    std::vector<std::int32_t> truth(truth_ids.begin(), truth_ids.end());
    std::sort(truth.begin(), truth.end());
    std::int64_t hits = 0;
    for (auto id : result_ids) {
        hits += std::binary_search(truth.begin(), truth.end(), id);
    }
    return static_cast<double>(hits) / static_cast<double>(truth_ids.size());
}

namespace {

double percentile(std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    auto idx = static_cast<std::size_t>(p * (sorted.size() - 1));
    return sorted[idx];
}

SweepRecord measure_grid_point(const HashIndex& index, const Matrix<float>& base,
                               const Matrix<float>& queries, const GroundTruth& gt,
                               const SearchParams& params, const SweepOptions& options) {
    if (gt.k < params.k) {
        throw std::invalid_argument("run_sweep: ground truth holds fewer neighbors than k");
    }
    if (gt.ids.rows() != queries.rows()) {
        throw std::invalid_argument("run_sweep: ground truth / query count mismatch");
    }

    const std::int64_t nq = queries.rows();
    SweepRecord rec;
    rec.mode = params.mode;
    rec.code_bits = index.codes ? index.codes->bits() : 0;
    rec.tables = index.directory ? index.directory->num_tables() : 0;
    rec.probes = (params.mode == SearchMode::quantized ||
                  params.mode == SearchMode::kmeansqi)
                     ? params.probes
                     : 0;
    rec.pool = params.mode == SearchMode::kmeansqi ? 0 : params.pool;

    const bool timed = options.threads == 1;
    std::vector<double> recalls(nq);

    if (!timed) {
        parallel_for(nq, options.threads, [&](std::int64_t begin, std::int64_t end) {
            SearchScratch scratch;
            for (std::int64_t qi = begin; qi < end; ++qi) {
                auto r = search(index, base, queries.row(qi), params, scratch);
                recalls[qi] = recall(r.ids, gt.ids.row(qi).subspan(0, params.k));
            }
        });
    } else {
        SearchScratch scratch;
        if (options.warmup) {
            for (std::int64_t qi = 0; qi < nq; ++qi) {
                search(index, base, queries.row(qi), params, scratch);
            }
        }
        std::vector<double> per_query_ms(nq);
        double coding = 0.0, locating = 0.0, scanning = 0.0;
        for (std::int64_t qi = 0; qi < nq; ++qi) {
            auto r = search(index, base, queries.row(qi), params, scratch);
            recalls[qi] = recall(r.ids, gt.ids.row(qi).subspan(0, params.k));
            double c = r.coding_ns * 1e-6;
            double l = r.locating_ns * 1e-6;
            double s = r.scanning_ns * 1e-6;
            coding += c;
            locating += l;
            scanning += s;
            per_query_ms[qi] = l + s + (options.include_coding ? c : 0.0);
        }
        rec.coding_ms = coding / nq;
        rec.locating_ms = locating / nq;
        rec.scanning_ms = scanning / nq;
        double total = 0.0;
        for (double ms : per_query_ms) total += ms;
        rec.mean_ms = total / nq;
        rec.qps = rec.mean_ms > 0.0 ? 1000.0 / rec.mean_ms : 0.0;
        std::sort(per_query_ms.begin(), per_query_ms.end());
        rec.p50_ms = percentile(per_query_ms, 0.50);
        rec.p99_ms = percentile(per_query_ms, 0.99);
    }

    double sum = 0.0;
    for (double r : recalls) sum += r;
    rec.mean_recall = sum / nq;
    return rec;
}

}  // namespace

std::vector<SweepRecord> run_sweep(const HashIndex& index, const Matrix<float>& base,
                                   const Matrix<float>& queries, const GroundTruth& gt,
                                   std::span<const SearchParams> grid,
                                   const SweepOptions& options) {
    if (queries.rows() < 1) throw std::invalid_argument("run_sweep: no queries");
    std::vector<SweepRecord> records;
    records.reserve(grid.size());
    for (const auto& params : grid) {
        try {
            records.push_back(
                measure_grid_point(index, base, queries, gt, params, options));
        } catch (const std::exception& e) {
            std::cerr << "run_sweep: skipping grid point (mode=" << to_string(params.mode)
                      << " L=" << params.pool << " C=" << params.probes << "): " << e.what()
                      << "\n";
        }
    }
    return records;
}

}  // namespace hln
