#include <doctest.h>

#include <algorithm>
#include <random>

#include "hln/distance.hpp"
#include "hln/eval.hpp"
#include "hln/hashers.hpp"

using namespace hln;

namespace {

Matrix<float> random_points(std::int64_t n, int dim, std::uint64_t seed) {
    Matrix<float> m(n, dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, 1.0f);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

// Independent quadratic-loop KNN with a full sort.
Matrix<std::int32_t> knn_oracle(const Matrix<float>& base, const Matrix<float>& queries,
                                int k) {
    Matrix<std::int32_t> out(queries.rows(), k);
    for (std::int64_t qi = 0; qi < queries.rows(); ++qi) {
        std::vector<std::pair<double, std::int32_t>> all(base.rows());
        for (std::int64_t i = 0; i < base.rows(); ++i) {
            all[i] = {l2_sq(queries.row(qi), base.row(i)), static_cast<std::int32_t>(i)};
        }
        std::sort(all.begin(), all.end());
        for (int j = 0; j < k; ++j) out.at(qi, j) = all[j].second;
    }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("ground truth trivia") {
    Matrix<float> base(3, 1, {0.0f, 1.0f, 2.0f});
    Matrix<float> queries(1, 1, {0.9f});
    auto gt = brute_force_ground_truth(base, queries, 2);
    CHECK(gt.ids.at(0, 0) == 1);
    CHECK(gt.ids.at(0, 1) == 0);

    // A query equal to a base point leads with that point.
    Matrix<float> q2(1, 1, {2.0f});
    auto gt2 = brute_force_ground_truth(base, q2, 1);
    CHECK(gt2.ids.at(0, 0) == 2);

    CHECK_THROWS_AS(brute_force_ground_truth(base, queries, 4), std::invalid_argument);
    CHECK_THROWS_AS(brute_force_ground_truth(base, queries, 0), std::invalid_argument);
}

TEST_CASE("ground truth agrees with an independent brute force") {
    auto base = random_points(5000, 8, 7);
    auto queries = random_points(20, 8, 9);
    auto gt = brute_force_ground_truth(base, queries, 100, 4);
    auto oracle = knn_oracle(base, queries, 100);
    CHECK(gt.ids == oracle);
}

TEST_CASE("recall definition") {
    std::vector<std::int32_t> truth = {1, 2, 3, 4};
    std::vector<std::int32_t> same = {4, 3, 2, 1};
    CHECK(recall(same, truth) == 1.0);

    std::vector<std::int32_t> disjoint = {9, 10, 11, 12};
    CHECK(recall(disjoint, truth) == 0.0);

    std::vector<std::int32_t> half = {1, 2, 20, 21};
    CHECK(recall(half, truth) == 0.5);

    CHECK_THROWS_AS(recall(same, {}), std::invalid_argument);
}

TEST_CASE("recall is order-insensitive over 100-element sets") {
    std::mt19937_64 rng(13);
    std::vector<std::int32_t> truth(100), result(100);
    for (int i = 0; i < 100; ++i) {
        truth[i] = static_cast<std::int32_t>(rng() % 1000);
        result[i] = static_cast<std::int32_t>(rng() % 1000);
    }
    double r1 = recall(result, truth);
    std::shuffle(result.begin(), result.end(), rng);
    std::shuffle(truth.begin(), truth.end(), rng);
    CHECK(recall(result, truth) == r1);
}

TEST_CASE("sweep recall matches a no-timing oracle pipeline") {
    const std::int64_t n = 10000;
    const int dim = 16, k_clusters = 100, probes = 20, K = 100;
    auto base = random_points(n, dim, 17);
    auto queries = random_points(100, dim, 19);

    HashIndex index;
    index.projection = train_rplsh(dim, 1024, 21);
    index.codes = encode_batch(*index.projection, base);
    index.partition = kmeans_train(base, k_clusters, 10, 23);

    auto gt = brute_force_ground_truth(base, queries, K);

    std::vector<SearchParams> grid;
    for (std::int64_t L : {std::int64_t{200}, std::int64_t{1000}, std::int64_t{4000}}) {
        SearchParams p;
        p.mode = SearchMode::quantized;
        p.pool = L;
        p.k = K;
        p.probes = probes;
        grid.push_back(p);
    }
    auto records = run_sweep(index, base, queries, gt, grid);
    REQUIRE(records.size() == grid.size());

    // Oracle pipeline: gather-and-sort locate, subset-sort rerank, set recall.
    SearchScratch scratch;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double total = 0.0;
        for (std::int64_t qi = 0; qi < queries.rows(); ++qi) {
            auto q = queries.row(qi);
            auto b = encode(*index.projection, q);
            auto clusters = nearest_clusters(*index.partition, q, probes);
            std::vector<std::pair<int, std::int32_t>> gathered;
            for (auto c : clusters) {
                for (auto id : index.partition->inverted_lists[c]) {
                    gathered.emplace_back(hamming_distance(index.codes->extract(id), b), id);
                }
            }
            std::sort(gathered.begin(), gathered.end());
            std::vector<std::pair<double, std::int32_t>> scored;
            for (std::size_t i = 0;
                 i < std::min<std::size_t>(grid[g].pool, gathered.size()); ++i) {
                scored.emplace_back(l2_sq(q, base.row(gathered[i].second)),
                                    gathered[i].second);
            }
            std::sort(scored.begin(), scored.end());
            std::vector<std::int32_t> ids;
            for (std::size_t i = 0; i < std::min<std::size_t>(K, scored.size()); ++i) {
                ids.push_back(scored[i].second);
            }
            total += recall(ids, gt.ids.row(qi));
        }
        CHECK(records[g].mean_recall == doctest::Approx(total / queries.rows()).epsilon(1e-12));
    }

    // Dominance: recall never drops as L grows.
    CHECK(records[1].mean_recall >= records[0].mean_recall - 1e-9);
    CHECK(records[2].mean_recall >= records[1].mean_recall - 1e-9);
}

TEST_CASE("sweep at L = n reports recall 1.0") {
    const std::int64_t n = 500;
    auto base = random_points(n, 8, 31);
    auto queries = random_points(10, 8, 33);
    HashIndex index;
    index.projection = train_rplsh(8, 64, 35);
    index.codes = encode_batch(*index.projection, base);
    auto gt = brute_force_ground_truth(base, queries, 10);

    SearchParams p;
    p.mode = SearchMode::hamming_ranking;
    p.pool = n;
    p.k = 10;
    auto records = run_sweep(index, base, queries, gt, {&p, 1});
    REQUIRE(records.size() == 1);
    CHECK(records[0].mean_recall == 1.0);
    CHECK(records[0].mean_ms > 0.0);
    CHECK(records[0].qps > 0.0);
}

TEST_CASE("sweep skips invalid grid points and keeps the rest") {
    auto base = random_points(200, 4, 41);
    auto queries = random_points(5, 4, 43);
    HashIndex index;
    index.projection = train_rplsh(4, 32, 45);
    index.codes = encode_batch(*index.projection, base);
    auto gt = brute_force_ground_truth(base, queries, 5);

    SearchParams good;
    good.mode = SearchMode::hamming_ranking;
    good.pool = 50;
    good.k = 5;
    SearchParams bad;  // no partition in the index
    bad.mode = SearchMode::quantized;
    bad.pool = 50;
    bad.k = 5;
    std::vector<SearchParams> grid = {bad, good};
    auto records = run_sweep(index, base, queries, gt, grid);
    REQUIRE(records.size() == 1);
    CHECK(records[0].mode == SearchMode::hamming_ranking);
}

TEST_CASE("sweep recall columns are identical across runs and thread counts") {
    auto base = random_points(600, 8, 51);
    auto queries = random_points(20, 8, 53);
    HashIndex index;
    index.projection = train_rplsh(8, 128, 55);
    index.codes = encode_batch(*index.projection, base);
    auto gt = brute_force_ground_truth(base, queries, 10);

    std::vector<SearchParams> grid;
    for (std::int64_t L : {std::int64_t{20}, std::int64_t{100}, std::int64_t{600}}) {
        SearchParams p;
        p.mode = SearchMode::hamming_ranking;
        p.pool = L;
        p.k = 10;
        grid.push_back(p);
    }
    auto a = run_sweep(index, base, queries, gt, grid);
    auto b = run_sweep(index, base, queries, gt, grid);
    SweepOptions parallel_opts;
    parallel_opts.threads = 4;
    auto c = run_sweep(index, base, queries, gt, grid, parallel_opts);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean_recall == b[i].mean_recall);
        CHECK(a[i].mean_recall == c[i].mean_recall);
        CHECK(c[i].mean_ms == 0.0);  // timings suppressed in parallel mode
    }
}

TEST_CASE("longer codes recall more at a fixed pool") {
    const std::int64_t n = 3000;
    const int dim = 24;
    auto base = random_points(n, dim, 61);
    auto queries = random_points(30, dim, 63);
    auto gt = brute_force_ground_truth(base, queries, 10);

    double recall_short = 0.0, recall_long = 0.0;
    for (int bits : {64, 1024}) {
        HashIndex index;
        index.projection = train_rplsh(dim, bits, 65);
        index.codes = encode_batch(*index.projection, base, 4);
        SearchParams p;
        p.mode = SearchMode::hamming_ranking;
        p.pool = n / 10;
        p.k = 10;
        auto records = run_sweep(index, base, queries, gt, {&p, 1});
        (bits == 64 ? recall_short : recall_long) = records[0].mean_recall;
    }
    CHECK(recall_long > recall_short);
}

TEST_SUITE_END();
