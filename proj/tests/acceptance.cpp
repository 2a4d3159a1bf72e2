// End-to-end acceptance checks. Each criterion prints one pass/fail line;
// the process exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "hln/distance.hpp"
#include "hln/eval.hpp"
#include "hln/hashers.hpp"
#include "hln/io.hpp"
#include "hln/quantizer.hpp"
#include "hln/search.hpp"

using namespace hln;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
    if (!cond) throw Failure(what);
}

Matrix<float> gaussian_points(std::int64_t n, int dim, std::uint64_t seed) {
    Matrix<float> m(n, dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, 1.0f);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

// Clustered nonnegative features in SIFT-ish ranges. The jitter is wide
// enough that short codes leave real recall on the table.
Matrix<float> clustered_points(std::int64_t n, int dim, int centers,
                               std::uint64_t seed) {
    Matrix<float> m(n, dim);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> center(0.0f, 100.0f);
    std::normal_distribution<float> jitter(0.0f, 35.0f);
    Matrix<float> mu(centers, dim);
    for (std::size_t i = 0; i < mu.size(); ++i) mu.data()[i] = center(rng);
    for (std::int64_t i = 0; i < n; ++i) {
        auto c = mu.row(static_cast<std::int64_t>(rng() % centers));
        auto row = m.row(i);
        for (int d = 0; d < dim; ++d) row[d] = std::max(0.0f, c[d] + jitter(rng));
    }
    return m;
}

PackedCodes random_codes(std::int64_t n, int l, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> words(static_cast<std::size_t>(n) * words_for_bits(l));
    const std::uint64_t tail =
        l % 64 == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << (l % 64)) - 1;
    const int wpc = words_for_bits(l);
    for (std::int64_t i = 0; i < n; ++i) {
        for (int w = 0; w < wpc; ++w) {
            words[i * wpc + w] = rng();
        }
        words[i * wpc + wpc - 1] &= tail;
    }
    return PackedCodes::from_raw_words(n, l, std::move(words));
}

// ---- criteria ----

std::string census_exactness() {
    const std::uint64_t t16[] = {1,  16,   120,   560,   1820,  4368,
                                 8008, 11440, 12870, 11440, 8008};
    const std::uint64_t t32[] = {1,       32,      496,     4960,     35960,    201376,
                                 906192, 3365856, 10518300, 28048800, 64512240};
    const std::uint64_t t24[] = {1,      24,     276,    2024,    10626,   42504,
                                 134596, 346104, 735471, 1307504, 1961256};
    const std::uint64_t t40[] = {1,        40,       780,      9880,
                                 91390,    658008,   3838380,  18643560,
                                 76904685, 273438880, 847660528};
    for (int r = 0; r <= 10; ++r) {
        require(buckets_at_radius(16, r) == t16[r], "16-bit census, radius " + std::to_string(r));
        require(buckets_at_radius(32, r) == t32[r], "32-bit census, radius " + std::to_string(r));
        require(buckets_at_radius(24, r) == t24[r], "24-bit census, radius " + std::to_string(r));
        require(buckets_at_radius(40, r) == t40[r], "40-bit census, radius " + std::to_string(r));
    }
    return "44 table entries exact";
}

std::string hamming_ranking_oracle() {
    const std::int64_t n = 2000;
    SearchScratch scratch;
    std::mt19937_64 rng(1001);
    const int lengths[] = {32, 64, 1024};
    for (int instance = 0; instance < 20; ++instance) {
        int l = lengths[instance % 3];
        auto codes = random_codes(n, l, rng());
        auto q = random_codes(1, l, rng()).extract(0);

        std::vector<std::pair<int, std::int32_t>> all(n);
        for (std::int64_t i = 0; i < n; ++i) {
            all[i] = {hamming_distance(codes.extract(i), q),
                      static_cast<std::int32_t>(i)};
        }
        std::sort(all.begin(), all.end());

        for (std::int64_t L : {std::int64_t{1}, std::int64_t{100}, n}) {
            auto got = hamming_ranking_locate(codes, q, L, scratch);
            require(static_cast<std::int64_t>(got.size()) == L, "pool size");
            for (std::int64_t i = 0; i < L; ++i) {
                require(got[i] == all[i].second,
                        "instance " + std::to_string(instance) + ", L=" +
                            std::to_string(L) + ": id mismatch at rank " +
                            std::to_string(i));
            }
        }
    }
    return "20 instances, id-exact at every rank";
}

std::string quantized_degeneracy() {
    const std::int64_t n = 5000;
    const int dim = 8, l = 64;
    const int ks[] = {1, 10, 100};
    SearchScratch s1, s2;
    std::mt19937_64 rng(2001);
    for (int instance = 0; instance < 10; ++instance) {
        int k = ks[instance % 3];
        auto base = gaussian_points(n, dim, rng());
        auto part = kmeans_train(base, k, 8, rng());
        auto proj = train_rplsh(dim, l, rng());
        auto codes = encode_batch(proj, base);
        auto queries = gaussian_points(100, dim, rng());
        for (std::int64_t qi = 0; qi < queries.rows(); ++qi) {
            auto b = encode(proj, queries.row(qi));
            auto quant = quantized_locate(part, codes, queries.row(qi), b, k, 500, s1);
            auto plain = hamming_ranking_locate(codes, b, 500, s2);
            require(quant == plain, "instance " + std::to_string(instance) + ", query " +
                                        std::to_string(qi));
        }
    }
    return "1000 queries identical to hamming ranking";
}

std::string exact_at_full_pool() {
    const std::int64_t n = 10000;
    const int dim = 32, K = 100;
    auto base = clustered_points(n, dim, 64, 3001);
    auto queries = clustered_points(100, dim, 64, 3003);
    auto gt = brute_force_ground_truth(base, queries, K);

    HashIndex index;
    index.projection = train_rplsh(dim, 128, 3005);
    index.codes = encode_batch(*index.projection, base);
    index.partition = kmeans_train(base, 50, 10, 3007);

    SearchScratch scratch;
    for (auto mode : {SearchMode::hamming_ranking, SearchMode::quantized,
                      SearchMode::kmeansqi}) {
        SearchParams params;
        params.mode = mode;
        params.k = K;
        params.pool = n;
        params.probes = index.partition->k;
        double total = 0.0;
        for (std::int64_t qi = 0; qi < queries.rows(); ++qi) {
            auto rec = search(index, base, queries.row(qi), params, scratch);
            total += recall(rec.ids, gt.ids.row(qi));
        }
        require(total == static_cast<double>(queries.rows()),
                std::string("recall not exactly 1.0 in mode ") + to_string(mode));
    }
    return "recall 1.0 in hamming_ranking, quantized, kmeansqi";
}

std::string bucket_soundness() {
    const std::int64_t n = 5000;
    const int l = 24;
    auto codes = random_codes(n, l, 4001);
    auto dir = build_bucket_directory(codes, 1);
    SearchScratch scratch;
    std::mt19937_64 rng(4003);

    std::vector<int> dist(n);
    for (int trial = 0; trial < 200; ++trial) {
        auto q = random_codes(1, l, rng()).extract(0);
        for (std::int64_t i = 0; i < n; ++i) {
            dist[i] = hamming_distance(codes.extract(i), q);
        }
        for (std::int64_t L : {std::int64_t{100}, std::int64_t{500}, std::int64_t{2000}}) {
            auto res = bucket_search_locate(dir, q, L, scratch);
            require(static_cast<std::int64_t>(res.ids.size()) == L, "pool short");
            std::vector<char> in_pool(n, 0);
            for (auto id : res.ids) {
                require(!in_pool[id], "duplicate id in pool");
                in_pool[id] = 1;
                require(dist[id] <= res.radius_reached, "id outside radius_reached");
            }
            for (std::int64_t i = 0; i < n; ++i) {
                if (dist[i] < res.radius_reached) {
                    require(in_pool[i], "bucket below radius_reached not consumed");
                }
            }
        }
    }
    return "600 sweeps sound";
}

std::string locating_cost_growth() {
    const std::int64_t n = 100000, L = 5000;
    SearchScratch scratch;
    std::vector<std::int64_t> medians;
    for (int l : {16, 32}) {
        auto codes = random_codes(n, l, 5001 + l);
        auto dir = build_bucket_directory(codes, 1);
        std::vector<std::int64_t> visits;
        std::mt19937_64 rng(5101 + l);
        for (int trial = 0; trial < 5; ++trial) {
            auto q = random_codes(1, l, rng()).extract(0);
            visits.push_back(bucket_search_locate(dir, q, L, scratch).buckets_visited);
        }
        std::sort(visits.begin(), visits.end());
        medians.push_back(visits[visits.size() / 2]);

        // Hamming ranking work stays exactly n distance computations.
        auto q = random_codes(1, l, rng()).extract(0);
        hamming_ranking_locate(codes, q, L, scratch);
        require(scratch.distances.size() == static_cast<std::size_t>(n),
                "hamming ranking did not compute exactly n distances");
    }
    require(medians[1] > 4 * medians[0],
            "median buckets_visited grew only " +
                std::to_string(static_cast<double>(medians[1]) /
                               static_cast<double>(medians[0])) +
                "x from 16 to 32 bits");
    std::ostringstream detail;
    detail << "median visits " << medians[0] << " -> " << medians[1] << " ("
           << static_cast<double>(medians[1]) / static_cast<double>(medians[0])
           << "x)";
    return detail.str();
}

std::string longer_code_recall_trend() {
    const std::int64_t n = 10000;
    const int dim = 128, K = 100;
    const std::int64_t L = 1000;
    auto base = clustered_points(n, dim, 80, 6001);
    auto queries = clustered_points(100, dim, 80, 6003);
    auto gt = brute_force_ground_truth(base, queries, K);

    double recalls[2];
    int idx = 0;
    SearchScratch scratch;
    for (int bits : {64, 1024}) {
        HashIndex index;
        index.projection = train_rplsh(dim, bits, 6005);
        index.codes = encode_batch(*index.projection, base);
        SearchParams params;
        params.mode = SearchMode::hamming_ranking;
        params.pool = L;
        params.k = K;
        double total = 0.0;
        for (std::int64_t qi = 0; qi < queries.rows(); ++qi) {
            auto rec = search(index, base, queries.row(qi), params, scratch);
            total += recall(rec.ids, gt.ids.row(qi));
        }
        recalls[idx++] = total / static_cast<double>(queries.rows());
    }
    std::ostringstream detail;
    detail << "recall@64=" << recalls[0] << " recall@1024=" << recalls[1];
    require(recalls[1] >= recalls[0] + 0.05, "margin under 0.05: " + detail.str());
    return detail.str();
}

std::string monotonicity_suite() {
    const std::int64_t n = 3000;
    const int dim = 16, K = 20;
    auto base = clustered_points(n, dim, 40, 7001);
    auto queries = clustered_points(50, dim, 40, 7003);
    auto gt = brute_force_ground_truth(base, queries, K);

    HashIndex index;
    index.projection = train_rplsh(dim, 256, 7005);
    index.codes = encode_batch(*index.projection, base);
    index.partition = kmeans_train(base, 30, 10, 7007);

    // Recall non-decreasing in L at each probe count (3x3 grid).
    std::vector<SearchParams> grid;
    for (int probes : {5, 15, 30}) {
        for (std::int64_t L : {std::int64_t{50}, std::int64_t{500}, n}) {
            SearchParams p;
            p.mode = SearchMode::quantized;
            p.pool = L;
            p.k = K;
            p.probes = probes;
            grid.push_back(p);
        }
    }
    auto records = run_sweep(index, base, queries, gt, grid);
    require(records.size() == grid.size(), "sweep dropped grid points");
    for (int row = 0; row < 3; ++row) {
        for (int col = 1; col < 3; ++col) {
            require(records[row * 3 + col].mean_recall >=
                        records[row * 3 + col - 1].mean_recall - 1e-9,
                    "recall decreased in L at probes row " + std::to_string(row));
        }
    }
    // Recall non-decreasing in C at exhaustive L (the last column).
    for (int row = 1; row < 3; ++row) {
        require(records[row * 3 + 2].mean_recall >=
                    records[(row - 1) * 3 + 2].mean_recall - 1e-9,
                "recall decreased in C at L = n");
    }

    // Hamming ranking obeys the same L dominance exactly.
    SearchScratch scratch;
    for (std::int64_t qi = 0; qi < 10; ++qi) {
        auto b = encode(*index.projection, queries.row(qi));
        auto small = hamming_ranking_locate(*index.codes, b, 100, scratch);
        auto large = hamming_ranking_locate(*index.codes, b, 1000, scratch);
        require(std::equal(small.begin(), small.end(), large.begin()),
                "locate pools are not nested");
    }
    return "3x3 grid monotone";
}

std::string persistence_fidelity() {
    const std::int64_t n = 2000;
    const int dim = 16;
    auto base = clustered_points(n, dim, 30, 8001);

    HashIndex index;
    index.projection = train_rplsh(dim, 96, 8003);
    index.codes = encode_batch(*index.projection, base);
    index.partition = kmeans_train(base, 25, 10, 8005);
    index.directory = build_bucket_directory(*index.codes, 8);  // 12-bit slices

    auto dir = std::filesystem::temp_directory_path();
    auto path = (dir / "hln_acceptance_index.hln").string();
    auto path2 = (dir / "hln_acceptance_index2.hln").string();
    save_index(index, path);
    auto loaded = load_index(path);
    require(loaded == index, "loaded index differs from the built one");
    save_index(loaded, path2);

    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::vector<char>(std::istreambuf_iterator<char>(in),
                                 std::istreambuf_iterator<char>());
    };
    require(slurp(path) == slurp(path2), "re-serialization not byte-identical");
    std::filesystem::remove(path);
    std::filesystem::remove(path2);

    auto queries = clustered_points(100, dim, 30, 8007);
    SearchScratch s1, s2;
    for (auto mode : {SearchMode::hamming_ranking, SearchMode::bucket,
                      SearchMode::quantized, SearchMode::kmeansqi}) {
        SearchParams params;
        params.mode = mode;
        params.pool = 200;
        params.k = 10;
        params.probes = 5;
        for (std::int64_t qi = 0; qi < queries.rows(); ++qi) {
            auto a = search(index, base, queries.row(qi), params, s1);
            auto b = search(loaded, base, queries.row(qi), params, s2);
            require(a.ids == b.ids && a.distances == b.distances,
                    std::string("loaded index answers differ in mode ") +
                        to_string(mode));
        }
    }
    return "byte-identical files, identical answers";
}

std::string determinism() {
    const std::int64_t n = 4000;
    const int dim = 24, K = 20;

    auto run_pipeline = [&] {
        auto base = clustered_points(n, dim, 30, 9001);
        auto queries = clustered_points(60, dim, 30, 9003);
        auto gt = brute_force_ground_truth(base, queries, K);

        HashIndex index;
        index.projection = train_rplsh(dim, 128, 9005);
        index.codes = encode_batch(*index.projection, base, 2);
        index.partition = kmeans_train(base, 40, 10, 9007, 2);
        index.directory = build_bucket_directory(*index.codes, 16);  // 8-bit slices

        std::vector<SearchParams> grid;
        for (auto mode : {SearchMode::hamming_ranking, SearchMode::bucket,
                          SearchMode::quantized, SearchMode::kmeansqi}) {
            SearchParams p;
            p.mode = mode;
            p.pool = 400;
            p.k = K;
            p.probes = 8;
            grid.push_back(p);
        }
        auto records = run_sweep(index, base, queries, gt, grid);

        std::vector<double> recalls;
        for (const auto& r : records) recalls.push_back(r.mean_recall);
        std::vector<std::vector<std::int32_t>> ids;
        SearchScratch scratch;
        for (const auto& p : grid) {
            for (std::int64_t qi = 0; qi < queries.rows(); ++qi) {
                ids.push_back(search(index, base, queries.row(qi), p, scratch).ids);
            }
        }
        return std::make_pair(recalls, ids);
    };

    auto first = run_pipeline();
    auto second = run_pipeline();
    require(first.first == second.first, "recall columns differ between runs");
    require(first.second == second.second, "result ids differ between runs");
    return "recalls and ids identical across runs";
}

struct Criterion {
    int number;
    const char* name;
    std::function<std::string()> run;
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {1, "bucket census exactness", census_exactness},
        {2, "hamming ranking full-sort oracle", hamming_ranking_oracle},
        {3, "quantized degeneracy at C = k", quantized_degeneracy},
        {4, "exact neighbors at L = n", exact_at_full_pool},
        {5, "bucket-search soundness", bucket_soundness},
        {6, "locating-cost growth 16 -> 32 bits", locating_cost_growth},
        {7, "longer-code recall trend 64 -> 1024 bits", longer_code_recall_trend},
        {8, "recall monotonicity in L and C", monotonicity_suite},
        {9, "persistence fidelity", persistence_fidelity},
        {10, "pipeline determinism", determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        std::string status = "PASS", detail;
        try {
            detail = c.run();
        } catch (const std::exception& e) {
            status = "FAIL";
            detail = e.what();
            ++failures;
        }
        auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
        std::printf("[%s] %2d. %-42s (%.2fs)%s%s\n", status.c_str(), c.number, c.name,
                    secs.count(), detail.empty() ? "" : " - ", detail.c_str());
        std::fflush(stdout);
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, std::size(criteria));
        return 1;
    }
    std::printf("all %zu criteria passed\n", std::size(criteria));
    return 0;
}
