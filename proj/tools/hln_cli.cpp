// Command-line front end: dataset prep, index building, single searches and
// recall-time benchmark sweeps. Every subcommand is a thin composition of the
// library calls; nothing here has behavior of its own.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hln/eval.hpp"
#include "hln/hashers.hpp"
#include "hln/io.hpp"
#include "hln/quantizer.hpp"
#include "hln/search.hpp"

namespace {

using namespace hln;

struct BuildSections {
    bool projection = false;
    bool codes = false;
    bool partition = false;
    bool directory = false;
};

BuildSections sections_for_modes(const std::string& modes) {
    BuildSections s;
    std::stringstream ss(modes);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token == "all") {
            s.projection = s.codes = s.partition = s.directory = true;
        } else if (token == "hamming" || token == "hamming_ranking") {
            s.projection = s.codes = true;
        } else if (token == "bucket") {
            s.projection = s.codes = s.directory = true;
        } else if (token == "quantized") {
            s.projection = s.codes = s.partition = true;
        } else if (token == "kmeansqi") {
            s.partition = true;
        } else {
            throw std::runtime_error("unknown build mode '" + token + "'");
        }
    }
    if (!s.projection && !s.partition) {
        throw std::runtime_error("no build modes given");
    }
    return s;
}

int run_gt(const std::string& base_path, const std::string& query_path, int k,
           const std::string& out_path, int threads) {
    auto base = read_vecs<float>(base_path);
    auto queries = read_vecs<float>(query_path);
    std::cerr << "base " << base.rows() << "x" << base.cols() << ", queries "
              << queries.rows() << "x" << queries.cols() << "\n";
    auto gt = brute_force_ground_truth(base, queries, k, threads);
    write_vecs(out_path, gt.ids);
    std::cerr << "wrote " << out_path << "\n";
    return 0;
}

int run_build(const std::string& base_path, int bits, int clusters, int tables,
              std::uint64_t seed, const std::string& modes, int kmeans_iters,
              const std::string& out_path, int threads) {
    auto sections = sections_for_modes(modes);
    auto base = read_vecs<float>(base_path);
    std::cerr << "base " << base.rows() << "x" << base.cols() << "\n";

    HashIndex index;
    if (sections.projection) {
        index.projection = train_rplsh(static_cast<int>(base.cols()), bits, seed);
        index.codes = encode_batch(*index.projection, base, threads);
        std::cerr << "encoded " << base.rows() << " codes of " << bits << " bits\n";
    }
    if (sections.partition) {
        index.partition = kmeans_train(base, clusters, kmeans_iters, seed, threads);
        std::cerr << "kmeans " << clusters << " clusters, "
                  << index.partition->iterations_run << " iterations\n";
    }
    if (sections.directory) {
        index.directory = build_bucket_directory(*index.codes, tables);
        std::cerr << "directory " << tables << " tables of "
                  << index.directory->bits_per_table() << " bits\n";
    }
    save_index(index, out_path);
    std::cerr << "wrote " << out_path << "\n";
    return 0;
}

SearchParams make_params(const std::string& mode, std::int64_t pool, int k, int probes) {
    SearchParams p;
    p.mode = parse_search_mode(mode);
    p.pool = pool > 0 ? pool : k;
    p.k = k;
    p.probes = probes;
    return p;
}

int run_search(const std::string& index_path, const std::string& base_path,
               const std::string& query_path, const std::string& query_codes_path,
               int k, const std::string& mode, std::int64_t pool, int probes,
               const std::string& out_path) {
    auto index = load_index(index_path);
    auto base = read_vecs<float>(base_path);
    auto queries = read_vecs<float>(query_path);
    auto params = make_params(mode, pool, k, probes);

    std::optional<PackedCodes> query_codes;
    if (!query_codes_path.empty()) {
        query_codes = import_codes_file(query_codes_path);
        if (query_codes->size() != queries.rows()) {
            throw std::runtime_error("query code count does not match query count");
        }
    }

    SearchScratch scratch;
    std::vector<QueryRecord> records;
    records.reserve(queries.rows());
    double coding = 0, locating = 0, scanning = 0;
    for (std::int64_t qi = 0; qi < queries.rows(); ++qi) {
        QueryRecord rec;
        if (query_codes) {
            rec = search_coded(index, base, queries.row(qi), query_codes->extract(qi),
                               params, scratch);
        } else {
            rec = search(index, base, queries.row(qi), params, scratch);
        }
        coding += rec.coding_ns * 1e-6;
        locating += rec.locating_ns * 1e-6;
        scanning += rec.scanning_ns * 1e-6;
        records.push_back(std::move(rec));
    }

    const double nq = static_cast<double>(queries.rows());
    std::cerr << "mean per query: coding " << coding / nq << " ms, locating "
              << locating / nq << " ms, scanning " << scanning / nq << " ms\n";
    if (!out_path.empty()) {
        write_result_ids_ivecs(out_path, records);
        std::cerr << "wrote " << out_path << "\n";
    } else {
        for (std::size_t qi = 0; qi < records.size(); ++qi) {
            std::cout << qi << ":";
            for (auto id : records[qi].ids) std::cout << ' ' << id;
            std::cout << "\n";
        }
    }
    return 0;
}

int run_bench(const std::string& index_path, const std::string& base_path,
              const std::string& query_path, const std::string& gt_path, int k,
              const std::string& mode, const std::vector<std::string>& sweeps,
              std::int64_t pool, int probes, const std::string& csv_path,
              bool include_coding, bool no_warmup, int threads) {
    auto index = load_index(index_path);
    auto base = read_vecs<float>(base_path);
    auto queries = read_vecs<float>(query_path);

    GroundTruth gt;
    gt.ids = read_vecs<std::int32_t>(gt_path);
    gt.k = static_cast<int>(gt.ids.cols());

    std::vector<std::int64_t> pools = {pool > 0 ? pool : k};
    std::vector<std::int64_t> probe_list = {probes};
    for (const auto& s : sweeps) {
        auto spec = parse_sweep_spec(s);
        if (spec.name == "L") {
            pools = spec.values;
        } else if (spec.name == "C") {
            probe_list = spec.values;
        } else {
            throw std::runtime_error("sweep parameter '" + spec.name +
                                     "' is not L or C");
        }
    }

    std::vector<SearchParams> grid;
    for (auto c : probe_list) {
        for (auto l : pools) {
            auto p = make_params(mode, l, k, static_cast<int>(c));
            grid.push_back(p);
        }
    }

    SweepOptions options;
    options.include_coding = include_coding;
    options.warmup = !no_warmup;
    options.threads = threads;
    auto records = run_sweep(index, base, queries, gt, grid, options);

    write_sweep_csv(csv_path, records);
    std::cerr << "wrote " << records.size() << " rows to " << csv_path << "\n";
    for (const auto& r : records) {
        std::cerr << to_string(r.mode) << " L=" << r.pool << " C=" << r.probes
                  << " recall=" << r.mean_recall << " mean_ms=" << r.mean_ms << "\n";
    }
    return 0;
}

int run_import_codes(const std::string& codes_path, int bits,
                     const std::string& base_path, int clusters, int kmeans_iters,
                     int tables, std::uint64_t seed, const std::string& out_path,
                     int threads) {
    HashIndex index;
    index.codes = import_codes_file(codes_path, bits);
    std::cerr << "imported " << index.codes->size() << " codes of "
              << index.codes->bits() << " bits\n";
    if (clusters > 0) {
        if (base_path.empty()) {
            throw std::runtime_error("--clusters needs --base to train the partition");
        }
        auto base = read_vecs<float>(base_path);
        if (base.rows() != index.codes->size()) {
            throw std::runtime_error("base vector count does not match code count");
        }
        index.partition = kmeans_train(base, clusters, kmeans_iters, seed, threads);
    }
    if (tables > 0) {
        index.directory = build_bucket_directory(*index.codes, tables);
    }
    save_index(index, out_path);
    std::cerr << "wrote " << out_path << "\n";
    return 0;
}

int run_export_codes(const std::string& index_path, const std::string& out_path) {
    auto index = load_index(index_path);
    if (!index.codes) throw std::runtime_error("index holds no binary codes");
    export_codes_file(*index.codes, out_path);
    std::cerr << "wrote " << index.codes->size() << " codes to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hash-index nearest neighbor search"};
    app.require_subcommand(1);

    // gt
    std::string gt_base, gt_query, gt_out;
    int gt_k = 100, gt_threads = 0;
    auto* gt = app.add_subcommand("gt", "exact ground truth by brute force");
    gt->add_option("--base", gt_base, "base vectors (fvecs)")->required();
    gt->add_option("--query", gt_query, "query vectors (fvecs)")->required();
    gt->add_option("--k", gt_k, "neighbors per query");
    gt->add_option("--out", gt_out, "output ids (ivecs)")->required();
    gt->add_option("--threads", gt_threads, "worker threads, 0 = all");

    // build
    std::string b_base, b_out, b_mode = "all";
    int b_bits = 1024, b_clusters = 1000, b_tables = 32, b_iters = 25, b_threads = 0;
    std::uint64_t b_seed = 0;
    auto* build = app.add_subcommand("build", "build an index from base vectors");
    build->add_option("--base", b_base, "base vectors (fvecs)")->required();
    build->add_option("--bits", b_bits, "code length");
    build->add_option("--clusters", b_clusters, "kmeans cluster count");
    build->add_option("--tables", b_tables, "bucket directory tables");
    build->add_option("--seed", b_seed, "seed for projection and kmeans");
    build->add_option("--mode", b_mode,
                      "comma list of hamming,bucket,quantized,kmeansqi or all");
    build->add_option("--kmeans-iters", b_iters, "kmeans iteration budget");
    build->add_option("--out", b_out, "output index file")->required();
    build->add_option("--threads", b_threads, "worker threads, 0 = all");

    // search
    std::string s_index, s_base, s_query, s_codes, s_out, s_mode = "hamming_ranking";
    int s_k = 100, s_probes = 1;
    std::int64_t s_pool = 0;
    auto* search_cmd = app.add_subcommand("search", "run queries against an index");
    search_cmd->add_option("--index", s_index, "index file")->required();
    search_cmd->add_option("--base", s_base, "base vectors (fvecs)")->required();
    search_cmd->add_option("--query", s_query, "query vectors (fvecs)")->required();
    search_cmd->add_option("--query-codes", s_codes,
                           "externally produced query codes (uint8 vecs + sidecar)");
    search_cmd->add_option("--k", s_k, "neighbors per query");
    search_cmd->add_option("--mode", s_mode,
                           "hamming_ranking | bucket | quantized | kmeansqi");
    search_cmd->add_option("--pool", s_pool, "pool size L (defaults to k)");
    search_cmd->add_option("--nprobe", s_probes, "clusters probed C");
    search_cmd->add_option("--out", s_out, "result ids (ivecs); stdout if omitted");

    // bench
    std::string e_index, e_base, e_query, e_gt, e_csv, e_mode = "hamming_ranking";
    std::vector<std::string> e_sweeps;
    int e_k = 100, e_probes = 1, e_threads = 1;
    std::int64_t e_pool = 0;
    bool e_include_coding = false, e_no_warmup = false;
    auto* bench = app.add_subcommand("bench", "recall-time sweep to CSV");
    bench->add_option("--index", e_index, "index file")->required();
    bench->add_option("--base", e_base, "base vectors (fvecs)")->required();
    bench->add_option("--query", e_query, "query vectors (fvecs)")->required();
    bench->add_option("--gt", e_gt, "ground truth ids (ivecs)")->required();
    bench->add_option("--k", e_k, "neighbors per query");
    bench->add_option("--mode", e_mode,
                      "hamming_ranking | bucket | quantized | kmeansqi");
    bench->add_option("--sweep", e_sweeps,
                      "L=start:step:stop or C=v1,v2,... (repeatable)");
    bench->add_option("--pool", e_pool, "fixed pool size when L is not swept");
    bench->add_option("--nprobe", e_probes, "fixed probe count when C is not swept");
    bench->add_option("--csv", e_csv, "output CSV path")->required();
    bench->add_flag("--include-coding", e_include_coding,
                    "count coding time in per-query totals");
    bench->add_flag("--no-warmup", e_no_warmup, "skip the untimed warmup pass");
    bench->add_option("--threads", e_threads,
                      "1 = timed single-thread sweep; >1 = recall only");

    // import-codes
    std::string i_codes, i_base, i_out;
    int i_bits = 0, i_clusters = 0, i_iters = 25, i_tables = 0, i_threads = 0;
    std::uint64_t i_seed = 0;
    auto* import_cmd =
        app.add_subcommand("import-codes", "index externally produced codes");
    import_cmd->add_option("--codes", i_codes, "codes file (uint8 vecs + sidecar)")
        ->required();
    import_cmd->add_option("--bits", i_bits, "code length if no sidecar");
    import_cmd->add_option("--base", i_base, "base vectors, needed with --clusters");
    import_cmd->add_option("--clusters", i_clusters, "train a kmeans partition too");
    import_cmd->add_option("--kmeans-iters", i_iters, "kmeans iteration budget");
    import_cmd->add_option("--tables", i_tables, "build a bucket directory too");
    import_cmd->add_option("--seed", i_seed, "kmeans seed");
    import_cmd->add_option("--out", i_out, "output index file")->required();
    import_cmd->add_option("--threads", i_threads, "worker threads, 0 = all");

    // export-codes
    std::string x_index, x_out;
    auto* export_cmd = app.add_subcommand("export-codes", "dump an index's codes");
    export_cmd->add_option("--index", x_index, "index file")->required();
    export_cmd->add_option("--out", x_out, "output codes file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gt->parsed()) return run_gt(gt_base, gt_query, gt_k, gt_out, gt_threads);
        if (build->parsed()) {
            return run_build(b_base, b_bits, b_clusters, b_tables, b_seed, b_mode,
                             b_iters, b_out, b_threads);
        }
        if (search_cmd->parsed()) {
            return run_search(s_index, s_base, s_query, s_codes, s_k, s_mode, s_pool,
                              s_probes, s_out);
        }
        if (bench->parsed()) {
            return run_bench(e_index, e_base, e_query, e_gt, e_k, e_mode, e_sweeps,
                             e_pool, e_probes, e_csv, e_include_coding, e_no_warmup,
                             e_threads);
        }
        if (import_cmd->parsed()) {
            return run_import_codes(i_codes, i_bits, i_base, i_clusters, i_iters,
                                    i_tables, i_seed, i_out, i_threads);
        }
        if (export_cmd->parsed()) return run_export_codes(x_index, x_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
