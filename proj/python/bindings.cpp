#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hln/eval.hpp"
#include "hln/hashers.hpp"
#include "hln/io.hpp"
#include "hln/quantizer.hpp"
#include "hln/search.hpp"

namespace py = pybind11;
using namespace hln;

namespace {

template <typename T>
Matrix<T> matrix_from_numpy(const py::array_t<T, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
    Matrix<T> m(arr.shape(0), arr.shape(1));
    std::memcpy(m.data(), arr.data(), sizeof(T) * m.size());
    return m;
}

template <typename T>
py::array_t<T> numpy_from_matrix(const Matrix<T>& m) {
    py::array_t<T> arr({m.rows(), m.cols()});
    std::memcpy(arr.mutable_data(), m.data(), sizeof(T) * m.size());
    return arr;
}

std::vector<float> vector_from_numpy(
    const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
    return {arr.data(), arr.data() + arr.shape(0)};
}

SearchParams make_params(const std::string& mode, std::int64_t pool, int k, int probes) {
    SearchParams p;
    p.mode = parse_search_mode(mode);
    p.pool = pool;
    p.k = k;
    p.probes = probes;
    return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "hash-index approximate nearest neighbor search";

    py::class_<BitCode>(m, "BitCode")
        .def_property_readonly("bits", &BitCode::bits)
        .def("get", &BitCode::get)
        .def("__eq__", [](const BitCode& a, const BitCode& b) { return a == b; });

    py::class_<PackedCodes>(m, "PackedCodes")
        .def_property_readonly("n", &PackedCodes::size)
        .def_property_readonly("bits", &PackedCodes::bits)
        .def("extract", &PackedCodes::extract)
        .def("__len__", &PackedCodes::size)
        .def("__eq__", [](const PackedCodes& a, const PackedCodes& b) { return a == b; });

    py::class_<ProjectionMatrix>(m, "ProjectionMatrix")
        .def_property_readonly("dim", [](const ProjectionMatrix& p) { return p.dim; })
        .def_property_readonly("bits", [](const ProjectionMatrix& p) { return p.bits; })
        .def_property_readonly("seed", [](const ProjectionMatrix& p) { return p.seed; })
        .def_property_readonly("directions", [](const ProjectionMatrix& p) {
            return numpy_from_matrix(p.directions);
        });

    py::class_<KmeansPartition>(m, "KmeansPartition")
        .def_property_readonly("k", [](const KmeansPartition& p) { return p.k; })
        .def_property_readonly("iterations_run",
                               [](const KmeansPartition& p) { return p.iterations_run; })
        .def_property_readonly("centroids", [](const KmeansPartition& p) {
            return numpy_from_matrix(p.centroids);
        })
        .def_property_readonly("assignments", [](const KmeansPartition& p) {
            return py::array_t<std::int32_t>(p.assignments.size(), p.assignments.data());
        })
        .def("inverted_list", [](const KmeansPartition& p, int c) {
            return p.inverted_lists.at(c);
        });

    py::class_<BucketDirectory>(m, "BucketDirectory")
        .def_property_readonly("num_tables", &BucketDirectory::num_tables)
        .def_property_readonly("bits_per_table", &BucketDirectory::bits_per_table);

    py::class_<QueryRecord>(m, "QueryRecord")
        .def_property_readonly("ids", [](const QueryRecord& r) {
            return py::array_t<std::int32_t>(r.ids.size(), r.ids.data());
        })
        .def_property_readonly("distances", [](const QueryRecord& r) {
            return py::array_t<float>(r.distances.size(), r.distances.data());
        })
        .def_readonly("coding_ns", &QueryRecord::coding_ns)
        .def_readonly("locating_ns", &QueryRecord::locating_ns)
        .def_readonly("scanning_ns", &QueryRecord::scanning_ns)
        .def_readonly("candidates_examined", &QueryRecord::candidates_examined)
        .def_readonly("buckets_visited", &QueryRecord::buckets_visited)
        .def_readonly("radius_reached", &QueryRecord::radius_reached)
        .def_readonly("pool_shortfall", &QueryRecord::pool_shortfall);

    py::class_<SearchParams>(m, "SearchParams")
        .def(py::init(&make_params), py::arg("mode") = "hamming_ranking",
             py::arg("pool") = 0, py::arg("k") = 100, py::arg("probes") = 1)
        .def_property(
            "mode", [](const SearchParams& p) { return std::string(to_string(p.mode)); },
            [](SearchParams& p, const std::string& mode) {
                p.mode = parse_search_mode(mode);
            })
        .def_readwrite("pool", &SearchParams::pool)
        .def_readwrite("k", &SearchParams::k)
        .def_readwrite("probes", &SearchParams::probes);

    py::class_<GroundTruth>(m, "GroundTruth")
        .def_property_readonly("k", [](const GroundTruth& g) { return g.k; })
        .def_property_readonly(
            "ids", [](const GroundTruth& g) { return numpy_from_matrix(g.ids); });

    py::class_<SweepRecord>(m, "SweepRecord")
        .def_property_readonly(
            "mode", [](const SweepRecord& r) { return std::string(to_string(r.mode)); })
        .def_readonly("code_bits", &SweepRecord::code_bits)
        .def_readonly("tables", &SweepRecord::tables)
        .def_readonly("probes", &SweepRecord::probes)
        .def_readonly("pool", &SweepRecord::pool)
        .def_readonly("mean_recall", &SweepRecord::mean_recall)
        .def_readonly("qps", &SweepRecord::qps)
        .def_readonly("mean_ms", &SweepRecord::mean_ms)
        .def_readonly("p50_ms", &SweepRecord::p50_ms)
        .def_readonly("p99_ms", &SweepRecord::p99_ms)
        .def_readonly("coding_ms", &SweepRecord::coding_ms)
        .def_readonly("locating_ms", &SweepRecord::locating_ms)
        .def_readonly("scanning_ms", &SweepRecord::scanning_ms);

    py::class_<HashIndex>(m, "HashIndex")
        .def(py::init<>())
        .def_property_readonly("n", &HashIndex::base_count)
        .def_property_readonly("has_projection",
                               [](const HashIndex& i) { return bool(i.projection); })
        .def_property_readonly("has_codes",
                               [](const HashIndex& i) { return bool(i.codes); })
        .def_property_readonly("has_partition",
                               [](const HashIndex& i) { return bool(i.partition); })
        .def_property_readonly("has_directory",
                               [](const HashIndex& i) { return bool(i.directory); })
        .def_property_readonly(
            "codes", [](const HashIndex& i) { return i.codes; },
            py::return_value_policy::copy)
        .def("set_projection",
             [](HashIndex& i, const ProjectionMatrix& p) { i.projection = p; })
        .def("set_codes", [](HashIndex& i, const PackedCodes& c) { i.codes = c; })
        .def("set_partition",
             [](HashIndex& i, const KmeansPartition& p) { i.partition = p; })
        .def("set_directory",
             [](HashIndex& i, const BucketDirectory& d) { i.directory = d; });

    // codes
    m.def("pack_codes", [](const py::array_t<std::uint8_t, py::array::c_style |
                                                               py::array::forcecast>& a) {
        return pack_codes(matrix_from_numpy(a));
    });
    m.def("unpack_codes",
          [](const PackedCodes& c) { return numpy_from_matrix(unpack_codes(c)); });
    m.def("hamming_distance", &hamming_distance);
    m.def("hamming_to_all", [](const PackedCodes& codes, const BitCode& q) {
        py::array_t<std::uint16_t> out(codes.size());
        hamming_to_all(codes, q, {out.mutable_data(), static_cast<std::size_t>(codes.size())});
        return out;
    });

    // hashers
    m.def("train_rplsh", &train_rplsh, py::arg("dim"), py::arg("bits"), py::arg("seed"));
    m.def("encode", [](const ProjectionMatrix& p,
                       const py::array_t<float, py::array::c_style |
                                                    py::array::forcecast>& x) {
        auto v = vector_from_numpy(x);
        return encode(p, v);
    });
    m.def(
        "encode_batch",
        [](const ProjectionMatrix& p,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& x,
           int threads) { return encode_batch(p, matrix_from_numpy(x), threads); },
        py::arg("projection"), py::arg("x"), py::arg("threads") = 1);
    m.def("import_packed_codes",
          [](py::bytes payload, std::int64_t n, int bits) {
              std::string_view bytes = payload;
              return import_packed_codes(
                  {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()}, n,
                  bits);
          });
    m.def("export_packed_codes", [](const PackedCodes& codes) {
        auto bytes = export_packed_codes(codes);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    });

    // quantizer
    m.def(
        "kmeans_train",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& x, int k,
           int max_iters, std::uint64_t seed, int threads) {
            return kmeans_train(matrix_from_numpy(x), k, max_iters, seed, threads);
        },
        py::arg("x"), py::arg("k"), py::arg("max_iters") = 25, py::arg("seed") = 0,
        py::arg("threads") = 1);
    m.def("nearest_clusters",
          [](const KmeansPartition& p,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& q,
             int probes) {
              auto v = vector_from_numpy(q);
              return nearest_clusters(p, v, probes);
          });

    // search
    m.def("buckets_at_radius", &buckets_at_radius, py::arg("bits"), py::arg("radius"));
    m.def("build_bucket_directory", &build_bucket_directory, py::arg("codes"),
          py::arg("num_tables"));
    m.def("hamming_ranking_locate",
          [](const PackedCodes& codes, const BitCode& b, std::int64_t pool) {
              SearchScratch scratch;
              return hamming_ranking_locate(codes, b, pool, scratch);
          });
    m.def("bucket_search_locate",
          [](const BucketDirectory& dir, const BitCode& b, std::int64_t pool) {
              SearchScratch scratch;
              auto res = bucket_search_locate(dir, b, pool, scratch);
              return py::make_tuple(res.ids, res.radius_reached, res.buckets_visited);
          });
    m.def("quantized_locate",
          [](const KmeansPartition& part, const PackedCodes& codes,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& q,
             const BitCode& b, int probes, std::int64_t pool) {
              SearchScratch scratch;
              auto v = vector_from_numpy(q);
              return quantized_locate(part, codes, v, b, probes, pool, scratch);
          });
    m.def("kmeansqi_locate",
          [](const KmeansPartition& part,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& q,
             int probes) {
              auto v = vector_from_numpy(q);
              return kmeansqi_locate(part, v, probes);
          });
    m.def("rerank",
          [](const py::array_t<float, py::array::c_style | py::array::forcecast>& base,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& q,
             const std::vector<std::int32_t>& candidates, int k) {
              SearchScratch scratch;
              std::vector<std::int32_t> ids;
              std::vector<float> dists;
              auto bm = matrix_from_numpy(base);
              auto qv = vector_from_numpy(q);
              rerank(bm, qv, candidates, k, scratch, ids, dists);
              return py::make_tuple(ids, dists);
          });
    m.def("search",
          [](const HashIndex& index,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& base,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& q,
             const SearchParams& params) {
              SearchScratch scratch;
              auto bm = matrix_from_numpy(base);
              auto qv = vector_from_numpy(q);
              return search(index, bm, qv, params, scratch);
          });
    m.def("search_coded",
          [](const HashIndex& index,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& base,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& q,
             const BitCode& code, const SearchParams& params) {
              SearchScratch scratch;
              auto bm = matrix_from_numpy(base);
              auto qv = vector_from_numpy(q);
              return search_coded(index, bm, qv, code, params, scratch);
          });

    // eval
    m.def(
        "brute_force_ground_truth",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& base,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& queries,
           int k, int threads) {
            return brute_force_ground_truth(matrix_from_numpy(base),
                                            matrix_from_numpy(queries), k, threads);
        },
        py::arg("base"), py::arg("queries"), py::arg("k"), py::arg("threads") = 1);
    m.def("recall", [](const std::vector<std::int32_t>& result,
                       const std::vector<std::int32_t>& truth) {
        return recall(result, truth);
    });
    m.def(
        "run_sweep",
        [](const HashIndex& index,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& base,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& queries,
           const GroundTruth& gt, const std::vector<SearchParams>& grid,
           bool include_coding, bool warmup, int threads) {
            SweepOptions options;
            options.include_coding = include_coding;
            options.warmup = warmup;
            options.threads = threads;
            return run_sweep(index, matrix_from_numpy(base), matrix_from_numpy(queries),
                             gt, grid, options);
        },
        py::arg("index"), py::arg("base"), py::arg("queries"), py::arg("gt"),
        py::arg("grid"), py::arg("include_coding") = false, py::arg("warmup") = true,
        py::arg("threads") = 1);

    // io
    m.def("read_fvecs",
          [](const std::string& path) { return numpy_from_matrix(read_vecs<float>(path)); });
    m.def("read_ivecs", [](const std::string& path) {
        return numpy_from_matrix(read_vecs<std::int32_t>(path));
    });
    m.def("write_fvecs",
          [](const std::string& path,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& m) {
              write_vecs(path, matrix_from_numpy(m));
          });
    m.def("write_ivecs",
          [](const std::string& path,
             const py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>&
                 m) { write_vecs(path, matrix_from_numpy(m)); });
    m.def("export_codes_file", &export_codes_file);
    m.def("import_codes_file", &import_codes_file, py::arg("path"),
          py::arg("bits_override") = 0);
    m.def("save_index", &save_index);
    m.def("load_index", &load_index);
}
