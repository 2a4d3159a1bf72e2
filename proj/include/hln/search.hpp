#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hln/codes.hpp"
#include "hln/hashers.hpp"
#include "hln/matrix.hpp"
#include "hln/quantizer.hpp"

namespace hln {

enum class SearchMode { hamming_ranking, bucket, quantized, kmeansqi };

const char* to_string(SearchMode mode);
SearchMode parse_search_mode(std::string_view name);

struct SearchParams {
    SearchMode mode = SearchMode::hamming_ranking;
    std::int64_t pool = 0;  // L: candidates located before the exact rerank
    int k = 100;            // K: neighbors returned
    int probes = 1;         // C: clusters probed (quantized / kmeansqi)
};

struct QueryRecord {
    std::vector<std::int32_t> ids;  // ascending (distance, id)
    std::vector<float> distances;   // Euclidean
    std::int64_t coding_ns = 0;
    std::int64_t locating_ns = 0;
    std::int64_t scanning_ns = 0;
    std::int64_t candidates_examined = 0;
    std::int64_t buckets_visited = 0;  // bucket mode: candidate buckets probed
    int radius_reached = 0;            // bucket mode: radius where the sweep stopped
    bool pool_shortfall = false;       // fewer than L candidates were reachable
};

// Per-query scratch buffers. Reuse across queries; one instance per thread.
struct SearchScratch {
    std::vector<std::uint16_t> distances;
    std::vector<std::int64_t> histogram;
    std::vector<std::uint64_t> visited;
    std::vector<std::int32_t> gathered;
    std::vector<std::uint16_t> gathered_dists;
    std::vector<std::pair<double, std::int32_t>> scored;
};

// Multi-table hash-bucket directory. The l code bits split into num_tables
// contiguous disjoint slices of bits_per_table = floor(l / num_tables) bits;
// leftover high bits are ignored. Table t maps each distinct slice value to
// the ascending list of base ids holding it. Tables with slices of at most
// 28 bits use a dense direct-address array; wider slices use an associative
// table.
class BucketDirectory {
public:
    BucketDirectory() = default;

    int num_tables() const { return num_tables_; }
    int bits_per_table() const { return bits_per_table_; }
    int code_bits() const { return code_bits_; }
    std::int64_t size() const { return n_; }

    // Members of the bucket holding `key` in `table`; empty span when absent.
    // `key` is the packed slice value, words_for_bits(bits_per_table) words.
    std::span<const std::int32_t> bucket(int table,
                                         std::span<const std::uint64_t> key) const;

    // Visits every bucket of one table in ascending key order.
    void for_each_bucket(
        int table,
        const std::function<void(std::span<const std::uint64_t>,
                                 std::span<const std::int32_t>)>& fn) const;

    struct BucketEntry {
        std::vector<std::uint64_t> key;
        std::vector<std::int32_t> ids;
    };

    // Rebuilds a directory from persisted buckets (ascending key order per
    // table); produces the same in-memory structure as building from codes.
    static BucketDirectory from_buckets(int code_bits, int num_tables,
                                        std::int64_t n,
                                        std::span<const std::vector<BucketEntry>> tables);

    bool operator==(const BucketDirectory&) const = default;

private:
    friend BucketDirectory build_bucket_directory(const PackedCodes&, int);
    friend struct BucketSweep;

    static constexpr int kDirectBitsMax = 28;

    struct DirectTable {
        std::vector<std::uint32_t> offsets;    // size (1 << b) + 1
        std::vector<std::int32_t> ids;
        std::vector<std::uint64_t> occupancy;  // bit per bucket; sweep filter
        std::vector<std::uint64_t> blocks;     // bit per 64-bucket block
        bool operator==(const DirectTable&) const = default;
    };
    struct Assoc64Table {
        std::vector<std::uint64_t> keys;          // ascending
        std::vector<std::uint32_t> starts, lens;  // parallel to keys
        std::vector<std::int32_t> ids;
        std::vector<std::uint32_t> slots;  // open addressing, key index + 1
        std::uint64_t slot_mask = 0;
        std::vector<std::uint64_t> filter;  // presence prefilter on the key hash
        std::uint64_t filter_mask = 0;
        std::span<const std::int32_t> find(std::uint64_t key) const;
        bool operator==(const Assoc64Table&) const = default;
    };
    struct WideTable {
        std::vector<std::vector<std::uint64_t>> keys;  // ascending
        std::vector<std::uint32_t> starts, lens;
        std::vector<std::int32_t> ids;
        std::span<const std::int32_t> find(std::span<const std::uint64_t> key) const;
        bool operator==(const WideTable&) const = default;
    };

    void finalize_table_storage(int table,
                                std::vector<std::pair<std::uint64_t, std::int32_t>>& pairs);
    void finalize_wide_table_storage(
        int table, std::vector<std::pair<std::vector<std::uint64_t>, std::int32_t>>& pairs);

    int num_tables_ = 0;
    int bits_per_table_ = 0;
    int code_bits_ = 0;
    std::int64_t n_ = 0;
    std::vector<DirectTable> direct_;
    std::vector<Assoc64Table> assoc_;
    std::vector<WideTable> wide_;
};

BucketDirectory build_bucket_directory(const PackedCodes& codes, int num_tables);

struct BucketLocateResult {
    std::vector<std::int32_t> ids;
    int radius_reached = 0;
    std::int64_t buckets_visited = 0;  // every candidate bucket probed, absent ones included
};

// Radius sweep r = 0, 1, ...: at each r every table enumerates the buckets at
// exactly slice-distance r (flip positions in lexicographic order) before r
// grows. Ids already collected by an earlier table do not count again; the
// sweep stops the moment the pool holds L distinct ids, keeping the earliest
// appended.
BucketLocateResult bucket_search_locate(const BucketDirectory& dir, const BitCode& b,
                                        std::int64_t pool_size, SearchScratch& scratch);

// C(bits, radius), exact; throws on radius > bits or a result beyond 64 bits.
std::uint64_t buckets_at_radius(int bits, int radius);

// The pool_size ids with smallest hamming distance to b, ordered by
// (distance, id) with ties to the lower id.
std::vector<std::int32_t> hamming_ranking_locate(const PackedCodes& codes,
                                                 const BitCode& b,
                                                 std::int64_t pool_size,
                                                 SearchScratch& scratch);

// Hamming ranking restricted to the members of the `probes` clusters nearest
// to q; returns min(pool_size, population) ids ordered by (distance, id).
std::vector<std::int32_t> quantized_locate(const KmeansPartition& partition,
                                           const PackedCodes& codes,
                                           std::span<const float> q, const BitCode& b,
                                           int probes, std::int64_t pool_size,
                                           SearchScratch& scratch);

// Union of the inverted lists of the `probes` nearest clusters, ascending id.
std::vector<std::int32_t> kmeansqi_locate(const KmeansPartition& partition,
                                          std::span<const float> q, int probes);

// Exact-distance rerank of the candidate pool: the min(k, |candidates|)
// nearest by (Euclidean distance, id).
void rerank(const Matrix<float>& base, std::span<const float> q,
            std::span<const std::int32_t> candidates, int k, SearchScratch& scratch,
            std::vector<std::int32_t>& ids_out, std::vector<float>& dists_out);

// Everything a search needs besides the base vectors themselves.
struct HashIndex {
    std::optional<ProjectionMatrix> projection;
    std::optional<PackedCodes> codes;
    std::optional<KmeansPartition> partition;
    std::optional<BucketDirectory> directory;

    std::int64_t base_count() const;

    bool operator==(const HashIndex&) const = default;
};

// Full query: encode (coding), locate per params.mode (locating), exact
// rerank (scanning), each phase timed separately. kmeansqi skips coding and
// scans every member of the probed clusters.
QueryRecord search(const HashIndex& index, const Matrix<float>& base,
                   std::span<const float> q, const SearchParams& params,
                   SearchScratch& scratch);

// Same, but the query's binary code comes from the caller (externally
// produced codes); coding time reports zero.
QueryRecord search_coded(const HashIndex& index, const Matrix<float>& base,
                         std::span<const float> q, const BitCode& query_code,
                         const SearchParams& params, SearchScratch& scratch);

}  // namespace hln
