#include "hln/search.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hln/distance.hpp"

namespace hln {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point t0, Clock::time_point t1) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
}

std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

bool wide_key_less(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    for (std::size_t i = a.size(); i-- > 0;) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

// Advances pos to the next r-combination of {0..m-1} in lexicographic order.
bool next_combination(std::vector<int>& pos, int m) {
    const int r = static_cast<int>(pos.size());
    for (int i = r - 1; i >= 0; --i) {
        if (pos[i] < m - (r - i)) {
            ++pos[i];
            for (int j = i + 1; j < r; ++j) pos[j] = pos[j - 1] + 1;
            return true;
        }
    }
    return false;
}

// Same, keeping key = base ^ (bits at pos) current; only changed positions
// are re-XORed, which is amortized O(1) per step.
bool next_combination_key(std::vector<int>& pos, int m, std::uint64_t& key) {
    const int r = static_cast<int>(pos.size());
    for (int i = r - 1; i >= 0; --i) {
        if (pos[i] < m - (r - i)) {
            for (int j = i; j < r; ++j) key ^= std::uint64_t{1} << pos[j];
            ++pos[i];
            for (int j = i + 1; j < r; ++j) pos[j] = pos[j - 1] + 1;
            for (int j = i; j < r; ++j) key ^= std::uint64_t{1} << pos[j];
            return true;
        }
    }
    return false;
}

inline bool test_and_set(std::vector<std::uint64_t>& bitmap, std::int32_t id) {
    std::uint64_t& word = bitmap[static_cast<std::uint32_t>(id) >> 6];
    std::uint64_t mask = std::uint64_t{1} << (id & 63);
    if (word & mask) return true;
    word |= mask;
    return false;
}

// Stable select of the pool_size smallest entries by (distance, id). Entries
// arrive in ascending id order: either ids[] parallel to dists[], or when ids
// is empty, position p itself is the id. Output ordered by (distance, id).
void histogram_select(std::span<const std::uint16_t> dists,
                      std::span<const std::int32_t> ids, int max_dist,
                      std::int64_t pool_size, std::vector<std::int64_t>& hist,
                      std::vector<std::int32_t>& out) {
    const std::int64_t count = static_cast<std::int64_t>(dists.size());
    const std::int64_t take = std::min(pool_size, count);

    hist.assign(max_dist + 1, 0);
    for (auto d : dists) ++hist[d];

    // Cutoff distance: the smallest T with |{d <= T}| >= take.
    int cutoff = 0;
    for (std::int64_t cum = 0; cutoff <= max_dist; ++cutoff) {
        cum += hist[cutoff];
        if (cum >= take) break;
    }

    // Segment cursors for d in [0, cutoff]; class `cutoff` only takes the
    // quota left after the strictly closer classes, lowest ids first.
    std::vector<std::int64_t>& cursor = hist;  // reuse: cursor[d] = write index
    std::int64_t start = 0;
    for (int d = 0; d <= cutoff; ++d) {
        std::int64_t c = cursor[d];
        cursor[d] = start;
        start += c;
    }
    const std::int64_t cutoff_end = take;

    out.assign(take, 0);
    std::int64_t filled = 0;
    for (std::int64_t p = 0; p < count && filled < take; ++p) {
        int d = dists[p];
        if (d > cutoff) continue;
        if (d == cutoff && cursor[d] >= cutoff_end) continue;
        out[cursor[d]++] = ids.empty() ? static_cast<std::int32_t>(p) : ids[p];
        ++filled;
    }
}

// Merges the probed clusters' inverted lists into ascending id order.
void gather_cluster_members(const KmeansPartition& partition,
                            std::span<const std::int32_t> clusters,
                            std::vector<std::int32_t>& out) {
    out.clear();
    for (auto c : clusters) {
        const auto& list = partition.inverted_lists[c];
        out.insert(out.end(), list.begin(), list.end());
    }
    std::sort(out.begin(), out.end());
}

}  // namespace

const char* to_string(SearchMode mode) {
    switch (mode) {
        case SearchMode::hamming_ranking: return "hamming_ranking";
        case SearchMode::bucket: return "bucket";
        case SearchMode::quantized: return "quantized";
        case SearchMode::kmeansqi: return "kmeansqi";
    }
    return "unknown";
}

SearchMode parse_search_mode(std::string_view name) {
    if (name == "hamming_ranking" || name == "hamming") return SearchMode::hamming_ranking;
    if (name == "bucket" || name == "bucket_search") return SearchMode::bucket;
    if (name == "quantized") return SearchMode::quantized;
    if (name == "kmeansqi") return SearchMode::kmeansqi;
    throw std::invalid_argument("unknown search mode: " + std::string(name));
}

std::span<const std::int32_t> BucketDirectory::Assoc64Table::find(
    std::uint64_t key) const {
    std::uint64_t h = mix64(key);
    std::uint64_t f = h & filter_mask;
    if (!((filter[f >> 6] >> (f & 63)) & 1)) return {};
    h &= slot_mask;
    while (true) {
        std::uint32_t s = slots[h];
        if (s == 0) return {};
        if (keys[s - 1] == key) {
            return {ids.data() + starts[s - 1], static_cast<std::size_t>(lens[s - 1])};
        }
        h = (h + 1) & slot_mask;
    }
}

std::span<const std::int32_t> BucketDirectory::WideTable::find(
    std::span<const std::uint64_t> key) const {
    auto it = std::lower_bound(keys.begin(), keys.end(), key,
                               [](const std::vector<std::uint64_t>& a,
                                  std::span<const std::uint64_t> b) {
                                   return wide_key_less(a, b);
                               });
    if (it == keys.end() || it->size() != key.size() ||
        !std::equal(it->begin(), it->end(), key.begin())) {
        return {};
    }
    std::size_t idx = static_cast<std::size_t>(it - keys.begin());
    return {ids.data() + starts[idx], static_cast<std::size_t>(lens[idx])};
}

std::span<const std::int32_t> BucketDirectory::bucket(
    int table, std::span<const std::uint64_t> key) const {
    if (table < 0 || table >= num_tables_) {
        throw std::out_of_range("BucketDirectory::bucket: table index");
    }
    if (key.size() != static_cast<std::size_t>(words_for_bits(bits_per_table_))) {
        throw std::invalid_argument("BucketDirectory::bucket: wrong key width");
    }
    if (!direct_.empty()) {
        const auto& t = direct_[table];
        std::uint64_t k = key[0];
        return {t.ids.data() + t.offsets[k],
                static_cast<std::size_t>(t.offsets[k + 1] - t.offsets[k])};
    }
    if (!assoc_.empty()) return assoc_[table].find(key[0]);
    return wide_[table].find(key);
}

void BucketDirectory::for_each_bucket(
    int table, const std::function<void(std::span<const std::uint64_t>,
                                        std::span<const std::int32_t>)>& fn) const {
    if (table < 0 || table >= num_tables_) {
        throw std::out_of_range("BucketDirectory::for_each_bucket: table index");
    }
    if (!direct_.empty()) {
        const auto& t = direct_[table];
        for (std::uint64_t k = 0; k + 1 < t.offsets.size(); ++k) {
            if (t.offsets[k] == t.offsets[k + 1]) continue;
            fn({&k, 1}, {t.ids.data() + t.offsets[k],
                         static_cast<std::size_t>(t.offsets[k + 1] - t.offsets[k])});
        }
        return;
    }
    if (!assoc_.empty()) {
        const auto& t = assoc_[table];
        for (std::size_t i = 0; i < t.keys.size(); ++i) {
            fn({&t.keys[i], 1},
               {t.ids.data() + t.starts[i], static_cast<std::size_t>(t.lens[i])});
        }
        return;
    }
    const auto& t = wide_[table];
    for (std::size_t i = 0; i < t.keys.size(); ++i) {
        fn(t.keys[i], {t.ids.data() + t.starts[i], static_cast<std::size_t>(t.lens[i])});
    }
}

void BucketDirectory::finalize_table_storage(
    int table, std::vector<std::pair<std::uint64_t, std::int32_t>>& pairs) {
    // pairs arrive sorted by (key, id).
    if (bits_per_table_ <= kDirectBitsMax) {
        auto& t = direct_[table];
        const std::uint64_t buckets = std::uint64_t{1} << bits_per_table_;
        t.offsets.assign(buckets + 1, 0);
        t.occupancy.assign((buckets + kWordBits - 1) / kWordBits, 0);
        t.blocks.assign((t.occupancy.size() + kWordBits - 1) / kWordBits, 0);
        t.ids.resize(pairs.size());
        for (const auto& [key, id] : pairs) {
            ++t.offsets[key + 1];
            t.occupancy[key >> 6] |= std::uint64_t{1} << (key & 63);
            t.blocks[key >> 12] |= std::uint64_t{1} << ((key >> 6) & 63);
        }
        for (std::size_t k = 1; k < t.offsets.size(); ++k) t.offsets[k] += t.offsets[k - 1];
        for (std::size_t i = 0; i < pairs.size(); ++i) t.ids[i] = pairs[i].second;
        return;
    }
    auto& t = assoc_[table];
    t.ids.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (i == 0 || pairs[i].first != pairs[i - 1].first) {
            t.keys.push_back(pairs[i].first);
            t.starts.push_back(static_cast<std::uint32_t>(i));
            t.lens.push_back(0);
        }
        ++t.lens.back();
        t.ids[i] = pairs[i].second;
    }
    std::size_t cap = 16;
    while (cap < 2 * t.keys.size()) cap <<= 1;
    t.slots.assign(cap, 0);
    t.slot_mask = cap - 1;
    const std::size_t filter_bits = cap * 4;
    t.filter.assign(filter_bits / kWordBits, 0);
    t.filter_mask = filter_bits - 1;
    for (std::size_t i = 0; i < t.keys.size(); ++i) {
        std::uint64_t h = mix64(t.keys[i]);
        std::uint64_t f = h & t.filter_mask;
        t.filter[f >> 6] |= std::uint64_t{1} << (f & 63);
        h &= t.slot_mask;
        while (t.slots[h] != 0) h = (h + 1) & t.slot_mask;
        t.slots[h] = static_cast<std::uint32_t>(i + 1);
    }
}

void BucketDirectory::finalize_wide_table_storage(
    int table, std::vector<std::pair<std::vector<std::uint64_t>, std::int32_t>>& pairs) {
    auto& t = wide_[table];
    t.ids.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (i == 0 || pairs[i].first != pairs[i - 1].first) {
            t.keys.push_back(pairs[i].first);
            t.starts.push_back(static_cast<std::uint32_t>(i));
            t.lens.push_back(0);
        }
        ++t.lens.back();
        t.ids[i] = pairs[i].second;
    }
}

BucketDirectory build_bucket_directory(const PackedCodes& codes, int num_tables) {
    const int l = codes.bits();
    if (num_tables < 1 || num_tables > l) {
        std::ostringstream msg;
        msg << "build_bucket_directory: table count " << num_tables << " outside [1, " << l
            << "]";
        throw std::invalid_argument(msg.str());
    }
    BucketDirectory dir;
    dir.num_tables_ = num_tables;
    dir.bits_per_table_ = l / num_tables;
    dir.code_bits_ = l;
    dir.n_ = codes.size();

    const int b = dir.bits_per_table_;
    const int key_words = words_for_bits(b);

    if (b <= BucketDirectory::kDirectBitsMax) {
        dir.direct_.resize(num_tables);
    } else if (b <= kWordBits) {
        dir.assoc_.resize(num_tables);
    } else {
        dir.wide_.resize(num_tables);
    }

    std::vector<std::uint64_t> key(key_words);
    if (b <= kWordBits) {
        std::vector<std::pair<std::uint64_t, std::int32_t>> pairs(codes.size());
        for (int t = 0; t < num_tables; ++t) {
            for (std::int64_t i = 0; i < codes.size(); ++i) {
                extract_bit_range(codes.code_words(i), t * b, b, key);
                pairs[i] = {key[0], static_cast<std::int32_t>(i)};
            }
            std::sort(pairs.begin(), pairs.end());
            dir.finalize_table_storage(t, pairs);
        }
    } else {
        std::vector<std::pair<std::vector<std::uint64_t>, std::int32_t>> pairs(codes.size());
        for (int t = 0; t < num_tables; ++t) {
            for (std::int64_t i = 0; i < codes.size(); ++i) {
                extract_bit_range(codes.code_words(i), t * b, b, key);
                pairs[i] = {key, static_cast<std::int32_t>(i)};
            }
            std::sort(pairs.begin(), pairs.end(),
                      [](const auto& a, const auto& b2) {
                          if (a.first != b2.first) return wide_key_less(a.first, b2.first);
                          return a.second < b2.second;
                      });
            dir.finalize_wide_table_storage(t, pairs);
        }
    }
    return dir;
}

BucketDirectory BucketDirectory::from_buckets(
    int code_bits, int num_tables, std::int64_t n,
    std::span<const std::vector<BucketEntry>> tables) {
    if (num_tables < 1 || static_cast<int>(tables.size()) != num_tables) {
        throw std::invalid_argument("BucketDirectory::from_buckets: table count mismatch");
    }
    BucketDirectory dir;
    dir.num_tables_ = num_tables;
    dir.bits_per_table_ = code_bits / num_tables;
    dir.code_bits_ = code_bits;
    dir.n_ = n;
    const int b = dir.bits_per_table_;
    if (b < 1) throw std::invalid_argument("BucketDirectory::from_buckets: empty slice");

    if (b <= kDirectBitsMax) {
        dir.direct_.resize(num_tables);
    } else if (b <= kWordBits) {
        dir.assoc_.resize(num_tables);
    } else {
        dir.wide_.resize(num_tables);
    }

    for (int t = 0; t < num_tables; ++t) {
        if (b <= kWordBits) {
            std::vector<std::pair<std::uint64_t, std::int32_t>> pairs;
            pairs.reserve(n);
            for (const auto& bucket : tables[t]) {
                for (auto id : bucket.ids) pairs.emplace_back(bucket.key.at(0), id);
            }
            if (!std::is_sorted(pairs.begin(), pairs.end())) {
                throw std::invalid_argument(
                    "BucketDirectory::from_buckets: buckets not in canonical order");
            }
            dir.finalize_table_storage(t, pairs);
        } else {
            std::vector<std::pair<std::vector<std::uint64_t>, std::int32_t>> pairs;
            pairs.reserve(n);
            for (const auto& bucket : tables[t]) {
                for (auto id : bucket.ids) pairs.emplace_back(bucket.key, id);
            }
            dir.finalize_wide_table_storage(t, pairs);
        }
    }
    return dir;
}

std::uint64_t buckets_at_radius(int bits, int radius) {
    if (bits < 0) throw std::invalid_argument("buckets_at_radius: negative bit count");
    if (radius < 0 || radius > bits) {
        std::ostringstream msg;
        msg << "buckets_at_radius: radius " << radius << " outside [0, " << bits << "]";
        throw std::invalid_argument(msg.str());
    }
    if (radius > bits - radius) radius = bits - radius;
    unsigned __int128 res = 1;
    for (int i = 1; i <= radius; ++i) {
        res = res * static_cast<unsigned>(bits - radius + i) / static_cast<unsigned>(i);
        if (res > std::numeric_limits<std::uint64_t>::max()) {
            throw std::overflow_error("buckets_at_radius: result exceeds 64 bits");
        }
    }
    return static_cast<std::uint64_t>(res);
}

std::vector<std::int32_t> hamming_ranking_locate(const PackedCodes& codes,
                                                 const BitCode& b,
                                                 std::int64_t pool_size,
                                                 SearchScratch& scratch) {
    if (pool_size < 1 || pool_size > codes.size()) {
        std::ostringstream msg;
        msg << "hamming_ranking_locate: pool size " << pool_size << " outside [1, "
            << codes.size() << "]";
        throw std::invalid_argument(msg.str());
    }
    scratch.distances.resize(codes.size());
    hamming_to_all(codes, b, scratch.distances);
    std::vector<std::int32_t> out;
    histogram_select(scratch.distances, {}, codes.bits(), pool_size, scratch.histogram,
                     out);
    return out;
}

// Shared radius sweep over all table kinds; friend of BucketDirectory.
struct BucketSweep {
    static BucketLocateResult run(const BucketDirectory& dir, const BitCode& b,
                                  std::int64_t pool_size, SearchScratch& scratch) {
        const int bpt = dir.bits_per_table_;
        const int key_words = words_for_bits(bpt);
        const std::int64_t n = dir.n_;

        scratch.visited.assign((n + kWordBits - 1) / kWordBits, 0);
        BucketLocateResult res;
        res.ids.reserve(std::min<std::int64_t>(pool_size, n));

        // Per-table query slices.
        std::vector<std::uint64_t> slices(static_cast<std::size_t>(dir.num_tables_) *
                                          key_words);
        for (int t = 0; t < dir.num_tables_; ++t) {
            extract_bit_range(b.words(), t * bpt, bpt,
                              {slices.data() + static_cast<std::size_t>(t) * key_words,
                               static_cast<std::size_t>(key_words)});
        }

        std::vector<int> flips;
        std::vector<std::uint64_t> key(key_words);
        const bool narrow = bpt <= kWordBits;

        for (int r = 0; r <= bpt; ++r) {
            res.radius_reached = r;
            for (int t = 0; t < dir.num_tables_; ++t) {
                const std::uint64_t* slice =
                    slices.data() + static_cast<std::size_t>(t) * key_words;
                flips.resize(r);
                for (int i = 0; i < r; ++i) flips[i] = i;
                if (narrow) {
                    const BucketDirectory::DirectTable* direct =
                        dir.direct_.empty() ? nullptr : &dir.direct_[t];
                    const BucketDirectory::Assoc64Table* assoc =
                        dir.assoc_.empty() ? nullptr : &dir.assoc_[t];
                    std::uint64_t k = slice[0];
                    for (int p : flips) k ^= std::uint64_t{1} << p;
                    do {
                        ++res.buckets_visited;
                        std::span<const std::int32_t> members;
                        if (direct) {
                            if (!((direct->blocks[k >> 12] >> ((k >> 6) & 63)) & 1)) {
                                continue;
                            }
                            if (!((direct->occupancy[k >> 6] >> (k & 63)) & 1)) {
                                continue;
                            }
                            members = {direct->ids.data() + direct->offsets[k],
                                       static_cast<std::size_t>(direct->offsets[k + 1] -
                                                                direct->offsets[k])};
                        } else {
                            members = assoc->find(k);
                        }
                        for (auto id : members) {
                            if (test_and_set(scratch.visited, id)) continue;
                            res.ids.push_back(id);
                            if (static_cast<std::int64_t>(res.ids.size()) == pool_size) {
                                return res;
                            }
                        }
                    } while (next_combination_key(flips, bpt, k));
                } else {
                    do {
                        ++res.buckets_visited;
                        std::copy(slice, slice + key_words, key.begin());
                        for (int p : flips) key[p / kWordBits] ^= std::uint64_t{1}
                                                                 << (p % kWordBits);
                        auto members = dir.wide_[t].find(key);
                        for (auto id : members) {
                            if (test_and_set(scratch.visited, id)) continue;
                            res.ids.push_back(id);
                            if (static_cast<std::int64_t>(res.ids.size()) == pool_size) {
                                return res;
                            }
                        }
                    } while (next_combination(flips, bpt));
                }
            }
            if (static_cast<std::int64_t>(res.ids.size()) == n) break;  // exhausted
        }
        return res;
    }
};

BucketLocateResult bucket_search_locate(const BucketDirectory& dir, const BitCode& b,
                                        std::int64_t pool_size, SearchScratch& scratch) {
    if (b.bits() != dir.code_bits()) {
        throw std::invalid_argument("bucket_search_locate: code length mismatch");
    }
    if (pool_size < 1) {
        throw std::invalid_argument("bucket_search_locate: pool size must be >= 1");
    }
    return BucketSweep::run(dir, b, pool_size, scratch);
}

std::vector<std::int32_t> quantized_locate(const KmeansPartition& partition,
                                           const PackedCodes& codes,
                                           std::span<const float> q, const BitCode& b,
                                           int probes, std::int64_t pool_size,
                                           SearchScratch& scratch) {
    if (b.bits() != codes.bits()) {
        throw std::invalid_argument("quantized_locate: code length mismatch");
    }
    if (pool_size < 1 || pool_size > codes.size()) {
        std::ostringstream msg;
        msg << "quantized_locate: pool size " << pool_size << " outside [1, "
            << codes.size() << "]";
        throw std::invalid_argument(msg.str());
    }
    auto clusters = nearest_clusters(partition, q, probes);
    gather_cluster_members(partition, clusters, scratch.gathered);

    const auto& members = scratch.gathered;
    scratch.gathered_dists.resize(members.size());
    const int wpc = codes.words_per_code();
    const std::uint64_t* qw = b.words().data();
    const std::uint64_t* base = codes.raw().data();
    for (std::size_t i = 0; i < members.size(); ++i) {
        const std::uint64_t* cw = base + static_cast<std::int64_t>(members[i]) * wpc;
        int d = 0;
        for (int w = 0; w < wpc; ++w) d += std::popcount(cw[w] ^ qw[w]);
        scratch.gathered_dists[i] = static_cast<std::uint16_t>(d);
    }

    std::vector<std::int32_t> out;
    histogram_select(scratch.gathered_dists, members, codes.bits(), pool_size,
                     scratch.histogram, out);
    return out;
}

std::vector<std::int32_t> kmeansqi_locate(const KmeansPartition& partition,
                                          std::span<const float> q, int probes) {
    auto clusters = nearest_clusters(partition, q, probes);
    std::vector<std::int32_t> out;
    for (auto c : clusters) {
        const auto& list = partition.inverted_lists[c];
        out.insert(out.end(), list.begin(), list.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void rerank(const Matrix<float>& base, std::span<const float> q,
            std::span<const std::int32_t> candidates, int k, SearchScratch& scratch,
            std::vector<std::int32_t>& ids_out, std::vector<float>& dists_out) {
    if (candidates.empty()) throw std::invalid_argument("rerank: empty candidate list");
    if (k < 1) throw std::invalid_argument("rerank: k must be >= 1");

    auto& scored = scratch.scored;
    scored.resize(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        scored[i] = {l2_sq(q, base.row(candidates[i])), candidates[i]};
    }
    const std::size_t take = std::min<std::size_t>(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + take, scored.end());

    ids_out.resize(take);
    dists_out.resize(take);
    for (std::size_t i = 0; i < take; ++i) {
        ids_out[i] = scored[i].second;
        dists_out[i] = static_cast<float>(std::sqrt(scored[i].first));
    }
}

std::int64_t HashIndex::base_count() const {
    if (codes) return codes->size();
    if (partition) return static_cast<std::int64_t>(partition->assignments.size());
    return 0;
}

namespace {

QueryRecord search_impl(const HashIndex& index, const Matrix<float>& base,
                        std::span<const float> q, const BitCode* external_code,
                        const SearchParams& params, SearchScratch& scratch) {
    const std::int64_t n = index.base_count();
    if (n == 0) throw std::invalid_argument("search: index has no content");
    if (base.rows() != n) {
        std::ostringstream msg;
        msg << "search: base matrix has " << base.rows() << " rows, index expects " << n;
        throw std::invalid_argument(msg.str());
    }
    if (q.size() != static_cast<std::size_t>(base.cols())) {
        throw std::invalid_argument("search: query dimension mismatch");
    }
    if (params.k < 1) throw std::invalid_argument("search: k must be >= 1");

    const bool needs_code = params.mode != SearchMode::kmeansqi;
    if (needs_code) {
        if (!index.codes && params.mode != SearchMode::bucket) {
            throw std::invalid_argument("search: index holds no binary codes");
        }
        if (params.pool < params.k) {
            throw std::invalid_argument("search: pool size must be >= k");
        }
    }
    if ((params.mode == SearchMode::quantized || params.mode == SearchMode::kmeansqi) &&
        !index.partition) {
        throw std::invalid_argument("search: index holds no kmeans partition");
    }
    if (params.mode == SearchMode::bucket && !index.directory) {
        throw std::invalid_argument("search: index holds no bucket directory");
    }

    QueryRecord rec;

    BitCode local_code;
    const BitCode* code = external_code;
    if (needs_code && code == nullptr) {
        if (!index.projection) {
            throw std::invalid_argument(
                "search: index has no projection; supply an externally coded query");
        }
        auto t0 = Clock::now();
        local_code = encode(*index.projection, q);
        rec.coding_ns = elapsed_ns(t0, Clock::now());
        code = &local_code;
    }

    std::vector<std::int32_t> pool;
    auto t0 = Clock::now();
    switch (params.mode) {
        case SearchMode::hamming_ranking:
            pool = hamming_ranking_locate(*index.codes, *code, params.pool, scratch);
            break;
        case SearchMode::bucket: {
            auto r = bucket_search_locate(*index.directory, *code, params.pool, scratch);
            pool = std::move(r.ids);
            rec.radius_reached = r.radius_reached;
            rec.buckets_visited = r.buckets_visited;
            break;
        }
        case SearchMode::quantized:
            pool = quantized_locate(*index.partition, *index.codes, q, *code,
                                    params.probes, params.pool, scratch);
            break;
        case SearchMode::kmeansqi:
            pool = kmeansqi_locate(*index.partition, q, params.probes);
            break;
    }
    rec.locating_ns = elapsed_ns(t0, Clock::now());

    rec.candidates_examined = static_cast<std::int64_t>(pool.size());
    rec.pool_shortfall = needs_code && rec.candidates_examined < params.pool;

    t0 = Clock::now();
    rerank(base, q, pool, params.k, scratch, rec.ids, rec.distances);
    rec.scanning_ns = elapsed_ns(t0, Clock::now());
    return rec;
}

}  // namespace

QueryRecord search(const HashIndex& index, const Matrix<float>& base,
                   std::span<const float> q, const SearchParams& params,
                   SearchScratch& scratch) {
    return search_impl(index, base, q, nullptr, params, scratch);
}

QueryRecord search_coded(const HashIndex& index, const Matrix<float>& base,
                         std::span<const float> q, const BitCode& query_code,
                         const SearchParams& params, SearchScratch& scratch) {
    return search_impl(index, base, q, &query_code, params, scratch);
}

}  // namespace hln
