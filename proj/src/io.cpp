#include "hln/io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hln {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error(what); }

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open " + path);
    in.seekg(0, std::ios::end);
    auto end = in.tellg();
    if (end < 0) fail(path + ": cannot determine file size");
    auto size = static_cast<std::size_t>(end);
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> data(size);
    if (size > 0) in.read(reinterpret_cast<char*>(data.data()), size);
    if (!in) fail("failed reading " + path);
    return data;
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) fail("failed writing " + path);
}

// Little-endian byte serialization, host-endianness independent.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    template <typename T>
    void array(std::span<const T> values) {
        static_assert(sizeof(T) == 1 || sizeof(T) == 4 || sizeof(T) == 8);
        if constexpr (std::endian::native == std::endian::little) {
            auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
            buf_.insert(buf_.end(), p, p + values.size() * sizeof(T));
        } else {
            for (const T& v : values) {
                if constexpr (sizeof(T) == 1) u8(std::bit_cast<std::uint8_t>(v));
                if constexpr (sizeof(T) == 4) u32(std::bit_cast<std::uint32_t>(v));
                if constexpr (sizeof(T) == 8) u64(std::bit_cast<std::uint64_t>(v));
            }
        }
    }

    std::span<const std::uint8_t> bytes() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> data, std::string origin)
        : data_(data), origin_(std::move(origin)) {}

    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t position() const { return pos_; }

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{data_[pos_ + i]} << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
        pos_ += 8;
        return v;
    }
    std::int32_t i32() { return std::bit_cast<std::int32_t>(u32()); }
    float f32() { return std::bit_cast<float>(u32()); }

    template <typename T>
    void array(std::span<T> out) {
        static_assert(sizeof(T) == 1 || sizeof(T) == 4 || sizeof(T) == 8);
        need(out.size() * sizeof(T));
        if constexpr (std::endian::native == std::endian::little) {
            std::memcpy(out.data(), data_.data() + pos_, out.size() * sizeof(T));
            pos_ += out.size() * sizeof(T);
        } else {
            for (T& v : out) {
                if constexpr (sizeof(T) == 1) v = std::bit_cast<T>(u8());
                if constexpr (sizeof(T) == 4) v = std::bit_cast<T>(u32());
                if constexpr (sizeof(T) == 8) v = std::bit_cast<T>(u64());
            }
        }
    }

    std::span<const std::uint8_t> raw(std::size_t count) {
        need(count);
        auto s = data_.subspan(pos_, count);
        pos_ += count;
        return s;
    }

private:
    void need(std::size_t count) {
        if (pos_ + count > data_.size()) {
            fail(origin_ + ": truncated at byte " + std::to_string(pos_));
        }
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    std::string origin_;
};

std::uint32_t checksum(std::span<const std::uint8_t> data) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(data.data()),
              static_cast<uInt>(data.size())));
}

}  // namespace

template <typename T>
Matrix<T> read_vecs(const std::string& path) {
    auto data = read_file(path);
    if (data.size() < 4) fail(path + ": too short for a vecs record");

    ByteReader header(data, path);
    std::int32_t d = header.i32();
    if (d < 1) fail(path + ": record dimension " + std::to_string(d) + " at offset 0");

    const std::size_t record = 4 + static_cast<std::size_t>(d) * sizeof(T);
    if (data.size() % record != 0) {
        std::ostringstream msg;
        msg << path << ": size " << data.size() << " not divisible by record size "
            << record << " (corrupt at offset " << data.size() - data.size() % record
            << ")";
        fail(msg.str());
    }
    const std::int64_t n = static_cast<std::int64_t>(data.size() / record);

    Matrix<T> m(n, d);
    ByteReader in(data, path);
    for (std::int64_t i = 0; i < n; ++i) {
        std::int32_t di = in.i32();
        if (di != d) {
            std::ostringstream msg;
            msg << path << ": record " << i << " has dimension " << di << ", expected "
                << d;
            fail(msg.str());
        }
        in.array(m.row(i));
    }
    return m;
}

template <typename T>
void write_vecs(const std::string& path, const Matrix<T>& m) {
    if (m.cols() < 1) fail("write_vecs: dimension must be >= 1");
    ByteWriter out;
    for (std::int64_t i = 0; i < m.rows(); ++i) {
        out.i32(static_cast<std::int32_t>(m.cols()));
        out.array(m.row(i));
    }
    write_file(path, out.bytes());
}

template Matrix<float> read_vecs<float>(const std::string&);
template Matrix<std::int32_t> read_vecs<std::int32_t>(const std::string&);
template Matrix<std::uint8_t> read_vecs<std::uint8_t>(const std::string&);
template void write_vecs<float>(const std::string&, const Matrix<float>&);
template void write_vecs<std::int32_t>(const std::string&, const Matrix<std::int32_t>&);
template void write_vecs<std::uint8_t>(const std::string&, const Matrix<std::uint8_t>&);

void export_codes_file(const PackedCodes& codes, const std::string& path) {
    const std::int64_t bpc = (codes.bits() + 7) / 8;
    auto payload = export_packed_codes(codes);
    Matrix<std::uint8_t> m(codes.size(), bpc, std::move(payload));
    write_vecs(path, m);

    nlohmann::json meta;
    meta["bits"] = codes.bits();
    meta["count"] = codes.size();
    std::ofstream out(path + ".meta");
    if (!out) fail("cannot write " + path + ".meta");
    out << meta.dump(2) << "\n";
}

PackedCodes import_codes_file(const std::string& path, int bits_override) {
    auto m = read_vecs<std::uint8_t>(path);
    int bits = bits_override;
    if (bits == 0) {
        std::ifstream in(path + ".meta");
        if (!in) fail("missing sidecar " + path + ".meta (pass the bit count explicitly)");
        nlohmann::json meta = nlohmann::json::parse(in, nullptr, true);
        bits = meta.at("bits").get<int>();
    }
    if ((bits + 7) / 8 != m.cols()) {
        std::ostringstream msg;
        msg << path << ": " << m.cols() << " bytes per record cannot hold " << bits
            << "-bit codes";
        fail(msg.str());
    }
    return import_packed_codes({m.data(), m.size()}, m.rows(), bits);
}

namespace {

std::string format_double(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

constexpr const char* kSweepHeader =
    "mode,l,tables,C,L,recall,qps,mean_ms,coding_ms,locating_ms,scanning_ms";

}  // namespace

void write_sweep_csv(const std::string& path, std::span<const SweepRecord> records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail("cannot write " + path);
    out << kSweepHeader << "\n";
    for (const auto& r : records) {
        out << to_string(r.mode) << ',' << r.code_bits << ',' << r.tables << ','
            << r.probes << ',' << r.pool << ',' << format_double(r.mean_recall) << ','
            << format_double(r.qps) << ',' << format_double(r.mean_ms) << ','
            << format_double(r.coding_ms) << ',' << format_double(r.locating_ms) << ','
            << format_double(r.scanning_ms) << "\n";
    }
    if (!out) fail("failed writing " + path);
}

std::vector<SweepRecord> read_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) fail(path + ": empty file");
    if (line != kSweepHeader) fail(path + ": unexpected CSV header");

    std::vector<SweepRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 11) fail(path + ": malformed row: " + line);
        SweepRecord r;
        r.mode = parse_search_mode(cells[0]);
        r.code_bits = std::stoi(cells[1]);
        r.tables = std::stoi(cells[2]);
        r.probes = std::stoi(cells[3]);
        r.pool = std::stoll(cells[4]);
        r.mean_recall = std::stod(cells[5]);
        r.qps = std::stod(cells[6]);
        r.mean_ms = std::stod(cells[7]);
        r.coding_ms = std::stod(cells[8]);
        r.locating_ms = std::stod(cells[9]);
        r.scanning_ms = std::stod(cells[10]);
        records.push_back(r);
    }
    return records;
}

void write_result_ids_ivecs(const std::string& path,
                            std::span<const QueryRecord> records) {
    if (records.empty()) fail("write_result_ids_ivecs: no records");
    const std::int64_t k = static_cast<std::int64_t>(records[0].ids.size());
    Matrix<std::int32_t> m(static_cast<std::int64_t>(records.size()), k);
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (static_cast<std::int64_t>(records[i].ids.size()) != k) {
            fail("write_result_ids_ivecs: ragged result lists");
        }
        auto row = m.row(static_cast<std::int64_t>(i));
        std::copy(records[i].ids.begin(), records[i].ids.end(), row.begin());
    }
    write_vecs(path, m);
}

SweepSpec parse_sweep_spec(const std::string& spec) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
        fail("sweep spec '" + spec + "' is not name=start:step:stop or name=v1,v2,...");
    }
    SweepSpec out;
    out.name = spec.substr(0, eq);
    std::string body = spec.substr(eq + 1);
    if (body.empty()) fail("sweep spec '" + spec + "' has no values");

    auto parse_int = [&](const std::string& s) {
        std::size_t used = 0;
        std::int64_t v;
        try {
            v = std::stoll(s, &used);
        } catch (...) {
            fail("sweep spec '" + spec + "': bad number '" + s + "'");
        }
        if (used != s.size()) fail("sweep spec '" + spec + "': bad number '" + s + "'");
        return v;
    };

    if (body.find(':') != std::string::npos) {
        std::stringstream ss(body);
        std::string a, b, c;
        if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') ||
            !std::getline(ss, c) || c.find(':') != std::string::npos) {
            fail("sweep spec '" + spec + "' needs exactly start:step:stop");
        }
        std::int64_t start = parse_int(a), step = parse_int(b), stop = parse_int(c);
        if (step <= 0) fail("sweep spec '" + spec + "': step must be positive");
        if (stop < start) fail("sweep spec '" + spec + "': stop below start");
        for (std::int64_t v = start; v <= stop; v += step) out.values.push_back(v);
    } else {
        std::stringstream ss(body);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.values.push_back(parse_int(cell));
    }
    if (out.values.empty()) fail("sweep spec '" + spec + "' has no values");
    return out;
}

namespace {

constexpr char kMagic[4] = {'H', 'L', 'N', '1'};
constexpr std::uint32_t kVersion = 1;

enum SectionFlag : std::uint32_t {
    kHasProjection = 1u << 0,
    kHasCodes = 1u << 1,
    kHasPartition = 1u << 2,
    kHasDirectory = 1u << 3,
};

enum SectionTag : std::uint32_t {
    kTagProjection = 1,
    kTagCodes = 2,
    kTagPartition = 3,
    kTagDirectory = 4,
};

void append_section(ByteWriter& out, std::uint32_t tag, ByteWriter&& payload) {
    auto bytes = payload.take();
    out.u32(tag);
    out.u64(bytes.size());
    out.array<std::uint8_t>(bytes);
    out.u32(checksum(bytes));
}

std::vector<std::uint8_t> read_section(ByteReader& in, std::uint32_t expected_tag,
                                       const std::string& path) {
    std::uint32_t tag = in.u32();
    if (tag != expected_tag) {
        fail(path + ": unexpected section tag " + std::to_string(tag));
    }
    std::uint64_t size = in.u64();
    if (size + 4 > in.remaining()) {
        fail(path + ": checksum unverifiable, section " + std::to_string(tag) +
             " truncated");
    }
    auto payload = in.raw(size);
    std::uint32_t stored = in.u32();
    if (checksum(payload) != stored) {
        fail(path + ": checksum mismatch in section " + std::to_string(tag));
    }
    return {payload.begin(), payload.end()};
}

}  // namespace

void save_index(const HashIndex& index, const std::string& path) {
    ByteWriter out;
    out.array<std::uint8_t>(
        std::span{reinterpret_cast<const std::uint8_t*>(kMagic), 4});
    out.u32(kVersion);

    std::uint32_t flags = 0;
    if (index.projection) flags |= kHasProjection;
    if (index.codes) flags |= kHasCodes;
    if (index.partition) flags |= kHasPartition;
    if (index.directory) flags |= kHasDirectory;
    out.u32(flags);

    out.u64(static_cast<std::uint64_t>(index.base_count()));
    out.u32(index.projection ? static_cast<std::uint32_t>(index.projection->dim)
            : index.partition ? static_cast<std::uint32_t>(index.partition->dim)
                              : 0);
    out.u32(index.codes ? static_cast<std::uint32_t>(index.codes->bits()) : 0);
    out.u64(index.projection ? index.projection->seed : 0);
    out.u32(index.partition ? static_cast<std::uint32_t>(index.partition->k) : 0);
    out.u32(index.directory ? static_cast<std::uint32_t>(index.directory->num_tables())
                            : 0);

    if (index.projection) {
        const auto& p = *index.projection;
        ByteWriter sec;
        sec.u32(static_cast<std::uint32_t>(p.dim));
        sec.u32(static_cast<std::uint32_t>(p.bits));
        sec.u64(p.seed);
        sec.array<float>({p.directions.data(), p.directions.size()});
        append_section(out, kTagProjection, std::move(sec));
    }
    if (index.codes) {
        const auto& c = *index.codes;
        ByteWriter sec;
        sec.u64(static_cast<std::uint64_t>(c.size()));
        sec.u32(static_cast<std::uint32_t>(c.bits()));
        sec.array<std::uint64_t>(c.raw());
        append_section(out, kTagCodes, std::move(sec));
    }
    if (index.partition) {
        const auto& p = *index.partition;
        ByteWriter sec;
        sec.u32(static_cast<std::uint32_t>(p.k));
        sec.u32(static_cast<std::uint32_t>(p.dim));
        sec.u64(p.assignments.size());
        sec.u32(static_cast<std::uint32_t>(p.iterations_run));
        sec.array<float>({p.centroids.data(), p.centroids.size()});
        sec.array<std::int32_t>(p.assignments);
        append_section(out, kTagPartition, std::move(sec));
    }
    if (index.directory) {
        const auto& d = *index.directory;
        ByteWriter sec;
        sec.u32(static_cast<std::uint32_t>(d.num_tables()));
        sec.u32(static_cast<std::uint32_t>(d.code_bits()));
        sec.u64(static_cast<std::uint64_t>(d.size()));
        for (int t = 0; t < d.num_tables(); ++t) {
            std::uint64_t buckets = 0;
            d.for_each_bucket(t, [&](auto, auto) { ++buckets; });
            sec.u64(buckets);
            d.for_each_bucket(t, [&](std::span<const std::uint64_t> key,
                                     std::span<const std::int32_t> ids) {
                sec.array<std::uint64_t>(key);
                sec.u32(static_cast<std::uint32_t>(ids.size()));
                sec.array<std::int32_t>(ids);
            });
        }
        append_section(out, kTagDirectory, std::move(sec));
    }

    write_file(path, out.bytes());
}

HashIndex load_index(const std::string& path) {
    auto data = read_file(path);
    ByteReader in(data, path);

    auto magic = in.raw(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0) {
        fail(path + ": bad magic, not an index file");
    }
    std::uint32_t version = in.u32();
    if (version != kVersion) {
        fail(path + ": unsupported index version " + std::to_string(version) +
             " (this build reads version " + std::to_string(kVersion) + ")");
    }
    std::uint32_t flags = in.u32();
    std::uint64_t n = in.u64();
    in.u32();  // dim, recoverable from sections
    in.u32();  // bits
    in.u64();  // seed
    in.u32();  // k
    std::uint32_t num_tables = in.u32();

    HashIndex index;
    if (flags & kHasProjection) {
        auto payload = read_section(in, kTagProjection, path);
        ByteReader sec(payload, path + " [projection]");
        ProjectionMatrix p;
        p.dim = static_cast<int>(sec.u32());
        p.bits = static_cast<int>(sec.u32());
        p.seed = sec.u64();
        p.directions = Matrix<float>(p.bits, p.dim);
        sec.array<float>({p.directions.data(), p.directions.size()});
        index.projection = std::move(p);
    }
    if (flags & kHasCodes) {
        auto payload = read_section(in, kTagCodes, path);
        ByteReader sec(payload, path + " [codes]");
        std::uint64_t count = sec.u64();
        int bits = static_cast<int>(sec.u32());
        std::vector<std::uint64_t> words(count * words_for_bits(bits));
        sec.array<std::uint64_t>(words);
        index.codes = PackedCodes::from_raw_words(static_cast<std::int64_t>(count), bits,
                                                  std::move(words));
    }
    if (flags & kHasPartition) {
        auto payload = read_section(in, kTagPartition, path);
        ByteReader sec(payload, path + " [partition]");
        KmeansPartition p;
        p.k = static_cast<int>(sec.u32());
        p.dim = static_cast<int>(sec.u32());
        std::uint64_t count = sec.u64();
        p.iterations_run = static_cast<int>(sec.u32());
        p.centroids = Matrix<float>(p.k, p.dim);
        sec.array<float>({p.centroids.data(), p.centroids.size()});
        p.assignments.resize(count);
        sec.array<std::int32_t>(p.assignments);
        p.inverted_lists.assign(p.k, {});
        for (std::uint64_t i = 0; i < count; ++i) {
            p.inverted_lists[p.assignments[i]].push_back(static_cast<std::int32_t>(i));
        }
        index.partition = std::move(p);
    }
    if (flags & kHasDirectory) {
        auto payload = read_section(in, kTagDirectory, path);
        ByteReader sec(payload, path + " [directory]");
        std::uint32_t tables = sec.u32();
        if (tables != num_tables) fail(path + ": directory table count mismatch");
        int code_bits = static_cast<int>(sec.u32());
        std::uint64_t count = sec.u64();
        int key_words = words_for_bits(code_bits / static_cast<int>(tables));
        std::vector<std::vector<BucketDirectory::BucketEntry>> parsed(tables);
        for (std::uint32_t t = 0; t < tables; ++t) {
            std::uint64_t buckets = sec.u64();
            parsed[t].resize(buckets);
            for (std::uint64_t bkt = 0; bkt < buckets; ++bkt) {
                auto& entry = parsed[t][bkt];
                entry.key.resize(key_words);
                sec.array<std::uint64_t>(entry.key);
                std::uint32_t len = sec.u32();
                entry.ids.resize(len);
                sec.array<std::int32_t>(entry.ids);
            }
        }
        index.directory = BucketDirectory::from_buckets(
            code_bits, static_cast<int>(tables), static_cast<std::int64_t>(count),
            parsed);
    }

    if (in.remaining() != 0) {
        fail(path + ": " + std::to_string(in.remaining()) + " trailing bytes");
    }
    if (index.base_count() != static_cast<std::int64_t>(n)) {
        fail(path + ": header count disagrees with sections");
    }
    return index;
}

}  // namespace hln
