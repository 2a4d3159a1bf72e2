#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hln/codes.hpp"
#include "hln/eval.hpp"
#include "hln/matrix.hpp"
#include "hln/search.hpp"

namespace hln {

// vecs-family files: each record is a 4-byte little-endian signed dimension d
// followed by d elements (float32 / int32 / uint8). Record count comes from
// the file size; d must be identical across records.
template <typename T>
Matrix<T> read_vecs(const std::string& path);

template <typename T>
void write_vecs(const std::string& path, const Matrix<T>& m);

extern template Matrix<float> read_vecs<float>(const std::string&);
extern template Matrix<std::int32_t> read_vecs<std::int32_t>(const std::string&);
extern template Matrix<std::uint8_t> read_vecs<std::uint8_t>(const std::string&);
extern template void write_vecs<float>(const std::string&, const Matrix<float>&);
extern template void write_vecs<std::int32_t>(const std::string&,
                                              const Matrix<std::int32_t>&);
extern template void write_vecs<std::uint8_t>(const std::string&,
                                              const Matrix<std::uint8_t>&);

// Code exchange: a uint8 vecs file with ceil(bits/8) bytes per record, bits
// little-endian within each byte, plus a JSON sidecar at <path>.meta holding
// the true bit count. bits_override skips the sidecar lookup.
void export_codes_file(const PackedCodes& codes, const std::string& path);
PackedCodes import_codes_file(const std::string& path, int bits_override = 0);

// CSV with the fixed header
// mode,l,tables,C,L,recall,qps,mean_ms,coding_ms,locating_ms,scanning_ms
void write_sweep_csv(const std::string& path, std::span<const SweepRecord> records);
std::vector<SweepRecord> read_sweep_csv(const std::string& path);

// Per-query result ids as an ivecs file.
void write_result_ids_ivecs(const std::string& path,
                            std::span<const QueryRecord> records);

// Sweep grammar: "name=start:step:stop" or "name=v1,v2,v3".
struct SweepSpec {
    std::string name;
    std::vector<std::int64_t> values;
};
SweepSpec parse_sweep_spec(const std::string& spec);

// Index persistence: "HLN1" magic, version, little-endian fixed-width fields,
// one CRC-checked section per component. Loading a file with a bad magic,
// unknown version, or failed checksum throws without returning any index.
void save_index(const HashIndex& index, const std::string& path);
HashIndex load_index(const std::string& path);

}  // namespace hln
