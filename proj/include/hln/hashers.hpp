#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hln/codes.hpp"
#include "hln/matrix.hpp"

namespace hln {

// Bank of random Gaussian projections: `bits` directions over `dim` inputs.
// Stored one direction per row so a query streams each direction contiguously;
// entry (d, j) of the logical dim x bits matrix A is directions.at(j, d).
//
// Entries are N(0,1) via Box-Muller on the raw mt19937_64 stream
// ((x >> 11) * 2^-53 uniforms), filled in bit-major order, so the same seed
// reproduces the same matrix on any platform.
struct ProjectionMatrix {
    int dim = 0;
    int bits = 0;
    std::uint64_t seed = 0;
    Matrix<float> directions;  // bits x dim

    float a(int d, int j) const { return directions.at(j, d); }

    bool operator==(const ProjectionMatrix&) const = default;
};

ProjectionMatrix train_rplsh(int dim, int bits, std::uint64_t seed);

// Sign codes: bit j = 1 iff the projection of x onto direction j is >= 0.
// Dot products accumulate in double.
BitCode encode(const ProjectionMatrix& p, std::span<const float> x);

// Row-wise encode; bit-identical to calling encode per row.
PackedCodes encode_batch(const ProjectionMatrix& p, const Matrix<float>& x,
                         int threads = 1);

// External code intake so codes produced elsewhere run through the same
// search machinery. Matrix form takes 0/1 entries; packed form takes
// ceil(bits/8) bytes per code, bits little-endian within each byte.
PackedCodes import_codes(const Matrix<std::uint8_t>& bits01);
PackedCodes import_packed_codes(std::span<const std::uint8_t> payload,
                                std::int64_t n, int bits);
std::vector<std::uint8_t> export_packed_codes(const PackedCodes& codes);

}  // namespace hln
