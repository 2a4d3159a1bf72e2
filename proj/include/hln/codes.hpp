#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hln/matrix.hpp"

namespace hln {

inline constexpr int kWordBits = 64;
inline constexpr int kMaxCodeBits = 4096;

inline constexpr int words_for_bits(int bits) {
    return (bits + kWordBits - 1) / kWordBits;
}

// One binary code of `bits` bits packed into 64-bit words.
// Bit j lives in word j/64 at position j%64; bits above bits-1 stay zero.
class BitCode {
public:
    BitCode() = default;
    explicit BitCode(int bits);

    // Adopts pre-packed words; rejects wrong word count or nonzero padding.
    static BitCode from_words(int bits, std::span<const std::uint64_t> words);

    int bits() const { return bits_; }
    std::span<const std::uint64_t> words() const { return words_; }

    bool get(int j) const;
    void set(int j, bool value);

    bool operator==(const BitCode&) const = default;

private:
    int bits_ = 0;
    std::vector<std::uint64_t> words_;
};

// n binary codes of `bits` bits each, packed row-major: code i occupies
// words [i*words_per_code, (i+1)*words_per_code). Immutable once filled;
// all writers go through padding-checked store_code / from_raw_words.
class PackedCodes {
public:
    PackedCodes() = default;
    PackedCodes(std::int64_t n, int bits);

    static PackedCodes from_raw_words(std::int64_t n, int bits,
                                      std::vector<std::uint64_t> data);

    std::int64_t size() const { return n_; }
    int bits() const { return bits_; }
    int words_per_code() const { return wpc_; }

    std::span<const std::uint64_t> code_words(std::int64_t i) const {
        return {data_.data() + i * wpc_, static_cast<std::size_t>(wpc_)};
    }
    std::span<const std::uint64_t> raw() const { return data_; }

    // Overwrites code i; rejects wrong word count or nonzero padding bits.
    void store_code(std::int64_t i, std::span<const std::uint64_t> words);

    BitCode extract(std::int64_t i) const;

    bool operator==(const PackedCodes&) const = default;

private:
    std::int64_t n_ = 0;
    int bits_ = 0;
    int wpc_ = 0;
    std::vector<std::uint64_t> data_;
};

// Packs an n x l matrix of 0/1 entries; rejects any other value, naming the
// offending (row, column).
PackedCodes pack_codes(const Matrix<std::uint8_t>& bits01);

Matrix<std::uint8_t> unpack_codes(const PackedCodes& codes);

// Copies bits [start, start+nbits) of src into out LSB-first and zeroes the
// rest of out. out must hold words_for_bits(nbits) words.
void extract_bit_range(std::span<const std::uint64_t> src, int start, int nbits,
                       std::span<std::uint64_t> out);

// Number of differing bits; lengths must match.
int hamming_distance(const BitCode& a, const BitCode& b);

// out[i] = hamming distance between code i and q; out.size() must equal n.
void hamming_to_all(const PackedCodes& codes, const BitCode& q,
                    std::span<std::uint16_t> out);

}  // namespace hln
