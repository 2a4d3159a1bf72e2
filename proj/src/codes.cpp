#include "hln/codes.hpp"

#include <bit>
#include <sstream>
#include <stdexcept>

namespace hln {

namespace {

void check_bits(int bits) {
    if (bits < 1 || bits > kMaxCodeBits) {
        std::ostringstream msg;
        msg << "code length " << bits << " out of range [1, " << kMaxCodeBits << "]";
        throw std::invalid_argument(msg.str());
    }
}

// Mask of valid bits in the last word, 0 when the code fills it exactly.
std::uint64_t padding_mask(int bits) {
    int rem = bits % kWordBits;
    return rem == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << rem) - 1;
}

bool padding_clear(int bits, std::span<const std::uint64_t> words) {
    return (words.back() & ~padding_mask(bits)) == 0;
}

}  // namespace

BitCode::BitCode(int bits) : bits_(bits) {
    check_bits(bits);
    words_.resize(words_for_bits(bits));
}

BitCode BitCode::from_words(int bits, std::span<const std::uint64_t> words) {
    check_bits(bits);
    if (words.size() != static_cast<std::size_t>(words_for_bits(bits))) {
        throw std::invalid_argument("BitCode::from_words: wrong word count");
    }
    if (!padding_clear(bits, words)) {
        throw std::invalid_argument("BitCode::from_words: nonzero padding bits");
    }
    BitCode c(bits);
    c.words_.assign(words.begin(), words.end());
    return c;
}

bool BitCode::get(int j) const {
    if (j < 0 || j >= bits_) throw std::out_of_range("BitCode::get: bit index");
    return (words_[j / kWordBits] >> (j % kWordBits)) & 1;
}

void BitCode::set(int j, bool value) {
    if (j < 0 || j >= bits_) throw std::out_of_range("BitCode::set: bit index");
    std::uint64_t mask = std::uint64_t{1} << (j % kWordBits);
    if (value) {
        words_[j / kWordBits] |= mask;
    } else {
        words_[j / kWordBits] &= ~mask;
    }
}

PackedCodes::PackedCodes(std::int64_t n, int bits) : n_(n), bits_(bits) {
    check_bits(bits);
    if (n < 1) throw std::invalid_argument("PackedCodes: need at least one code");
    wpc_ = words_for_bits(bits);
    data_.resize(static_cast<std::size_t>(n) * wpc_);
}

PackedCodes PackedCodes::from_raw_words(std::int64_t n, int bits,
                                        std::vector<std::uint64_t> data) {
    PackedCodes codes(n, bits);
    if (data.size() != codes.data_.size()) {
        throw std::invalid_argument("PackedCodes::from_raw_words: wrong data length");
    }
    codes.data_ = std::move(data);
    std::uint64_t pad = ~padding_mask(bits);
    if (pad != 0) {
        for (std::int64_t i = 0; i < n; ++i) {
            if (codes.data_[(i + 1) * codes.wpc_ - 1] & pad) {
                std::ostringstream msg;
                msg << "PackedCodes::from_raw_words: nonzero padding in code " << i;
                throw std::invalid_argument(msg.str());
            }
        }
    }
    return codes;
}

void PackedCodes::store_code(std::int64_t i, std::span<const std::uint64_t> words) {
    if (i < 0 || i >= n_) throw std::out_of_range("PackedCodes::store_code: index");
    if (words.size() != static_cast<std::size_t>(wpc_)) {
        throw std::invalid_argument("PackedCodes::store_code: wrong word count");
    }
    if (!padding_clear(bits_, words)) {
        throw std::invalid_argument("PackedCodes::store_code: nonzero padding bits");
    }
    std::copy(words.begin(), words.end(), data_.begin() + i * wpc_);
}

BitCode PackedCodes::extract(std::int64_t i) const {
    if (i < 0 || i >= n_) throw std::out_of_range("PackedCodes::extract: index");
    return BitCode::from_words(bits_, code_words(i));
}

PackedCodes pack_codes(const Matrix<std::uint8_t>& bits01) {
    std::int64_t n = bits01.rows();
    int bits = static_cast<int>(bits01.cols());
    if (n < 1) throw std::invalid_argument("pack_codes: need at least one row");
    check_bits(bits);

    PackedCodes codes(n, bits);
    std::vector<std::uint64_t> scratch(codes.words_per_code());
    for (std::int64_t i = 0; i < n; ++i) {
        std::fill(scratch.begin(), scratch.end(), 0);
        auto row = bits01.row(i);
        for (int j = 0; j < bits; ++j) {
            if (row[j] > 1) {
                std::ostringstream msg;
                msg << "pack_codes: non-binary entry " << int(row[j]) << " at row " << i
                    << ", column " << j;
                throw std::invalid_argument(msg.str());
            }
            if (row[j]) scratch[j / kWordBits] |= std::uint64_t{1} << (j % kWordBits);
        }
        codes.store_code(i, scratch);
    }
    return codes;
}

Matrix<std::uint8_t> unpack_codes(const PackedCodes& codes) {
    Matrix<std::uint8_t> out(codes.size(), codes.bits());
    for (std::int64_t i = 0; i < codes.size(); ++i) {
        auto words = codes.code_words(i);
        auto row = out.row(i);
        for (int j = 0; j < codes.bits(); ++j) {
            row[j] = (words[j / kWordBits] >> (j % kWordBits)) & 1;
        }
    }
    return out;
}

void extract_bit_range(std::span<const std::uint64_t> src, int start, int nbits,
                       std::span<std::uint64_t> out) {
    const int out_words = words_for_bits(nbits);
    const int word0 = start / kWordBits;
    const int shift = start % kWordBits;
    for (int w = 0; w < out_words; ++w) {
        std::uint64_t lo = src[word0 + w] >> shift;
        std::uint64_t hi = 0;
        if (shift != 0 && static_cast<std::size_t>(word0 + w + 1) < src.size()) {
            hi = src[word0 + w + 1] << (kWordBits - shift);
        }
        out[w] = lo | hi;
    }
    int rem = nbits % kWordBits;
    if (rem != 0) out[out_words - 1] &= (std::uint64_t{1} << rem) - 1;
}

int hamming_distance(const BitCode& a, const BitCode& b) {
    if (a.bits() != b.bits()) {
        throw std::invalid_argument("hamming_distance: code lengths differ");
    }
    auto wa = a.words();
    auto wb = b.words();
    int d = 0;
    for (std::size_t w = 0; w < wa.size(); ++w) {
        d += std::popcount(wa[w] ^ wb[w]);
    }
    return d;
}

void hamming_to_all(const PackedCodes& codes, const BitCode& q,
                    std::span<std::uint16_t> out) {
    if (q.bits() != codes.bits()) {
        throw std::invalid_argument("hamming_to_all: code lengths differ");
    }
    if (out.size() != static_cast<std::size_t>(codes.size())) {
        throw std::invalid_argument("hamming_to_all: output length != code count");
    }
    const int wpc = codes.words_per_code();
    const std::uint64_t* qw = q.words().data();
    const std::uint64_t* base = codes.raw().data();
    for (std::int64_t i = 0; i < codes.size(); ++i) {
        const std::uint64_t* cw = base + i * wpc;
        int d = 0;
        for (int w = 0; w < wpc; ++w) {
            d += std::popcount(cw[w] ^ qw[w]);
        }
        out[i] = static_cast<std::uint16_t>(d);
    }
}

}  // namespace hln
