#include "hln/hashers.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hln/parallel.hpp"

namespace hln {

namespace {

// Box-Muller over the raw mt19937_64 output. std::normal_distribution is
// implementation-defined, so the conversion is spelled out here.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

    float next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = unit();
        while (u1 <= 0.0) u1 = unit();
        double u2 = unit();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        spare_ = static_cast<float>(radius * std::sin(theta));
        have_spare_ = true;
        return static_cast<float>(radius * std::cos(theta));
    }

private:
    double unit() { return (rng_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 rng_;
    bool have_spare_ = false;
    float spare_ = 0.0f;
};

void encode_into(const ProjectionMatrix& p, std::span<const float> x,
                 std::span<std::uint64_t> words) {
    std::fill(words.begin(), words.end(), 0);
    for (int j = 0; j < p.bits; ++j) {
        auto dir = p.directions.row(j);
        double acc = 0.0;
        for (int d = 0; d < p.dim; ++d) {
            acc += static_cast<double>(dir[d]) * static_cast<double>(x[d]);
        }
        if (acc >= 0.0) {
            words[j / kWordBits] |= std::uint64_t{1} << (j % kWordBits);
        }
    }
}

}  // namespace

ProjectionMatrix train_rplsh(int dim, int bits, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("train_rplsh: dim must be >= 1");
    if (bits < 1 || bits > kMaxCodeBits) {
        throw std::invalid_argument("train_rplsh: code length out of range");
    }
    ProjectionMatrix p;
    p.dim = dim;
    p.bits = bits;
    p.seed = seed;
    p.directions = Matrix<float>(bits, dim);
    GaussianStream g(seed);
    float* out = p.directions.data();
    for (std::size_t i = 0; i < p.directions.size(); ++i) {
        out[i] = g.next();
    }
    return p;
}

BitCode encode(const ProjectionMatrix& p, std::span<const float> x) {
    if (x.size() != static_cast<std::size_t>(p.dim)) {
        std::ostringstream msg;
        msg << "encode: vector has " << x.size() << " dims, projection expects " << p.dim;
        throw std::invalid_argument(msg.str());
    }
    std::vector<std::uint64_t> words(words_for_bits(p.bits));
    encode_into(p, x, words);
    return BitCode::from_words(p.bits, words);
}

PackedCodes encode_batch(const ProjectionMatrix& p, const Matrix<float>& x,
                         int threads) {
    if (x.cols() != p.dim) {
        std::ostringstream msg;
        msg << "encode_batch: matrix has " << x.cols() << " columns, projection expects "
            << p.dim;
        throw std::invalid_argument(msg.str());
    }
    if (x.rows() < 1) throw std::invalid_argument("encode_batch: empty input");

    PackedCodes codes(x.rows(), p.bits);
    parallel_for(x.rows(), threads, [&](std::int64_t begin, std::int64_t end) {
        std::vector<std::uint64_t> scratch(codes.words_per_code());
        for (std::int64_t i = begin; i < end; ++i) {
            encode_into(p, x.row(i), scratch);
            codes.store_code(i, scratch);
        }
    });
    return codes;
}

PackedCodes import_codes(const Matrix<std::uint8_t>& bits01) {
    return pack_codes(bits01);
}

PackedCodes import_packed_codes(std::span<const std::uint8_t> payload,
                                std::int64_t n, int bits) {
    if (n < 1) throw std::invalid_argument("import_packed_codes: need n >= 1");
    if (bits < 1 || bits > kMaxCodeBits) {
        throw std::invalid_argument("import_packed_codes: code length out of range");
    }
    const std::int64_t bpc = (bits + 7) / 8;
    const std::int64_t expected = n * bpc;
    if (static_cast<std::int64_t>(payload.size()) != expected) {
        std::ostringstream msg;
        msg << "import_packed_codes: expected " << expected << " bytes (" << n
            << " codes x " << bpc << " bytes), got " << payload.size();
        throw std::invalid_argument(msg.str());
    }

    // Bits past bit l-1 inside the last byte of a record must be zero.
    const int tail_bits = bits % 8;
    const std::uint8_t tail_mask =
        tail_bits == 0 ? 0xFF : static_cast<std::uint8_t>((1u << tail_bits) - 1);

    PackedCodes codes(n, bits);
    std::vector<std::uint64_t> scratch(codes.words_per_code());
    for (std::int64_t i = 0; i < n; ++i) {
        std::fill(scratch.begin(), scratch.end(), 0);
        const std::uint8_t* rec = payload.data() + i * bpc;
        if ((rec[bpc - 1] & ~tail_mask) != 0) {
            std::ostringstream msg;
            msg << "import_packed_codes: stray bits beyond bit " << bits - 1
                << " at byte offset " << i * bpc + bpc - 1;
            throw std::invalid_argument(msg.str());
        }
        for (std::int64_t byte = 0; byte < bpc; ++byte) {
            scratch[byte / 8] |= static_cast<std::uint64_t>(rec[byte]) << ((byte % 8) * 8);
        }
        codes.store_code(i, scratch);
    }
    return codes;
}

std::vector<std::uint8_t> export_packed_codes(const PackedCodes& codes) {
    const std::int64_t bpc = (codes.bits() + 7) / 8;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(codes.size() * bpc));
    for (std::int64_t i = 0; i < codes.size(); ++i) {
        auto words = codes.code_words(i);
        std::uint8_t* rec = out.data() + i * bpc;
        for (std::int64_t byte = 0; byte < bpc; ++byte) {
            rec[byte] = static_cast<std::uint8_t>(words[byte / 8] >> ((byte % 8) * 8));
        }
    }
    return out;
}

}  // namespace hln
