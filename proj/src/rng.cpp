#include "svhjb/rng.hpp"

#include <cmath>

namespace svhjb {

namespace {

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi) {
    const __uint128_t p = static_cast<__uint128_t>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    return static_cast<std::uint64_t>(p);
}

} // namespace

std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr,
                                        std::array<std::uint64_t, 2> key) {
    constexpr std::uint64_t M0 = 0xD2E7470EE14C6C93ULL;
    constexpr std::uint64_t M1 = 0xCA5A826395121157ULL;
    constexpr std::uint64_t W0 = 0x9E3779B97F4A7C15ULL;
    constexpr std::uint64_t W1 = 0xBB67AE8584CAA73BULL;
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, hi1;
        const std::uint64_t lo0 = mulhilo(M0, ctr[0], hi0);
        const std::uint64_t lo1 = mulhilo(M1, ctr[2], hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

void NormalStream::fill(std::uint64_t block) {
    const auto words = philox4x64({block, path_, 0, 0}, key_);
    const double u1 = u64_to_unit(words[0]);
    const double u2 = u64_to_unit(words[1]);
    const double u3 = u64_to_unit(words[2]);
    const double u4 = u64_to_unit(words[3]);
    const double r1 = std::sqrt(-2.0 * std::log(u1));
    const double r2 = std::sqrt(-2.0 * std::log(u3));
    constexpr double two_pi = 6.283185307179586476925286766559;
    cache_[0] = r1 * std::cos(two_pi * u2);
    cache_[1] = r1 * std::sin(two_pi * u2);
    cache_[2] = r2 * std::cos(two_pi * u4);
    cache_[3] = r2 * std::sin(two_pi * u4);
    cached_block_ = block;
}

double radical_inverse(std::uint64_t index, std::uint32_t base) {
    double inv_base = 1.0 / base;
    double factor = inv_base;
    double value = 0.0;
    while (index > 0) {
        value += static_cast<double>(index % base) * factor;
        index /= base;
        factor *= inv_base;
    }
    return value;
}

void halton_point(std::uint64_t index, int dim, double* out) {
    static constexpr std::uint32_t primes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                               23, 29, 31, 37, 41, 43, 47, 53};
    for (int j = 0; j < dim; ++j) out[j] = radical_inverse(index, primes[j % 16]);
}

} // namespace svhjb
