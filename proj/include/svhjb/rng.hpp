#pragma once

#include <array>
#include <cstdint>

namespace svhjb {

// Philox4x64-10 counter-based generator. A block of four 64-bit words is a
// pure function of (key, counter), so any draw in a simulation can be
// addressed as (seed, path, draw index) and reproduced independently of
// scheduling or worker count.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

// Map a 64-bit word to the open interval (0, 1) with 53-bit resolution.
inline double u64_to_unit(std::uint64_t x) {
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

// Stream of standard normal draws attached to one simulation path.
// Draw k is a deterministic function of (seed, stream_tag, path, k); blocks
// of four uniforms are turned into four normals by Box-Muller.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path, std::uint64_t stream_tag = 0)
        : key_{seed, stream_tag}, path_(path) {}

    double at(std::uint64_t k) {
        const std::uint64_t block = k / 4;
        if (block != cached_block_) fill(block);
        return cache_[k % 4];
    }

    double next() { return at(next_k_++); }

    void reset() { next_k_ = 0; }

private:
    void fill(std::uint64_t block);

    std::array<std::uint64_t, 2> key_;
    std::uint64_t path_ = 0;
    std::uint64_t next_k_ = 0;
    std::uint64_t cached_block_ = ~std::uint64_t(0);
    double cache_[4] = {0, 0, 0, 0};
};

// Van der Corput radical inverse; bases 2,3,5,... give a Halton sequence.
double radical_inverse(std::uint64_t index, std::uint32_t base);

// i-th point of a d-dimensional Halton sequence in [0,1)^d (index starts at 1).
void halton_point(std::uint64_t index, int dim, double* out);

} // namespace svhjb
