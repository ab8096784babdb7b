#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace affectreg {

// Seeded RNG with hand-rolled draw functions. std::mt19937_64 produces the
// same stream everywhere, but the std distributions are implementation
// defined, so uniform doubles and bounded indices are derived here to keep
// runs bit-reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform in [-1, 1].
    double symmetric() { return uniform(-1.0, 1.0); }

    // Unbiased index in [0, n) via rejection sampling. n must be > 0.
    std::size_t index(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return static_cast<std::size_t>(x % bound);
    }

    // Fisher-Yates shuffle using index() draws.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

    // Derives a decorrelated child seed, e.g. one per training target.
    std::uint64_t fork(std::uint64_t salt) {
        std::uint64_t x = next_u64() ^ (salt * 0x9e3779b97f4a7c15ull);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ull;
        x ^= x >> 27;
        return x;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace affectreg
