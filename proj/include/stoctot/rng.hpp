#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

namespace stoctot {

// splitmix64 (Steele, Lea, Flood 2014). Fixed published constants so sequences
// reproduce bit-for-bit across platforms and language ports.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform double in [0, 1) from the top 53 bits
    double next_double() {
        return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
    }

    // uniform integer in [0, bound)
    std::uint64_t next_below(std::uint64_t bound) {
        return next() % bound;
    }

private:
    std::uint64_t state_;
};

// Fisher-Yates shuffle of [0, count) seeded by splitmix64, returning the first
// n indices in ascending order. The reference sampling procedure for corpora.
inline std::vector<std::size_t> sample_indices(std::size_t count, std::size_t n,
                                               std::uint64_t seed) {
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; i++) {
        idx[i] = i;
    }
    SplitMix64 rng(seed);
    for (std::size_t j = count; j > 1; j--) {
        std::size_t k = static_cast<std::size_t>(rng.next_below(j));
        std::swap(idx[j - 1], idx[k]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace stoctot
