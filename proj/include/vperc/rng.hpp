#pragma once

#include <cmath>
#include <cstdint>

namespace vperc {

// Counter-based random streams. Every draw is a pure function of a 64-bit
// key and a draw counter, so any box / trial / resample can be regenerated
// in isolation and in any order. Mixing is splitmix64 (Steele et al.),
// which passes BigCrush when used as a stateless hash-to-uniform map.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Derive a child stream key from a parent key and an index.
inline std::uint64_t substream(std::uint64_t key, std::uint64_t index) {
    return splitmix64(key ^ splitmix64(index + 0x632be59bd9b4e019ull));
}

inline std::uint64_t substream(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
    return substream(substream(key, a), b);
}

/// Stateless uniform stream: draw i from stream `key` is splitmix64(key + i*phi).
class Stream {
  public:
    explicit Stream(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ull * counter_++); }

    /// Uniform in [0, 1). 53-bit mantissa, never exactly 1.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Exact Poisson sample by inversion (product of uniforms).
    /// Intended for the per-box intensities used here (lambda up to ~30).
    long next_poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        const double limit = std::exp(-lambda);
        long k = -1;
        double prod = 1.0;
        do {
            ++k;
            prod *= next_unit();
        } while (prod > limit);
        return k;
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace vperc
