#ifndef MFMUSIC_RNG_HPP
#define MFMUSIC_RNG_HPP

#include <cstdint>

namespace mfmusic {

// splitmix64 (Steele/Lea/Burton finalizer). Chosen because the whole
// algorithm fits in a dozen lines, is trivially portable, and has no state
// beyond one 64-bit word, so every artifact records "splitmix64" plus the
// seed and can be regenerated anywhere bit-for-bit.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0,1) with 53 random bits.
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [-1,1).
    double sym() { return 2.0 * unit() - 1.0; }

    static constexpr const char* algorithm_name() { return "splitmix64"; }

private:
    std::uint64_t state_;
};

} // namespace mfmusic

#endif
