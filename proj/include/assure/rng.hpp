#pragma once

#include <cstdint>
#include <limits>

namespace assure {

// splitmix64 finaliser; also used to derive stream keys.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

/*
 * Counter-based random stream (splitmix64). A stream is identified purely by
 * its 64-bit key, so independent substreams can be derived from
 * (seed, salt, id...) without any shared state. Satisfies
 * UniformRandomBitGenerator, so std:: distributions can run on top of it.
 */
class RngStream {
  public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t key = 0) : state_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }

    result_type operator()() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    // Uniform on the open interval (0, 1): safe input for quantile transforms.
    double uniform01() {
        return (static_cast<double>(operator()() >> 11) + 0.5) * 0x1.0p-53;
    }

  private:
    std::uint64_t state_;
};

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t salt) {
    return mix64(seed + 0x9E3779B97F4A7C15ULL * (salt + 1));
}

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t salt, std::uint64_t a) {
    return mix64(derive_key(seed, salt) + 0x9E3779B97F4A7C15ULL * (a + 1));
}

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t salt, std::uint64_t a,
                                std::uint64_t b) {
    return mix64(derive_key(seed, salt, a) + 0x9E3779B97F4A7C15ULL * (b + 1));
}

inline RngStream substream(std::uint64_t seed, std::uint64_t salt) {
    return RngStream(derive_key(seed, salt));
}
inline RngStream substream(std::uint64_t seed, std::uint64_t salt, std::uint64_t a) {
    return RngStream(derive_key(seed, salt, a));
}
inline RngStream substream(std::uint64_t seed, std::uint64_t salt, std::uint64_t a,
                           std::uint64_t b) {
    return RngStream(derive_key(seed, salt, a, b));
}

// Stream salts, one per independent randomness consumer.
namespace salts {
inline constexpr std::uint64_t kAssuranceDraw = 0xA55C01ULL;
inline constexpr std::uint64_t kModalRep = 0xA55C02ULL;
inline constexpr std::uint64_t kHybridDraw = 0xA55C03ULL;
inline constexpr std::uint64_t kPosteriorData = 0xA55C04ULL;
inline constexpr std::uint64_t kPosteriorChain = 0xA55C05ULL;
inline constexpr std::uint64_t kMcStudy = 0xA55C06ULL;
inline constexpr std::uint64_t kSweep = 0xA55C07ULL;
inline constexpr std::uint64_t kRepetitions = 0xA55C08ULL;
}  // namespace salts

}  // namespace assure
