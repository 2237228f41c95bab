#pragma once

#include <cstdint>
#include <random>

namespace qkd {

// All randomness flows through explicitly seeded streams so that runs are
// reproducible bit for bit. One master seed is split per role and per trial;
// streams never share state.
enum class Role : std::uint64_t {
    Alice = 1,
    Bob = 2,
    Eve = 3,
    Sampler = 4,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t u64() { return eng_(); }

    bool bit() { return (eng_() >> 63) != 0; }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n) by rejection; n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
};

inline RngStream derive_stream(std::uint64_t seed, Role role, std::uint64_t trial = 0) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ static_cast<std::uint64_t>(role));
    s = splitmix64(s ^ trial);
    return RngStream(s);
}

} // namespace qkd
