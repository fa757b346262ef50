#pragma once

#include <cstdint>
#include <random>

namespace ftlab {

// Stable 64-bit mix used for keyed perturbations (front-id speed jitter).
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Maps a 64-bit word to [0,1). Top 53 bits, so results are exact doubles.
inline double u64_to_unit(std::uint64_t v) {
    return static_cast<double>(v >> 11) * 0x1.0p-53;
}

// Deterministic in [-1,1], keyed by (seed, id, salt). Used for speed jitter.
inline double keyed_pm1(std::uint64_t seed, std::uint64_t id, std::uint64_t salt = 0) {
    return 2.0 * u64_to_unit(splitmix64(seed ^ splitmix64(id + 0x632be59bd9b4e019ULL * salt))) - 1.0;
}

// Seeded generator with portable output. std::mersenne_twister_engine is
// fully specified by the standard; the distributions are not, so uniforms
// are mapped by hand to keep runs byte-identical across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return u64_to_unit(eng_()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Rejection-free integer in [0, n); slight modulo bias is irrelevant here
    // but the result is platform-stable, which is what matters.
    std::uint64_t index(std::uint64_t n) { return eng_() % n; }

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
};

}  // namespace ftlab
