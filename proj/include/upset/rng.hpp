#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace upset {

// Deterministic RNG: mt19937_64 engine with hand-rolled draws, so results do
// not depend on the standard library's distribution implementations.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0,1), 53 random bits.
    double next_unit() { return double(eng_() >> 11) * 0x1.0p-53; }

    // Uniform in [0, bound). bound must be positive.
    int next_int(int bound) {
        return int((unsigned __int128)(eng_()) * (unsigned __int128)(bound) >> 64);
    }

    bool next_bool() { return eng_() & 1u; }

    // Index drawn according to the given nonnegative weights.
    int pick_weighted(const std::vector<double>& weights);

  private:
    std::mt19937_64 eng_;
};

// Stable per-trial seed derivation: independent of how many trials run and of
// any threading, so reruns with the same master seed are byte-identical.
uint64_t derive_seed(uint64_t master, std::string_view scope, uint64_t index);

}  // namespace upset
