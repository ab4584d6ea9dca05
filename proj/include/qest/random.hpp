#pragma once

#include <cstdint>
#include <random>

namespace qest {

// Finalizer of the splitmix64 generator. Bijective on 64-bit words; used both
// to condition raw seeds and to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Child seed for task (a, b) under a master seed. The nesting keeps
// (master, a, b) triples collision-resistant, so parallel tasks get
// independent streams regardless of scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
    return mix64(mix64(master ^ mix64(a)) ^ mix64(b));
}

// Deterministic uniform engine. std::uniform_real_distribution is
// implementation-defined, so the 53-bit mapping is written out explicitly:
// identical seeds give identical streams on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t bits() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace qest
