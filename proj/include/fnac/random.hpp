#pragma once

#include <cstdint>
#include <random>

namespace fnac::rng {

// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed for the index-th worker stream of a master seed. Streams derived this
// way are independent of how work is scheduled, so parallel rollouts stay
// reproducible.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix(master ^ mix(index + 1));
}

double normal_cdf(double z);
double normal_pdf(double z);

// Inverse standard normal CDF (Wichura's AS 241, double precision).
double normal_quantile(double p);

// Deterministic random stream. Uniforms are built directly from the
// mt19937_64 integer output so the float sequence is identical across
// platforms and standard-library implementations.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    // uniform in [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform strictly inside (0, 1); safe as a quantile-function argument
    double uniform_open() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via inverse CDF (no rejection, stream-stable)
    double normal() { return normal_quantile(uniform_open()); }

private:
    std::mt19937_64 engine_;
};

}  // namespace fnac::rng
