#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace kzlab {

/// splitmix64 step; used to derive independent stream seeds from (seed, index)
/// so parallel trials stay reproducible regardless of scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
}

/// Deterministic RNG wrapper. mt19937_64 output is pinned by the standard and
/// the uniform/normal maps below avoid the implementation-defined std
/// distributions, so identical seeds give identical streams on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// standard normal (Box-Muller, always consumes two uniforms)
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1 + 0x1.0p-60));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// index into a cumulative-probability table
    int categorical(const std::vector<double>& cumulative) {
        const double u = uniform();
        for (std::size_t i = 0; i < cumulative.size(); ++i)
            if (u < cumulative[i]) return static_cast<int>(i);
        return static_cast<int>(cumulative.size()) - 1;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace kzlab
