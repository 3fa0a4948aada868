#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace drstrat {

// splitmix64 finalizer, used to derive independent substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed for stream (a, b, c) under a base seed. Workers (replications,
// multistarts, models) each get their own stream so results do not depend
// on scheduling order or thread count.
inline std::uint64_t substream_seed(std::uint64_t base, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = mix64(base);
    s = mix64(s ^ (a + 0x1000000001ULL));
    s = mix64(s ^ (b + 0x2000000002ULL));
    s = mix64(s ^ (c + 0x3000000003ULL));
    return s;
}

// Seeded generator with explicit float mappings, so draws are reproducible
// across builds regardless of std::*_distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    // Standard normal via Box-Muller (one value per call).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        // guard log(0)
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double exponential() {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return -std::log(u);
    }

    // Dirichlet(1,...,1): uniform point on the probability simplex.
    std::vector<double> dirichlet_uniform(std::size_t k) {
        std::vector<double> e(k);
        double total = 0.0;
        for (auto& v : e) {
            v = exponential();
            total += v;
        }
        for (auto& v : e) v /= total;
        return e;
    }

private:
    std::mt19937_64 eng_;
};

} // namespace drstrat
