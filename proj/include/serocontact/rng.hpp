#pragma once

#include <cstdint>
#include <cmath>

#include "serocontact/common.hpp"

namespace sero {

/// Deterministic random stream (xoshiro256** with splitmix64 seeding).
///
/// The standard <random> distributions are implementation-defined, which
/// breaks the byte-identical reproducibility contract of the bootstrap.
/// Everything here is fully specified, so the same seed produces the same
/// draws on every platform and under any thread schedule.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    /// Stream for one bootstrap replicate: master seed XORed with the
    /// replicate index, then expanded. Streams are independent of the
    /// order in which replicates run.
    static Rng for_replicate(std::uint64_t master_seed, std::uint64_t replicate_index) {
        return Rng(master_seed ^ (0x9E3779B97F4A7C15ULL * (replicate_index + 1)));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw DomainError("uniform_index: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = next_u64(); } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller; draws two uniforms per pair.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Poisson draw. Knuth's product method below 30, normal approximation
    /// with continuity correction above (counts in this library are small).
    long poisson(double mean) {
        if (mean < 0.0) throw DomainError("poisson: negative mean");
        if (mean == 0.0) return 0;
        if (mean < 30.0) {
            const double limit = std::exp(-mean);
            double prod = 1.0;
            long k = -1;
            do {
                ++k;
                prod *= uniform01();
            } while (prod > limit);
            return k;
        }
        const double draw = std::floor(normal(mean, std::sqrt(mean)) + 0.5);
        return draw < 0.0 ? 0 : static_cast<long>(draw);
    }

    /// Gamma(shape, scale) via Marsaglia-Tsang squeeze.
    double gamma(double shape, double scale) {
        if (shape <= 0.0 || scale <= 0.0) throw DomainError("gamma: nonpositive parameter");
        if (shape < 1.0) {
            const double u = std::max(uniform01(), 1e-300);
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    /// Negative binomial with mean m and dispersion k (variance m + m^2/k),
    /// drawn as a gamma-Poisson mixture.
    long negbin(double mean, double dispersion) {
        if (mean < 0.0) throw DomainError("negbin: negative mean");
        if (mean == 0.0) return 0;
        if (dispersion <= 0.0) throw DomainError("negbin: dispersion must be positive");
        // Essentially Poisson once the dispersion is huge.
        if (dispersion > 1e7) return poisson(mean);
        return poisson(gamma(dispersion, mean / dispersion));
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace sero
