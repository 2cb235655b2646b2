#pragma once
// Shared plumbing: deterministic RNG streams, a chunked parallel loop and
// FNV-1a hashing for report fingerprints.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <string_view>

namespace vclab {

using cplx = std::complex<double>;

// SplitMix64 generator. Tiny state, full 64-bit period, and the same output
// on every platform, which is what keeps seeded experiments reproducible
// bit-for-bit (std::normal_distribution is not portable across libraries).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Independent stream for trial `index` under a master seed.
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        Rng mix(seed ^ (0x9e3779b97f4a7c15ull * (index + 1)));
        mix.next_u64();
        return mix;
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), n > 0.
    std::int64_t next_below(std::int64_t n) {
        return std::int64_t(next_u64() % std::uint64_t(n));
    }

    // Standard gaussian via Box-Muller; caches the second value of each pair.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = next_unit();
        double u2 = next_unit();
        double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * 3.14159265358979323846 * u2);
        has_spare_ = true;
        return mag * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    cplx next_cgaussian() {
        double re = next_gaussian();
        double im = next_gaussian();
        return {re, im};
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Runs fn(begin, end) over [0, count) split into chunks, one thread per
// hardware core. Chunks write to disjoint output slots, so the result does
// not depend on the thread count.
void parallel_chunks(std::size_t count,
                     const std::function<void(std::size_t, std::size_t)>& fn);

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace vclab
