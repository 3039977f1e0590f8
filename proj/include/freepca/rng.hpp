#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace freepca {

// 64-bit FNV-1a. Used for basis identities and artifact hashes in manifests.
inline std::uint64_t fnv1a64(const void* bytes, std::size_t n,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Independent stream seed for a keyed subcomponent (noise block, attention
// map, mover, ...). Plain seed+key would correlate adjacent streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
    return splitmix64(seed ^ splitmix64(key + 0x9e3779b97f4a7c15ull));
}

// Deterministic scalar generation on top of mt19937_64. The engine itself is
// bit-exact by the standard; the uniform/normal transforms are done by hand
// because std::*_distribution output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1), 53-bit resolution
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // standard normal via Box-Muller, second variate cached
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // uniform in [0, n), unbiased via rejection
    std::size_t next_index(std::size_t n) {
        if (n <= 1) return 0;
        const std::uint64_t m = static_cast<std::uint64_t>(n);
        // 2^64 mod m; draws at or above 2^64 - rem would bias the tail
        const std::uint64_t rem = (std::numeric_limits<std::uint64_t>::max() % m + 1) % m;
        std::uint64_t x = engine_();
        if (rem != 0) {
            const std::uint64_t limit = 0ull - rem;
            while (x >= limit) x = engine_();
        }
        return static_cast<std::size_t>(x % m);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Fisher-Yates permutation of 0..n-1.
inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.next_index(i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

inline std::vector<std::size_t> identity_permutation(std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    return perm;
}

}  // namespace freepca
