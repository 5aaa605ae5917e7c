#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace epic {

// splitmix64 finalizer; used to spread derived seeds apart.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace detail {

inline std::uint64_t fold_bytes(std::uint64_t h, const void* data, std::size_t n) {
    // FNV-1a over the bytes, folded into the running hash.
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t f = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        f ^= p[i];
        f *= 0x100000001b3ULL;
    }
    return mix64(h ^ f);
}

inline std::uint64_t fold(std::uint64_t h, std::string_view s) {
    return fold_bytes(h, s.data(), s.size());
}

inline std::uint64_t fold(std::uint64_t h, std::uint64_t v) {
    return fold_bytes(h, &v, sizeof v);
}

inline std::uint64_t fold(std::uint64_t h, int v) { return fold(h, std::uint64_t(v)); }

} // namespace detail

// Derives an independent stream seed from a master seed and a sequence of
// labels (strings and integers). Streams with different labels are unrelated,
// which is what lets plan construction and client training run in parallel
// without changing results.
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t master, Parts&&... parts) {
    std::uint64_t h = mix64(master);
    ((h = detail::fold(h, std::forward<Parts>(parts))), ...);
    return h;
}

// Deterministic random stream. The engine is std::mt19937_64 (bit-exact by
// the standard); all value mappings are done here rather than through
// std::*_distribution, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [0, 1), 24-bit resolution
    float uniform_float() { return float(next_u64() >> 40) * 0x1.0p-24f; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v > limit);
        return v % n;
    }

    // Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (std::size_t i = xs.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(xs[i - 1], xs[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

} // namespace epic
