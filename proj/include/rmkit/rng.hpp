#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace rmkit {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// FNV-1a, used to fold string identifiers into stream keys.
constexpr std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

namespace detail {
constexpr std::uint64_t key_of(std::uint64_t v) { return v; }
constexpr std::uint64_t key_of(std::int64_t v) { return static_cast<std::uint64_t>(v); }
constexpr std::uint64_t key_of(int v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); }
constexpr std::uint64_t key_of(std::string_view s) { return hash_string(s); }
}  // namespace detail

/// Derive an independent stream seed from a master seed and a tuple of keys.
/// The result depends only on the values, never on call order.
template <class... Keys>
constexpr std::uint64_t derive_seed(std::uint64_t master, const Keys&... keys) {
    std::uint64_t h = mix64(master);
    ((h = mix64(h ^ detail::key_of(keys))), ...);
    return h;
}

/// Deterministic random stream. The engine output sequence is fixed by the
/// standard; variates are produced here rather than through <random>
/// distributions, whose algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [lo, hi] (inclusive).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(engine_());
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return lo + static_cast<std::int64_t>(v % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (one variate per call, no caching).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace rmkit
