// SPDX-License-Identifier: Apache-2.0
#include "lmimo/rng.hpp"

#include <array>
#include <cmath>

namespace lmimo {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t hash_label(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Rng derive_rng(std::uint64_t master_seed, std::uint64_t trial, std::string_view label) {
    std::uint64_t state = master_seed;
    std::uint64_t a = splitmix64(state);
    state ^= trial * 0xD1B54A32D192ED03ULL;
    std::uint64_t b = splitmix64(state);
    state ^= hash_label(label);
    std::uint64_t c = splitmix64(state);

    std::array<std::uint32_t, 6> words{};
    for (int i = 0; i < 2; ++i) {
        words[i] = static_cast<std::uint32_t>(a >> (32 * i));
        words[2 + i] = static_cast<std::uint32_t>(b >> (32 * i));
        words[4 + i] = static_cast<std::uint32_t>(c >> (32 * i));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

// Box-Muller on our own uniform draws: std::normal_distribution output is
// implementation-defined, which would break cross-toolchain reproducibility.
double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::complex<double> complex_normal(Rng& rng, double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = standard_normal(rng);
    const double im = standard_normal(rng);
    return {s * re, s * im};
}

double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace lmimo
