// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace lmimo {

using Rng = std::mt19937_64;

/// 64-bit FNV-1a over the bytes of `s`.
std::uint64_t hash_label(std::string_view s) noexcept;

/// Independent stream for one (master seed, trial, label) triple.
/// The triple is mixed through splitmix64 before seeding, so neighbouring
/// trials or labels land far apart in the generator's state space.
Rng derive_rng(std::uint64_t master_seed, std::uint64_t trial, std::string_view label);

double standard_normal(Rng& rng);

/// Circularly symmetric complex Gaussian with E|z|^2 = variance.
std::complex<double> complex_normal(Rng& rng, double variance = 1.0);

double uniform01(Rng& rng);

} // namespace lmimo
