// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lmimo/rng.hpp"

namespace testing {

// Real signal bandlimited to omega rad/s: random coefficients on the
// Nyquist grid (spacing pi / omega), sinc-interpolated onto t = k T.
struct Bandlimited {
    std::vector<double> coeff;
    double omega = 1.0;
    double spacing = 1.0;  // pi / omega

    double at(double t) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < coeff.size(); ++j) {
            const double x = t / spacing - static_cast<double>(j);
            acc += coeff[j] * (x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x));
        }
        return acc;
    }
    std::vector<double> sample(double T, std::size_t n) const {
        std::vector<double> out(n);
        for (std::size_t k = 0; k < n; ++k) out[k] = at(static_cast<double>(k) * T);
        return out;
    }
    // Sup norm over a grid `dense` times finer than T.
    double sup(double T, std::size_t n, int dense = 4) const {
        double m = 0.0;
        for (std::size_t k = 0; k < n * static_cast<std::size_t>(dense); ++k)
            m = std::max(m, std::abs(at(static_cast<double>(k) * T / dense)));
        return m;
    }
};

inline Bandlimited random_bandlimited(lmimo::Rng& rng, std::size_t n_coeff, double omega) {
    Bandlimited b;
    b.omega = omega;
    b.spacing = M_PI / omega;
    b.coeff.resize(n_coeff);
    for (auto& c : b.coeff) c = 2.0 * lmimo::uniform01(rng) - 1.0;
    return b;
}

inline double max_abs(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

} // namespace testing
