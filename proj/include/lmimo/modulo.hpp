// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "lmimo/signal.hpp"

namespace lmimo {

struct ModuloConfig {
    double lambda = 1.0;
    int bits = 2;

    void validate() const;
    double dynamic_range() const noexcept { return 2.0 * lambda; }
    double levels() const noexcept;
    double step() const noexcept;  // q0 = 2^-b * 2 lambda
};

/// Centered modulo into [-lambda, lambda).
double modulo_fold(double x, double lambda);

/// Mid-rise quantizer onto {+-(2n+1) lambda / 2^b}. Ties go to the level of
/// larger magnitude.
double quantize_sample(double s, const ModuloConfig& cfg);

struct FoldedFrame {
    std::vector<double> i;
    std::vector<double> q;
    ModuloConfig cfg;
    bool quantized = false;
    double sample_interval = 1.0;

    std::size_t size() const noexcept { return i.size(); }
    /// Throws InputError if a sample is outside [-lambda, lambda) or, when
    /// quantized, off the level grid.
    void validate() const;
};

FoldedFrame fold_waveform(const BasebandWaveform& w, const ModuloConfig& cfg);
FoldedFrame quantize(const FoldedFrame& f);

/// CSV with header `index,I,Q`.
void write_frame_csv(std::ostream& os, const FoldedFrame& f);
/// Reads the sample columns; cfg/quantized/sample_interval are left for the caller.
FoldedFrame read_frame_csv(std::istream& is);

} // namespace lmimo
