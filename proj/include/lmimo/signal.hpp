// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace lmimo {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

/// Square Gray-coded QAM with unit average energy.
class Constellation {
public:
    explicit Constellation(int order);

    int order() const noexcept { return order_; }
    int bits_per_symbol() const noexcept { return bits_; }
    int side() const noexcept { return side_; }
    double scale() const noexcept { return scale_; }
    double min_distance() const noexcept { return 2.0 * scale_; }

    // Symbol index is i_I * side + i_Q, with level index 0 at the largest amplitude.
    const CVec& points() const noexcept { return points_; }
    std::uint32_t label(int index) const { return labels_.at(index); }
    int index_of_label(std::uint32_t label) const { return index_of_label_.at(label); }

    // Nearest symbol index; ties go to the lower index.
    int nearest(cplx z) const noexcept;

private:
    int axis_level(double v) const noexcept;

    int order_;
    int bits_;
    int side_;
    double scale_;
    CVec points_;
    std::vector<std::uint32_t> labels_;
    std::vector<int> index_of_label_;
};

CVec map_bits(std::span<const std::uint8_t> bits, const Constellation& c);
std::vector<std::uint8_t> demap_symbols(std::span<const int> indices, const Constellation& c);

struct PulseShape {
    double rolloff = 0.5;
    double t_rep = 1.0;
    int span = 16;
};

double raised_cosine(double t, const PulseShape& p);

struct BasebandWaveform {
    CVec samples;
    double sample_interval = 1.0;
    int samples_per_symbol = 1;
    double oversampling = 1.0;  // f_s / f_Nyquist
    double bandwidth = 0.0;     // rad/s, highest angular frequency
    std::size_t delay = 0;      // index of the first symbol instant
};

/// Nyquist rate of a raised-cosine signal, in Hz.
double nyquist_rate(const PulseShape& p);
/// Samples per symbol needed to reach at least `oversampling` x f_Nyquist.
int samples_per_symbol_for(double oversampling, const PulseShape& p);

BasebandWaveform pulse_shape(std::span<const cplx> symbols, int samples_per_symbol, const PulseShape& p);

/// Samples at the symbol instants delay + k*sps for k in [0, n_symbols).
CVec sample_symbols(const BasebandWaveform& w, std::size_t n_symbols);

enum class DftDirection { Forward, Inverse };

/// Unitary DFT (1/sqrt(K) on both directions).
CVec unitary_dft(std::span<const cplx> x, DftDirection dir);

struct OfdmConfig {
    int subcarriers = 256;
    int cp_length = 16;
    std::vector<bool> active;  // empty means all active

    void validate() const;
    bool is_active(int nu) const { return active.empty() || active.at(nu); }
};

CVec ofdm_modulate(std::span<const cplx> freq_symbols, const OfdmConfig& cfg);
/// Strips the cyclic prefix and applies the forward unitary DFT.
CVec ofdm_demodulate(std::span<const cplx> block, const OfdmConfig& cfg);

} // namespace lmimo
