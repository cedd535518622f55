// SPDX-License-Identifier: Apache-2.0
#include "lmimo/signal.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <string>

#include "lmimo/errors.hpp"

namespace lmimo {

namespace {

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

} // namespace

Constellation::Constellation(int order) : order_(order) {
    if (order != 4 && order != 16 && order != 64 && order != 256 && order != 1024)
        throw InputError("constellation order must be one of 4, 16, 64, 256, 1024 (got " +
                         std::to_string(order) + ")");
    bits_ = static_cast<int>(std::lround(std::log2(order)));
    side_ = static_cast<int>(std::lround(std::sqrt(order)));
    scale_ = std::sqrt(3.0 / (2.0 * (order - 1)));

    const int half = bits_ / 2;
    points_.resize(order);
    labels_.resize(order);
    index_of_label_.assign(order, -1);
    for (int ii = 0; ii < side_; ++ii) {
        for (int iq = 0; iq < side_; ++iq) {
            const int idx = ii * side_ + iq;
            points_[idx] = {(side_ - 1 - 2 * ii) * scale_, (side_ - 1 - 2 * iq) * scale_};
            const auto gi = static_cast<std::uint32_t>(ii ^ (ii >> 1));
            const auto gq = static_cast<std::uint32_t>(iq ^ (iq >> 1));
            labels_[idx] = (gi << half) | gq;
            index_of_label_[labels_[idx]] = idx;
        }
    }
}

int Constellation::axis_level(double v) const noexcept {
    const double x = ((side_ - 1) - v / scale_) / 2.0;
    double i = std::ceil(x - 0.5);
    if (!(i >= 0.0)) i = 0.0;  // also catches NaN
    if (i > side_ - 1) i = side_ - 1;
    return static_cast<int>(i);
}

int Constellation::nearest(cplx z) const noexcept {
    return axis_level(z.real()) * side_ + axis_level(z.imag());
}

CVec map_bits(std::span<const std::uint8_t> bits, const Constellation& c) {
    const auto k = static_cast<std::size_t>(c.bits_per_symbol());
    if (bits.size() % k != 0)
        throw InputError("bit count " + std::to_string(bits.size()) + " is not a multiple of " +
                         std::to_string(k));
    CVec out(bits.size() / k);
    for (std::size_t s = 0; s < out.size(); ++s) {
        std::uint32_t label = 0;
        for (std::size_t j = 0; j < k; ++j) label = (label << 1) | (bits[s * k + j] & 1u);
        out[s] = c.points()[c.index_of_label(label)];
    }
    return out;
}

std::vector<std::uint8_t> demap_symbols(std::span<const int> indices, const Constellation& c) {
    const int k = c.bits_per_symbol();
    std::vector<std::uint8_t> bits(indices.size() * k);
    for (std::size_t s = 0; s < indices.size(); ++s) {
        const std::uint32_t label = c.label(indices[s]);
        for (int j = 0; j < k; ++j) bits[s * k + j] = (label >> (k - 1 - j)) & 1u;
    }
    return bits;
}

double raised_cosine(double t, const PulseShape& p) {
    const double x = t / p.t_rep;
    const double a = p.rolloff;
    if (a == 0.0) return sinc(x);
    const double d = 1.0 - 4.0 * a * a * x * x;
    // removable singularity at |t| = T/(2a)
    if (std::abs(d) < 1e-13) return M_PI / 4.0 * sinc(1.0 / (2.0 * a));
    return sinc(x) * std::cos(M_PI * a * x) / d;
}

double nyquist_rate(const PulseShape& p) { return (1.0 + p.rolloff) / p.t_rep; }

int samples_per_symbol_for(double oversampling, const PulseShape& p) {
    if (!(oversampling >= 1.0)) throw InputError("oversampling factor must be >= 1");
    const double sps = oversampling * (1.0 + p.rolloff);
    return static_cast<int>(std::ceil(sps - 1e-9));
}

BasebandWaveform pulse_shape(std::span<const cplx> symbols, int samples_per_symbol, const PulseShape& p) {
    if (symbols.empty()) throw InputError("pulse_shape: empty symbol stream");
    if (samples_per_symbol < 1) throw InputError("pulse_shape: samples per symbol must be >= 1");
    if (p.span < 1) throw InputError("pulse_shape: span must be >= 1");
    if (!(p.t_rep > 0.0)) throw InputError("pulse_shape: T_rep must be positive");
    if (p.rolloff < 0.0 || p.rolloff > 1.0) throw InputError("pulse_shape: roll-off outside [0,1]");

    const std::size_t sps = static_cast<std::size_t>(samples_per_symbol);
    const std::size_t half = static_cast<std::size_t>(p.span) * sps;
    const double T = p.t_rep / static_cast<double>(sps);

    std::vector<double> kernel(2 * half + 1);
    for (std::size_t j = 0; j < kernel.size(); ++j)
        kernel[j] = raised_cosine((static_cast<double>(j) - static_cast<double>(half)) * T, p);

    BasebandWaveform w;
    w.samples.assign((symbols.size() - 1) * sps + kernel.size(), cplx{});
    for (std::size_t k = 0; k < symbols.size(); ++k) {
        const cplx s = symbols[k];
        cplx* out = w.samples.data() + k * sps;
        for (std::size_t j = 0; j < kernel.size(); ++j) out[j] += s * kernel[j];
    }
    w.sample_interval = T;
    w.samples_per_symbol = samples_per_symbol;
    w.oversampling = static_cast<double>(sps) / (1.0 + p.rolloff);
    w.bandwidth = M_PI * (1.0 + p.rolloff) / p.t_rep;
    w.delay = half;
    return w;
}

CVec sample_symbols(const BasebandWaveform& w, std::size_t n_symbols) {
    const std::size_t sps = static_cast<std::size_t>(w.samples_per_symbol);
    if (n_symbols > 0 && w.delay + (n_symbols - 1) * sps >= w.samples.size())
        throw InputError("sample_symbols: waveform too short for requested symbol count");
    CVec out(n_symbols);
    for (std::size_t k = 0; k < n_symbols; ++k) out[k] = w.samples[w.delay + k * sps];
    return out;
}

CVec unitary_dft(std::span<const cplx> x, DftDirection dir) {
    if (x.empty()) throw InputError("unitary_dft: empty input");
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    const std::vector<cplx> in(x.begin(), x.end());
    std::vector<cplx> out;
    if (dir == DftDirection::Forward)
        fft.fwd(out, in);
    else
        fft.inv(out, in);
    const double s = 1.0 / std::sqrt(static_cast<double>(x.size()));
    for (auto& v : out) v *= s;
    return out;
}

void OfdmConfig::validate() const {
    if (subcarriers < 1) throw InputError("OFDM: subcarrier count must be >= 1");
    if (cp_length <= 0 || cp_length >= subcarriers)
        throw InputError("OFDM: cyclic prefix must satisfy 0 < N_cp < K");
    if (!active.empty() && active.size() != static_cast<std::size_t>(subcarriers))
        throw InputError("OFDM: active-subcarrier mask length differs from K");
}

CVec ofdm_modulate(std::span<const cplx> freq_symbols, const OfdmConfig& cfg) {
    cfg.validate();
    const auto K = static_cast<std::size_t>(cfg.subcarriers);
    const auto cp = static_cast<std::size_t>(cfg.cp_length);
    if (freq_symbols.size() != K)
        throw InputError("ofdm_modulate: expected " + std::to_string(K) + " symbols, got " +
                         std::to_string(freq_symbols.size()));
    CVec masked(freq_symbols.begin(), freq_symbols.end());
    for (std::size_t nu = 0; nu < K; ++nu)
        if (!cfg.is_active(static_cast<int>(nu))) masked[nu] = 0.0;
    const CVec body = unitary_dft(masked, DftDirection::Inverse);
    CVec block(K + cp);
    std::copy(body.end() - static_cast<std::ptrdiff_t>(cp), body.end(), block.begin());
    std::copy(body.begin(), body.end(), block.begin() + static_cast<std::ptrdiff_t>(cp));
    return block;
}

CVec ofdm_demodulate(std::span<const cplx> block, const OfdmConfig& cfg) {
    cfg.validate();
    const auto K = static_cast<std::size_t>(cfg.subcarriers);
    const auto cp = static_cast<std::size_t>(cfg.cp_length);
    if (block.size() != K + cp) throw InputError("ofdm_demodulate: block length must be K + N_cp");
    return unitary_dft(block.subspan(cp), DftDirection::Forward);
}

} // namespace lmimo
