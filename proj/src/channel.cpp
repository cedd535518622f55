// SPDX-License-Identifier: Apache-2.0
#include "lmimo/channel.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "lmimo/errors.hpp"

namespace lmimo {

void CellGeometry::validate() const {
    if (!(d_min > 0.0 && d_min < radius)) throw InputError("cell geometry: need 0 < d_min < radius");
    if (!(pathloss_exponent > 2.0)) throw InputError("cell geometry: path-loss exponent must exceed 2");
    if (!(shadowing_db >= 0.0)) throw InputError("cell geometry: shadowing std must be >= 0 dB");
}

bool in_hexagon(double x, double y, double radius) noexcept {
    constexpr double s3 = 1.7320508075688772;
    const double ax = std::abs(x), ay = std::abs(y);
    return ay <= 0.5 * s3 * radius && s3 * ax + ay <= s3 * radius;
}

double large_scale_coefficient(double distance, double shadowing_db, const CellGeometry& geom) {
    const double z = std::pow(10.0, shadowing_db / 10.0);
    return z * std::pow(distance / geom.d_min, -geom.pathloss_exponent);
}

LargeScale draw_large_scale(const CellGeometry& geom, int n_users, Rng& rng) {
    geom.validate();
    if (n_users < 1) throw InputError("draw_large_scale: need at least one user");
    const double half_h = 0.5 * std::sqrt(3.0) * geom.radius;
    LargeScale ls;
    for (int m = 0; m < n_users; ++m) {
        double x = 0.0, y = 0.0, d = 0.0;
        do {
            x = (2.0 * uniform01(rng) - 1.0) * geom.radius;
            y = (2.0 * uniform01(rng) - 1.0) * half_h;
            d = std::hypot(x, y);
        } while (!in_hexagon(x, y, geom.radius) || d < geom.d_min);
        const double sh = geom.shadowing_db * standard_normal(rng);
        ls.x.push_back(x);
        ls.y.push_back(y);
        ls.distance.push_back(d);
        ls.shadowing_db.push_back(sh);
        ls.eta.push_back(large_scale_coefficient(d, sh, geom));
    }
    return ls;
}

PowerDelayProfile::PowerDelayProfile(std::vector<double> powers) : taps_(std::move(powers)) {
    if (taps_.empty()) throw InputError("power delay profile: need at least one tap");
    for (double p : taps_)
        if (!(p > 0.0) || !std::isfinite(p)) throw InputError("power delay profile: tap powers must be > 0");
    const double sum = std::accumulate(taps_.begin(), taps_.end(), 0.0);
    for (auto& p : taps_) p /= sum;
}

PowerDelayProfile PowerDelayProfile::uniform(int n_taps) {
    if (n_taps < 1) throw InputError("power delay profile: need at least one tap");
    return PowerDelayProfile(std::vector<double>(static_cast<std::size_t>(n_taps), 1.0));
}

ChannelRealization::ChannelRealization(int n_antennas, int n_users, int n_taps, std::vector<double> eta)
    : n_(n_antennas), m_(n_users), d_(n_taps), eta_(std::move(eta)) {
    if (n_ < 1 || m_ < 1 || d_ < 1) throw InputError("channel: dimensions must be >= 1");
    if (eta_.empty()) eta_.assign(static_cast<std::size_t>(m_), 1.0);
    if (eta_.size() != static_cast<std::size_t>(m_)) throw InputError("channel: eta length differs from user count");
    for (double e : eta_)
        if (!(e > 0.0)) throw InputError("channel: large-scale coefficients must be > 0");
    g_.assign(static_cast<std::size_t>(n_) * m_ * d_, cplx{});
}

Eigen::MatrixXcd ChannelRealization::matrix(int d) const {
    if (d < 0 || d >= d_) throw InputError("channel: tap index out of range");
    Eigen::MatrixXcd H(n_, m_);
    for (int n = 0; n < n_; ++n)
        for (int m = 0; m < m_; ++m) H(n, m) = h(n, m, d);
    return H;
}

ChannelRealization draw_small_scale(int n_antennas, int n_users, const PowerDelayProfile& pdp, Rng& rng,
                                    std::vector<double> eta) {
    ChannelRealization ch(n_antennas, n_users, pdp.size(), std::move(eta));
    for (int n = 0; n < n_antennas; ++n)
        for (int m = 0; m < n_users; ++m)
            for (int d = 0; d < pdp.size(); ++d) ch.g(n, m, d) = complex_normal(rng, pdp[d]);
    return ch;
}

namespace {

CVec bandlimited_noise(std::size_t length, const BasebandWaveform& ref, const NoiseSpec& spec, Rng& rng) {
    const std::size_t sps = static_cast<std::size_t>(ref.samples_per_symbol);
    const std::size_t n_sym = length / sps + 2 * static_cast<std::size_t>(spec.pulse.span) + 2;
    CVec white(n_sym);
    for (auto& v : white) v = complex_normal(rng, 1.0);
    const BasebandWaveform shaped = pulse_shape(white, static_cast<int>(sps), spec.pulse);
    // average power of the shaped process over one symbol period
    double energy = 0.0;
    for (std::size_t j = 0; j <= 2 * static_cast<std::size_t>(spec.pulse.span) * sps; ++j) {
        const double t = (static_cast<double>(j) - static_cast<double>(spec.pulse.span * sps)) *
                         spec.pulse.t_rep / static_cast<double>(sps);
        const double h = raised_cosine(t, spec.pulse);
        energy += h * h;
    }
    const double scale = std::sqrt(spec.variance * static_cast<double>(sps) / energy);
    CVec out(length);
    const std::size_t start = shaped.delay;
    for (std::size_t k = 0; k < length; ++k) out[k] = scale * shaped.samples[start + k];
    return out;
}

} // namespace

std::vector<BasebandWaveform> apply_channel(std::span<const BasebandWaveform> users, const ChannelRealization& ch,
                                            double p_u, int tap_spacing, const NoiseSpec& noise, Rng* rng) {
    if (users.size() != static_cast<std::size_t>(ch.n_users()))
        throw InputError("apply_channel: " + std::to_string(users.size()) + " user waveforms for a " +
                         std::to_string(ch.n_users()) + "-user channel");
    if (!(p_u >= 0.0)) throw InputError("apply_channel: transmit power must be >= 0");
    if (tap_spacing < 1) throw InputError("apply_channel: tap spacing must be >= 1");
    const std::size_t len = users.front().samples.size();
    for (const auto& u : users)
        if (u.samples.size() != len || u.sample_interval != users.front().sample_interval)
            throw InputError("apply_channel: user waveforms differ in length or rate");
    if (noise.kind != NoiseSpec::Kind::None && rng == nullptr)
        throw InputError("apply_channel: noise requested without an RNG stream");

    const std::size_t spacing = static_cast<std::size_t>(tap_spacing);
    const std::size_t out_len = len + static_cast<std::size_t>(ch.n_taps() - 1) * spacing;
    const double amp = std::sqrt(p_u);
    std::vector<BasebandWaveform> out(static_cast<std::size_t>(ch.n_antennas()));
    for (int n = 0; n < ch.n_antennas(); ++n) {
        BasebandWaveform& w = out[static_cast<std::size_t>(n)];
        w = users.front();
        w.samples.assign(out_len, cplx{});
        for (int m = 0; m < ch.n_users(); ++m) {
            const CVec& x = users[static_cast<std::size_t>(m)].samples;
            for (int d = 0; d < ch.n_taps(); ++d) {
                const cplx tap = amp * ch.h(n, m, d);
                cplx* dst = w.samples.data() + static_cast<std::size_t>(d) * spacing;
                for (std::size_t k = 0; k < len; ++k) dst[k] += tap * x[k];
            }
        }
        if (noise.kind == NoiseSpec::Kind::White) {
            for (auto& v : w.samples) v += complex_normal(*rng, noise.variance);
        } else if (noise.kind == NoiseSpec::Kind::Bandlimited) {
            const CVec nz = bandlimited_noise(out_len, w, noise, *rng);
            for (std::size_t k = 0; k < out_len; ++k) w.samples[k] += nz[k];
        }
    }
    return out;
}

std::vector<Eigen::MatrixXcd> channel_freq_response(const ChannelRealization& ch, int n_subcarriers) {
    if (n_subcarriers < ch.n_taps())
        throw InputError("channel_freq_response: tap count exceeds subcarrier count");
    const std::size_t K = static_cast<std::size_t>(n_subcarriers);
    std::vector<Eigen::MatrixXcd> H(K, Eigen::MatrixXcd(ch.n_antennas(), ch.n_users()));
    CVec padded(K);
    for (int n = 0; n < ch.n_antennas(); ++n) {
        for (int m = 0; m < ch.n_users(); ++m) {
            std::fill(padded.begin(), padded.end(), cplx{});
            for (int d = 0; d < ch.n_taps(); ++d) padded[static_cast<std::size_t>(d)] = ch.g(n, m, d);
            const CVec ghat = unitary_dft(padded, DftDirection::Forward);
            const double se = std::sqrt(ch.eta()[static_cast<std::size_t>(m)]);
            for (std::size_t nu = 0; nu < K; ++nu) H[nu](n, m) = se * ghat[nu];
        }
    }
    return H;
}

void write_channel_csv(std::ostream& os, const ChannelRealization& ch) {
    os << "n,m,d,re,im,eta\n";
    os.precision(17);
    for (int n = 0; n < ch.n_antennas(); ++n)
        for (int m = 0; m < ch.n_users(); ++m)
            for (int d = 0; d < ch.n_taps(); ++d) {
                const cplx g = ch.g(n, m, d);
                os << n << ',' << m << ',' << d << ',' << g.real() << ',' << g.imag() << ','
                   << ch.eta()[static_cast<std::size_t>(m)] << '\n';
            }
}

} // namespace lmimo
