// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <vector>

#include "lmimo/rng.hpp"
#include "lmimo/signal.hpp"

namespace lmimo {

struct CellGeometry {
    double radius = 1000.0;  // m, circumradius of the flat-top hexagon
    double d_min = 100.0;    // m
    double pathloss_exponent = 3.8;
    double shadowing_db = 8.0;

    void validate() const;
};

struct LargeScale {
    std::vector<double> eta;
    std::vector<double> x, y, distance;
    std::vector<double> shadowing_db;
};

bool in_hexagon(double x, double y, double radius) noexcept;
/// eta = z * (d / d_min)^-v with z = 10^(shadowing_db / 10).
double large_scale_coefficient(double distance, double shadowing_db, const CellGeometry& geom);
LargeScale draw_large_scale(const CellGeometry& geom, int n_users, Rng& rng);

class PowerDelayProfile {
public:
    PowerDelayProfile() : taps_{1.0} {}
    /// Normalizes to unit sum; every power must be > 0.
    explicit PowerDelayProfile(std::vector<double> powers);
    static PowerDelayProfile uniform(int n_taps);

    int size() const noexcept { return static_cast<int>(taps_.size()); }
    double operator[](int d) const { return taps_.at(static_cast<std::size_t>(d)); }
    const std::vector<double>& taps() const noexcept { return taps_; }

private:
    std::vector<double> taps_;
};

class ChannelRealization {
public:
    ChannelRealization(int n_antennas, int n_users, int n_taps, std::vector<double> eta);

    int n_antennas() const noexcept { return n_; }
    int n_users() const noexcept { return m_; }
    int n_taps() const noexcept { return d_; }
    const std::vector<double>& eta() const noexcept { return eta_; }

    cplx& g(int n, int m, int d) { return g_[index(n, m, d)]; }
    cplx g(int n, int m, int d) const { return g_[index(n, m, d)]; }
    /// Composite tap sqrt(eta_m) g.
    cplx h(int n, int m, int d) const { return std::sqrt(eta_[static_cast<std::size_t>(m)]) * g(n, m, d); }

    /// N x M composite matrix of one tap (tap 0 is the flat channel).
    Eigen::MatrixXcd matrix(int d = 0) const;

private:
    std::size_t index(int n, int m, int d) const noexcept {
        return (static_cast<std::size_t>(n) * m_ + static_cast<std::size_t>(m)) * d_ + static_cast<std::size_t>(d);
    }
    int n_, m_, d_;
    std::vector<double> eta_;
    std::vector<cplx> g_;
};

/// g_{n,m}[d] ~ CN(0, p[d]), drawn in (n, m, d) order. Empty eta means all ones.
ChannelRealization draw_small_scale(int n_antennas, int n_users, const PowerDelayProfile& pdp, Rng& rng,
                                    std::vector<double> eta = {});

struct NoiseSpec {
    enum class Kind { None, White, Bandlimited };
    Kind kind = Kind::White;
    double variance = 1.0;
    // Bandlimited noise is white symbol-rate noise shaped by this pulse, so
    // it occupies the same band as the signal.
    PulseShape pulse{};
};

/// Per-antenna sum over users of sqrt(p_u) (h_{n,m} * x_m) plus noise. Taps
/// are `tap_spacing` samples apart; output length is input length +
/// (D - 1) * tap_spacing.
std::vector<BasebandWaveform> apply_channel(std::span<const BasebandWaveform> users, const ChannelRealization& ch,
                                            double p_u, int tap_spacing, const NoiseSpec& noise, Rng* rng);

/// Per-subcarrier N x M matrices sqrt(eta_m) * F g_pad, with F the unitary DFT.
std::vector<Eigen::MatrixXcd> channel_freq_response(const ChannelRealization& ch, int n_subcarriers);

/// CSV with header `n,m,d,re,im,eta`.
void write_channel_csv(std::ostream& os, const ChannelRealization& ch);

} // namespace lmimo
