// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "lmimo/detection.hpp"
#include "lmimo/sqnr.hpp"

namespace lmimo {

/// 1 - sigma_q^2 / sigma_r^2.
double gamma_lambda(double sigma_q2, double sigma_r2);

struct AdcModel {
    AdcKind kind = AdcKind::Modulo;
    int bits = 0;  // 0 stands for infinite resolution
    double zeta = 0.1;
    // Peak-to-rms ratio of one received branch, so that lambda = zeta *
    // loading * sigma. sqrt(3) is the uniform-source value.
    double loading = 1.7320508075688772;
    ConventionalLaw law = ConventionalLaw::Companded;
};

/// AQNM gain from the quantizer distortion: uniform folded density for the
/// modulo ADC, unit Gaussian for the conventional one.
double gamma_for(const AdcModel& adc);

struct RateScenario {
    int n_antennas = 100;
    int n_users = 10;
    std::vector<double> eta;  // size n_users
    double p_u = 10.0;        // linear
    CombinerKind combiner = CombinerKind::MRC;
    double gamma = 1.0;

    void validate() const;
};

/// Per-user log2(1 + p gamma^2 |<a_m, h_m>|^2 / I_H) for one realization
/// (H is N x M including the large-scale gains).
std::vector<double> instantaneous_rates(const Eigen::MatrixXcd& H, double gamma, double p_u, CombinerKind kind);

struct MonteCarloRates {
    std::vector<double> per_user_sum;
    double sum_rate_sum = 0.0;
    double sum_rate_sq = 0.0;
    std::size_t trials = 0;
    std::size_t resampled = 0;  // ZF draws rejected as ill-conditioned

    double sum_rate() const;
    double std_error() const;
    std::vector<double> per_user() const;
    /// Appends `other`; callers merge in trial order.
    void merge(const MonteCarloRates& other);
};

/// Averages instantaneous rates over fresh Rayleigh draws with fixed eta.
/// Trial t uses derive_rng(seed, t, "rate"), so disjoint trial ranges merge
/// to the same totals as one run.
MonteCarloRates ergodic_rate_mc(const RateScenario& s, std::uint64_t seed, std::size_t first_trial,
                                std::size_t n_trials);

std::vector<double> mrc_rate_approx(const RateScenario& s);
std::vector<double> zf_rate_approx(const RateScenario& s, double delta);
/// Interference term of the ZF approximation for user m.
double zf_interference(const RateScenario& s, double delta, int m);

/// delta in (0, 1) minimizing sum_t (sum-rate approx_t(delta) - mc_t)^2.
double calibrate_zf_delta(const std::vector<RateScenario>& scenarios, const std::vector<double>& mc_sum_rates);
/// Same fit where target t is the mean approximation over groups[t], for
/// scenarios that differ only in their large-scale draws.
double calibrate_zf_delta(const std::vector<std::vector<RateScenario>>& groups, const std::vector<double>& mc_sum_rates);

struct PowerModel {
    double c0 = 1e-4;        // W per antenna per level
    double c1 = 0.02;        // W
    double bandwidth = 1e6;  // Hz
};

/// bandwidth * R / (c0 N 2^b + c1), bit/J.
double energy_efficiency(double sum_rate, int bits, int n_antennas, const PowerModel& pm = {});

} // namespace lmimo
