// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmimo/modulo.hpp"

namespace lmimo {

enum class OrderRule {
    Auto,        // NoiseAware for quantized frames, Algorithm otherwise
    Algorithm,   // ceil((log lambda - log beta) / log(T Omega e))
    NoiseAware,  // ceil((log lambda - log beta - 1) / log(T Omega e))
};

enum class AnchorMode { None, ZeroMean, KnownSample };

struct AnchorSpec {
    AnchorMode mode = AnchorMode::ZeroMean;
    std::size_t index = 0;  // known-sample reference
    double value = 0.0;
    double value_q = 0.0;  // Q-branch reference used by recover()
    double tolerance = -1.0;  // max |offset - 2 lambda n|; negative means lambda / 2
};

struct RecoveryConfig {
    double lambda = 1.0;
    double beta = 2.0;             // must lie in 2 lambda Z, >= ||r||_inf
    double sample_interval = 1.0;  // T, seconds
    double bandwidth = 1.0;        // Omega, rad/s
    std::optional<int> order;      // used verbatim when set
    int noise_exponent = 1;
    OrderRule order_rule = OrderRule::Auto;
    // When the output spans more than the beta bound allows, retry other
    // orders. Off when `order` is set.
    bool order_search = true;
    AnchorSpec anchor;

    void validate() const;
    double omega_te() const noexcept;
    double rho() const noexcept { return beta / lambda; }
    /// Index separation used by the constant estimator, ceil(6 beta / lambda).
    std::size_t j_lambda() const noexcept;
};

/// Smallest positive element of 2 lambda Z that is >= bound.
double beta_for(double bound, double lambda);

std::vector<double> finite_diff(std::span<const double> x, int order);
/// Cumulative sum with a leading zero; output is one longer than x.
std::vector<double> anti_diff(std::span<const double> x);

int compute_order(const RecoveryConfig& cfg);
int compute_order_noise_aware(const RecoveryConfig& cfg);

struct ConditionReport {
    double omega_te = 0.0;
    bool sampling_ok = false;
    double max_interval_exact = 0.0;
    bool noise_ok = false;
    double tolerable_noise = 0.0;
    bool noisy_interval_ok = false;
    double max_interval_noisy = 0.0;
};

ConditionReport check_conditions(const RecoveryConfig& cfg, double noise_bound);

struct BranchRecovery {
    std::vector<double> samples;
    int order = 0;
    long long offset = 0;  // v, in multiples of 2 lambda, removed by anchoring
    bool within_bound = true;
    double max_diff = 0.0;  // max |Delta^L q| at the applied order
};

/// Unfolds one branch at a fixed order. No anchoring.
BranchRecovery unfold_branch(std::span<const double> q, const RecoveryConfig& cfg, int order);

struct AnchorResult {
    std::vector<double> samples;
    long long v = 0;
};

AnchorResult anchor_constant(std::span<const double> x, double lambda, const AnchorSpec& spec);

struct RecoveryResult {
    std::vector<double> i;
    std::vector<double> q;
    int order = 0;          // applied
    int nominal_order = 0;  // from the order rule or the override
    bool order_overridden = false;
    bool order_fallback = false;
    long long v_i = 0;
    long long v_q = 0;
    double max_diff = 0.0;
    ConditionReport conditions;
    std::vector<std::string> warnings;
};

/// Per-branch unfolding followed by constant anchoring.
RecoveryResult recover(const FoldedFrame& f, const RecoveryConfig& cfg);

} // namespace lmimo
