// SPDX-License-Identifier: Apache-2.0
#include "lmimo/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lmimo/errors.hpp"

namespace lmimo {

namespace {

constexpr double kE = 2.71828182845904523536;

bool is_multiple(double x, double unit) {
    const double r = x / unit;
    return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r));
}

double span_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

} // namespace

void RecoveryConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("recovery: lambda must be > 0");
    if (!(beta > 0.0) || !is_multiple(beta, 2.0 * lambda))
        throw InputError("recovery: beta must be a positive multiple of 2 lambda");
    if (!(sample_interval > 0.0)) throw InputError("recovery: sample interval must be > 0");
    if (!(bandwidth > 0.0)) throw InputError("recovery: bandwidth must be > 0");
    if (noise_exponent < 1) throw InputError("recovery: noise exponent must be a positive integer");
    if (order && *order < 1) throw InputError("recovery: order override must be >= 1");
}

double RecoveryConfig::omega_te() const noexcept { return sample_interval * bandwidth * kE; }

std::size_t RecoveryConfig::j_lambda() const noexcept {
    return static_cast<std::size_t>(std::ceil(6.0 * beta / lambda - 1e-9));
}

double beta_for(double bound, double lambda) {
    if (!(lambda > 0.0)) throw InputError("beta_for: lambda must be > 0");
    const double n = std::max(1.0, std::ceil(bound / (2.0 * lambda) - 1e-9));
    return 2.0 * lambda * n;
}

std::vector<double> finite_diff(std::span<const double> x, int order) {
    if (order < 1) throw InputError("finite_diff: order must be >= 1");
    if (x.size() <= static_cast<std::size_t>(order))
        throw InputError("finite_diff: input length must exceed the order");
    std::vector<double> d(x.begin(), x.end());
    for (int l = 0; l < order; ++l) {
        for (std::size_t k = 0; k + 1 < d.size(); ++k) d[k] = d[k + 1] - d[k];
        d.pop_back();
    }
    return d;
}

std::vector<double> anti_diff(std::span<const double> x) {
    std::vector<double> s(x.size() + 1, 0.0);
    std::partial_sum(x.begin(), x.end(), s.begin() + 1);
    return s;
}

namespace {

int order_from(double numerator, const RecoveryConfig& cfg) {
    const double te = cfg.omega_te();
    if (!(te < 1.0))
        throw ConditionError("recovery: T * Omega * e = " + std::to_string(te) + " is not below 1");
    if (cfg.beta < cfg.lambda) throw InputError("recovery: beta must be >= lambda");
    const double ratio = numerator / std::log(te);
    return std::max(1, static_cast<int>(std::ceil(ratio - 1e-9)));
}

} // namespace

int compute_order(const RecoveryConfig& cfg) {
    return order_from(std::log(cfg.lambda) - std::log(cfg.beta), cfg);
}

// The printed rule carries a leading minus that would make L negative; the
// magnitude is used.
int compute_order_noise_aware(const RecoveryConfig& cfg) {
    return order_from(std::log(cfg.lambda) - std::log(cfg.beta) - 1.0, cfg);
}

ConditionReport check_conditions(const RecoveryConfig& cfg, double noise_bound) {
    constexpr double slack = 1.0 + 1e-12;
    ConditionReport r;
    r.omega_te = cfg.omega_te();
    r.max_interval_exact = 1.0 / (2.0 * cfg.bandwidth * kE);
    r.sampling_ok = cfg.sample_interval <= r.max_interval_exact * slack;
    const double alpha = static_cast<double>(std::max(1, cfg.noise_exponent));
    r.tolerable_noise = cfg.lambda / 4.0 * std::pow(2.0 * cfg.rho(), -1.0 / alpha);
    r.noise_ok = noise_bound <= r.tolerable_noise * slack;
    r.max_interval_noisy = 1.0 / (std::pow(2.0, alpha) * cfg.bandwidth * kE);
    r.noisy_interval_ok = cfg.sample_interval <= r.max_interval_noisy * slack;
    return r;
}

namespace {

BranchRecovery unfold_impl(std::span<const double> q, const RecoveryConfig& cfg, int order, double noise_bound) {
    const std::size_t L = static_cast<std::size_t>(order);
    const std::size_t J = cfg.j_lambda();
    if (q.size() <= L + J + 1)
        throw InputError("recover: frame of " + std::to_string(q.size()) + " samples is too short (need > " +
                         std::to_string(L + J + 1) + ")");
    const double unit = 2.0 * cfg.lambda;

    // Residue differences are carried as integer counts of 2 lambda, so the
    // repeated summation is exact.
    const std::vector<double> dq = finite_diff(q, order);
    std::vector<double> s(dq.size());
    double max_diff = 0.0;
    for (std::size_t k = 0; k < dq.size(); ++k) {
        s[k] = std::round((modulo_fold(dq[k], cfg.lambda) - dq[k]) / unit);
        max_diff = std::max(max_diff, std::abs(dq[k]));
    }
    for (std::size_t l = 0; l + 1 < L; ++l) {
        s = anti_diff(s);
        // rounding onto 2 lambda Z, in units of 2 lambda
        for (auto& v : s) v = std::ceil(std::floor(2.0 * v) / 2.0);
        const std::vector<double> ss = anti_diff(s);
        const double kappa = std::floor((ss[0] - ss[J]) * unit / (12.0 * cfg.beta) + 0.5);
        for (auto& v : s) v += kappa;
    }
    const std::vector<double> eps = anti_diff(s);

    BranchRecovery out;
    out.order = order;
    out.max_diff = max_diff;
    out.samples.resize(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) out.samples[k] = q[k] + unit * eps[k];
    out.within_bound = std::all_of(out.samples.begin(), out.samples.end(), [](double v) { return std::isfinite(v); }) &&
                       span_of(out.samples) <= 2.0 * cfg.beta + 2.0 * noise_bound + 1e-9 * cfg.beta;
    return out;
}

} // namespace

BranchRecovery unfold_branch(std::span<const double> q, const RecoveryConfig& cfg, int order) {
    cfg.validate();
    if (order < 1) throw InputError("recover: order must be >= 1");
    return unfold_impl(q, cfg, order, 0.0);
}

AnchorResult anchor_constant(std::span<const double> x, double lambda, const AnchorSpec& spec) {
    if (!(lambda > 0.0)) throw InputError("anchor_constant: lambda must be > 0");
    const double unit = 2.0 * lambda;
    AnchorResult r;
    r.samples.assign(x.begin(), x.end());
    switch (spec.mode) {
    case AnchorMode::None:
        return r;
    case AnchorMode::ZeroMean: {
        if (x.empty()) throw InputError("anchor_constant: empty input");
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
        r.v = std::llround(mean / unit);
        break;
    }
    case AnchorMode::KnownSample: {
        if (spec.index >= x.size()) throw InputError("anchor_constant: reference index out of range");
        const double offset = x[spec.index] - spec.value;
        r.v = std::llround(offset / unit);
        const double tol = spec.tolerance < 0.0 ? lambda / 2.0 : spec.tolerance;
        if (std::abs(offset - unit * static_cast<double>(r.v)) > tol)
            throw AnchoringError("anchor_constant: reference value is inconsistent with the recovered samples");
        break;
    }
    }
    const double shift = unit * static_cast<double>(r.v);
    for (auto& v : r.samples) v -= shift;
    return r;
}

RecoveryResult recover(const FoldedFrame& f, const RecoveryConfig& cfg) {
    cfg.validate();
    f.validate();
    if (std::abs(f.cfg.lambda - cfg.lambda) > 1e-12 * cfg.lambda)
        throw InputError("recover: frame lambda differs from recovery lambda");

    RecoveryResult res;
    const double noise_bound = f.quantized ? f.cfg.step() / 2.0 : 0.0;
    res.conditions = check_conditions(cfg, noise_bound);
    if (!res.conditions.sampling_ok) res.warnings.emplace_back("sampling interval exceeds 1/(2 Omega e)");
    if (f.quantized && !(res.conditions.noise_ok && res.conditions.noisy_interval_ok))
        res.warnings.emplace_back("bounded-noise recovery condition not met");

    if (cfg.order) {
        res.nominal_order = *cfg.order;
        res.order_overridden = true;
    } else {
        const bool noisy = cfg.order_rule == OrderRule::NoiseAware ||
                           (cfg.order_rule == OrderRule::Auto && f.quantized);
        res.nominal_order = noisy ? compute_order_noise_aware(cfg) : compute_order(cfg);
    }

    auto attempt = [&](int L) {
        return std::pair{unfold_impl(f.i, cfg, L, noise_bound), unfold_impl(f.q, cfg, L, noise_bound)};
    };
    auto [bi, bq] = attempt(res.nominal_order);
    res.order = res.nominal_order;
    if (!(bi.within_bound && bq.within_bound) && cfg.order_search && !cfg.order) {
        const int top = std::max(res.nominal_order + 2, 6);
        for (int L = 1; L <= top; ++L) {
            if (L == res.nominal_order) continue;
            if (f.size() <= static_cast<std::size_t>(L) + cfg.j_lambda() + 1) break;
            auto [ci, cq] = attempt(L);
            if (ci.within_bound && cq.within_bound) {
                bi = std::move(ci);
                bq = std::move(cq);
                res.order = L;
                res.order_fallback = true;
                break;
            }
        }
    }
    if (!(bi.within_bound && bq.within_bound))
        res.warnings.emplace_back("recovered samples exceed the beta bound at every tried order");

    AnchorSpec qspec = cfg.anchor;
    qspec.value = cfg.anchor.value_q;
    AnchorResult ai = anchor_constant(bi.samples, cfg.lambda, cfg.anchor);
    AnchorResult aq = anchor_constant(bq.samples, cfg.lambda, qspec);
    res.i = std::move(ai.samples);
    res.q = std::move(aq.samples);
    res.v_i = ai.v;
    res.v_q = aq.v;
    res.max_diff = std::max(bi.max_diff, bq.max_diff);
    return res;
}

} // namespace lmimo
