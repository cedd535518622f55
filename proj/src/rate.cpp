// SPDX-License-Identifier: Apache-2.0
#include "lmimo/rate.hpp"

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <numeric>
#include <string>

#include "lmimo/channel.hpp"
#include "lmimo/errors.hpp"
#include "lmimo/rng.hpp"

namespace lmimo {

double gamma_lambda(double sigma_q2, double sigma_r2) {
    if (!(sigma_r2 > 0.0)) throw DomainError("gamma_lambda: signal power must be > 0");
    if (!(sigma_q2 >= 0.0) || sigma_q2 > sigma_r2)
        throw DomainError("gamma_lambda: distortion must lie in [0, signal power]");
    return 1.0 - sigma_q2 / sigma_r2;
}

double gamma_for(const AdcModel& adc) {
    if (adc.bits == 0) return 1.0;
    if (adc.bits < 0 || adc.bits > 16) throw InputError("gamma_for: bit depth must be 0 (infinite) or 1..16");
    if (!(adc.loading > 0.0)) throw InputError("gamma_for: loading factor must be > 0");
    if (adc.kind == AdcKind::Modulo) {
        if (!(adc.zeta > 0.0 && adc.zeta <= 1.0)) throw InputError("gamma_for: zeta must be in (0, 1]");
        const double lambda = adc.zeta * adc.loading;
        return gamma_lambda(quantizer_distortion(UniformDensity{lambda}, ModuloConfig{lambda, adc.bits}), 1.0);
    }
    const Partition part = adc.law == ConventionalLaw::Companded ? companded_partition(adc.bits, 1.0)
                                                                 : uniform_partition(ModuloConfig{adc.loading, adc.bits});
    return gamma_lambda(quantizer_distortion(GaussianDensity{1.0}, part), 1.0);
}

void RateScenario::validate() const {
    if (n_antennas < 1 || n_users < 1) throw InputError("rate scenario: antenna and user counts must be >= 1");
    if (eta.size() != static_cast<std::size_t>(n_users)) throw InputError("rate scenario: eta length differs from user count");
    for (double e : eta)
        if (!(e > 0.0)) throw InputError("rate scenario: large-scale coefficients must be > 0");
    if (!(p_u > 0.0)) throw InputError("rate scenario: p_u must be > 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("rate scenario: gamma must lie in [0, 1]");
    if (combiner == CombinerKind::ZF && n_antennas <= n_users)
        throw DomainError("rate scenario: zero forcing needs more antennas than users");
}

std::vector<double> instantaneous_rates(const Eigen::MatrixXcd& H, double gamma, double p_u, CombinerKind kind) {
    const Eigen::MatrixXcd A = build_combiner(H, kind);
    const Eigen::MatrixXcd C = A.adjoint() * H;  // C(m, i) = <a_m, h_i>
    // diag(p H H^H + I), scaled by gamma (1 - gamma)
    const Eigen::VectorXd rq = gamma * (1.0 - gamma) * (p_u * H.rowwise().squaredNorm().array() + 1.0).matrix();
    const double g2 = gamma * gamma;
    std::vector<double> rates(static_cast<std::size_t>(H.cols()));
    for (Eigen::Index m = 0; m < H.cols(); ++m) {
        const double useful = p_u * g2 * std::norm(C(m, m));
        const double interf = p_u * g2 * (C.row(m).squaredNorm() - std::norm(C(m, m)));
        const double noise = g2 * A.col(m).squaredNorm();
        const double qnoise = A.col(m).cwiseAbs2().dot(rq);
        const double denom = interf + noise + qnoise;
        rates[static_cast<std::size_t>(m)] = denom > 0.0 ? std::log2(1.0 + useful / denom) : 0.0;
    }
    return rates;
}

double MonteCarloRates::sum_rate() const { return trials ? sum_rate_sum / static_cast<double>(trials) : 0.0; }

double MonteCarloRates::std_error() const {
    if (trials < 2) return 0.0;
    const double n = static_cast<double>(trials);
    const double mean = sum_rate_sum / n;
    const double var = std::max(0.0, (sum_rate_sq - n * mean * mean) / (n - 1.0));
    return std::sqrt(var / n);
}

std::vector<double> MonteCarloRates::per_user() const {
    std::vector<double> out(per_user_sum);
    if (trials)
        for (auto& v : out) v /= static_cast<double>(trials);
    return out;
}

void MonteCarloRates::merge(const MonteCarloRates& other) {
    if (per_user_sum.empty()) per_user_sum.assign(other.per_user_sum.size(), 0.0);
    if (other.per_user_sum.size() != per_user_sum.size()) throw InputError("MonteCarloRates::merge: user count mismatch");
    for (std::size_t m = 0; m < per_user_sum.size(); ++m) per_user_sum[m] += other.per_user_sum[m];
    sum_rate_sum += other.sum_rate_sum;
    sum_rate_sq += other.sum_rate_sq;
    trials += other.trials;
    resampled += other.resampled;
}

MonteCarloRates ergodic_rate_mc(const RateScenario& s, std::uint64_t seed, std::size_t first_trial,
                                std::size_t n_trials) {
    s.validate();
    MonteCarloRates out;
    out.per_user_sum.assign(static_cast<std::size_t>(s.n_users), 0.0);
    const PowerDelayProfile flat;
    for (std::size_t t = first_trial; t < first_trial + n_trials; ++t) {
        Rng rng = derive_rng(seed, t, "rate");
        std::vector<double> rates;
        for (int attempt = 0;; ++attempt) {
            const ChannelRealization ch = draw_small_scale(s.n_antennas, s.n_users, flat, rng, s.eta);
            try {
                rates = instantaneous_rates(ch.matrix(), s.gamma, s.p_u, s.combiner);
                break;
            } catch (const RankError&) {
                ++out.resampled;
                if (attempt > 100) throw;
            }
        }
        double sum = 0.0;
        for (std::size_t m = 0; m < rates.size(); ++m) {
            out.per_user_sum[m] += rates[m];
            sum += rates[m];
        }
        out.sum_rate_sum += sum;
        out.sum_rate_sq += sum * sum;
        ++out.trials;
    }
    return out;
}

std::vector<double> mrc_rate_approx(const RateScenario& s) {
    s.validate();
    const double p = s.p_u, g = s.gamma, N = s.n_antennas;
    const double total = std::accumulate(s.eta.begin(), s.eta.end(), 0.0);
    std::vector<double> r(s.eta.size());
    for (std::size_t m = 0; m < s.eta.size(); ++m) {
        const double em = s.eta[m];
        const double interf = p * g * (total - em) + p * (1.0 - g) * (total + em) + 1.0;
        r[m] = std::log2(1.0 + p * g * em * (N + 1.0) / interf);
    }
    return r;
}

double zf_interference(const RateScenario& s, double delta, int m) {
    const double N = s.n_antennas, M = s.n_users, p = s.p_u;
    const double c = delta / (N + M);
    double s1 = 0.0, s2 = 0.0;
    for (double e : s.eta) {
        s1 += e;
        s2 += e * e;
    }
    const double em = s.eta.at(static_cast<std::size_t>(m));
    double acc = 4.0 * em - 4.0 * c * em * (s1 + em) + N * em * c * c * (s2 + em * em);
    for (int i = 0; i < s.n_users; ++i) {
        if (i == m) continue;
        const double ei = s.eta[static_cast<std::size_t>(i)];
        acc += p * (4.0 * em * ei - em * ei * 4.0 * c * (s1 + em + ei) + N * em * ei * c * c * (s2 + em * em + ei * ei));
    }
    acc += 8.0 * p * em * em - p * em * em * 8.0 * c * (s1 + 2.0 * em) +
           p * em * em * c * c * ((N + 1.0) * s2 + (3.0 * N + 1.0) * em * em);
    return N * c * c * acc;
}

std::vector<double> zf_rate_approx(const RateScenario& s, double delta) {
    if (s.n_antennas <= s.n_users) throw DomainError("zf_rate_approx: need more antennas than users");
    s.validate();
    if (!(delta > 0.0 && delta < 1.0)) throw InputError("zf_rate_approx: delta must lie in (0, 1)");
    const double g = s.gamma, p = s.p_u;
    const double dof = static_cast<double>(s.n_antennas - s.n_users);
    std::vector<double> r(s.eta.size());
    for (int m = 0; m < s.n_users; ++m) {
        const double em = s.eta[static_cast<std::size_t>(m)];
        const double denom = g / (dof * em) + (1.0 - g) * zf_interference(s, delta, m);
        r[static_cast<std::size_t>(m)] = std::log2(1.0 + g * p / denom);
    }
    return r;
}

double calibrate_zf_delta(const std::vector<std::vector<RateScenario>>& groups, const std::vector<double>& mc_sum_rates) {
    if (groups.empty() || groups.size() != mc_sum_rates.size())
        throw InputError("calibrate_zf_delta: need one Monte-Carlo sum-rate per scenario group");
    for (const auto& g : groups)
        if (g.empty()) throw InputError("calibrate_zf_delta: empty scenario group");
    auto objective = [&](double delta) {
        double acc = 0.0;
        for (std::size_t t = 0; t < groups.size(); ++t) {
            double mean = 0.0;
            for (const auto& s : groups[t]) {
                const auto r = zf_rate_approx(s, delta);
                mean += std::accumulate(r.begin(), r.end(), 0.0);
            }
            const double e = mean / static_cast<double>(groups[t].size()) - mc_sum_rates[t];
            acc += e * e;
        }
        return acc;
    };
    const auto best = boost::math::tools::brent_find_minima(objective, 1e-6, 1.0 - 1e-6, 40);
    return best.first;
}

double calibrate_zf_delta(const std::vector<RateScenario>& scenarios, const std::vector<double>& mc_sum_rates) {
    std::vector<std::vector<RateScenario>> groups;
    for (const auto& s : scenarios) groups.push_back({s});
    return calibrate_zf_delta(groups, mc_sum_rates);
}

double energy_efficiency(double sum_rate, int bits, int n_antennas, const PowerModel& pm) {
    if (!(sum_rate >= 0.0)) throw InputError("energy_efficiency: sum-rate must be >= 0");
    if (bits < 1) throw InputError("energy_efficiency: bit depth must be >= 1");
    if (n_antennas < 1) throw InputError("energy_efficiency: antenna count must be >= 1");
    const double power = pm.c0 * n_antennas * std::ldexp(1.0, bits) + pm.c1;
    return pm.bandwidth * sum_rate / power;
}

} // namespace lmimo
