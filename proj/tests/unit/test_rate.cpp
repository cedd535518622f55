// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "lmimo/channel.hpp"
#include "lmimo/errors.hpp"
#include "lmimo/rate.hpp"
#include "lmimo/rng.hpp"

using namespace lmimo;

namespace {

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

RateScenario scenario(int n, int m, double p, CombinerKind k, double gamma, std::vector<double> eta = {}) {
    RateScenario s;
    s.n_antennas = n;
    s.n_users = m;
    s.p_u = p;
    s.combiner = k;
    s.gamma = gamma;
    s.eta = eta.empty() ? std::vector<double>(static_cast<std::size_t>(m), 1.0) : std::move(eta);
    return s;
}

std::vector<double> random_eta(std::uint64_t seed, int m) {
    Rng rng = derive_rng(seed, 0, "eta");
    std::vector<double> eta(static_cast<std::size_t>(m));
    for (auto& e : eta) e = 0.1 + 0.9 * uniform01(rng);
    return eta;
}

} // namespace

TEST_SUITE("rate") {

TEST_CASE("gamma definition") {
    CHECK(gamma_lambda(0.0, 2.0) == 1.0);
    CHECK(gamma_lambda(2.0, 2.0) == 0.0);
    CHECK(gamma_lambda(0.5, 2.0) == 0.75);
    CHECK_THROWS_AS(gamma_lambda(3.0, 2.0), DomainError);
    CHECK_THROWS_AS(gamma_lambda(-1.0, 2.0), DomainError);
}

TEST_CASE("modulo gamma follows the uniform folded density") {
    for (int b : {1, 2, 3, 6}) {
        for (double zeta : {0.1, 0.05}) {
            AdcModel adc;
            adc.bits = b;
            adc.zeta = zeta;
            const double lambda = zeta * adc.loading;
            const double oracle = 1.0 - quantizer_distortion(UniformDensity{lambda}, ModuloConfig{lambda, b});
            CHECK(gamma_for(adc) == doctest::Approx(oracle).epsilon(1e-14));
            CHECK(gamma_for(adc) == doctest::Approx(1.0 - zeta * zeta * std::pow(4.0, -b)).epsilon(1e-12));
        }
    }
    AdcModel inf;
    inf.bits = 0;
    CHECK(gamma_for(inf) == 1.0);
    AdcModel conv;
    conv.kind = AdcKind::Conventional;
    conv.bits = 3;
    CHECK(gamma_for(conv) > 0.9);
    CHECK(gamma_for(conv) < 1.0);
}

TEST_CASE("single-user MRC Monte Carlo at gamma 1 is the classical rate") {
    const RateScenario s = scenario(16, 1, 10.0, CombinerKind::MRC, 1.0, {0.3});
    const MonteCarloRates mc = ergodic_rate_mc(s, 42, 0, 100);
    double ref = 0.0;
    for (std::size_t t = 0; t < 100; ++t) {
        Rng rng = derive_rng(42, t, "rate");
        const ChannelRealization ch = draw_small_scale(16, 1, PowerDelayProfile{}, rng, {0.3});
        ref += std::log2(1.0 + 10.0 * ch.matrix().squaredNorm());
    }
    CHECK(mc.sum_rate() == doctest::Approx(ref / 100.0).epsilon(1e-12));
}

TEST_CASE("split trial ranges merge to the same totals") {
    const RateScenario s = scenario(20, 4, 10.0, CombinerKind::ZF, 0.9, random_eta(1, 4));
    const MonteCarloRates whole = ergodic_rate_mc(s, 7, 0, 2);
    MonteCarloRates parts = ergodic_rate_mc(s, 7, 0, 1);
    parts.merge(ergodic_rate_mc(s, 7, 1, 1));
    CHECK(whole.sum_rate_sum == parts.sum_rate_sum);
    CHECK(whole.per_user_sum == parts.per_user_sum);
    CHECK(whole.trials == parts.trials);
}

TEST_CASE("gamma 1 collapse across ADC parameterizations") {
    AdcModel mod, conv;
    mod.bits = 0;
    conv.kind = AdcKind::Conventional;
    conv.bits = 0;
    RateScenario a = scenario(50, 10, 10.0, CombinerKind::MRC, gamma_for(mod), random_eta(2, 10));
    RateScenario b = a;
    b.gamma = gamma_for(conv);
    CHECK(ergodic_rate_mc(a, 3, 0, 20).sum_rate_sum == ergodic_rate_mc(b, 3, 0, 20).sum_rate_sum);
}

TEST_CASE("MRC approximation examples") {
    const auto r = mrc_rate_approx(scenario(99, 1, 10.0, CombinerKind::MRC, 1.0));
    CHECK(r[0] == doctest::Approx(std::log2(1001.0)).epsilon(1e-14));
    CHECK(r[0] == doctest::Approx(9.967).epsilon(1e-4));
    for (double v : mrc_rate_approx(scenario(50, 5, 10.0, CombinerKind::MRC, 0.0, random_eta(3, 5)))) CHECK(v == 0.0);
}

TEST_CASE("MRC approximation tracks Monte Carlo") {
    AdcModel adc;
    adc.bits = 2;
    const RateScenario s = scenario(200, 10, 10.0, CombinerKind::MRC, gamma_for(adc), random_eta(4, 10));
    const double mc = ergodic_rate_mc(s, 5, 0, 2000).sum_rate();
    const double ap = total(mrc_rate_approx(s));
    CHECK(std::abs(ap - mc) / mc <= 0.05);
}

TEST_CASE("ZF approximation examples") {
    const RateScenario s = scenario(40, 4, 10.0, CombinerKind::ZF, 1.0, {0.5, 1.0, 0.2, 0.9});
    const auto r = zf_rate_approx(s, 0.5);
    for (int m = 0; m < 4; ++m) CHECK(r[m] == doctest::Approx(std::log2(1.0 + 10.0 * 36.0 * s.eta[m])).epsilon(1e-14));

    const auto sym = zf_rate_approx(scenario(40, 6, 10.0, CombinerKind::ZF, 0.8), 0.3);
    for (double v : sym) CHECK(v == doctest::Approx(sym[0]).epsilon(1e-14));

    CHECK_THROWS_AS(zf_rate_approx(scenario(4, 4, 10.0, CombinerKind::MRC, 1.0), 0.5), DomainError);
    CHECK_THROWS_AS(zf_rate_approx(s, 1.0), InputError);
    CHECK_THROWS_AS(zf_rate_approx(s, 0.0), InputError);
}

TEST_CASE("ZF approximation with calibrated delta tracks Monte Carlo") {
    AdcModel adc;
    adc.bits = 3;
    const RateScenario s = scenario(100, 10, 10.0, CombinerKind::ZF, gamma_for(adc), random_eta(6, 10));
    const double mc = ergodic_rate_mc(s, 8, 0, 500).sum_rate();
    const double delta = calibrate_zf_delta(std::vector<RateScenario>{s}, {mc});
    CHECK(delta > 0.0);
    CHECK(delta < 1.0);
    const double ap = total(zf_rate_approx(s, delta));
    CHECK(std::abs(ap - mc) / mc <= 0.10);
}

TEST_CASE("delta calibration recovers a planted value") {
    std::vector<RateScenario> sc;
    std::vector<double> target;
    for (int n : {30, 60, 120}) {
        sc.push_back(scenario(n, 8, 10.0, CombinerKind::ZF, 0.5, random_eta(static_cast<std::uint64_t>(n), 8)));
        target.push_back(total(zf_rate_approx(sc.back(), 0.37)));
    }
    CHECK(calibrate_zf_delta(sc, target) == doctest::Approx(0.37).epsilon(1e-4));
}

TEST_CASE("approximations are non-decreasing in gamma") {
    const auto eta = random_eta(9, 10);
    double pm = -1.0, pz = -1.0;
    for (int k = 0; k <= 100; ++k) {
        const double g = k / 100.0;
        const double m = total(mrc_rate_approx(scenario(100, 10, 10.0, CombinerKind::MRC, g, eta)));
        const double z = total(zf_rate_approx(scenario(100, 10, 10.0, CombinerKind::ZF, g, eta), 0.5));
        CHECK(m >= pm);
        CHECK(z >= pz);
        pm = m;
        pz = z;
    }
}

TEST_CASE("energy efficiency") {
    CHECK(energy_efficiency(0.0, 3, 50) == 0.0);
    CHECK(energy_efficiency(50.0, 1, 50) == doctest::Approx(1e6 * 50.0 / 0.03));
    CHECK(energy_efficiency(50.0, 1, 50) == doctest::Approx(1.667e9).epsilon(1e-3));
    CHECK_THROWS_AS(energy_efficiency(1.0, 0, 50), InputError);
    CHECK_THROWS_AS(energy_efficiency(-1.0, 1, 50), InputError);
}

TEST_CASE("scenario validation") {
    RateScenario s = scenario(10, 10, 10.0, CombinerKind::ZF, 1.0);
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = scenario(10, 2, 0.0, CombinerKind::MRC, 1.0);
    CHECK_THROWS_AS(s.validate(), InputError);
    s = scenario(10, 2, 1.0, CombinerKind::MRC, 1.5);
    CHECK_THROWS_AS(s.validate(), InputError);
}

}
