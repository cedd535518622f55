// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "lmimo/detection.hpp"
#include "lmimo/errors.hpp"
#include "lmimo/modulo.hpp"
#include "lmimo/rng.hpp"

using namespace lmimo;

namespace {

Eigen::MatrixXcd random_h(Rng& rng, int n, int m) {
    Eigen::MatrixXcd H(n, m);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < m; ++b) H(a, b) = complex_normal(rng);
    return H;
}

} // namespace

TEST_SUITE("detection") {

TEST_CASE("single-user MRC is the matched filter") {
    Rng rng = derive_rng(1, 0, "det");
    const Eigen::MatrixXcd h = random_h(rng, 6, 1);
    const Eigen::MatrixXcd r = random_h(rng, 6, 5);
    const Eigen::MatrixXcd y = detect_narrowband(r, h, CombinerKind::MRC);
    for (int k = 0; k < 5; ++k) CHECK(std::abs(y(0, k) - h.col(0).dot(r.col(k))) < 1e-14);
}

TEST_CASE("zero forcing inverts the channel") {
    for (std::uint64_t t = 0; t < 200; ++t) {
        Rng rng = derive_rng(2, t, "det");
        const int m = 1 + static_cast<int>(t % 8);
        const int n = m + static_cast<int>(t % 13);
        const Eigen::MatrixXcd H = random_h(rng, n, m);
        const Eigen::MatrixXcd A = build_combiner(H, CombinerKind::ZF);
        const double err = (A.adjoint() * H - Eigen::MatrixXcd::Identity(m, m)).cwiseAbs().maxCoeff();
        CHECK(err <= 1e-10);
        const Eigen::VectorXd g = combiner_gain(A, H);
        for (int u = 0; u < m; ++u) CHECK(g(u) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("ZF combiner matches a least-squares solve") {
    Rng rng = derive_rng(3, 0, "det");
    const Eigen::MatrixXcd H = random_h(rng, 64, 8);
    const Eigen::MatrixXcd A = build_combiner(H, CombinerKind::ZF);
    const Eigen::MatrixXcd pinv = H.colPivHouseholderQr().solve(Eigen::MatrixXcd::Identity(64, 64));
    CHECK((A.adjoint() - pinv).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rank errors") {
    Rng rng = derive_rng(4, 0, "det");
    Eigen::MatrixXcd H = random_h(rng, 8, 3);
    H.col(2) = H.col(0);
    CHECK_THROWS_AS(build_combiner(H, CombinerKind::ZF), RankError);
    CHECK_THROWS_AS(build_combiner(random_h(rng, 2, 3), CombinerKind::ZF), RankError);
    CHECK_NOTHROW(build_combiner(H, CombinerKind::MRC));
    CHECK_THROWS_AS(detect_narrowband(Eigen::MatrixXcd::Zero(3, 4), random_h(rng, 4, 2), CombinerKind::MRC),
                    InputError);
}

TEST_CASE("noiseless ZF recovers the transmitted symbols") {
    Constellation c(1024);
    for (std::uint64_t t = 0; t < 20; ++t) {
        Rng rng = derive_rng(5, t, "det");
        const int m = 1 + static_cast<int>(t % 6), n = m + 2;
        const Eigen::MatrixXcd H = random_h(rng, n, m);
        Eigen::MatrixXcd X(m, 50);
        for (int u = 0; u < m; ++u)
            for (int k = 0; k < 50; ++k) X(u, k) = c.points()[rng() % 1024];
        const double p = 10.0;
        const Eigen::MatrixXcd y = detect_narrowband(std::sqrt(p) * H * X, H, CombinerKind::ZF) / std::sqrt(p);
        for (int u = 0; u < m; ++u)
            for (int k = 0; k < 50; ++k) {
                CHECK(std::abs(y(u, k) - X(u, k)) < 1e-9);
                CHECK(c.nearest(y(u, k)) == c.nearest(X(u, k)));
            }
    }
}

TEST_CASE("MRC output SNR grows linearly with the array") {
    const double p = 1.0;
    std::vector<double> logn, logsnr;
    for (int n : {4, 16, 64}) {
        double snr = 0.0;
        for (std::uint64_t t = 0; t < 200; ++t) {
            Rng rng = derive_rng(6, t * 100 + static_cast<std::uint64_t>(n), "det");
            const Eigen::MatrixXcd h = random_h(rng, n, 1);
            Eigen::MatrixXcd x(1, 200), z(n, 200);
            for (int k = 0; k < 200; ++k) x(0, k) = complex_normal(rng);
            for (int a = 0; a < n; ++a)
                for (int k = 0; k < 200; ++k) z(a, k) = complex_normal(rng);
            const Eigen::MatrixXcd s = detect_narrowband(std::sqrt(p) * h * x, h, CombinerKind::MRC);
            const Eigen::MatrixXcd e = detect_narrowband(z, h, CombinerKind::MRC);
            snr += s.squaredNorm() / e.squaredNorm();
        }
        logn.push_back(std::log(n));
        logsnr.push_back(std::log(snr / 200.0));
    }
    const double slope = (logsnr[2] - logsnr[0]) / (logn[2] - logn[0]);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("OFDM detection is exact on noiseless channels") {
    const OfdmConfig cfg{64, 16, {}};
    Constellation c(1024);
    for (int D : {1, 5, 16}) {
        Rng rng = derive_rng(7, static_cast<std::uint64_t>(D), "det");
        const int N = 6, M = 3, blocks = 3;
        const ChannelRealization ch = draw_small_scale(N, M, PowerDelayProfile::uniform(D), rng, {0.5, 1.0, 2.0});
        std::vector<BasebandWaveform> users(M);
        std::vector<std::vector<CVec>> X(M, std::vector<CVec>(blocks, CVec(64)));
        for (int m = 0; m < M; ++m)
            for (int b = 0; b < blocks; ++b) {
                for (auto& s : X[m][b]) s = c.points()[rng() % 1024];
                const CVec blk = ofdm_modulate(X[m][b], cfg);
                users[m].samples.insert(users[m].samples.end(), blk.begin(), blk.end());
            }
        const double p = 5.0;
        const auto rx = apply_channel(users, ch, p, 1, NoiseSpec{NoiseSpec::Kind::None}, nullptr);
        Eigen::MatrixXcd r(N, blocks * 80);
        for (int n = 0; n < N; ++n)
            for (int k = 0; k < blocks * 80; ++k) r(n, k) = rx[n].samples[k];
        std::vector<Eigen::VectorXd> gains;
        const auto y = detect_ofdm(r, ch, cfg, CombinerKind::ZF, &gains);
        REQUIRE(y.size() == static_cast<std::size_t>(blocks));
        REQUIRE(gains.size() == 64);
        for (int b = 0; b < blocks; ++b)
            for (int m = 0; m < M; ++m)
                for (int nu = 0; nu < 64; ++nu) CHECK(std::abs(y[b](m, nu) / std::sqrt(p) - X[m][b][nu]) < 1e-9);
        // MRC on a flat channel equals narrowband MRC with the sqrt(K)-scaled matrix
        if (D == 1) {
            const auto ym = detect_ofdm(r, ch, cfg, CombinerKind::MRC);
            const Eigen::MatrixXcd H = ch.matrix(0);
            const Eigen::MatrixXcd x0 = detect_narrowband(r.middleCols(16, 64), H, CombinerKind::MRC);
            // time-domain combining commutes with the DFT when H is flat
            for (int m = 0; m < M; ++m) {
                CVec row(64);
                for (int k = 0; k < 64; ++k) row[k] = x0(m, k);
                const CVec f = unitary_dft(row, DftDirection::Forward);
                for (int nu = 0; nu < 64; ++nu) CHECK(std::abs(ym[0](m, nu) - f[nu]) < 1e-9);
            }
        }
    }
    ChannelRealization deep(2, 1, 20, {});
    CHECK_THROWS_AS(detect_ofdm(Eigen::MatrixXcd::Zero(2, 80), deep, cfg, CombinerKind::ZF), InputError);
}

TEST_CASE("symbol decisions") {
    Constellation c(64);
    const double half = c.min_distance() / 2.0;
    Rng rng = derive_rng(8, 0, "det");
    for (int i = 0; i < 64; ++i) {
        const cplx pt = c.points()[i];
        CHECK(decide_symbols(CVec{pt}, c).indices[0] == i);
        const double a = 2.0 * M_PI * uniform01(rng);
        const cplx moved = pt + 0.99 * half * cplx{std::cos(a), std::sin(a)};
        CHECK(decide_symbols(CVec{moved}, c).indices[0] == i);
    }
    // grid oracle: brute-force nearest with ties to the lower index
    for (int a = -60; a <= 60; ++a)
        for (int b = -60; b <= 60; ++b) {
            const cplx z{a * 0.025, b * 0.025};
            int best = 0;
            double bd = std::norm(z - c.points()[0]);
            for (int k = 1; k < 64; ++k) {
                const double d = std::norm(z - c.points()[k]);
                if (d < bd) {
                    bd = d;
                    best = k;
                }
            }
            const int got = decide_symbols(CVec{z}, c).indices[0];
            CHECK(std::norm(z - c.points()[got]) <= bd * (1.0 + 1e-12) + 1e-15);
            if (std::abs(std::norm(z - c.points()[got]) - bd) > 1e-12) CHECK(got == best);
        }
}

TEST_CASE("error metrics") {
    UserStreams u;
    u.tx_bits.assign(10000, 0);
    u.rx_bits = u.tx_bits;
    u.tx_symbols.assign(1000, 3);
    u.rx_symbols = u.tx_symbols;
    u.tx_wave = {0.1, 0.2, -0.3};
    u.rx_wave = u.tx_wave;
    u.tx_points = {cplx{1.0, 0.0}};
    u.rx_soft = u.tx_points;
    DetectionReport r = error_metrics(std::vector<UserStreams>{u});
    CHECK(r.mse == 0.0);
    CHECK(r.ber == 0.0);
    CHECK(r.ser == 0.0);
    CHECK(r.evm == 0.0);

    u.rx_bits[1234] = 1;
    for (int k : {1, 50, 700}) u.rx_symbols[k] = 0;
    u.rx_wave[1] = 0.5;
    r = error_metrics(std::vector<UserStreams>{u});
    CHECK(r.ber == 1e-4);
    CHECK(r.ser == 3.0 / 1000.0);
    CHECK(r.mse == doctest::Approx(0.09 / 3.0));

    UserStreams bad = u;
    bad.rx_bits.pop_back();
    CHECK_THROWS_AS(error_metrics(std::vector<UserStreams>{bad}), InputError);
    CHECK(std::isnan(error_metrics(std::vector<UserStreams>{UserStreams{}}).ber));
}

TEST_CASE("eye traces") {
    PulseShape p;
    const int sps = 20;
    Constellation c(4);
    const CVec same(60, c.points()[0]);
    const BasebandWaveform w = pulse_shape(same, sps, p);
    const EyeTraces e = eye_traces(w, p);
    REQUIRE(e.t.size() == 2 * sps + 1);
    CHECK(e.t.back() == doctest::Approx(2.0 * p.t_rep));
    // traces well inside the burst see the full kernel on both sides
    const std::size_t first = 2 * static_cast<std::size_t>(p.span) + 1;
    for (std::size_t k = first + 1; k + first + 2 < e.values.size(); ++k)
        for (std::size_t j = 0; j < e.t.size(); ++j) CHECK(std::abs(e.values[k][j] - e.values[first][j]) < 1e-3);

    Rng rng = derive_rng(9, 0, "eye");
    CVec sym(200);
    for (auto& s : sym) s = c.points()[rng() % 4];
    const BasebandWaveform q = pulse_shape(sym, sps, p);
    const EyeTraces eq = eye_traces(q, p);
    double opening = 1e9;
    for (std::size_t k = first; k + first + 2 < eq.values.size(); ++k)
        opening = std::min(opening, std::abs(eq.values[k][sps]));
    CHECK(opening > 0.5);

    const double lambda = 0.2;
    BasebandWaveform folded = q;
    for (auto& z : folded.samples) z = {modulo_fold(z.real(), lambda), modulo_fold(z.imag(), lambda)};
    for (const auto& tr : eye_traces(folded, p).values)
        for (double v : tr) CHECK((v >= -lambda && v < lambda));

    BasebandWaveform tiny;
    tiny.samples_per_symbol = sps;
    tiny.samples.assign(9 * sps, cplx{});
    CHECK_THROWS_AS(eye_traces(tiny, p), InputError);
}

}
