// SPDX-License-Identifier: Apache-2.0
#include "lmimo/detection.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lmimo/errors.hpp"

namespace lmimo {

double gram_condition(const Eigen::MatrixXcd& H) {
    const Eigen::MatrixXcd G = H.adjoint() * H;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

Eigen::MatrixXcd build_combiner(const Eigen::MatrixXcd& H, CombinerKind kind) {
    if (H.rows() == 0 || H.cols() == 0) throw InputError("build_combiner: empty channel matrix");
    if (kind == CombinerKind::MRC) return H;
    if (H.rows() < H.cols()) throw RankError("build_combiner: zero forcing needs at least as many antennas as users");
    const double cond = gram_condition(H);
    if (!(cond <= 1e12)) throw RankError("build_combiner: H^H H is ill-conditioned (cond " + std::to_string(cond) + ")");
    const Eigen::MatrixXcd G = H.adjoint() * H;
    const Eigen::MatrixXcd Ginv = G.ldlt().solve(Eigen::MatrixXcd::Identity(G.rows(), G.cols()));
    return H * Ginv;
}

Eigen::VectorXd combiner_gain(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& H) {
    if (A.rows() != H.rows() || A.cols() != H.cols()) throw InputError("combiner_gain: dimension mismatch");
    Eigen::VectorXd g(A.cols());
    for (Eigen::Index m = 0; m < A.cols(); ++m) g(m) = A.col(m).dot(H.col(m)).real();
    return g;
}

Eigen::MatrixXcd detect_narrowband(const Eigen::MatrixXcd& r, const Eigen::MatrixXcd& H, CombinerKind kind) {
    if (r.rows() != H.rows())
        throw InputError("detect_narrowband: " + std::to_string(r.rows()) + " antenna streams for a " +
                         std::to_string(H.rows()) + "-antenna channel");
    return build_combiner(H, kind).adjoint() * r;
}

std::vector<Eigen::MatrixXcd> detect_ofdm(const Eigen::MatrixXcd& r, const ChannelRealization& ch,
                                          const OfdmConfig& cfg, CombinerKind kind,
                                          std::vector<Eigen::VectorXd>* gains) {
    cfg.validate();
    if (ch.n_taps() > cfg.cp_length) throw InputError("detect_ofdm: channel taps exceed the cyclic prefix");
    if (r.rows() != ch.n_antennas()) throw InputError("detect_ofdm: antenna count mismatch");
    const Eigen::Index K = cfg.subcarriers;
    const Eigen::Index blk = K + cfg.cp_length;
    if (r.cols() % blk != 0) throw InputError("detect_ofdm: sample count is not a whole number of blocks");
    const Eigen::Index n_blocks = r.cols() / blk;

    const std::vector<Eigen::MatrixXcd> Hf = channel_freq_response(ch, cfg.subcarriers);
    const double rootK = std::sqrt(static_cast<double>(K));
    std::vector<Eigen::MatrixXcd> Ah(static_cast<std::size_t>(K));
    if (gains) gains->assign(static_cast<std::size_t>(K), Eigen::VectorXd());
    for (Eigen::Index nu = 0; nu < K; ++nu) {
        const auto k = static_cast<std::size_t>(nu);
        const Eigen::MatrixXcd Heff = rootK * Hf[k];
        const Eigen::MatrixXcd A = build_combiner(Heff, kind);
        if (gains) (*gains)[k] = combiner_gain(A, Heff);
        Ah[k] = A.adjoint();
    }

    std::vector<Eigen::MatrixXcd> out;
    out.reserve(static_cast<std::size_t>(n_blocks));
    CVec block(static_cast<std::size_t>(blk));
    Eigen::MatrixXcd freq(r.rows(), K);
    for (Eigen::Index b = 0; b < n_blocks; ++b) {
        for (Eigen::Index n = 0; n < r.rows(); ++n) {
            for (Eigen::Index k = 0; k < blk; ++k) block[static_cast<std::size_t>(k)] = r(n, b * blk + k);
            const CVec y = ofdm_demodulate(block, cfg);
            for (Eigen::Index nu = 0; nu < K; ++nu) freq(n, nu) = y[static_cast<std::size_t>(nu)];
        }
        Eigen::MatrixXcd x(ch.n_users(), K);
        for (Eigen::Index nu = 0; nu < K; ++nu) x.col(nu) = Ah[static_cast<std::size_t>(nu)] * freq.col(nu);
        out.push_back(std::move(x));
    }
    return out;
}

Decision decide_symbols(std::span<const cplx> soft, const Constellation& c) {
    Decision d;
    d.indices.resize(soft.size());
    d.symbols.resize(soft.size());
    for (std::size_t k = 0; k < soft.size(); ++k) {
        d.indices[k] = c.nearest(soft[k]);
        d.symbols[k] = c.points()[static_cast<std::size_t>(d.indices[k])];
    }
    d.bits = demap_symbols(d.indices, c);
    return d;
}

namespace {

struct Tally {
    double num = 0.0, den = 0.0;
    void add(double n, double d) {
        num += n;
        den += d;
    }
    double ratio() const { return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN(); }
};

template <class T>
void check_pair(const std::vector<T>& a, const std::vector<T>& b, const char* what) {
    if (a.size() != b.size()) throw InputError(std::string("error_metrics: ") + what + " length mismatch");
}

} // namespace

DetectionReport error_metrics(std::span<const UserStreams> users) {
    Tally mse, ber, ser;
    double evm_err = 0.0, evm_ref = 0.0;
    DetectionReport rep;
    for (const auto& u : users) {
        check_pair(u.tx_bits, u.rx_bits, "bit");
        check_pair(u.tx_symbols, u.rx_symbols, "symbol");
        check_pair(u.tx_points, u.rx_soft, "soft-symbol");
        check_pair(u.tx_wave, u.rx_wave, "waveform");
        Tally um, ub, us;
        double en = 0.0, er = 0.0;
        for (std::size_t k = 0; k < u.tx_wave.size(); ++k) {
            const double e = u.tx_wave[k] - u.rx_wave[k];
            um.add(e * e, 1.0);
        }
        for (std::size_t k = 0; k < u.tx_bits.size(); ++k) ub.add(u.tx_bits[k] != u.rx_bits[k] ? 1.0 : 0.0, 1.0);
        for (std::size_t k = 0; k < u.tx_symbols.size(); ++k)
            us.add(u.tx_symbols[k] != u.rx_symbols[k] ? 1.0 : 0.0, 1.0);
        for (std::size_t k = 0; k < u.tx_points.size(); ++k) {
            en += std::norm(u.rx_soft[k] - u.tx_points[k]);
            er += std::norm(u.tx_points[k]);
        }
        UserReport ur;
        ur.mse = um.ratio();
        ur.ber = ub.ratio();
        ur.ser = us.ratio();
        ur.evm = er > 0.0 ? std::sqrt(en / er) : std::numeric_limits<double>::quiet_NaN();
        rep.per_user.push_back(ur);
        mse.add(um.num, um.den);
        ber.add(ub.num, ub.den);
        ser.add(us.num, us.den);
        evm_err += en;
        evm_ref += er;
    }
    rep.mse = mse.ratio();
    rep.ber = ber.ratio();
    rep.ser = ser.ratio();
    rep.evm = evm_ref > 0.0 ? std::sqrt(evm_err / evm_ref) : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

EyeTraces eye_traces(const BasebandWaveform& w, const PulseShape& p) {
    const std::size_t sps = static_cast<std::size_t>(w.samples_per_symbol);
    if (sps < 1) throw InputError("eye_traces: samples per symbol must be >= 1");
    if (w.samples.size() < 10 * sps) throw InputError("eye_traces: waveform spans fewer than 10 symbol periods");
    const std::size_t len = 2 * sps + 1;
    EyeTraces e;
    e.t.resize(len);
    for (std::size_t j = 0; j < len; ++j) e.t[j] = static_cast<double>(j) * p.t_rep / static_cast<double>(sps);
    for (std::size_t start = w.delay % sps; start + len <= w.samples.size(); start += sps) {
        std::vector<double> v(len);
        for (std::size_t j = 0; j < len; ++j) v[j] = w.samples[start + j].real();
        e.values.push_back(std::move(v));
    }
    return e;
}

} // namespace lmimo
