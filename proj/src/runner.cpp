// SPDX-License-Identifier: Apache-2.0
#include "lmimo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "lmimo/channel.hpp"
#include "lmimo/detection.hpp"
#include "lmimo/errors.hpp"
#include "lmimo/modulo.hpp"
#include "lmimo/rate.hpp"
#include "lmimo/rng.hpp"
#include "lmimo/signal.hpp"
#include "lmimo/sqnr.hpp"

#ifndef LMIMO_VERSION
#define LMIMO_VERSION "0.0.0"
#endif

namespace lmimo {

using nlohmann::json;

namespace {

constexpr double kNaN = MetricRow::nan;
constexpr double kPiE = 3.14159265358979323846 * 2.71828182845904523536;
constexpr std::size_t kMaxWarnings = 200;
constexpr std::size_t kMaxEyeTraces = 200;

int worker_count(int jobs) {
    if (jobs > 0) return jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception by
// index is rethrown once every worker has stopped.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count(jobs)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::atomic<bool> failed{false};
    auto work = [&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct Stat {
    double sum = 0.0, sq = 0.0;
    int n = 0;
    void add(double v) {
        if (std::isnan(v)) return;
        sum += v;
        sq += v * v;
        ++n;
    }
    double mean() const { return n > 0 ? sum / n : kNaN; }
    double se() const {
        if (n < 2) return kNaN;
        const double m = sum / n;
        const double var = std::max(0.0, (sq - n * m * m) / (n - 1));
        return std::sqrt(var / n);
    }
};

std::string join_flags(const std::set<std::string>& flags) {
    std::string s;
    for (const auto& f : flags) s += (s.empty() ? "" : ";") + f;
    return s;
}

MetricRow base_row(const ExperimentConfig& c, double value, const std::string& series) {
    MetricRow r;
    r.recipe = c.recipe;
    r.seed = c.seed;
    r.axis = c.sweep.axis;
    r.value = value;
    r.series = series;
    return r;
}

void push_warning(std::vector<std::string>& out, std::size_t& dropped, std::string w) {
    if (out.size() < kMaxWarnings)
        out.push_back(std::move(w));
    else
        ++dropped;
}

std::string adc_label(AdcKind k) { return k == AdcKind::Modulo ? "modulo" : "conventional"; }
std::string combiner_label(CombinerKind k) { return k == CombinerKind::MRC ? "mrc" : "zf"; }

double peak_component(const CVec& x) {
    double p = 0.0;
    for (const auto& v : x) p = std::max({p, std::abs(v.real()), std::abs(v.imag())});
    return p;
}

// ---------------------------------------------------------------- recovery

struct EyeBundle {
    std::vector<double> t;
    std::vector<std::vector<double>> original, folded, recovered;
};

struct Capture {
    std::string csv;
    json sidecar;
};

struct RecoveryTrial {
    double mse = kNaN, ber = kNaN, ser = kNaN, evm = kNaN;
    int order = 0;
    std::set<int> nominal_orders;
    std::set<std::string> flags;
    std::vector<std::string> warnings;
    std::vector<ConstellationPoint> points;
    std::optional<EyeBundle> eye;
    std::optional<Capture> capture;
};

struct TrialOptions {
    bool keep_points = false;
    bool keep_eye = false;
    bool via_capture = false;  // round-trip antenna 0 through the capture format
    bool keep_capture = false;
};

EyeTraces capped(EyeTraces e) {
    if (e.values.size() > kMaxEyeTraces) e.values.resize(kMaxEyeTraces);
    return e;
}

RecoveryTrial recovery_trial(const ExperimentConfig& c, std::size_t trial, const TrialOptions& opt) {
    const auto& w = c.waveform;
    const auto& s = c.scenario;
    RecoveryTrial out;

    Rng data = derive_rng(c.seed, trial, "data");
    Rng ch_rng = derive_rng(c.seed, trial, "channel");
    Rng ls_rng = derive_rng(c.seed, trial, "large-scale");
    Rng noise_rng = derive_rng(c.seed, trial, "noise");

    const Constellation con(w.qam);
    const PulseShape pulse{w.rolloff, 1.0, w.span};
    const int sps = samples_per_symbol_for(w.oversampling, pulse);
    const int M = s.n_users, N = s.n_antennas;
    const bool ofdm = w.kind == WaveformKind::Ofdm;
    OfdmConfig oc;
    oc.subcarriers = w.subcarriers;
    oc.cp_length = w.cp_length;
    const std::size_t blk = static_cast<std::size_t>(w.subcarriers + w.cp_length);
    const std::size_t n_sym = ofdm ? static_cast<std::size_t>(w.n_blocks) * static_cast<std::size_t>(w.subcarriers)
                                   : static_cast<std::size_t>(w.n_symbols);
    const std::size_t n_chips = ofdm ? static_cast<std::size_t>(w.n_blocks) * blk : n_sym;

    std::vector<std::vector<int>> tx_idx(static_cast<std::size_t>(M));
    std::vector<BasebandWaveform> tx(static_cast<std::size_t>(M));
    std::uniform_int_distribution<int> pick(0, w.qam - 1);
    for (int m = 0; m < M; ++m) {
        auto& idx = tx_idx[static_cast<std::size_t>(m)];
        idx.resize(n_sym);
        CVec pts(n_sym);
        for (std::size_t k = 0; k < n_sym; ++k) {
            idx[k] = pick(data);
            pts[k] = con.points()[static_cast<std::size_t>(idx[k])];
        }
        CVec chips;
        if (ofdm) {
            chips.reserve(n_chips);
            for (int b = 0; b < w.n_blocks; ++b) {
                const std::span<const cplx> block(pts.data() + static_cast<std::size_t>(b) * w.subcarriers,
                                                  static_cast<std::size_t>(w.subcarriers));
                const CVec t = ofdm_modulate(block, oc);
                chips.insert(chips.end(), t.begin(), t.end());
            }
        } else {
            chips = std::move(pts);
        }
        tx[static_cast<std::size_t>(m)] = pulse_shape(chips, sps, pulse);
    }

    std::vector<double> eta(static_cast<std::size_t>(M), 1.0);
    if (s.large_scale == LargeScaleModel::Geometry) eta = draw_large_scale(s.geometry, M, ls_rng).eta;
    const ChannelRealization ch = [&] {
        if (s.channel == ChannelModel::Identity) {
            ChannelRealization id(N, M, 1, eta);
            for (int n = 0; n < N; ++n) id.g(n, n, 0) = 1.0;
            return id;
        }
        return draw_small_scale(N, M, PowerDelayProfile::uniform(s.channel_taps), ch_rng, eta);
    }();

    const double p_u = s.power_scaling ? s.p_u / N : s.p_u;
    NoiseSpec noise;
    noise.pulse = pulse;
    noise.kind = s.noise == NoiseModel::None    ? NoiseSpec::Kind::None
                 : s.noise == NoiseModel::White ? NoiseSpec::Kind::White
                                                : NoiseSpec::Kind::Bandlimited;
    noise.variance = 1.0;
    if (s.snr_db) {
        const double nominal = p_u * std::accumulate(eta.begin(), eta.end(), 0.0);
        noise.variance = nominal / std::pow(10.0, *s.snr_db / 10.0);
    }
    const std::vector<BasebandWaveform> rx = apply_channel(tx, ch, p_u, sps, noise, &noise_rng);

    Eigen::MatrixXcd y(N, static_cast<Eigen::Index>(n_chips));
    Stat mse;
    for (int n = 0; n < N; ++n) {
        const BasebandWaveform& r = rx[static_cast<std::size_t>(n)];
        const std::string where = "trial " + std::to_string(trial) + " antenna " + std::to_string(n) + ": ";
        CVec rec(r.samples.size());
        FoldedFrame frame;
        if (c.adc.kind == AdcKind::Modulo) {
            const double peak = peak_component(r.samples);
            const double lam = c.adc.lambda_ratio * peak;
            frame = fold_waveform(r, ModuloConfig{lam, c.adc.bits});
            if (c.adc.bits > 0) frame = quantize(frame);
            RecoveryConfig rc;
            rc.lambda = lam;
            rc.beta = c.recovery.beta_rule == BetaRule::Oracle ? beta_for(peak, lam)
                                                               : c.recovery.beta_multiple * 2.0 * lam;
            rc.sample_interval = r.sample_interval;
            rc.bandwidth = r.bandwidth;
            rc.order = c.recovery.order;
            rc.order_rule = c.recovery.order_rule;
            rc.noise_exponent = c.recovery.noise_exponent;
            rc.order_search = c.recovery.order_search;
            rc.anchor.mode = c.recovery.anchor;

            RecoveryResult res;
            if (opt.via_capture && n == 0) {
                CaptureSidecar sc;
                sc.lambda = lam;
                sc.bits = c.adc.bits;
                sc.sample_interval = rc.sample_interval;
                sc.bandwidth = rc.bandwidth;
                sc.beta = rc.beta;
                sc.order = rc.order;
                sc.order_rule = rc.order_rule;
                sc.noise_exponent = rc.noise_exponent;
                sc.anchor = rc.anchor.mode;
                std::ostringstream os;
                write_frame_csv(os, frame);
                // the sidecar goes through its JSON form too
                const CaptureSidecar parsed = CaptureSidecar::from_json(json::parse(sc.to_json().dump()));
                ReplayResult rr = replay_capture(os.str(), parsed);
                res = std::move(rr.recovery);
                if (opt.keep_capture) out.capture = Capture{os.str(), sc.to_json()};
            } else {
                res = recover(frame, rc);
            }
            for (std::size_t k = 0; k < rec.size(); ++k) rec[k] = {res.i[k], res.q[k]};
            out.order = std::max(out.order, res.order);
            out.nominal_orders.insert(res.nominal_order);
            if (res.order_fallback) out.flags.insert("order_fallback");
            if (!res.conditions.sampling_ok) out.flags.insert("sampling_condition_unmet");
            if (frame.quantized && !(res.conditions.noise_ok && res.conditions.noisy_interval_ok))
                out.flags.insert("noise_condition_unmet");
            for (const auto& wmsg : res.warnings) {
                if (wmsg.find("beta bound") != std::string::npos) out.flags.insert("bound_exceeded");
                out.warnings.push_back(where + wmsg);
            }
        } else {
            std::vector<double> re(r.samples.size()), im(r.samples.size());
            for (std::size_t k = 0; k < re.size(); ++k) {
                re[k] = r.samples[k].real();
                im[k] = r.samples[k].imag();
            }
            const auto qi = conventional_adc(re, c.adc.bits, c.adc.law);
            const auto qq = conventional_adc(im, c.adc.bits, c.adc.law);
            for (std::size_t k = 0; k < rec.size(); ++k) rec[k] = {qi[k], qq[k]};
        }

        double power = 0.0;
        for (int m = 0; m < M; ++m)
            for (int d = 0; d < ch.n_taps(); ++d) power += std::norm(ch.h(n, m, d));
        power *= p_u;
        double err = 0.0;
        for (std::size_t k = 0; k < rec.size(); ++k) err += std::norm(rec[k] - r.samples[k]);
        if (power > 0.0) mse.add(err / (2.0 * static_cast<double>(rec.size())) / power);

        for (std::size_t k = 0; k < n_chips; ++k)
            y(n, static_cast<Eigen::Index>(k)) = rec[r.delay + k * static_cast<std::size_t>(sps)];

        if (opt.keep_eye && n == 0) {
            EyeBundle e;
            BasebandWaveform view = r;
            const EyeTraces orig = capped(eye_traces(view, pulse));
            e.t = orig.t;
            e.original = orig.values;
            if (c.adc.kind == AdcKind::Modulo)
                for (std::size_t k = 0; k < view.samples.size(); ++k) view.samples[k] = {frame.i[k], frame.q[k]};
            e.folded = capped(eye_traces(view, pulse)).values;
            view.samples = rec;
            e.recovered = capped(eye_traces(view, pulse)).values;
            out.eye = std::move(e);
        }
    }
    out.mse = mse.mean();

    Eigen::MatrixXcd soft(M, static_cast<Eigen::Index>(n_sym));
    try {
        const double amp = std::sqrt(p_u);
        if (ofdm) {
            std::vector<Eigen::VectorXd> gains;
            const auto blocks = detect_ofdm(y, ch, oc, c.detector, &gains);
            for (std::size_t b = 0; b < blocks.size(); ++b)
                for (int nu = 0; nu < w.subcarriers; ++nu)
                    for (int m = 0; m < M; ++m)
                        soft(m, static_cast<Eigen::Index>(b * static_cast<std::size_t>(w.subcarriers) + nu)) =
                            blocks[b](m, nu) / (amp * gains[static_cast<std::size_t>(nu)](m));
        } else {
            const Eigen::MatrixXcd H = ch.matrix(0);
            const Eigen::MatrixXcd A = build_combiner(H, c.detector);
            const Eigen::VectorXd g = combiner_gain(A, H);
            soft = A.adjoint() * y;
            for (int m = 0; m < M; ++m) soft.row(m) /= amp * g(m);
        }
    } catch (const RankError& e) {
        out.flags.insert("rank_deficient");
        out.warnings.push_back("trial " + std::to_string(trial) + ": " + e.what());
        return out;
    }

    std::vector<UserStreams> users(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        auto& u = users[static_cast<std::size_t>(m)];
        u.tx_symbols = tx_idx[static_cast<std::size_t>(m)];
        u.rx_soft.resize(n_sym);
        u.tx_points.resize(n_sym);
        for (std::size_t k = 0; k < n_sym; ++k) {
            u.rx_soft[k] = soft(m, static_cast<Eigen::Index>(k));
            u.tx_points[k] = con.points()[static_cast<std::size_t>(u.tx_symbols[k])];
        }
        const Decision d = decide_symbols(u.rx_soft, con);
        u.rx_symbols = d.indices;
        u.rx_bits = d.bits;
        u.tx_bits = demap_symbols(u.tx_symbols, con);
        if (opt.keep_points)
            for (const auto& z : u.rx_soft)
                out.points.push_back({static_cast<int>(trial), m, z.real(), z.imag()});
    }
    const DetectionReport rep = error_metrics(users);
    out.ber = rep.ber;
    out.ser = rep.ser;
    out.evm = rep.evm;
    return out;
}

std::string series_for_recovery(const ExperimentConfig& c) {
    std::string s = adc_label(c.adc.kind) + "/" + combiner_label(c.detector);
    return s;
}

void run_recovery(const ExperimentConfig& cfg, RunResult& res, json& derived) {
    const bool want_points = cfg.recipe == "constellation";
    const bool want_eye = cfg.recipe == "eye";
    const bool replay = cfg.recipe == "replay";
    const PulseShape pulse{cfg.waveform.rolloff, 1.0, cfg.waveform.span};
    const int sps = samples_per_symbol_for(cfg.waveform.oversampling, pulse);
    derived["samples_per_symbol"] = sps;
    derived["omega_te"] = kPiE * (1.0 + cfg.waveform.rolloff) / sps;
    json per_value = json::array();
    std::vector<ConstellationPoint> points;
    std::size_t dropped = 0;

    for (std::size_t iv = 0; iv < cfg.sweep.values.size(); ++iv) {
        const double value = cfg.sweep.values[iv];
        const ExperimentConfig c = apply_sweep(cfg, value);
        const std::size_t T = static_cast<std::size_t>(c.trials);
        std::vector<RecoveryTrial> trials(T);
        parallel_for(T, c.jobs, [&](std::size_t t) {
            TrialOptions opt;
            opt.keep_points = want_points && iv == 0;
            opt.keep_eye = want_eye && iv == 0 && t == 0;
            opt.via_capture = replay;
            opt.keep_capture = replay && iv == 0 && t == 0;
            trials[t] = recovery_trial(c, t, opt);
        });

        Stat mse, ber, ser, evm;
        std::set<std::string> flags;
        std::set<int> nominal, applied;
        const std::string series = series_for_recovery(c);
        for (std::size_t t = 0; t < T; ++t) {
            auto& tr = trials[t];
            mse.add(tr.mse);
            ber.add(tr.ber);
            ser.add(tr.ser);
            evm.add(tr.evm);
            flags.insert(tr.flags.begin(), tr.flags.end());
            nominal.insert(tr.nominal_orders.begin(), tr.nominal_orders.end());
            if (tr.order > 0) applied.insert(tr.order);
            for (auto& wmsg : tr.warnings) push_warning(res.warnings, dropped, "value " + format_number(value) + " " + wmsg);
            if (c.raw_rows) {
                MetricRow r = base_row(c, value, series);
                r.trial = static_cast<int>(t);
                r.agg = false;
                r.n = 1;
                r.mse = tr.mse;
                r.ber = tr.ber;
                r.ser = tr.ser;
                r.evm = tr.evm;
                if (tr.order > 0) r.order = tr.order;
                r.flags = join_flags(tr.flags);
                res.rows.push_back(r);
            }
            points.insert(points.end(), tr.points.begin(), tr.points.end());
        }
        MetricRow r = base_row(c, value, series);
        r.n = mse.n;
        r.mse = mse.mean();
        r.mse_se = mse.se();
        r.ber = ber.mean();
        r.ber_se = ber.se();
        r.ser = ser.mean();
        r.ser_se = ser.se();
        r.evm = evm.mean();
        if (!applied.empty()) r.order = *applied.rbegin();
        r.flags = join_flags(flags);
        res.rows.push_back(r);
        per_value.push_back({{"value", value},
                             {"nominal_orders", std::vector<int>(nominal.begin(), nominal.end())},
                             {"applied_orders", std::vector<int>(applied.begin(), applied.end())}});

        if (want_eye && !trials.empty() && trials[0].eye) {
            const EyeBundle& e = *trials[0].eye;
            for (auto [name, traces] : {std::pair{"eye_original.csv", &e.original},
                                        std::pair{"eye_folded.csv", &e.folded},
                                        std::pair{"eye_recovered.csv", &e.recovered}}) {
                std::ostringstream os;
                write_eye_csv(os, e.t, *traces);
                res.files.emplace_back(name, os.str());
            }
        }
        if (replay && !trials.empty() && trials[0].capture) {
            res.files.emplace_back("capture.csv", trials[0].capture->csv);
            res.files.emplace_back("capture.json", trials[0].capture->sidecar.dump(2) + "\n");
        }
    }
    if (want_points) {
        std::ostringstream os;
        write_constellation_csv(os, points);
        res.files.emplace_back("constellation.csv", os.str());
    }
    if (dropped > 0) res.warnings.push_back(std::to_string(dropped) + " further warnings omitted");
    derived["sweep"] = per_value;
}

// -------------------------------------------------------------------- sqnr

void run_sqnr(const ExperimentConfig& cfg, RunResult& res, json& derived) {
    const std::size_t T = static_cast<std::size_t>(cfg.trials);
    const std::size_t V = cfg.sweep.values.size();
    const SourceKind src = cfg.sqnr.source == SourceModel::Uniform ? SourceKind::Uniform : SourceKind::Gaussian;
    // [trial][value][0: modulo, 1: conventional]
    std::vector<std::vector<std::array<double, 2>>> sq(T, std::vector<std::array<double, 2>>(V));
    parallel_for(T, cfg.jobs, [&](std::size_t t) {
        Rng rng = derive_rng(cfg.seed, t, "source");
        std::vector<double> x(static_cast<std::size_t>(cfg.sqnr.samples));
        for (auto& v : x) v = src == SourceKind::Uniform ? 2.0 * uniform01(rng) - 1.0 : standard_normal(rng);
        for (std::size_t iv = 0; iv < V; ++iv) {
            const ExperimentConfig c = apply_sweep(cfg, cfg.sweep.values[iv]);
            sq[t][iv][0] = empirical_sqnr(x, modulo_adc_unfolded(x, c.adc.bits, c.adc.lambda_ratio)).sqnr_db;
            sq[t][iv][1] = empirical_sqnr(x, conventional_adc(x, c.adc.bits, c.adc.law)).sqnr_db;
        }
    });
    json analytic = json::array();
    for (std::size_t iv = 0; iv < V; ++iv) {
        const double value = cfg.sweep.values[iv];
        const ExperimentConfig c = apply_sweep(cfg, value);
        for (int a = 0; a < 2; ++a) {
            const AdcKind kind = a == 0 ? AdcKind::Modulo : AdcKind::Conventional;
            const std::string series = adc_label(kind);
            Stat st;
            for (std::size_t t = 0; t < T; ++t) {
                st.add(sq[t][iv][static_cast<std::size_t>(a)]);
                if (c.raw_rows) {
                    MetricRow r = base_row(c, value, series);
                    r.trial = static_cast<int>(t);
                    r.agg = false;
                    r.n = 1;
                    r.sqnr_db = sq[t][iv][static_cast<std::size_t>(a)];
                    res.rows.push_back(r);
                }
            }
            MetricRow r = base_row(c, value, series);
            r.n = st.n;
            r.sqnr_db = st.mean();
            r.sqnr_db_se = st.se();
            if (c.adc.bits > 0) r.sqnr_analytic_db = analytic_sqnr(src, kind, c.adc.bits, c.adc.lambda_ratio);
            r.gamma = std::isinf(r.sqnr_db) ? 1.0 : 1.0 - std::pow(10.0, -r.sqnr_db / 10.0);
            if (src == SourceKind::Gaussian && kind == AdcKind::Modulo) r.flags = "analytic_approximate";
            res.rows.push_back(r);
        }
    }
    derived["source"] = src == SourceKind::Uniform ? "uniform" : "gaussian";
}

// -------------------------------------------------------------------- rate

struct CurveTrial {
    MonteCarloRates mc;
    double approx = kNaN;
};

// Fits delta on the reference ZF scenario (100 antennas, 10 users, 3-bit
// conventional ADC) under the run's own large-scale model and power.
double calibrate_delta(const ExperimentConfig& cfg, json& info) {
    const int N = 100, M = 10, bits = 3;
    AdcModel adc;
    adc.kind = AdcKind::Conventional;
    adc.bits = bits;
    adc.law = cfg.adc.law;
    adc.loading = cfg.adc.loading;
    const double gamma = gamma_for(adc);
    const std::uint64_t seed = cfg.seed ^ hash_label("zf-calibration");
    const std::size_t T = static_cast<std::size_t>(cfg.rate.calibration_trials);
    std::vector<RateScenario> group(T);
    std::vector<MonteCarloRates> mc(T);
    parallel_for(T, cfg.jobs, [&](std::size_t t) {
        RateScenario& s = group[t];
        s.n_antennas = N;
        s.n_users = M;
        s.eta.assign(M, 1.0);
        if (cfg.scenario.large_scale == LargeScaleModel::Geometry) {
            Rng g = derive_rng(seed, t, "geometry");
            s.eta = draw_large_scale(cfg.scenario.geometry, M, g).eta;
        }
        s.p_u = cfg.scenario.power_scaling ? cfg.scenario.p_u / N : cfg.scenario.p_u;
        s.combiner = CombinerKind::ZF;
        s.gamma = gamma;
        mc[t] = ergodic_rate_mc(s, seed, t, 1);
    });
    MonteCarloRates total;
    for (const auto& m : mc) total.merge(m);
    const double delta = calibrate_zf_delta(std::vector<std::vector<RateScenario>>{group}, {total.sum_rate()});
    info = {{"value", delta},
            {"source", "calibrated"},
            {"reference", {{"n_antennas", N}, {"n_users", M}, {"bits", bits}, {"adc", "conventional"}, {"gamma", gamma}}},
            {"trials", T},
            {"mc_sum_rate", total.sum_rate()},
            {"at_bound", delta < 1e-4 || delta > 1.0 - 1e-4}};
    return delta;
}

void run_rate(const ExperimentConfig& cfg, RunResult& res, json& derived) {
    const auto& curves = cfg.rate.curves;
    bool any_zf = false;
    for (const auto& cv : curves) any_zf |= cv.detector == CombinerKind::ZF;
    double delta = kNaN;
    if (any_zf && cfg.rate.approximations) {
        json info;
        if (cfg.rate.zf_delta) {
            delta = *cfg.rate.zf_delta;
            info = {{"value", delta}, {"source", "config"}};
        } else {
            delta = calibrate_delta(cfg, info);
            if (info["at_bound"].get<bool>())
                res.warnings.push_back("zf_delta fit stopped at the edge of (0, 1); the ZF approximation cannot "
                                       "match the reference Monte Carlo sum-rate");
        }
        derived["zf_delta"] = info;
    }

    json gammas = json::array();
    for (std::size_t iv = 0; iv < cfg.sweep.values.size(); ++iv) {
        const double value = cfg.sweep.values[iv];
        const ExperimentConfig c = apply_sweep(cfg, value);
        const int N = c.scenario.n_antennas, M = c.scenario.n_users;
        const double p_u = c.scenario.power_scaling ? c.scenario.p_u / N : c.scenario.p_u;
        std::vector<double> gamma(curves.size());
        std::vector<int> bits(curves.size());
        for (std::size_t k = 0; k < curves.size(); ++k) {
            const auto& cv = c.rate.curves[k];
            AdcModel adc;
            adc.kind = cv.adc;
            adc.bits = cv.bits.value_or(c.adc.bits);
            adc.zeta = c.adc.lambda_ratio;
            adc.loading = c.adc.loading;
            adc.law = c.adc.law;
            bits[k] = adc.bits;
            gamma[k] = gamma_for(adc);
            gammas.push_back({{"value", value}, {"curve", cv.name}, {"bits", adc.bits}, {"gamma", gamma[k]}});
        }

        const std::size_t T = static_cast<std::size_t>(c.trials);
        std::vector<std::vector<CurveTrial>> out(T, std::vector<CurveTrial>(curves.size()));
        parallel_for(T, c.jobs, [&](std::size_t t) {
            std::vector<double> eta(static_cast<std::size_t>(M), 1.0);
            if (c.scenario.large_scale == LargeScaleModel::Geometry) {
                Rng g = derive_rng(c.seed, t, "geometry");
                eta = draw_large_scale(c.scenario.geometry, M, g).eta;
            }
            for (std::size_t k = 0; k < curves.size(); ++k) {
                RateScenario s;
                s.n_antennas = N;
                s.n_users = M;
                s.eta = eta;
                s.p_u = p_u;
                s.combiner = curves[k].detector;
                s.gamma = gamma[k];
                out[t][k].mc = ergodic_rate_mc(s, c.seed, t, 1);
                if (c.rate.approximations) {
                    const auto a = s.combiner == CombinerKind::MRC ? mrc_rate_approx(s) : zf_rate_approx(s, delta);
                    out[t][k].approx = std::accumulate(a.begin(), a.end(), 0.0);
                }
            }
        });

        for (std::size_t k = 0; k < curves.size(); ++k) {
            MonteCarloRates mc;
            Stat approx, per_trial;
            for (std::size_t t = 0; t < T; ++t) {
                mc.merge(out[t][k].mc);
                approx.add(out[t][k].approx);
                if (c.raw_rows) {
                    MetricRow r = base_row(c, value, curves[k].name + "/mc");
                    r.trial = static_cast<int>(t);
                    r.agg = false;
                    r.n = 1;
                    r.sumrate = out[t][k].mc.sum_rate();
                    r.gamma = gamma[k];
                    if (bits[k] > 0) r.xi = energy_efficiency(r.sumrate, bits[k], N, c.rate.power);
                    res.rows.push_back(r);
                }
            }
            auto emit = [&](const std::string& suffix, double R, double se, int n, const std::string& flags) {
                MetricRow r = base_row(c, value, curves[k].name + suffix);
                r.n = n;
                r.sumrate = R;
                r.sumrate_se = se;
                r.gamma = gamma[k];
                if (bits[k] > 0) {
                    r.xi = energy_efficiency(R, bits[k], N, c.rate.power);
                    r.xi_se = R > 0.0 ? r.xi / R * se : kNaN;
                }
                r.flags = flags;
                res.rows.push_back(r);
            };
            emit("/mc", mc.sum_rate(), mc.std_error(), static_cast<int>(mc.trials),
                 mc.resampled > 0 ? "resampled=" + std::to_string(mc.resampled) : "");
            if (c.rate.approximations) emit("/approx", approx.mean(), approx.se(), approx.n, "");
        }
    }
    derived["gamma"] = gammas;
}

} // namespace

// --------------------------------------------------------------- sidecars

json CaptureSidecar::to_json() const {
    json j = {{"format", "lmimo-capture v1"},
              {"lambda", lambda},
              {"bits", bits},
              {"sample_interval", sample_interval},
              {"bandwidth_rad_s", bandwidth},
              {"beta", beta},
              {"order", order ? json(*order) : json(nullptr)},
              {"noise_exponent", noise_exponent}};
    j["order_rule"] = order_rule == OrderRule::Auto        ? "auto"
                      : order_rule == OrderRule::Algorithm ? "algorithm"
                                                           : "noise-aware";
    j["anchor"] = anchor == AnchorMode::ZeroMean ? "zero-mean" : "none";
    return j;
}

CaptureSidecar CaptureSidecar::from_json(const json& j) {
    std::vector<std::string> d;
    CaptureSidecar s;
    if (!j.is_object()) throw ValidationError({"sidecar: expected a JSON object"});
    static const std::set<std::string> known = {"format", "lambda", "bits", "sample_interval", "bandwidth_rad_s",
                                                "beta", "order", "order_rule", "noise_exponent", "anchor"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) d.push_back("sidecar." + it.key() + ": unknown field");
    if (!j.contains("format") || j["format"] != "lmimo-capture v1")
        d.push_back("sidecar.format: must be \"lmimo-capture v1\"");
    auto positive = [&](const char* key, double& out) {
        if (!j.contains(key)) return d.push_back(std::string("sidecar.") + key + ": required");
        if (!j[key].is_number() || !(j[key].get<double>() > 0.0) || !std::isfinite(j[key].get<double>()))
            return d.push_back(std::string("sidecar.") + key + ": must be a positive number");
        out = j[key].get<double>();
    };
    positive("lambda", s.lambda);
    positive("sample_interval", s.sample_interval);
    positive("bandwidth_rad_s", s.bandwidth);
    positive("beta", s.beta);
    if (!j.contains("bits") || !j["bits"].is_number_integer() || j["bits"].get<long>() < 0 || j["bits"].get<long>() > 16)
        d.push_back("sidecar.bits: required integer in 0..16");
    else
        s.bits = j["bits"].get<int>();
    if (j.contains("order") && !j["order"].is_null()) {
        if (!j["order"].is_number_integer() || j["order"].get<long>() < 1 || j["order"].get<long>() > 64)
            d.push_back("sidecar.order: expected null or an integer in 1..64");
        else
            s.order = j["order"].get<int>();
    }
    if (j.contains("noise_exponent")) {
        if (!j["noise_exponent"].is_number_integer() || j["noise_exponent"].get<long>() < 1 ||
            j["noise_exponent"].get<long>() > 16)
            d.push_back("sidecar.noise_exponent: expected an integer in 1..16");
        else
            s.noise_exponent = j["noise_exponent"].get<int>();
    }
    if (j.contains("order_rule")) {
        const json& v = j["order_rule"];
        if (v == "auto") s.order_rule = OrderRule::Auto;
        else if (v == "algorithm") s.order_rule = OrderRule::Algorithm;
        else if (v == "noise-aware") s.order_rule = OrderRule::NoiseAware;
        else d.push_back("sidecar.order_rule: expected auto, algorithm or noise-aware");
    }
    if (j.contains("anchor")) {
        const json& v = j["anchor"];
        if (v == "zero-mean") s.anchor = AnchorMode::ZeroMean;
        else if (v == "none") s.anchor = AnchorMode::None;
        else d.push_back("sidecar.anchor: expected zero-mean or none");
    }
    if (d.empty()) {
        const double ratio = s.beta / (2.0 * s.lambda);
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
            d.push_back("sidecar.beta: must be a multiple of 2 lambda");
    }
    if (!d.empty()) throw ValidationError(d);
    return s;
}

ReplayResult replay_capture(const std::string& csv_text, const CaptureSidecar& sc) {
    std::istringstream is(csv_text);
    ReplayResult rr;
    rr.frame = read_frame_csv(is);
    rr.frame.cfg = ModuloConfig{sc.lambda, sc.bits};
    rr.frame.quantized = sc.bits > 0;
    rr.frame.sample_interval = sc.sample_interval;
    RecoveryConfig rc;
    rc.lambda = sc.lambda;
    rc.beta = std::round(sc.beta / (2.0 * sc.lambda)) * 2.0 * sc.lambda;
    rc.sample_interval = sc.sample_interval;
    rc.bandwidth = sc.bandwidth;
    rc.order = sc.order;
    rc.order_rule = sc.order_rule;
    rc.noise_exponent = sc.noise_exponent;
    rc.anchor.mode = sc.anchor;
    rr.recovery = recover(rr.frame, rc);
    rr.manifest = {{"tool", "lmimo"},
                   {"version", LMIMO_VERSION},
                   {"samples", rr.frame.size()},
                   {"sidecar", sc.to_json()},
                   {"derived",
                    {{"omega_te", rc.omega_te()},
                     {"order", rr.recovery.order},
                     {"nominal_order", rr.recovery.nominal_order},
                     {"order_fallback", rr.recovery.order_fallback},
                     {"sampling_ok", rr.recovery.conditions.sampling_ok},
                     {"offset_i", rr.recovery.v_i},
                     {"offset_q", rr.recovery.v_q}}},
                   {"warnings", rr.recovery.warnings}};
    return rr;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    const auto tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
        out << text;
        if (!out) throw std::runtime_error("write failed for '" + p.string() + "'");
    }
    std::filesystem::rename(tmp, p);
}

} // namespace

ReplayResult replay_files(const std::string& csv_path, const std::string& sidecar_path) {
    json side;
    try {
        side = json::parse(read_file(sidecar_path));
    } catch (const json::parse_error& e) {
        throw ValidationError({"sidecar: JSON parse error: " + std::string(e.what())});
    }
    return replay_capture(read_file(csv_path), CaptureSidecar::from_json(side));
}

void write_replay_outputs(const ReplayResult& res, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::ostringstream os;
    os << "index,I,Q\n";
    for (std::size_t k = 0; k < res.recovery.i.size(); ++k)
        os << k << ',' << format_number(res.recovery.i[k]) << ',' << format_number(res.recovery.q[k]) << '\n';
    write_file(std::filesystem::path(dir) / "recovered.csv", os.str());
    write_file(std::filesystem::path(dir) / "manifest.json", res.manifest.dump(2) + "\n");
}

// ------------------------------------------------------------------ runs

RunResult run_experiment(const json& resolved) {
    const ExperimentConfig cfg = parse_config(resolved);
    RunResult res;
    json derived = json::object();
    const std::string& r = cfg.recipe;
    if (r == "sqnr-vs-b")
        run_sqnr(cfg, res, derived);
    else if (r == "sumrate-vs-antennas" || r == "power-scaling" || r == "sumrate-and-ee-vs-b")
        run_rate(cfg, res, derived);
    else
        run_recovery(cfg, res, derived);

    json files = json::array({"metrics.csv"});
    for (const auto& f : res.files) files.push_back(f.first);
    res.manifest = {{"tool", "lmimo"},
                    {"version", LMIMO_VERSION},
                    {"schema", kMetricsSchema},
                    {"recipe", cfg.recipe},
                    {"seed", cfg.seed},
                    {"trials", cfg.trials},
                    {"config_hash", config_hash(resolved)},
                    {"config", canonical_json(resolved)},
                    {"derived", derived},
                    {"files", files},
                    {"warnings", res.warnings}};
    return res;
}

void write_outputs(const RunResult& res, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    std::ostringstream os;
    write_metrics_csv(os, res.rows);
    write_file(base / "metrics.csv", os.str());
    for (const auto& [name, text] : res.files) write_file(base / name, text);
    write_file(base / "manifest.json", res.manifest.dump(2) + "\n");
}

} // namespace lmimo
