// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "lmimo/channel.hpp"
#include "lmimo/signal.hpp"

namespace lmimo {

enum class CombinerKind { MRC, ZF };

/// Condition number of H^H H.
double gram_condition(const Eigen::MatrixXcd& H);

/// MRC: A = H. ZF: A = H (H^H H)^-1; throws RankError above cond 1e12.
Eigen::MatrixXcd build_combiner(const Eigen::MatrixXcd& H, CombinerKind kind);

/// Real diagonal of A^H H: the useful gain each user sees after combining.
Eigen::VectorXd combiner_gain(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& H);

/// r is N x n (antennas by samples); returns A^H r, M x n.
Eigen::MatrixXcd detect_narrowband(const Eigen::MatrixXcd& r, const Eigen::MatrixXcd& H, CombinerKind kind);

/// r is N x (n_blocks (K + N_cp)) of CP-extended blocks. Each block is
/// CP-stripped and transformed, then combined per subcarrier with the
/// effective channel sqrt(K) H_hat[nu]. Returns one M x K matrix per block.
/// When `gains` is given it receives the combiner gain of every subcarrier.
std::vector<Eigen::MatrixXcd> detect_ofdm(const Eigen::MatrixXcd& r, const ChannelRealization& ch,
                                          const OfdmConfig& cfg, CombinerKind kind,
                                          std::vector<Eigen::VectorXd>* gains = nullptr);

struct Decision {
    std::vector<int> indices;
    std::vector<std::uint8_t> bits;
    CVec symbols;
};

Decision decide_symbols(std::span<const cplx> soft, const Constellation& c);

/// One user's transmitted and received streams. Empty pairs are skipped.
struct UserStreams {
    std::vector<std::uint8_t> tx_bits, rx_bits;
    std::vector<int> tx_symbols, rx_symbols;
    CVec tx_points, rx_soft;               // for EVM
    std::vector<double> tx_wave, rx_wave;  // for MSE
};

struct UserReport {
    double mse = 0.0, ber = 0.0, ser = 0.0, evm = 0.0;
};

struct DetectionReport {
    double mse = 0.0;
    double ber = 0.0;
    double ser = 0.0;
    double evm = 0.0;
    std::vector<UserReport> per_user;
};

/// Pooled over users: MSE = mean squared sample error, BER/SER = error
/// counts over totals, EVM = rms error over rms reference. Metrics without
/// data are NaN.
DetectionReport error_metrics(std::span<const UserStreams> users);

struct EyeTraces {
    std::vector<double> t;                    // seconds, 0 .. 2 T_rep
    std::vector<std::vector<double>> values;  // in-phase component per trace
};

/// Two-symbol-period windows starting at successive symbol instants.
EyeTraces eye_traces(const BasebandWaveform& w, const PulseShape& p);

} // namespace lmimo
