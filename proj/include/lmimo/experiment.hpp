// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lmimo/config.hpp"
#include "lmimo/csv.hpp"
#include "lmimo/recovery.hpp"

namespace lmimo {

struct RunResult {
    std::vector<MetricRow> rows;
    nlohmann::json manifest;
    // Recipe-specific outputs (constellation, eye traces, captures) as
    // (file name, contents).
    std::vector<std::pair<std::string, std::string>> files;
    std::vector<std::string> warnings;
};

/// Runs a resolved, validated document. Output is a function of the
/// document alone; `jobs` only changes wall time.
RunResult run_experiment(const nlohmann::json& resolved);

/// Writes metrics.csv, manifest.json and the extra files into `dir`.
void write_outputs(const RunResult& res, const std::string& dir);

/// Acquisition parameters that travel with a folded capture.
struct CaptureSidecar {
    double lambda = 1.0;
    int bits = 0;  // 0: unquantized samples
    double sample_interval = 1.0;
    double bandwidth = 1.0;  // rad/s
    double beta = 2.0;
    std::optional<int> order;
    OrderRule order_rule = OrderRule::Auto;
    int noise_exponent = 1;
    AnchorMode anchor = AnchorMode::ZeroMean;

    nlohmann::json to_json() const;
    /// Throws ValidationError listing every bad field.
    static CaptureSidecar from_json(const nlohmann::json& j);
};

struct ReplayResult {
    FoldedFrame frame;
    RecoveryResult recovery;
    nlohmann::json manifest;
};

/// Recovers a capture given as CSV text plus its sidecar.
ReplayResult replay_capture(const std::string& csv_text, const CaptureSidecar& sidecar);
/// Reads both files from disk.
ReplayResult replay_files(const std::string& csv_path, const std::string& sidecar_path);
/// Writes recovered.csv (`index,I,Q`) and manifest.json into `dir`.
void write_replay_outputs(const ReplayResult& res, const std::string& dir);

} // namespace lmimo
