// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmimo/channel.hpp"
#include "lmimo/rate.hpp"
#include "lmimo/recovery.hpp"
#include "lmimo/sqnr.hpp"

namespace lmimo {

enum class ChannelModel { Rayleigh, Identity };
enum class LargeScaleModel { Unit, Geometry };
enum class NoiseModel { None, White, Bandlimited };
enum class WaveformKind { SingleCarrier, Ofdm };
enum class BetaRule { Oracle, Fixed };
enum class SourceModel { Uniform, Gaussian };

struct ScenarioConfig {
    int n_users = 1;
    int n_antennas = 4;
    int channel_taps = 1;
    ChannelModel channel = ChannelModel::Rayleigh;
    LargeScaleModel large_scale = LargeScaleModel::Unit;
    CellGeometry geometry{};
    double p_u = 10.0;  // linear
    bool power_scaling = false;  // when set, p_u is E_u and each user gets E_u / n_antennas
    NoiseModel noise = NoiseModel::None;
    std::optional<double> snr_db;  // per-antenna receive SNR; overrides p_u when set
};

struct WaveformConfig {
    WaveformKind kind = WaveformKind::SingleCarrier;
    int qam = 1024;
    int n_symbols = 2000;
    int subcarriers = 256;
    int cp_length = 32;
    int n_blocks = 4;
    double rolloff = 0.5;
    double oversampling = 50.0;  // f_s / f_Nyquist
    int span = 16;
};

struct AdcConfig {
    AdcKind kind = AdcKind::Modulo;
    int bits = 2;  // 0: no quantization
    double lambda_ratio = 0.1;
    ConventionalLaw law = ConventionalLaw::Companded;
    double loading = 1.7320508075688772;
};

struct RecoverySettings {
    BetaRule beta_rule = BetaRule::Oracle;
    int beta_multiple = 5;  // beta = multiple * 2 lambda under the fixed rule
    std::optional<int> order;
    OrderRule order_rule = OrderRule::Auto;
    int noise_exponent = 1;
    bool order_search = true;
    AnchorMode anchor = AnchorMode::ZeroMean;
};

struct SqnrSettings {
    SourceModel source = SourceModel::Gaussian;
    long samples = 1000000;
};

struct RateCurve {
    std::string name;
    CombinerKind detector = CombinerKind::MRC;
    AdcKind adc = AdcKind::Modulo;
    std::optional<int> bits;  // unset: taken from the sweep; 0: infinite resolution
};

struct RateSettings {
    std::vector<RateCurve> curves;
    std::optional<double> zf_delta;  // unset: calibrated
    int calibration_trials = 500;
    PowerModel power{};
    bool approximations = true;
};

struct SweepConfig {
    std::string axis = "bits";
    std::vector<double> values{2};
};

struct ExperimentConfig {
    std::string recipe;
    std::string description;
    std::uint64_t seed = 1;
    int trials = 1;
    int jobs = 0;  // 0: hardware concurrency
    std::string output = "out";
    bool raw_rows = false;
    CombinerKind detector = CombinerKind::ZF;
    ScenarioConfig scenario;
    WaveformConfig waveform;
    AdcConfig adc;
    RecoverySettings recovery;
    SqnrSettings sqnr;
    RateSettings rate;
    SweepConfig sweep;
};

/// Recipe names in listing order.
std::vector<std::string> recipe_names();
/// Embedded recipe document; throws InputError for an unknown name.
nlohmann::json recipe_document(const std::string& name);

/// Resolves a document against its recipe: the recipe named in `doc` supplies
/// every field `doc` leaves out.
nlohmann::json resolve_document(const nlohmann::json& doc);

/// Parses a resolved document. Throws ValidationError listing every bad field.
ExperimentConfig parse_config(const nlohmann::json& resolved);

/// Loads a recipe name or a JSON file path.
nlohmann::json load_document(const std::string& recipe_or_path);

/// Canonical JSON of the run-defining fields (excludes jobs and output).
nlohmann::json canonical_json(const nlohmann::json& resolved);
std::string config_hash(const nlohmann::json& resolved);

/// Copy of `cfg` with the sweep axis set to `value`.
ExperimentConfig apply_sweep(const ExperimentConfig& cfg, double value);

/// Sweep axes a recipe accepts.
std::vector<std::string> sweep_axes_for(const std::string& recipe);

} // namespace lmimo
