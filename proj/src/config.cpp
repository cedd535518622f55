// SPDX-License-Identifier: Apache-2.0
#include "lmimo/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lmimo/errors.hpp"
#include "lmimo/rng.hpp"

namespace lmimo {

using nlohmann::json;

namespace {

constexpr double kE = 2.71828182845904523536;

enum class Family { Recovery, Sqnr, Rate, Replay };

Family family_of(const std::string& recipe) {
    if (recipe == "sqnr-vs-b") return Family::Sqnr;
    if (recipe == "sumrate-vs-antennas" || recipe == "power-scaling" || recipe == "sumrate-and-ee-vs-b")
        return Family::Rate;
    if (recipe == "replay") return Family::Replay;
    return Family::Recovery;
}

// Walks one JSON object, recording a diagnostic for every field that is
// missing a valid value or not recognized.
class Reader {
public:
    Reader(const json& obj, std::string path, std::vector<std::string>& diags)
        : obj_(obj), path_(std::move(path)), diags_(diags) {
        if (!obj_.is_object()) fail("", "expected an object");
    }
    ~Reader() {
        if (!obj_.is_object()) return;
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key())) fail(it.key(), "unknown field");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return obj_.is_object() && obj_.contains(key);
    }
    const json* get(const std::string& key) {
        if (!has(key)) return nullptr;
        return &obj_.at(key);
    }

    void integer(const std::string& key, int& out, long lo, long hi) {
        long v = out;
        long_integer(key, v, lo, hi);
        out = static_cast<int>(v);
    }
    void long_integer(const std::string& key, long& out, long lo, long hi) {
        const json* v = get(key);
        if (!v) return;
        if (!v->is_number_integer()) return fail(key, "expected an integer");
        const long x = v->get<long>();
        if (x < lo || x > hi) return fail(key, "must be in " + std::to_string(lo) + ".." + std::to_string(hi));
        out = x;
    }
    void u64(const std::string& key, std::uint64_t& out) {
        const json* v = get(key);
        if (!v) return;
        if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0))
            return fail(key, "expected a non-negative integer");
        out = v->get<std::uint64_t>();
    }
    void number(const std::string& key, double& out, double lo, double hi, bool lo_open = false, bool hi_open = false) {
        const json* v = get(key);
        if (!v) return;
        if (!v->is_number()) return fail(key, "expected a number");
        const double x = v->get<double>();
        const bool ok = std::isfinite(x) && (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
        if (!ok) return fail(key, "must be in " + range(lo, hi, lo_open, hi_open));
        out = x;
    }
    void boolean(const std::string& key, bool& out) {
        const json* v = get(key);
        if (!v) return;
        if (!v->is_boolean()) return fail(key, "expected true or false");
        out = v->get<bool>();
    }
    void text(const std::string& key, std::string& out) {
        const json* v = get(key);
        if (!v) return;
        if (!v->is_string()) return fail(key, "expected a string");
        out = v->get<std::string>();
    }
    template <class E>
    void choice(const std::string& key, E& out, const std::map<std::string, E>& options) {
        const json* v = get(key);
        if (!v) return;
        std::string allowed;
        for (const auto& [k, _] : options) allowed += (allowed.empty() ? "" : ", ") + k;
        if (!v->is_string()) return fail(key, "expected one of " + allowed);
        auto it = options.find(v->get<std::string>());
        if (it == options.end()) return fail(key, "'" + v->get<std::string>() + "' is not one of " + allowed);
        out = it->second;
    }

    void fail(const std::string& key, const std::string& msg) {
        diags_.push_back(join(key) + ": " + msg);
    }
    std::string join(const std::string& key) const {
        if (key.empty()) return path_.empty() ? "<root>" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    static std::string fmt(double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    }
    static std::string range(double lo, double hi, bool lo_open, bool hi_open) {
        return std::string(lo_open ? "(" : "[") + fmt(lo) + ", " + fmt(hi) + (hi_open ? ")" : "]");
    }

    const json& obj_;
    std::string path_;
    std::vector<std::string>& diags_;
    std::set<std::string> seen_;
};

const std::map<std::string, CombinerKind> kCombiners = {{"mrc", CombinerKind::MRC}, {"zf", CombinerKind::ZF}};
const std::map<std::string, AdcKind> kAdcKinds = {{"modulo", AdcKind::Modulo}, {"conventional", AdcKind::Conventional}};

void read_power(Reader& r, const std::string& key, double& linear) {
    const json* v = r.get(key);
    if (!v) return;
    if (v->is_number()) {
        r.fail(key, "tag the unit explicitly, e.g. {\"value\": 10, \"unit\": \"dB\"}");
        return;
    }
    std::vector<std::string> local;
    double value = 0.0;
    std::string unit;
    {
        Reader p(*v, r.join(key), local);
        p.number("value", value, -300.0, 300.0);
        if (!p.has("value")) p.fail("value", "required");
        p.text("unit", unit);
        if (!p.has("unit")) p.fail("unit", "required");
    }
    if (!local.empty()) {
        for (auto& d : local) r.fail(key, d.substr(d.find(':') + 2) + " (" + d.substr(0, d.find(':')) + ")");
        return;
    }
    if (unit == "dB") {
        linear = std::pow(10.0, value / 10.0);
    } else if (unit == "linear") {
        if (!(value > 0.0)) return r.fail(key, "linear power must be > 0");
        linear = value;
    } else {
        r.fail(key + ".unit", "must be \"dB\" or \"linear\"");
    }
}

void read_scenario(const json& j, std::vector<std::string>& d, ScenarioConfig& s) {
    Reader r(j, "scenario", d);
    r.integer("n_users", s.n_users, 1, 1024);
    r.integer("n_antennas", s.n_antennas, 1, 4096);
    r.integer("channel_taps", s.channel_taps, 1, 1024);
    r.choice("channel", s.channel, std::map<std::string, ChannelModel>{{"rayleigh", ChannelModel::Rayleigh},
                                                                     {"identity", ChannelModel::Identity}});
    r.choice("large_scale", s.large_scale,
             std::map<std::string, LargeScaleModel>{{"unit", LargeScaleModel::Unit}, {"geometry", LargeScaleModel::Geometry}});
    if (const json* g = r.get("geometry")) {
        Reader gr(*g, "scenario.geometry", d);
        gr.number("radius_m", s.geometry.radius, 0.0, 1e7, true);
        gr.number("d_min_m", s.geometry.d_min, 0.0, 1e7, true);
        gr.number("pathloss_exponent", s.geometry.pathloss_exponent, 2.0, 10.0, true);
        gr.number("shadowing_db", s.geometry.shadowing_db, 0.0, 40.0);
        if (!(s.geometry.d_min < s.geometry.radius)) gr.fail("d_min_m", "must be below radius_m");
    }
    read_power(r, "p_u", s.p_u);
    r.boolean("power_scaling", s.power_scaling);
    r.choice("noise", s.noise, std::map<std::string, NoiseModel>{{"none", NoiseModel::None},
                                                                 {"white", NoiseModel::White},
                                                                 {"bandlimited", NoiseModel::Bandlimited}});
    if (const json* v = r.get("snr_db")) {
        if (v->is_null())
            s.snr_db.reset();
        else if (v->is_number() && std::isfinite(v->get<double>()))
            s.snr_db = v->get<double>();
        else
            r.fail("snr_db", "expected a number or null");
    }
}

void read_waveform(const json& j, std::vector<std::string>& d, WaveformConfig& w) {
    Reader r(j, "waveform", d);
    r.choice("kind", w.kind, std::map<std::string, WaveformKind>{{"single-carrier", WaveformKind::SingleCarrier},
                                                                 {"ofdm", WaveformKind::Ofdm}});
    if (r.has("qam")) {
        r.integer("qam", w.qam, 4, 1024);
        if (w.qam != 4 && w.qam != 16 && w.qam != 64 && w.qam != 256 && w.qam != 1024)
            r.fail("qam", "must be one of 4, 16, 64, 256, 1024");
    }
    r.integer("n_symbols", w.n_symbols, 1, 10000000);
    r.integer("subcarriers", w.subcarriers, 2, 65536);
    r.integer("cp_length", w.cp_length, 1, 65535);
    r.integer("n_blocks", w.n_blocks, 1, 100000);
    r.number("rolloff", w.rolloff, 0.0, 1.0);
    r.number("oversampling", w.oversampling, 1.0, 10000.0);
    r.integer("span", w.span, 1, 1000);
}

void read_adc(const json& j, std::vector<std::string>& d, AdcConfig& a) {
    Reader r(j, "adc", d);
    r.choice("kind", a.kind, kAdcKinds);
    r.integer("bits", a.bits, 0, 16);
    r.number("lambda_ratio", a.lambda_ratio, 0.0, 1.0, true);
    r.choice("conventional_law", a.law, std::map<std::string, ConventionalLaw>{{"uniform", ConventionalLaw::Uniform},
                                                                               {"companded", ConventionalLaw::Companded}});
    r.number("loading", a.loading, 0.0, 100.0, true);
}

void read_recovery(const json& j, std::vector<std::string>& d, RecoverySettings& s) {
    Reader r(j, "recovery", d);
    r.choice("beta_rule", s.beta_rule, std::map<std::string, BetaRule>{{"oracle", BetaRule::Oracle}, {"fixed", BetaRule::Fixed}});
    r.integer("beta_multiple", s.beta_multiple, 1, 100000);
    if (const json* v = r.get("order")) {
        if (v->is_null())
            s.order.reset();
        else if (v->is_number_integer() && v->get<long>() >= 1 && v->get<long>() <= 64)
            s.order = v->get<int>();
        else
            r.fail("order", "expected null or an integer in 1..64");
    }
    r.choice("order_rule", s.order_rule,
             std::map<std::string, OrderRule>{{"auto", OrderRule::Auto},
                                              {"algorithm", OrderRule::Algorithm},
                                              {"noise-aware", OrderRule::NoiseAware}});
    r.integer("noise_exponent", s.noise_exponent, 1, 16);
    r.boolean("order_search", s.order_search);
    r.choice("anchor", s.anchor, std::map<std::string, AnchorMode>{{"zero-mean", AnchorMode::ZeroMean}, {"none", AnchorMode::None}});
}

void read_sqnr(const json& j, std::vector<std::string>& d, SqnrSettings& s) {
    Reader r(j, "sqnr", d);
    r.choice("source", s.source, std::map<std::string, SourceModel>{{"uniform", SourceModel::Uniform}, {"gaussian", SourceModel::Gaussian}});
    r.long_integer("samples", s.samples, 2, 100000000);
}

void read_rate(const json& j, std::vector<std::string>& d, RateSettings& s) {
    Reader r(j, "rate", d);
    if (const json* c = r.get("curves")) {
        if (!c->is_array()) {
            r.fail("curves", "expected an array");
        } else {
            s.curves.clear();
            for (std::size_t i = 0; i < c->size(); ++i) {
                RateCurve curve;
                Reader cr((*c)[i], "rate.curves[" + std::to_string(i) + "]", d);
                cr.text("name", curve.name);
                if (curve.name.empty()) cr.fail("name", "required");
                cr.choice("detector", curve.detector, kCombiners);
                cr.choice("adc", curve.adc, kAdcKinds);
                if (const json* b = cr.get("bits")) {
                    if (b->is_null())
                        curve.bits.reset();
                    else if (b->is_number_integer() && b->get<long>() >= 0 && b->get<long>() <= 16)
                        curve.bits = b->get<int>();
                    else
                        cr.fail("bits", "expected null (from sweep) or an integer in 0..16");
                }
                s.curves.push_back(curve);
            }
        }
    }
    if (const json* v = r.get("zf_delta")) {
        if (v->is_string() && v->get<std::string>() == "auto")
            s.zf_delta.reset();
        else if (v->is_number() && v->get<double>() > 0.0 && v->get<double>() < 1.0)
            s.zf_delta = v->get<double>();
        else
            r.fail("zf_delta", "expected \"auto\" or a number in (0, 1)");
    }
    r.integer("calibration_trials", s.calibration_trials, 1, 1000000);
    r.boolean("approximations", s.approximations);
    if (const json* p = r.get("power_model")) {
        Reader pr(*p, "rate.power_model", d);
        pr.number("c0_w", s.power.c0, 0.0, 1e3, true);
        pr.number("c1_w", s.power.c1, 0.0, 1e3);
        pr.number("bandwidth_hz", s.power.bandwidth, 0.0, 1e12, true);
    }
}

bool integral(double v) { return std::isfinite(v) && v == std::floor(v); }

// Range checks for one sweep value, phrased against the sweep field.
void check_sweep_value(const std::string& axis, double v, std::size_t idx, std::vector<std::string>& d) {
    const std::string at = "sweep.values[" + std::to_string(idx) + "]";
    auto need_int = [&](double lo, double hi) {
        if (!integral(v) || v < lo || v > hi)
            d.push_back(at + ": " + axis + " must be an integer in " + std::to_string(static_cast<long>(lo)) + ".." +
                        std::to_string(static_cast<long>(hi)));
    };
    if (axis == "bits") need_int(0, 16);
    else if (axis == "n_antennas") need_int(1, 4096);
    else if (axis == "n_users") need_int(1, 1024);
    else if (axis == "qam") {
        if (v != 4 && v != 16 && v != 64 && v != 256 && v != 1024) d.push_back(at + ": qam must be one of 4, 16, 64, 256, 1024");
    } else if (axis == "lambda_ratio") {
        if (!(v > 0.0 && v <= 1.0)) d.push_back(at + ": lambda_ratio must be in (0, 1]");
    } else if (axis == "oversampling") {
        if (!(v >= 1.0)) d.push_back(at + ": oversampling must be >= 1");
    } else if (!std::isfinite(v)) {
        d.push_back(at + ": must be finite");
    }
}

void check_semantics(const ExperimentConfig& c, const std::string& where, std::vector<std::string>& d) {
    auto add = [&](const std::string& field, const std::string& msg) { d.push_back(field + ": " + msg + where); };
    const Family fam = family_of(c.recipe);
    const auto& s = c.scenario;
    const auto& w = c.waveform;
    if (fam == Family::Recovery || fam == Family::Replay) {
        if (w.kind == WaveformKind::Ofdm) {
            if (!(w.cp_length < w.subcarriers)) add("waveform.cp_length", "must be below waveform.subcarriers");
            if (s.channel_taps > w.cp_length) add("scenario.channel_taps", "must not exceed waveform.cp_length");
        } else if (s.channel_taps > 1) {
            add("scenario.channel_taps", "wideband single-carrier is not supported; use 1 or an OFDM waveform");
        }
        if (c.detector == CombinerKind::ZF && s.n_antennas < s.n_users)
            add("scenario.n_antennas", "zero forcing needs n_antennas >= n_users");
        if (s.channel == ChannelModel::Identity && s.n_antennas != s.n_users)
            add("scenario.channel", "identity channel needs n_antennas == n_users");
        if (s.channel == ChannelModel::Identity && s.channel_taps != 1)
            add("scenario.channel_taps", "identity channel has a single tap");
        if (s.snr_db && s.noise == NoiseModel::None) add("scenario.snr_db", "set scenario.noise to use an SNR");
        if (c.adc.kind == AdcKind::Modulo) {
            const int sps = static_cast<int>(std::ceil(w.oversampling * (1.0 + w.rolloff) - 1e-9));
            const double te = M_PI * (1.0 + w.rolloff) * kE / sps;
            if (!(te < 1.0)) add("waveform.oversampling", "too low for modulo recovery (T Omega e >= 1)");
        }
    }
    if (fam == Family::Rate) {
        if (c.rate.curves.empty()) add("rate.curves", "at least one curve is required");
        for (std::size_t i = 0; i < c.rate.curves.size(); ++i) {
            const auto& cv = c.rate.curves[i];
            if (cv.detector == CombinerKind::ZF && s.n_antennas <= s.n_users)
                add("rate.curves[" + std::to_string(i) + "]", "zero forcing needs n_antennas > n_users");
            if (!cv.bits && c.sweep.axis != "bits")
                add("rate.curves[" + std::to_string(i) + "].bits", "required unless the sweep axis is bits");
        }
        if (s.snr_db) add("scenario.snr_db", "not used by rate recipes; set scenario.p_u");
    }
    if (s.power_scaling && s.snr_db) add("scenario.power_scaling", "cannot be combined with scenario.snr_db");
}

void deep_merge(json& base, const json& patch) {
    if (!patch.is_object() || !base.is_object()) {
        base = patch;
        return;
    }
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
            deep_merge(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
}

} // namespace

std::vector<std::string> sweep_axes_for(const std::string& recipe) {
    switch (family_of(recipe)) {
    case Family::Sqnr: return {"bits", "lambda_ratio"};
    case Family::Rate: return {"n_antennas", "bits", "n_users", "p_u_db"};
    case Family::Replay: return {"bits", "lambda_ratio"};
    case Family::Recovery: break;
    }
    return {"bits", "n_antennas", "n_users", "lambda_ratio", "snr_db", "qam", "oversampling"};
}

nlohmann::json resolve_document(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ValidationError({"<root>: expected a JSON object"});
    if (!doc.contains("recipe") || !doc["recipe"].is_string()) throw ValidationError({"recipe: required string"});
    const std::string name = doc["recipe"].get<std::string>();
    const auto names = recipe_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw ValidationError({"recipe: unknown recipe '" + name + "'"});
    json base = recipe_document(name);
    deep_merge(base, doc);
    return base;
}

nlohmann::json load_document(const std::string& recipe_or_path) {
    const auto names = recipe_names();
    if (std::find(names.begin(), names.end(), recipe_or_path) != names.end()) return recipe_document(recipe_or_path);
    std::ifstream in(recipe_or_path);
    if (!in) throw InputError("'" + recipe_or_path + "' is neither a recipe name nor a readable file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError({"<file>: JSON parse error: " + std::string(e.what())});
    }
}

ExperimentConfig parse_config(const nlohmann::json& resolved) {
    std::vector<std::string> d;
    ExperimentConfig c;
    {
        Reader r(resolved, "", d);
        r.text("recipe", c.recipe);
        r.text("description", c.description);
        r.u64("seed", c.seed);
        r.integer("trials", c.trials, 1, 10000000);
        r.integer("jobs", c.jobs, 0, 4096);
        r.text("output", c.output);
        r.boolean("raw_rows", c.raw_rows);
        r.choice("detector", c.detector, kCombiners);
        if (r.has("schema") && resolved["schema"] != 1) r.fail("schema", "unsupported schema version");
        if (const json* v = r.get("scenario")) read_scenario(*v, d, c.scenario);
        if (const json* v = r.get("waveform")) read_waveform(*v, d, c.waveform);
        if (const json* v = r.get("adc")) read_adc(*v, d, c.adc);
        if (const json* v = r.get("recovery")) read_recovery(*v, d, c.recovery);
        if (const json* v = r.get("sqnr")) read_sqnr(*v, d, c.sqnr);
        if (const json* v = r.get("rate")) read_rate(*v, d, c.rate);
        if (const json* v = r.get("sweep")) {
            Reader sr(*v, "sweep", d);
            sr.text("axis", c.sweep.axis);
            if (const json* vals = sr.get("values")) {
                if (!vals->is_array() || vals->empty()) {
                    sr.fail("values", "expected a non-empty array of numbers");
                } else {
                    c.sweep.values.clear();
                    for (const auto& x : *vals) {
                        if (!x.is_number()) {
                            sr.fail("values", "expected numbers only");
                            break;
                        }
                        c.sweep.values.push_back(x.get<double>());
                    }
                }
            }
        }
    }
    const auto axes = sweep_axes_for(c.recipe);
    if (std::find(axes.begin(), axes.end(), c.sweep.axis) == axes.end()) {
        std::string allowed;
        for (const auto& a : axes) allowed += (allowed.empty() ? "" : ", ") + a;
        d.push_back("sweep.axis: '" + c.sweep.axis + "' is not a sweep axis of " + c.recipe + " (" + allowed + ")");
    } else if (d.empty()) {
        for (std::size_t i = 0; i < c.sweep.values.size(); ++i) {
            const std::size_t before = d.size();
            check_sweep_value(c.sweep.axis, c.sweep.values[i], i, d);
            if (d.size() == before)
                check_semantics(apply_sweep(c, c.sweep.values[i]), " (at sweep value " + std::to_string(i) + ")", d);
        }
    }
    // one diagnostic per distinct message
    std::vector<std::string> unique;
    for (auto& x : d)
        if (std::find(unique.begin(), unique.end(), x) == unique.end()) unique.push_back(x);
    if (!unique.empty()) throw ValidationError(unique);
    return c;
}

nlohmann::json canonical_json(const nlohmann::json& resolved) {
    json c = resolved;
    c.erase("jobs");
    c.erase("output");
    return c;
}

std::string config_hash(const nlohmann::json& resolved) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_label(canonical_json(resolved).dump())));
    return buf;
}

ExperimentConfig apply_sweep(const ExperimentConfig& cfg, double value) {
    ExperimentConfig c = cfg;
    const std::string& a = cfg.sweep.axis;
    const int iv = static_cast<int>(std::lround(value));
    if (a == "bits") c.adc.bits = iv;
    else if (a == "n_antennas") c.scenario.n_antennas = iv;
    else if (a == "n_users") c.scenario.n_users = iv;
    else if (a == "lambda_ratio") c.adc.lambda_ratio = value;
    else if (a == "snr_db") c.scenario.snr_db = value;
    else if (a == "qam") c.waveform.qam = iv;
    else if (a == "oversampling") c.waveform.oversampling = value;
    else if (a == "p_u_db") c.scenario.p_u = std::pow(10.0, value / 10.0);
    if (a == "bits")
        for (auto& cv : c.rate.curves)
            if (!cv.bits) cv.bits = iv;
    return c;
}

} // namespace lmimo
