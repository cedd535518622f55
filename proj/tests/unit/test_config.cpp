// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "lmimo/config.hpp"
#include "lmimo/csv.hpp"
#include "lmimo/errors.hpp"
#include "lmimo/experiment.hpp"
#include "lmimo/rng.hpp"

using namespace lmimo;
using nlohmann::json;

namespace {

std::vector<std::string> diagnostics_of(const json& doc) {
    try {
        parse_config(resolve_document(doc));
    } catch (const ValidationError& e) {
        return e.diagnostics();
    }
    return {};
}

bool mentions(const std::vector<std::string>& diags, const std::string& field) {
    return std::any_of(diags.begin(), diags.end(), [&](const std::string& d) { return d.find(field) != std::string::npos; });
}

std::string metrics_text(const RunResult& r) {
    std::ostringstream os;
    write_metrics_csv(os, r.rows);
    return os.str();
}

json small_recovery(int jobs) {
    return json{{"recipe", "recovery-qam"},
                {"trials", 3},
                {"jobs", jobs},
                {"waveform", {{"n_symbols", 300}}},
                {"scenario", {{"n_antennas", 3}}},
                {"sweep", {{"axis", "bits"}, {"values", {2, 6}}}}};
}

} // namespace

TEST_SUITE("rng") {

TEST_CASE("streams are reproducible") {
    Rng a = derive_rng(5, 3, "channel"), b = derive_rng(5, 3, "channel");
    for (int k = 0; k < 1000; ++k) REQUIRE(a() == b());
}

TEST_CASE("different trials give disjoint draws") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t t = 0; t < 4; ++t) {
        Rng r = derive_rng(1, t, "data");
        for (int k = 0; k < 10000; ++k) CHECK(seen.insert(r()).second);
    }
}

TEST_CASE("labels in one trial are uncorrelated") {
    Rng a = derive_rng(1, 0, "channel"), b = derive_rng(1, 0, "noise");
    const int n = 100000;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (int k = 0; k < n; ++k) {
        const double x = standard_normal(a), y = standard_normal(b);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 4.0 / std::sqrt(n));
    CHECK(hash_label("channel") != hash_label("noise"));
}

TEST_CASE("complex normal variance") {
    Rng r = derive_rng(2, 0, "cn");
    double acc = 0.0, re = 0.0;
    for (int k = 0; k < 200000; ++k) {
        const auto z = complex_normal(r, 3.0);
        acc += std::norm(z);
        re += z.real() * z.real();
    }
    CHECK(acc / 200000 == doctest::Approx(3.0).epsilon(0.02));
    CHECK(re / 200000 == doctest::Approx(1.5).epsilon(0.02));
}

}

TEST_SUITE("config") {

TEST_CASE("every shipped recipe validates") {
    const auto names = recipe_names();
    CHECK(names.size() == 10);
    for (const auto& n : names) {
        INFO(n);
        const json doc = recipe_document(n);
        const ExperimentConfig c = parse_config(resolve_document(doc));
        CHECK(c.recipe == n);
        CHECK_FALSE(c.sweep.values.empty());
        const auto axes = sweep_axes_for(n);
        CHECK(std::find(axes.begin(), axes.end(), c.sweep.axis) != axes.end());
    }
}

TEST_CASE("invalid fields each get a named diagnostic") {
    const json doc{{"recipe", "recovery-qam"},
                   {"trials", 0},
                   {"adc", {{"bits", 40}, {"lambda_ratio", -1.0}}},
                   {"waveform", {{"qam", 8}}},
                   {"scenario", {{"n_antennas", 0}, {"colour", "red"}}},
                   {"sweep", {{"axis", "wavelength"}}}};
    const auto d = diagnostics_of(doc);
    CHECK(d.size() >= 7);
    CHECK(mentions(d, "trials"));
    CHECK(mentions(d, "adc.bits"));
    CHECK(mentions(d, "adc.lambda_ratio"));
    CHECK(mentions(d, "waveform.qam"));
    CHECK(mentions(d, "scenario.n_antennas"));
    CHECK(mentions(d, "scenario.colour"));
    CHECK(mentions(d, "sweep.axis"));
}

TEST_CASE("semantic checks") {
    CHECK(mentions(diagnostics_of({{"recipe", "recovery-ofdm"}, {"waveform", {{"cp_length", 8}}}, {"scenario", {{"channel_taps", 15}}}}),
                   "channel_taps"));
    CHECK_FALSE(diagnostics_of({{"recipe", "recovery-qam"}, {"detector", "zf"}, {"scenario", {{"n_antennas", 2}, {"n_users", 3}}}}).empty());
    CHECK_FALSE(diagnostics_of({{"recipe", "recovery-qam"}, {"scenario", {{"snr_db", 30}}}}).empty());
    CHECK(mentions(diagnostics_of({{"recipe", "recovery-qam"}, {"waveform", {{"oversampling", 2}}}}), "oversampling"));
    CHECK(mentions(diagnostics_of({{"recipe", "recovery-qam"}, {"scenario", {{"p_u", 10}}}}), "p_u"));
    CHECK_FALSE(diagnostics_of({{"recipe", "sumrate-vs-antennas"}, {"rate", {{"zf_delta", 1.5}}}}).empty());
    CHECK_FALSE(diagnostics_of({{"recipe", "sumrate-vs-antennas"}, {"rate", {{"curves", json::array()}}}}).empty());
}

TEST_CASE("unknown recipes and documents") {
    CHECK_THROWS_AS(resolve_document(json{{"recipe", "nope"}}), ValidationError);
    CHECK_THROWS_AS(resolve_document(json{{"trials", 2}}), ValidationError);
    CHECK_THROWS_AS(load_document("/nonexistent/config.json"), InputError);
    CHECK_THROWS_AS(recipe_document("nope"), InputError);
}

TEST_CASE("config hash ignores jobs and output only") {
    const json base = resolve_document(json{{"recipe", "sqnr-vs-b"}});
    json other = base;
    other["jobs"] = 7;
    other["output"] = "elsewhere";
    CHECK(config_hash(base) == config_hash(other));
    CHECK(config_hash(base).size() == 16);
    other["seed"] = 2;
    CHECK(config_hash(base) != config_hash(other));
}

TEST_CASE("overrides merge into the recipe") {
    const json r = resolve_document(json{{"recipe", "recovery-qam"}, {"adc", {{"bits", 5}}}});
    CHECK(r["adc"]["bits"] == 5);
    CHECK(r["adc"]["lambda_ratio"] == 0.1);
    CHECK(r["waveform"]["qam"] == 1024);
}

TEST_CASE("sweep application") {
    const ExperimentConfig c = parse_config(resolve_document(json{{"recipe", "sumrate-and-ee-vs-b"}}));
    const ExperimentConfig b4 = apply_sweep(c, 4);
    for (const auto& curve : b4.rate.curves) CHECK(curve.bits == 4);
    const ExperimentConfig p = apply_sweep(parse_config(resolve_document(json{{"recipe", "power-scaling"}, {"sweep", {{"axis", "p_u_db"}, {"values", {20}}}}})), 20);
    CHECK(p.scenario.p_u == doctest::Approx(100.0));
    const ExperimentConfig n = apply_sweep(parse_config(resolve_document(json{{"recipe", "recovery-qam"}, {"sweep", {{"axis", "n_antennas"}, {"values", {9}}}}})), 9);
    CHECK(n.scenario.n_antennas == 9);
}

}

TEST_SUITE("csv") {

TEST_CASE("number formatting") {
    CHECK(format_number(MetricRow::nan).empty());
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(1e-10) == "1e-10");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    const double x = 0.1 + 0.2;
    CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("metrics round trip") {
    MetricRow a;
    a.recipe = "recovery-qam";
    a.seed = 9;
    a.axis = "bits";
    a.value = 2;
    a.series = "modulo/zf";
    a.n = 3;
    a.mse = 3.8e-4;
    a.ber = 0.0;
    a.order = 2;
    a.flags = "order_fallback;noise_condition_unmet";
    MetricRow b = a;
    b.series = "with, comma \"quoted\"";
    b.trial = 1;
    b.agg = false;
    b.sqnr_db = std::numeric_limits<double>::infinity();
    b.order.reset();
    std::stringstream ss;
    write_metrics_csv(ss, {a, b});
    const std::string text = ss.str();
    CHECK(text.rfind(std::string("# ") + kMetricsSchema + "\n", 0) == 0);
    const auto rows = read_metrics_csv(ss);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].mse == a.mse);
    CHECK(rows[0].order == 2);
    CHECK(rows[0].flags == a.flags);
    CHECK(std::isnan(rows[0].sumrate));
    CHECK(rows[1].series == b.series);
    CHECK(rows[1].trial == 1);
    CHECK_FALSE(rows[1].agg);
    CHECK(std::isinf(rows[1].sqnr_db));
    CHECK_FALSE(rows[1].order.has_value());
    std::ostringstream again;
    write_metrics_csv(again, rows);
    CHECK(again.str() == text);
}

TEST_CASE("schema mismatch is rejected") {
    std::istringstream no_tag("recipe,seed\n");
    CHECK_THROWS_AS(read_metrics_csv(no_tag), InputError);
    std::ostringstream os;
    write_metrics_csv(os, {});
    std::string t = os.str();
    t.replace(t.find("mse,"), 4, "msx,");
    std::istringstream bad(t);
    CHECK_THROWS_AS(read_metrics_csv(bad), InputError);
    CHECK(metric_columns().size() == 25);
}

TEST_CASE("constellation and eye dumps") {
    std::ostringstream c;
    write_constellation_csv(c, {{0, 1, 0.5, -0.25}});
    CHECK(c.str() == "trial,user,re,im\n0,1,0.5,-0.25\n");
    std::ostringstream e;
    write_eye_csv(e, {0.0, 0.5}, {{1.0, 2.0}, {3.0, 4.0}});
    CHECK(e.str() == "trace_id,t,value\n0,0,1\n0,0.5,2\n1,0,3\n1,0.5,4\n");
}

}

TEST_SUITE("runner") {

TEST_CASE("identical documents give identical output") {
    const json doc = resolve_document(small_recovery(1));
    const RunResult a = run_experiment(doc), b = run_experiment(doc);
    CHECK(metrics_text(a) == metrics_text(b));
    CHECK(a.manifest.dump() == b.manifest.dump());
    CHECK(a.rows.size() == 2);
}

TEST_CASE("worker count does not change results") {
    const RunResult a = run_experiment(resolve_document(small_recovery(1)));
    const RunResult b = run_experiment(resolve_document(small_recovery(3)));
    CHECK(metrics_text(a) == metrics_text(b));
    json ra = resolve_document(json{{"recipe", "sumrate-and-ee-vs-b"}, {"trials", 20}, {"jobs", 1}, {"rate", {{"calibration_trials", 20}}}, {"sweep", {{"axis", "bits"}, {"values", {1, 3}}}}});
    json rb = ra;
    rb["jobs"] = 4;
    CHECK(metrics_text(run_experiment(ra)) == metrics_text(run_experiment(rb)));
}

TEST_CASE("raw rows keep every trial") {
    json doc = small_recovery(0);
    doc["raw_rows"] = true;
    const RunResult r = run_experiment(resolve_document(doc));
    CHECK(r.rows.size() == 2 + 2 * 3);
    CHECK(std::count_if(r.rows.begin(), r.rows.end(), [](const MetricRow& m) { return !m.agg; }) == 6);
}

TEST_CASE("sqnr recipe row count") {
    const RunResult r = run_experiment(resolve_document(json{{"recipe", "sqnr-vs-b"}, {"sqnr", {{"samples", 20000}}}}));
    CHECK(r.rows.size() == 24);
    for (const auto& row : r.rows) CHECK(row.agg);
}

TEST_CASE("manifest contents") {
    const RunResult r = run_experiment(resolve_document(small_recovery(0)));
    const json& m = r.manifest;
    CHECK(m["recipe"] == "recovery-qam");
    CHECK(m["config_hash"] == config_hash(resolve_document(small_recovery(0))));
    CHECK(m["derived"].contains("omega_te"));
    CHECK(m["derived"]["samples_per_symbol"] == 75);
    CHECK(m["schema"] == kMetricsSchema);
}

TEST_CASE("synthetic capture round trip through replay") {
    Rng rng = derive_rng(3, 0, "capture");
    const auto s = testing::random_bandlimited(rng, 40, 2.0);
    CaptureSidecar side;
    side.bandwidth = 2.0;
    side.sample_interval = 0.4 / (std::exp(1.0) * 2.0);
    const std::size_t n = static_cast<std::size_t>(40.0 * s.spacing / side.sample_interval);
    auto r = s.sample(side.sample_interval, n);
    double mean = 0.0;
    for (double v : r) mean += v / static_cast<double>(n);
    for (auto& v : r) v -= mean;
    side.lambda = testing::max_abs(r) / 7.0;
    side.beta = beta_for(s.sup(side.sample_interval, n) + std::abs(mean), side.lambda);

    FoldedFrame f;
    f.cfg = ModuloConfig{side.lambda, 0};
    for (double v : r) {
        f.i.push_back(modulo_fold(v, side.lambda));
        f.q.push_back(modulo_fold(-v, side.lambda));
    }
    std::ostringstream csv;
    write_frame_csv(csv, f);
    const CaptureSidecar back = CaptureSidecar::from_json(json::parse(side.to_json().dump()));
    CHECK(back.to_json() == side.to_json());

    const ReplayResult res = replay_capture(csv.str(), back);
    double err = 0.0;
    for (std::size_t k = 0; k < n; ++k) err = std::max({err, std::abs(res.recovery.i[k] - r[k]), std::abs(res.recovery.q[k] + r[k])});
    CHECK(err <= 1e-9 * side.beta);
}

TEST_CASE("sidecar validation") {
    json j = CaptureSidecar{}.to_json();
    j["extra"] = 1;
    CHECK_THROWS_AS(CaptureSidecar::from_json(j), ValidationError);
    j = CaptureSidecar{}.to_json();
    j["beta"] = 3.0;
    CHECK_THROWS_AS(CaptureSidecar::from_json(j), ValidationError);
    j = CaptureSidecar{}.to_json();
    j["format"] = "other";
    CHECK_THROWS_AS(CaptureSidecar::from_json(j), ValidationError);
}

}
