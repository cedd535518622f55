// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lmimo {

inline constexpr const char* kMetricsSchema = "lmimo-metrics v1";

/// One metrics row. NaN fields are written as empty cells.
struct MetricRow {
    static constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    std::string recipe;
    std::uint64_t seed = 0;
    std::string axis;
    double value = nan;
    std::string series;
    std::optional<int> trial;  // unset on aggregated rows
    bool agg = true;
    int n = 0;  // trials contributing
    double mse = nan, mse_se = nan;
    double ber = nan, ber_se = nan;
    double ser = nan, ser_se = nan;
    double evm = nan;
    double sqnr_db = nan, sqnr_db_se = nan, sqnr_analytic_db = nan;
    double sumrate = nan, sumrate_se = nan;
    double xi = nan, xi_se = nan;
    double gamma = nan;
    std::optional<int> order;
    std::string flags;  // ';'-separated
};

const std::vector<std::string>& metric_columns();

/// Shortest round-trip decimal form; empty for NaN.
std::string format_number(double v);

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows);
/// Parses a metrics file. Throws InputError on a schema or column mismatch.
std::vector<MetricRow> read_metrics_csv(std::istream& is);

struct ConstellationPoint {
    int trial = 0;
    int user = 0;
    double re = 0.0, im = 0.0;
};
void write_constellation_csv(std::ostream& os, const std::vector<ConstellationPoint>& pts);

/// Long format `trace_id,t,value`.
void write_eye_csv(std::ostream& os, const std::vector<double>& t, const std::vector<std::vector<double>>& traces);

} // namespace lmimo
