// SPDX-License-Identifier: Apache-2.0
#include "lmimo/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "lmimo/errors.hpp"

namespace lmimo {

const std::vector<std::string>& metric_columns() {
    static const std::vector<std::string> cols = {
        "recipe", "seed",  "axis",    "value", "series",     "trial",      "agg",
        "n",      "mse",   "mse_se",  "ber",   "ber_se",     "ser",        "ser_se",
        "evm",    "sqnr_db", "sqnr_db_se", "sqnr_analytic_db", "sumrate", "sumrate_se", "xi",
        "xi_se",  "gamma", "order",   "flags"};
    return cols;
}

std::string format_number(double v) {
    if (std::isnan(v)) return {};
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                in_quotes = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

double parse_double(const std::string& s) {
    if (s.empty()) return MetricRow::nan;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw InputError("metrics CSV: bad number '" + s + "'");
    return v;
}

template <class T>
T parse_int(const std::string& s) {
    T v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw InputError("metrics CSV: bad integer '" + s + "'");
    return v;
}

} // namespace

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
    os << "# " << kMetricsSchema << '\n';
    const auto& cols = metric_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto& r : rows) {
        os << quote(r.recipe) << ',' << r.seed << ',' << quote(r.axis) << ',' << format_number(r.value) << ','
           << quote(r.series) << ',' << (r.trial ? std::to_string(*r.trial) : "") << ',' << (r.agg ? "true" : "false")
           << ',' << r.n;
        for (double v : {r.mse, r.mse_se, r.ber, r.ber_se, r.ser, r.ser_se, r.evm, r.sqnr_db, r.sqnr_db_se,
                         r.sqnr_analytic_db, r.sumrate, r.sumrate_se, r.xi, r.xi_se, r.gamma})
            os << ',' << format_number(v);
        os << ',' << (r.order ? std::to_string(*r.order) : "") << ',' << quote(r.flags) << '\n';
    }
}

std::vector<MetricRow> read_metrics_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != std::string("# ") + kMetricsSchema)
        throw InputError("metrics CSV: missing '# " + std::string(kMetricsSchema) + "' header");
    if (!std::getline(is, line)) throw InputError("metrics CSV: missing column header");
    const auto& cols = metric_columns();
    const auto header = split_line(line);
    if (header != cols) throw InputError("metrics CSV: column header does not match the schema");
    std::vector<MetricRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c = split_line(line);
        if (c.size() != cols.size()) throw InputError("metrics CSV: row has " + std::to_string(c.size()) + " cells");
        MetricRow r;
        r.recipe = c[0];
        r.seed = parse_int<std::uint64_t>(c[1]);
        r.axis = c[2];
        r.value = parse_double(c[3]);
        r.series = c[4];
        if (!c[5].empty()) r.trial = parse_int<int>(c[5]);
        if (c[6] != "true" && c[6] != "false") throw InputError("metrics CSV: agg must be true or false");
        r.agg = c[6] == "true";
        r.n = parse_int<int>(c[7]);
        double* fields[] = {&r.mse,     &r.mse_se,     &r.ber,     &r.ber_se,  &r.ser,
                            &r.ser_se,  &r.evm,        &r.sqnr_db, &r.sqnr_db_se, &r.sqnr_analytic_db,
                            &r.sumrate, &r.sumrate_se, &r.xi,      &r.xi_se,   &r.gamma};
        for (std::size_t k = 0; k < std::size(fields); ++k) *fields[k] = parse_double(c[8 + k]);
        if (!c[23].empty()) r.order = parse_int<int>(c[23]);
        r.flags = c[24];
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_constellation_csv(std::ostream& os, const std::vector<ConstellationPoint>& pts) {
    os << "trial,user,re,im\n";
    for (const auto& p : pts)
        os << p.trial << ',' << p.user << ',' << format_number(p.re) << ',' << format_number(p.im) << '\n';
}

void write_eye_csv(std::ostream& os, const std::vector<double>& t, const std::vector<std::vector<double>>& traces) {
    os << "trace_id,t,value\n";
    for (std::size_t k = 0; k < traces.size(); ++k)
        for (std::size_t j = 0; j < t.size() && j < traces[k].size(); ++j)
            os << k << ',' << format_number(t[j]) << ',' << format_number(traces[k][j]) << '\n';
}

} // namespace lmimo
