// SPDX-License-Identifier: Apache-2.0
#include "lmimo/modulo.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "lmimo/errors.hpp"

namespace lmimo {

void ModuloConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("folding threshold lambda must be > 0");
    if (bits < 0 || bits > 16) throw InputError("bit depth must be in 0..16 (0: unquantized)");
}

double ModuloConfig::levels() const noexcept { return std::ldexp(1.0, bits); }

double ModuloConfig::step() const noexcept { return std::ldexp(2.0 * lambda, -bits); }

double modulo_fold(double x, double lambda) {
    if (!std::isfinite(x)) throw InputError("modulo_fold: non-finite input");
    if (!(lambda > 0.0)) throw InputError("modulo_fold: lambda must be > 0");
    if (x >= -lambda && x < lambda) return x;
    const double two = 2.0 * lambda;
    double y = x - two * std::floor((x + lambda) / two);
    // floor() on a value a hair below an integer can leave y at the closed end
    if (y >= lambda) y -= two;
    if (y < -lambda) y += two;
    return y;
}

double quantize_sample(double s, const ModuloConfig& cfg) {
    const double q0 = cfg.step();
    const double top = cfg.levels() / 2.0 - 1.0;
    double idx = std::floor(std::abs(s) / q0);
    if (idx > top) idx = top;
    const double mag = (idx + 0.5) * q0;
    return std::signbit(s) && s != 0.0 ? -mag : mag;
}

void FoldedFrame::validate() const {
    cfg.validate();
    if (quantized && cfg.bits < 1) throw InputError("folded frame: quantized frame needs a bit depth >= 1");
    if (i.size() != q.size()) throw InputError("folded frame: I and Q lengths differ");
    const double q0 = cfg.step();
    auto check = [&](const std::vector<double>& v, const char* name) {
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double s = v[k];
            if (!(s >= -cfg.lambda && s < cfg.lambda))
                throw InputError(std::string("folded frame: ") + name + "[" + std::to_string(k) +
                                 "] outside [-lambda, lambda)");
            if (quantized) {
                const double u = s / q0 - 0.5;
                if (std::abs(u - std::round(u)) > 1e-9)
                    throw InputError(std::string("folded frame: ") + name + "[" + std::to_string(k) +
                                     "] is not a quantizer level");
            }
        }
    };
    check(i, "I");
    check(q, "Q");
}

FoldedFrame fold_waveform(const BasebandWaveform& w, const ModuloConfig& cfg) {
    cfg.validate();
    FoldedFrame f;
    f.cfg = cfg;
    f.sample_interval = w.sample_interval;
    f.i.resize(w.samples.size());
    f.q.resize(w.samples.size());
    for (std::size_t k = 0; k < w.samples.size(); ++k) {
        f.i[k] = modulo_fold(w.samples[k].real(), cfg.lambda);
        f.q[k] = modulo_fold(w.samples[k].imag(), cfg.lambda);
    }
    return f;
}

FoldedFrame quantize(const FoldedFrame& f) {
    if (f.quantized) throw InputError("quantize: frame already quantized");
    f.cfg.validate();
    if (f.cfg.bits < 1) throw InputError("quantize: bit depth must be >= 1");
    FoldedFrame out = f;
    for (auto& s : out.i) s = quantize_sample(s, f.cfg);
    for (auto& s : out.q) s = quantize_sample(s, f.cfg);
    out.quantized = true;
    return out;
}

namespace {

void append_double(std::string& line, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    line.append(buf, res.ptr);
}

double parse_double(std::string_view field, std::size_t line_no) {
    double v = 0.0;
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
        field.remove_suffix(1);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw InputError("frame CSV line " + std::to_string(line_no) + ": cannot parse '" +
                         std::string(field) + "'");
    return v;
}

} // namespace

void write_frame_csv(std::ostream& os, const FoldedFrame& f) {
    os << "index,I,Q\n";
    std::string line;
    for (std::size_t k = 0; k < f.size(); ++k) {
        line = std::to_string(k);
        line += ',';
        append_double(line, f.i[k]);
        line += ',';
        append_double(line, f.q[k]);
        line += '\n';
        os << line;
    }
}

FoldedFrame read_frame_csv(std::istream& is) {
    FoldedFrame f;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line == "\r") continue;
        if (!header_seen) {
            header_seen = true;
            std::string head = line;
            if (!head.empty() && head.back() == '\r') head.pop_back();
            if (head == "index,I,Q") continue;
            if (!head.empty() && std::isalpha(static_cast<unsigned char>(head[0])))
                throw InputError("frame CSV header must be index,I,Q, got '" + head + "'");
        }
        std::string_view sv(line);
        const auto c1 = sv.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : sv.find(',', c1 + 1);
        if (c2 == std::string_view::npos)
            throw InputError("frame CSV line " + std::to_string(line_no) + ": expected index,I,Q");
        const double idx = parse_double(sv.substr(0, c1), line_no);
        if (idx != static_cast<double>(f.i.size()))
            throw InputError("frame CSV line " + std::to_string(line_no) + ": index out of sequence");
        f.i.push_back(parse_double(sv.substr(c1 + 1, c2 - c1 - 1), line_no));
        f.q.push_back(parse_double(sv.substr(c2 + 1), line_no));
    }
    if (f.i.empty()) throw InputError("frame CSV contains no samples");
    return f;
}

} // namespace lmimo
