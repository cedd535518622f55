// SPDX-License-Identifier: Apache-2.0
#include "lmimo/sqnr.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>

#include "lmimo/errors.hpp"

namespace lmimo {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double phi(double x) { return std::isinf(x) ? 0.0 : kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double x_phi(double x) { return std::isinf(x) ? 0.0 : x * phi(x); }

// P(a < X < b) for standard normal X, evaluated on the tail that avoids cancellation.
double normal_mass(double a, double b) {
    if (a >= 0.0) return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
    if (b <= 0.0) return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
    return 1.0 - 0.5 * std::erfc(b * kInvSqrt2) - 0.5 * std::erfc(-a * kInvSqrt2);
}

double normal_quantile(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

double cell_uniform(const UniformDensity& d, double a, double b, double g) {
    const double lo = std::max(a, -d.half_width);
    const double hi = std::min(b, d.half_width);
    if (!(lo < hi)) return 0.0;
    const double u = hi - g, l = lo - g;
    return (u * u * u - l * l * l) / (6.0 * d.half_width);
}

double cell_gaussian(const GaussianDensity& d, double a, double b, double g) {
    const double s = d.sigma;
    const double as = a / s, bs = b / s, gs = g / s;
    const double m0 = normal_mass(as, bs);
    const double m1 = phi(as) - phi(bs);
    const double m2 = m0 + x_phi(as) - x_phi(bs);
    return s * s * std::max(0.0, m2 - 2.0 * gs * m1 + gs * gs * m0);
}

double wrapped_pdf(const WrappedGaussianDensity& d, double r) {
    const double two = 2.0 * d.lambda;
    const int kmax = static_cast<int>(std::ceil(9.0 * d.sigma / two)) + 1;
    double acc = 0.0;
    for (int k = -kmax; k <= kmax; ++k) acc += phi((r + two * k) / d.sigma);
    return acc / d.sigma;
}

double cell_wrapped(const WrappedGaussianDensity& d, double a, double b, double g) {
    const double lo = std::max(a, -d.lambda);
    const double hi = std::min(b, d.lambda);
    if (!(lo < hi)) return 0.0;
    auto f = [&](double r) { return (r - g) * (r - g) * wrapped_pdf(d, r); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, 1e-12);
}

} // namespace

double Partition::quantize(double s) const {
    // symmetric partitions: work on |s| so boundary ties go outward
    const double m = std::abs(s);
    auto it = std::upper_bound(edges.begin(), edges.end(), m);
    std::size_t cell = static_cast<std::size_t>(std::distance(edges.begin(), it));
    cell = cell == 0 ? 0 : cell - 1;
    cell = std::min(cell, levels.size() - 1);
    const double v = levels[cell];
    return std::signbit(s) && s != 0.0 ? -v : v;
}

Partition uniform_partition(const ModuloConfig& cfg) {
    cfg.validate();
    if (cfg.bits < 1) throw InputError("uniform_partition: bit depth must be >= 1");
    const std::size_t B = std::size_t{1} << cfg.bits;
    const double q0 = cfg.step();
    Partition p;
    p.edges.resize(B + 1);
    p.levels.resize(B);
    for (std::size_t j = 0; j <= B; ++j) p.edges[j] = -cfg.lambda + static_cast<double>(j) * q0;
    for (std::size_t j = 0; j < B; ++j) p.levels[j] = -cfg.lambda + (static_cast<double>(j) + 0.5) * q0;
    p.edges.front() = -std::numeric_limits<double>::infinity();
    p.edges.back() = std::numeric_limits<double>::infinity();
    return p;
}

Partition companded_partition(int bits, double sigma) {
    if (bits < 1 || bits > 16) throw InputError("bit depth must be in 1..16");
    if (!(sigma > 0.0)) throw InputError("companded quantizer: sigma must be > 0");
    const std::size_t B = std::size_t{1} << bits;
    const double scale = std::sqrt(3.0) * sigma;
    const double Bd = static_cast<double>(B);
    Partition p;
    p.edges.resize(B + 1);
    p.levels.resize(B);
    p.edges.front() = -std::numeric_limits<double>::infinity();
    p.edges.back() = std::numeric_limits<double>::infinity();
    p.edges[B / 2] = 0.0;
    // build the upper half and mirror it, so the grid is exactly symmetric
    for (std::size_t j = B / 2 + 1; j < B; ++j) {
        p.edges[j] = scale * normal_quantile(static_cast<double>(j) / Bd);
        p.edges[B - j] = -p.edges[j];
    }
    for (std::size_t j = B / 2; j < B; ++j) {
        p.levels[j] = scale * normal_quantile((static_cast<double>(j) + 0.5) / Bd);
        p.levels[B - 1 - j] = -p.levels[j];
    }
    return p;
}

double quantizer_distortion(const Density& pdf, const Partition& part) {
    if (part.edges.size() != part.levels.size() + 1 || part.levels.empty())
        throw InputError("quantizer_distortion: malformed partition");
    double acc = 0.0;
    for (std::size_t j = 0; j < part.levels.size(); ++j) {
        const double a = part.edges[j], b = part.edges[j + 1], g = part.levels[j];
        acc += std::visit(
            [&](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, UniformDensity>) {
                    if (!(d.half_width > 0.0)) throw InputError("uniform density: half width must be > 0");
                    return cell_uniform(d, a, b, g);
                } else if constexpr (std::is_same_v<T, GaussianDensity>) {
                    if (!(d.sigma > 0.0)) throw InputError("Gaussian density: sigma must be > 0");
                    return cell_gaussian(d, a, b, g);
                } else {
                    if (!(d.sigma > 0.0) || !(d.lambda > 0.0))
                        throw InputError("wrapped Gaussian density: sigma and lambda must be > 0");
                    return cell_wrapped(d, a, b, g);
                }
            },
            pdf);
    }
    return acc;
}

double quantizer_distortion(const Density& pdf, const ModuloConfig& cfg) {
    return quantizer_distortion(pdf, uniform_partition(cfg));
}

SqnrReport empirical_sqnr(std::span<const double> original, std::span<const double> quantized) {
    if (original.size() != quantized.size()) throw InputError("empirical_sqnr: length mismatch");
    if (original.size() < 2) throw InputError("empirical_sqnr: need at least two samples");
    const double n = static_cast<double>(original.size());
    double mr = 0.0, me = 0.0;
    for (std::size_t k = 0; k < original.size(); ++k) {
        mr += original[k];
        me += original[k] - quantized[k];
    }
    mr /= n;
    me /= n;
    double vr = 0.0, ve = 0.0;
    for (std::size_t k = 0; k < original.size(); ++k) {
        const double dr = original[k] - mr;
        const double de = original[k] - quantized[k] - me;
        vr += dr * dr;
        ve += de * de;
    }
    vr /= n;
    ve /= n;
    if (!(vr > 0.0)) throw UndefinedSqnrError("empirical_sqnr: zero signal power");
    if (std::abs(mr) > 0.1 * std::sqrt(vr)) throw InputError("empirical_sqnr: source is not zero-mean");
    SqnrReport rep;
    rep.signal_power = vr;
    rep.noise_power = ve;
    rep.sqnr_db = ve > 0.0 ? 10.0 * std::log10(vr / ve) : std::numeric_limits<double>::infinity();
    return rep;
}

double analytic_sqnr(SourceKind source, AdcKind adc, int bits, double zeta) {
    if (bits < 1) throw InputError("analytic_sqnr: bit depth must be >= 1");
    const double base = 6.02 * bits;
    if (adc == AdcKind::Conventional) return source == SourceKind::Uniform ? base : base - 4.35;
    if (!(zeta > 0.0 && zeta <= 1.0)) throw InputError("analytic_sqnr: zeta must be in (0, 1]");
    return base + 20.0 * std::log10(1.0 / zeta);
}

double inf_norm(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> conventional_adc(std::span<const double> x, int bits, ConventionalLaw law) {
    if (x.empty()) throw InputError("conventional_adc: empty input");
    if (bits == 0) return {x.begin(), x.end()};
    std::vector<double> out(x.size());
    if (law == ConventionalLaw::Uniform) {
        const double a = inf_norm(x);
        if (!(a > 0.0)) throw InputError("conventional_adc: all-zero input");
        const ModuloConfig cfg{a, bits};
        cfg.validate();
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = quantize_sample(x[k], cfg);
        return out;
    }
    double p = 0.0;
    for (double v : x) p += v * v;
    const Partition part = companded_partition(bits, std::sqrt(p / static_cast<double>(x.size())));
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = part.quantize(x[k]);
    return out;
}

std::vector<double> modulo_adc_unfolded(std::span<const double> x, int bits, double zeta) {
    if (x.empty()) throw InputError("modulo_adc_unfolded: empty input");
    if (!(zeta > 0.0 && zeta <= 1.0)) throw InputError("modulo_adc_unfolded: zeta must be in (0, 1]");
    const ModuloConfig cfg{zeta * inf_norm(x), bits};
    cfg.validate();
    if (bits == 0) return {x.begin(), x.end()};
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double folded = modulo_fold(x[k], cfg.lambda);
        out[k] = quantize_sample(folded, cfg) + (x[k] - folded);
    }
    return out;
}

} // namespace lmimo
