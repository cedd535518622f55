// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "lmimo/modulo.hpp"

namespace lmimo {

struct UniformDensity {
    double half_width = 1.0;  // support [-a, a]
};
struct GaussianDensity {
    double sigma = 1.0;
};
// N(0, sigma^2) folded into [-lambda, lambda).
struct WrappedGaussianDensity {
    double sigma = 1.0;
    double lambda = 1.0;
};
using Density = std::variant<UniformDensity, GaussianDensity, WrappedGaussianDensity>;

/// Scalar quantizer as cell edges plus reconstruction levels. Outer edges may
/// be infinite (overload region).
struct Partition {
    std::vector<double> edges;   // size B + 1, ascending
    std::vector<double> levels;  // size B

    double quantize(double s) const;
};

/// Uniform mid-rise quantizer of the modulo ADC; outer cells extend to +-inf.
Partition uniform_partition(const ModuloConfig& cfg);

/// Companding quantizer for N(0, sigma^2): compressor is the CDF of
/// N(0, 3 sigma^2), followed by a uniform b-bit quantizer on (-1, 1).
Partition companded_partition(int bits, double sigma);

/// Mean squared quantization error, E[(r - Q(r))^2], under the given density.
double quantizer_distortion(const Density& pdf, const Partition& part);
double quantizer_distortion(const Density& pdf, const ModuloConfig& cfg);

struct SqnrReport {
    double signal_power = 0.0;
    double noise_power = 0.0;
    double sqnr_db = 0.0;
    double zeta = std::numeric_limits<double>::quiet_NaN();
};

/// 10 log10(var(original) / var(original - quantized)); +inf when identical.
SqnrReport empirical_sqnr(std::span<const double> original, std::span<const double> quantized);

enum class SourceKind { Uniform, Gaussian };
enum class AdcKind { Conventional, Modulo };
enum class ConventionalLaw { Uniform, Companded };

/// Closed-form SQNR in dB. The Gaussian/modulo value assumes uniformly
/// distributed folded samples and is therefore approximate.
double analytic_sqnr(SourceKind source, AdcKind adc, int bits, double zeta);

/// Conventional ADC (bits == 0 passes x through). Uniform law spans exactly [-max|x|, max|x|]; the
/// companded law is designed for the sample RMS of x.
std::vector<double> conventional_adc(std::span<const double> x, int bits, ConventionalLaw law);

/// Modulo ADC with lambda = zeta * max|x| followed by ideal unfolding (the
/// exact residue is added back), isolating the quantization error.
std::vector<double> modulo_adc_unfolded(std::span<const double> x, int bits, double zeta);

/// Signal infinity norm over a real sequence.
double inf_norm(std::span<const double> x);

} // namespace lmimo
