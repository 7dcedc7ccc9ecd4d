#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace fuplab {

// mt19937_64 is fully specified by the standard; the distributions below are written out
// so that seeded streams are identical across standard libraries.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double standard_normal(Rng& rng) {
    double u = uniform01(rng);
    while (u == 0.0) u = uniform01(rng);
    const double v = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

// Standard complex Gaussian with E|z|^2 = 1.
inline std::complex<double> complex_normal(Rng& rng) {
    const double a = standard_normal(rng), b = standard_normal(rng);
    return {a * std::numbers::sqrt2 / 2.0, b * std::numbers::sqrt2 / 2.0};
}

// Uniform point in the disk of the given radius.
inline std::complex<double> uniform_in_disk(Rng& rng, double radius) {
    const double rad = radius * std::sqrt(uniform01(rng));
    return std::polar(rad, 2.0 * std::numbers::pi * uniform01(rng));
}

}  // namespace fuplab
