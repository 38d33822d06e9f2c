#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace liouville {

/// Seeded sampler whose output depends only on the seed (no std distributions,
/// whose algorithms differ between standard libraries).
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform point of the closed disk |w| <= radius.
    std::complex<double> disk(double radius) {
        const double r = radius * std::sqrt(uniform());
        const double phase = 2.0 * std::numbers::pi * uniform();
        return std::polar(r, phase);
    }

    /// Uniform in the square |re|, |im| <= half_width.
    std::complex<double> square(double half_width) {
        return {uniform(-half_width, half_width), uniform(-half_width, half_width)};
    }

    std::uint64_t bits() { return rng_(); }

private:
    std::mt19937_64 rng_;
};

}  // namespace liouville
