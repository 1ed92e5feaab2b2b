// SPDX-License-Identifier: Apache-2.0

#ifndef GMORTON_RNG_HPP
#define GMORTON_RNG_HPP

#include <cstdint>
#include <random>
#include <stdexcept>

namespace gmorton {

/// Seedable generator with a fixed algorithm: std::mt19937_64 for raw bits,
/// plus explicit bounded-integer and unit-interval mappings (the standard
/// distributions are implementation-defined, which would break cross-platform
/// reproducibility of seeded runs).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below(0)");
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

}  // namespace gmorton

#endif  // GMORTON_RNG_HPP
