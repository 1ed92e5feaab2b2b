// SPDX-License-Identifier: Apache-2.0

#ifndef GMORTON_BITS_HPP
#define GMORTON_BITS_HPP

#include <cstdint>

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#include <immintrin.h>
#define GMORTON_HAVE_BMI2_PATH 1
#else
#define GMORTON_HAVE_BMI2_PATH 0
#endif

namespace gmorton::bits {

/// Scatter the low bits of `value` into the set positions of `mask`, lowest
/// first. Portable equivalent of PDEP.
constexpr std::uint64_t deposit(std::uint64_t value, std::uint64_t mask) noexcept {
    std::uint64_t out = 0;
    for (std::uint64_t bit = 1; mask != 0; bit <<= 1) {
        if (value & bit) out |= mask & (~mask + 1);
        mask &= mask - 1;
    }
    return out;
}

/// Gather the bits of `value` selected by `mask` into the low bits of the
/// result. Portable equivalent of PEXT.
constexpr std::uint64_t extract(std::uint64_t value, std::uint64_t mask) noexcept {
    std::uint64_t out = 0;
    for (std::uint64_t bit = 1; mask != 0; bit <<= 1) {
        if (value & mask & (~mask + 1)) out |= bit;
        mask &= mask - 1;
    }
    return out;
}

constexpr std::uint64_t low_mask(unsigned n) noexcept {
    return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
}

#if GMORTON_HAVE_BMI2_PATH
__attribute__((target("bmi2"))) inline std::uint64_t deposit_bmi2(std::uint64_t value,
                                                                   std::uint64_t mask) noexcept {
    return _pdep_u64(value, mask);
}

__attribute__((target("bmi2"))) inline std::uint64_t extract_bmi2(std::uint64_t value,
                                                                   std::uint64_t mask) noexcept {
    return _pext_u64(value, mask);
}

inline bool cpu_has_bmi2() noexcept {
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("bmi2") != 0;
    }();
    return supported;
}
#else
inline bool cpu_has_bmi2() noexcept { return false; }
#endif

}  // namespace gmorton::bits

#endif  // GMORTON_BITS_HPP
