// SPDX-License-Identifier: Apache-2.0

#ifndef GMORTON_LAYOUT_HPP
#define GMORTON_LAYOUT_HPP

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "gmorton/bits.hpp"

namespace gmorton {

using index_t = std::uint64_t;
using Coordinate = std::vector<std::uint64_t>;
using BigCount = boost::multiprecision::cpp_int;

/// Largest total bit count of a layout; keeps scaled byte addresses inside 64 bits.
inline constexpr unsigned max_total_bits = 62;

/// Per-dimension bit widths of a power-of-two array; dimension i has 2^bits[i]
/// elements. Dimension 0 is the fastest-varying one under the mode-0-major
/// canonical layout.
class Shape {
public:
    Shape() = default;

    explicit Shape(std::vector<unsigned> bits, unsigned element_size = 4)
        : bits_(std::move(bits)), element_size_(element_size) {
        if (bits_.empty()) throw std::invalid_argument("shape needs at least one dimension");
        for (std::size_t d = 0; d < bits_.size(); ++d) {
            if (bits_[d] == 0)
                throw std::invalid_argument("dimension " + std::to_string(d) +
                                            " has zero bits");
            total_ += bits_[d];
        }
        if (total_ > max_total_bits)
            throw std::invalid_argument("shape has " + std::to_string(total_) +
                                        " bits, more than " + std::to_string(max_total_bits));
        if (element_size_ == 0 || (element_size_ & (element_size_ - 1)) != 0)
            throw std::invalid_argument("element size must be a power of two");
    }

    std::size_t dims() const noexcept { return bits_.size(); }
    unsigned bits(std::size_t d) const { return bits_.at(d); }
    std::span<const unsigned> bits() const noexcept { return bits_; }
    unsigned total_bits() const noexcept { return total_; }
    unsigned element_size() const noexcept { return element_size_; }
    std::uint64_t extent(std::size_t d) const { return std::uint64_t{1} << bits_.at(d); }
    std::uint64_t elements() const noexcept { return std::uint64_t{1} << total_; }
    std::uint64_t bytes() const noexcept { return elements() * element_size_; }

    /// Same bit widths; element size is a property of the data, not the layout family.
    bool same_family(const Shape& other) const noexcept { return bits_ == other.bits_; }

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    std::vector<unsigned> bits_;
    unsigned element_size_ = 4;
    unsigned total_ = 0;
};

enum class IndexPath { automatic, reference, hardware };

/// A generalized Morton layout: ranks[k] names the dimension supplying output
/// bit k (LSB first). Immutable once constructed; deposit masks are cached.
class Layout {
public:
    Layout(std::vector<unsigned> ranks, Shape shape) : shape_(std::move(shape)) {
        const std::size_t n = shape_.dims();
        if (ranks.size() != shape_.total_bits())
            throw std::invalid_argument("layout has " + std::to_string(ranks.size()) +
                                        " ranks but shape has " +
                                        std::to_string(shape_.total_bits()) + " bits");
        std::vector<unsigned> seen(n, 0);
        for (unsigned r : ranks) {
            if (r >= n)
                throw std::invalid_argument("rank " + std::to_string(r) +
                                            " out of range for " + std::to_string(n) +
                                            "-dimensional shape");
            ++seen[r];
        }
        for (std::size_t d = 0; d < n; ++d) {
            if (seen[d] != shape_.bits(d))
                throw std::invalid_argument(
                    "dimension " + std::to_string(d) + " used " + std::to_string(seen[d]) +
                    " times, expected " + std::to_string(shape_.bits(d)) +
                    " (layout is not a bijection)");
        }
        ranks_.assign(ranks.begin(), ranks.end());
        masks_.assign(n, 0);
        for (std::size_t k = 0; k < ranks_.size(); ++k) masks_[ranks_[k]] |= std::uint64_t{1} << k;
    }

    const Shape& shape() const noexcept { return shape_; }
    std::span<const std::uint8_t> ranks() const noexcept { return ranks_; }
    std::vector<unsigned> rank_vector() const { return {ranks_.begin(), ranks_.end()}; }
    unsigned rank(std::size_t k) const { return ranks_.at(k); }
    std::size_t size() const noexcept { return ranks_.size(); }
    std::size_t dims() const noexcept { return shape_.dims(); }
    std::uint64_t deposit_mask(std::size_t d) const { return masks_.at(d); }

    /// Bit-interleaved linear index of `coord`. Throws std::out_of_range on a
    /// coordinate outside the shape.
    index_t linear_index(std::span<const std::uint64_t> coord,
                         IndexPath path = IndexPath::automatic) const {
        check_coordinate(coord);
        return index_unchecked(coord, path);
    }

    /// Hot-path variant: `coord` must already be in bounds.
    index_t index_unchecked(std::span<const std::uint64_t> coord,
                            IndexPath path = IndexPath::automatic) const noexcept {
        if (use_hardware(path)) return index_hw(coord);
        index_t out = 0;
        for (std::size_t d = 0; d < masks_.size(); ++d) out |= bits::deposit(coord[d], masks_[d]);
        return out;
    }

    Coordinate inverse_index(index_t index, IndexPath path = IndexPath::automatic) const {
        if (index >> shape_.total_bits())
            throw std::out_of_range("index " + std::to_string(index) + " exceeds 2^" +
                                    std::to_string(shape_.total_bits()));
        Coordinate coord(masks_.size());
        inverse_into(index, coord, path);
        return coord;
    }

    /// Allocation-free inverse; `index` < 2^total_bits and out.size() == dims().
    void inverse_into(index_t index, std::span<std::uint64_t> out,
                      IndexPath path = IndexPath::automatic) const noexcept {
        if (use_hardware(path)) return inverse_hw(index, out);
        for (std::size_t d = 0; d < masks_.size(); ++d) out[d] = bits::extract(index, masks_[d]);
    }

    void check_coordinate(std::span<const std::uint64_t> coord) const {
        if (coord.size() != masks_.size())
            throw std::out_of_range("coordinate has " + std::to_string(coord.size()) +
                                    " components, shape has " + std::to_string(masks_.size()));
        for (std::size_t d = 0; d < coord.size(); ++d) {
            if (coord[d] >= shape_.extent(d))
                throw std::out_of_range("coordinate component " + std::to_string(d) + " = " +
                                        std::to_string(coord[d]) + " out of bounds");
        }
    }

    // Rank multiplicities fix the bit widths, so ranks alone identify a layout.
    friend bool operator==(const Layout& a, const Layout& b) { return a.ranks_ == b.ranks_; }
    friend std::strong_ordering operator<=>(const Layout& a, const Layout& b) {
        return a.ranks_ <=> b.ranks_;
    }

private:
    static bool use_hardware(IndexPath path) noexcept {
        switch (path) {
            case IndexPath::reference: return false;
            case IndexPath::hardware: return bits::cpu_has_bmi2();
            case IndexPath::automatic: break;
        }
        return bits::cpu_has_bmi2();
    }

#if GMORTON_HAVE_BMI2_PATH
    __attribute__((target("bmi2"))) index_t index_hw(
        std::span<const std::uint64_t> coord) const noexcept {
        index_t out = 0;
        for (std::size_t d = 0; d < masks_.size(); ++d) out |= _pdep_u64(coord[d], masks_[d]);
        return out;
    }
    __attribute__((target("bmi2"))) void inverse_hw(index_t index,
                                                    std::span<std::uint64_t> out) const noexcept {
        for (std::size_t d = 0; d < masks_.size(); ++d) out[d] = _pext_u64(index, masks_[d]);
    }
#else
    void inverse_hw(index_t index, std::span<std::uint64_t> out) const noexcept {
        for (std::size_t d = 0; d < masks_.size(); ++d) out[d] = bits::extract(index, masks_[d]);
    }
    index_t index_hw(std::span<const std::uint64_t> coord) const noexcept {
        index_t out = 0;
        for (std::size_t d = 0; d < masks_.size(); ++d) out |= bits::deposit(coord[d], masks_[d]);
        return out;
    }
#endif

    Shape shape_;
    std::vector<std::uint8_t> ranks_;
    std::vector<std::uint64_t> masks_;
};

inline Layout validate_layout(std::vector<unsigned> ranks, const Shape& shape) {
    return Layout(std::move(ranks), shape);
}

/// Contiguous same-dimension runs, `axis_order[0]` innermost.
inline Layout canonical_layout(const Shape& shape, std::span<const unsigned> axis_order) {
    const std::size_t n = shape.dims();
    if (axis_order.size() != n) throw std::invalid_argument("axis order length mismatch");
    std::vector<bool> used(n, false);
    std::vector<unsigned> ranks;
    ranks.reserve(shape.total_bits());
    for (unsigned axis : axis_order) {
        if (axis >= n || used[axis]) throw std::invalid_argument("axis order is not a permutation");
        used[axis] = true;
        ranks.insert(ranks.end(), shape.bits(axis), axis);
    }
    return Layout(std::move(ranks), shape);
}

inline Layout canonical_layout(const Shape& shape, std::initializer_list<unsigned> axis_order) {
    return canonical_layout(shape, std::span<const unsigned>(axis_order.begin(), axis_order.size()));
}

/// Mode-0-major canonical layout; the row-major order of the usual index formula.
inline Layout row_major_layout(const Shape& shape) {
    std::vector<unsigned> order(shape.dims());
    std::iota(order.begin(), order.end(), 0u);
    return canonical_layout(shape, order);
}

inline Layout column_major_layout(const Shape& shape) {
    std::vector<unsigned> order(shape.dims());
    std::iota(order.rbegin(), order.rend(), 0u);
    return canonical_layout(shape, order);
}

/// Round-robin interleave; dimensions that run out of bits drop out of the rotation.
inline Layout morton_layout(const Shape& shape) {
    std::vector<unsigned> left(shape.bits().begin(), shape.bits().end());
    std::vector<unsigned> ranks;
    ranks.reserve(shape.total_bits());
    while (ranks.size() < shape.total_bits()) {
        for (unsigned d = 0; d < left.size(); ++d) {
            if (left[d] == 0) continue;
            --left[d];
            ranks.push_back(d);
        }
    }
    return Layout(std::move(ranks), shape);
}

/// Length of the contiguous block of a mode-`mode` fiber: 2^(leading run of `mode` ranks).
inline std::uint64_t contiguity_block(const Layout& layout, unsigned mode) {
    if (mode >= layout.dims()) throw std::out_of_range("mode out of range");
    unsigned run = 0;
    while (run < layout.size() && layout.rank(run) == mode) ++run;
    return std::uint64_t{1} << run;
}

/// Number of distinct layouts of `shape`: the multinomial (sum b)! / prod(b!).
inline BigCount count_layouts(const Shape& shape) {
    BigCount count = 1;
    unsigned placed = 0;
    for (unsigned b : shape.bits()) {
        // multiply by C(placed + b, b), one factor at a time to stay exact
        for (unsigned k = 1; k <= b; ++k) {
            count *= placed + k;
            count /= k;
        }
        placed += b;
    }
    return count;
}

/// Visit every layout of `shape` once, in lexicographic order of rank
/// sequences. Throws std::length_error when the family exceeds `cap`.
inline void for_each_layout(const Shape& shape, std::uint64_t cap,
                            const std::function<void(const Layout&)>& visit) {
    if (count_layouts(shape) > cap)
        throw std::length_error("layout family of size " + count_layouts(shape).str() +
                                " exceeds cap " + std::to_string(cap));
    std::vector<unsigned> ranks;
    for (unsigned d = 0; d < shape.dims(); ++d) ranks.insert(ranks.end(), shape.bits(d), d);
    do {
        visit(Layout(ranks, shape));
    } while (std::next_permutation(ranks.begin(), ranks.end()));
}

inline std::vector<Layout> enumerate_layouts(const Shape& shape, std::uint64_t cap = 1'000'000) {
    std::vector<Layout> out;
    for_each_layout(shape, cap, [&](const Layout& l) { out.push_back(l); });
    return out;
}

/// Project a layout onto a shape with different widths: keep each dimension's
/// lowest min(b, b') ranks in place, then append missing ranks at the top in
/// dimension order. Used when one chromosome drives arrays of several shapes.
inline Layout restrict_layout(const Layout& layout, const Shape& target) {
    if (target.dims() != layout.dims())
        throw std::invalid_argument("cannot restrict layout across dimensionalities");
    std::vector<unsigned> used(target.dims(), 0);
    std::vector<unsigned> ranks;
    ranks.reserve(target.total_bits());
    for (unsigned r : layout.ranks()) {
        if (used[r] < target.bits(r)) {
            ++used[r];
            ranks.push_back(r);
        }
    }
    for (unsigned d = 0; d < target.dims(); ++d)
        for (; used[d] < target.bits(d); ++used[d]) ranks.push_back(d);
    return Layout(std::move(ranks), target);
}

// Textual form: "[1,1,2,0,0,1,2,0,2]", LSB first.

inline std::string to_string(const Layout& layout) {
    std::string out = "[";
    for (std::size_t k = 0; k < layout.size(); ++k) {
        if (k) out += ',';
        out += std::to_string(layout.rank(k));
    }
    out += ']';
    return out;
}

inline std::vector<unsigned> parse_ranks(std::string_view text) {
    auto fail = [&](const std::string& why) {
        return std::invalid_argument("malformed layout '" + std::string(text) + "': " + why);
    };
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    };
    skip_ws();
    if (pos >= text.size() || text[pos] != '[') throw fail("expected '['");
    ++pos;
    std::vector<unsigned> ranks;
    skip_ws();
    if (pos < text.size() && text[pos] == ']') throw fail("empty layout");
    while (true) {
        skip_ws();
        if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
            throw fail("expected a dimension index");
        unsigned value = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            value = value * 10 + static_cast<unsigned>(text[pos] - '0');
            if (value > 255) throw fail("dimension index too large");
            ++pos;
        }
        ranks.push_back(value);
        skip_ws();
        if (pos < text.size() && text[pos] == ',') {
            ++pos;
            continue;
        }
        if (pos < text.size() && text[pos] == ']') {
            ++pos;
            break;
        }
        throw fail("expected ',' or ']'");
    }
    skip_ws();
    if (pos != text.size()) throw fail("trailing characters");
    return ranks;
}

/// Parse against a known shape.
inline Layout parse_layout(std::string_view text, const Shape& shape) {
    return Layout(parse_ranks(text), shape);
}

/// Parse and infer the shape from rank multiplicities; every dimension up to
/// the largest rank must appear at least once.
inline Layout parse_layout(std::string_view text, unsigned element_size = 4) {
    auto ranks = parse_ranks(text);
    const unsigned n = *std::max_element(ranks.begin(), ranks.end()) + 1;
    std::vector<unsigned> widths(n, 0);
    for (unsigned r : ranks) ++widths[r];
    for (unsigned d = 0; d < n; ++d)
        if (widths[d] == 0)
            throw std::invalid_argument("dimension " + std::to_string(d) +
                                        " never appears in layout " + std::string(text));
    return Layout(std::move(ranks), Shape(std::move(widths), element_size));
}

}  // namespace gmorton

template <>
struct std::hash<gmorton::Layout> {
    std::size_t operator()(const gmorton::Layout& layout) const noexcept {
        std::size_t h = 1469598103934665603ull;
        for (auto r : layout.ranks()) h = (h ^ r) * 1099511628211ull;
        return h;
    }
};

#endif  // GMORTON_LAYOUT_HPP
