// SPDX-License-Identifier: Apache-2.0

#ifndef GMORTON_PATTERNS_HPP
#define GMORTON_PATTERNS_HPP

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gmorton/cachesim.hpp"
#include "gmorton/layout.hpp"

namespace gmorton {

enum class PatternKind { MMijk, MMTijk, MMikj, MMTikj, Jacobi2D, Cholesky, Crout, Himeno };

inline constexpr std::array<std::pair<PatternKind, std::string_view>, 8> pattern_names{{
    {PatternKind::MMijk, "MMijk"},
    {PatternKind::MMTijk, "MMTijk"},
    {PatternKind::MMikj, "MMikj"},
    {PatternKind::MMTikj, "MMTikj"},
    {PatternKind::Jacobi2D, "Jacobi2D"},
    {PatternKind::Cholesky, "Cholesky"},
    {PatternKind::Crout, "Crout"},
    {PatternKind::Himeno, "Himeno"},
}};

inline std::string_view name_of(PatternKind kind) {
    for (const auto& [k, n] : pattern_names)
        if (k == kind) return n;
    return "?";
}

/// Number of size parameters (m, n, p) a pattern takes.
inline unsigned arity(PatternKind kind) {
    switch (kind) {
        case PatternKind::MMTijk:
        case PatternKind::MMTikj:
        case PatternKind::Jacobi2D: return 2;
        case PatternKind::Himeno: return 3;
        default: return 1;
    }
}

/// One kernel instance, e.g. MMTijk(9,9;4): log2 extents m, n, p and element size s.
struct PatternSpec {
    PatternKind kind = PatternKind::MMijk;
    unsigned m = 1;
    unsigned n = 0;
    unsigned p = 0;
    unsigned element_size = 4;

    friend bool operator==(const PatternSpec&, const PatternSpec&) = default;
};

inline void validate_pattern(const PatternSpec& spec) {
    const unsigned k = arity(spec.kind);
    if (spec.m < 1 || (k >= 2 && spec.n < 1) || (k >= 3 && spec.p < 1))
        throw std::invalid_argument(std::string(name_of(spec.kind)) +
                                    ": every extent must be at least 2 (log2 size >= 1)");
    if ((k < 2 && spec.n != 0) || (k < 3 && spec.p != 0))
        throw std::invalid_argument(std::string(name_of(spec.kind)) + " takes " +
                                    std::to_string(k) + " size parameter(s)");
    if (spec.element_size == 0 || (spec.element_size & (spec.element_size - 1)) != 0)
        throw std::invalid_argument("element size must be a power of two");
}

inline std::string to_string(const PatternSpec& spec) {
    std::string out(name_of(spec.kind));
    out += '(' + std::to_string(spec.m);
    if (arity(spec.kind) >= 2) out += ',' + std::to_string(spec.n);
    if (arity(spec.kind) >= 3) out += ',' + std::to_string(spec.p);
    out += ';' + std::to_string(spec.element_size) + ')';
    return out;
}

/// Parse table notation such as "MMijk(9;4)" or "Himeno(8,7,7;4)".
inline PatternSpec parse_pattern(std::string_view text) {
    auto fail = [&](const std::string& why) {
        return std::invalid_argument("malformed pattern '" + std::string(text) + "': " + why);
    };
    std::string compact;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
    const auto open = compact.find('(');
    if (open == std::string::npos || compact.back() != ')') throw fail("expected NAME(m[,n[,p]];s)");
    const std::string name = compact.substr(0, open);
    PatternSpec spec;
    bool found = false;
    for (const auto& [k, n] : pattern_names)
        if (n == name) {
            spec.kind = k;
            found = true;
        }
    if (!found) throw fail("unknown pattern " + name);
    const std::string args = compact.substr(open + 1, compact.size() - open - 2);
    const auto semi = args.find(';');
    if (semi == std::string::npos) throw fail("missing ';s' element size");
    std::vector<unsigned> sizes;
    auto number = [&](const std::string& s) -> unsigned {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 4)
            throw fail("bad number '" + s + "'");
        return static_cast<unsigned>(std::stoul(s));
    };
    std::string dims = args.substr(0, semi);
    for (std::size_t start = 0;;) {
        const auto comma = dims.find(',', start);
        sizes.push_back(number(dims.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (sizes.size() != arity(spec.kind))
        throw fail(name + " takes " + std::to_string(arity(spec.kind)) + " size parameter(s)");
    spec.m = sizes[0];
    if (sizes.size() > 1) spec.n = sizes[1];
    if (sizes.size() > 2) spec.p = sizes[2];
    spec.element_size = number(args.substr(semi + 1));
    try {
        validate_pattern(spec);
    } catch (const std::invalid_argument& e) {
        throw fail(e.what());
    }
    return spec;
}

/// An array the kernel touches; `bits` in layout dimension order, where
/// dimension 0 is the last subscript (A(i,j) has x0 = j, x1 = i).
struct ArrayDecl {
    std::string name;
    std::vector<unsigned> bits;
};

inline std::vector<ArrayDecl> array_decls(const PatternSpec& spec) {
    const unsigned m = spec.m, n = spec.n, p = spec.p;
    switch (spec.kind) {
        case PatternKind::MMijk:
        case PatternKind::MMikj: return {{"A", {m, m}}, {"B", {m, m}}, {"C", {m, m}}};
        case PatternKind::MMTijk:
        case PatternKind::MMTikj: return {{"A", {n, m}}, {"B", {n, m}}, {"C", {m, m}}};
        case PatternKind::Jacobi2D: return {{"src", {n, m}}, {"dst", {n, m}}};
        case PatternKind::Cholesky: return {{"A", {m, m}}, {"L", {m, m}}};
        case PatternKind::Crout: return {{"A", {m, m}}, {"LU", {m, m}}};
        case PatternKind::Himeno: {
            std::vector<ArrayDecl> out;
            for (const char* name :
                 {"p", "a0", "a1", "a2", "a3", "b0", "b1", "b2", "c0", "c1", "c2", "wrk"})
                out.push_back({name, {p, n, m}});
            return out;
        }
    }
    return {};
}

/// Shape of the layout family a pattern is searched over (its first array).
inline Shape pattern_shape(const PatternSpec& spec) {
    validate_pattern(spec);
    return Shape(array_decls(spec).front().bits, spec.element_size);
}

/// Table 1 memory footprint in bytes.
inline std::uint64_t table_footprint(const PatternSpec& spec) {
    const std::uint64_t s = spec.element_size;
    const unsigned m = spec.m, n = spec.n, p = spec.p;
    switch (spec.kind) {
        case PatternKind::MMijk:
        case PatternKind::MMikj: return 3 * s << (2 * m);
        case PatternKind::MMTijk:
        case PatternKind::MMTikj: return s * ((std::uint64_t{2} << (m + n)) + (std::uint64_t{1} << (2 * m)));
        case PatternKind::Jacobi2D: return 2 * s << (m + n);
        case PatternKind::Cholesky:
        case PatternKind::Crout: return 2 * s << (2 * m);
        case PatternKind::Himeno: return 12 * s << (m + n + p);
    }
    return 0;
}

struct TraceCounts {
    std::uint64_t loads = 0;
    std::uint64_t stores = 0;
    bool exact = false;

    friend bool operator==(const TraceCounts&, const TraceCounts&) = default;
};

/// Closed-form load/store counts from the pattern table. Exact for the four
/// matrix-multiply patterns; the others are the table's approximations.
inline TraceCounts trace_counts(const PatternSpec& spec) {
    const unsigned m = spec.m, n = spec.n, p = spec.p;
    auto pow2 = [](unsigned e) { return std::uint64_t{1} << e; };
    switch (spec.kind) {
        case PatternKind::MMijk: return {2 * pow2(3 * m), pow2(2 * m), true};
        case PatternKind::MMTijk: return {2 * pow2(2 * m + n), pow2(2 * m), true};
        case PatternKind::MMikj: return {3 * pow2(3 * m), pow2(3 * m), true};
        case PatternKind::MMTikj: return {3 * pow2(2 * m + n), pow2(2 * m + n), true};
        case PatternKind::Jacobi2D: return {4 * pow2(m + n), pow2(m + n), false};
        case PatternKind::Cholesky: return {2 * pow2(2 * m), pow2(2 * m) / 2, false};
        case PatternKind::Crout: return {7 * pow2(2 * m) / 2, pow2(2 * m), false};
        case PatternKind::Himeno: return {24 * pow2(m + n + p), pow2(m + n + p), false};
    }
    return {};
}

struct ArrayBinding {
    std::string name;
    Layout layout;
    std::uint64_t base = 0;
    std::uint64_t bytes = 0;

    bool contains(std::uint64_t address) const noexcept {
        return address >= base && address - base < bytes;
    }
};

/// Place the pattern's arrays consecutively from address 0. Each base is
/// rounded up to min(line, array size), so arrays of a line or more start on
/// a line boundary. Arrays whose shape differs from the layout's get the
/// restricted layout.
inline std::vector<ArrayBinding> bind_arrays(const PatternSpec& spec, const Layout& layout,
                                             std::uint64_t line = 64) {
    const Shape shape = pattern_shape(spec);
    if (!layout.shape().same_family(shape))
        throw std::invalid_argument("layout " + to_string(layout) + " does not fit pattern " +
                                    to_string(spec));
    std::vector<ArrayBinding> out;
    std::uint64_t cursor = 0;
    for (auto& decl : array_decls(spec)) {
        Shape s(decl.bits, spec.element_size);
        Layout l = s.same_family(layout.shape()) ? Layout(layout.rank_vector(), s)
                                                 : restrict_layout(layout, s);
        const std::uint64_t bytes = s.bytes();
        const std::uint64_t align = std::min(line, bytes);
        cursor = (cursor + align - 1) / align * align;
        out.push_back({decl.name, std::move(l), cursor, bytes});
        cursor += bytes;
    }
    return out;
}

inline std::uint64_t footprint(const std::vector<ArrayBinding>& bindings) {
    return bindings.empty() ? 0 : bindings.back().base + bindings.back().bytes;
}

namespace kernels {

// Each kernel is written once against a memory policy providing
//   double load(int array, i, j[, k]);  void store(int array, double v, i, j[, k]);
// Scalars (accumulators, stencil sums) stay in registers and never reach memory.

template <class Mem>
void mm_ijk(Mem& mem, std::uint64_t n) {
    enum { A, B, C };
    for (std::uint64_t i = 0; i < n; ++i)
        for (std::uint64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::uint64_t k = 0; k < n; ++k) acc += mem.load(A, i, k) * mem.load(B, k, j);
            mem.store(C, acc, i, j);
        }
}

template <class Mem>
void mm_ikj(Mem& mem, std::uint64_t n) {
    enum { A, B, C };
    for (std::uint64_t i = 0; i < n; ++i)
        for (std::uint64_t k = 0; k < n; ++k)
            for (std::uint64_t j = 0; j < n; ++j) {
                const double prod = mem.load(A, i, k) * mem.load(B, k, j);
                mem.store(C, mem.load(C, i, j) + prod, i, j);
            }
}

// C (rows x rows) = A (rows x inner) * B^T, B stored rows x inner.
template <class Mem>
void mmt_ijk(Mem& mem, std::uint64_t rows, std::uint64_t inner) {
    enum { A, B, C };
    for (std::uint64_t i = 0; i < rows; ++i)
        for (std::uint64_t j = 0; j < rows; ++j) {
            double acc = 0.0;
            for (std::uint64_t k = 0; k < inner; ++k) acc += mem.load(A, i, k) * mem.load(B, j, k);
            mem.store(C, acc, i, j);
        }
}

template <class Mem>
void mmt_ikj(Mem& mem, std::uint64_t rows, std::uint64_t inner) {
    enum { A, B, C };
    for (std::uint64_t i = 0; i < rows; ++i)
        for (std::uint64_t k = 0; k < inner; ++k)
            for (std::uint64_t j = 0; j < rows; ++j) {
                const double prod = mem.load(A, i, k) * mem.load(B, j, k);
                mem.store(C, mem.load(C, i, j) + prod, i, j);
            }
}

// One four-point sweep over interior points.
template <class Mem>
void jacobi2d(Mem& mem, std::uint64_t rows, std::uint64_t cols) {
    enum { src, dst };
    for (std::uint64_t i = 1; i + 1 < rows; ++i)
        for (std::uint64_t j = 1; j + 1 < cols; ++j) {
            const double sum = mem.load(src, i - 1, j) + mem.load(src, i + 1, j) +
                               mem.load(src, i, j - 1) + mem.load(src, i, j + 1);
            mem.store(dst, 0.25 * sum, i, j);
        }
}

// Cholesky-Banachiewicz, row by row into the lower triangle of L.
template <class Mem>
void cholesky(Mem& mem, std::uint64_t n) {
    enum { A, L };
    for (std::uint64_t i = 0; i < n; ++i)
        for (std::uint64_t j = 0; j <= i; ++j) {
            double sum = 0.0;
            for (std::uint64_t k = 0; k < j; ++k) sum += mem.load(L, i, k) * mem.load(L, j, k);
            if (i == j) {
                mem.store(L, std::sqrt(mem.load(A, i, i) - sum), i, i);
            } else {
                const double a = mem.load(A, i, j);
                mem.store(L, (a - sum) / mem.load(L, j, j), i, j);
            }
        }
}

// Crout LU with unit-diagonal U; L (with diagonal) and the strict upper part
// of U share the LU array.
template <class Mem>
void crout(Mem& mem, std::uint64_t n) {
    enum { A, LU };
    for (std::uint64_t j = 0; j < n; ++j) {
        for (std::uint64_t i = j; i < n; ++i) {
            double sum = 0.0;
            for (std::uint64_t k = 0; k < j; ++k) sum += mem.load(LU, i, k) * mem.load(LU, k, j);
            mem.store(LU, mem.load(A, i, j) - sum, i, j);
        }
        for (std::uint64_t i = j + 1; i < n; ++i) {
            double sum = 0.0;
            for (std::uint64_t k = 0; k < j; ++k) sum += mem.load(LU, j, k) * mem.load(LU, k, i);
            const double a = mem.load(A, j, i);
            mem.store(LU, (a - sum) / mem.load(LU, j, j), j, i);
        }
    }
}

// One Jacobi sweep of the nineteen-point Himeno stencil over interior points.
template <class Mem>
void himeno(Mem& mem, std::uint64_t ni, std::uint64_t nj, std::uint64_t nk) {
    enum { P, A0, A1, A2, A3, B0, B1, B2, C0, C1, C2, WRK };
    constexpr double omega = 0.8;
    for (std::uint64_t i = 1; i + 1 < ni; ++i)
        for (std::uint64_t j = 1; j + 1 < nj; ++j)
            for (std::uint64_t k = 1; k + 1 < nk; ++k) {
                double s0 = mem.load(A0, i, j, k) * mem.load(P, i + 1, j, k);
                s0 += mem.load(A1, i, j, k) * mem.load(P, i, j + 1, k);
                s0 += mem.load(A2, i, j, k) * mem.load(P, i, j, k + 1);
                s0 += mem.load(B0, i, j, k) *
                      (mem.load(P, i + 1, j + 1, k) - mem.load(P, i + 1, j - 1, k) -
                       mem.load(P, i - 1, j + 1, k) + mem.load(P, i - 1, j - 1, k));
                s0 += mem.load(B1, i, j, k) *
                      (mem.load(P, i, j + 1, k + 1) - mem.load(P, i, j - 1, k + 1) -
                       mem.load(P, i, j + 1, k - 1) + mem.load(P, i, j - 1, k - 1));
                s0 += mem.load(B2, i, j, k) *
                      (mem.load(P, i + 1, j, k + 1) - mem.load(P, i - 1, j, k + 1) -
                       mem.load(P, i + 1, j, k - 1) + mem.load(P, i - 1, j, k - 1));
                s0 += mem.load(C0, i, j, k) * mem.load(P, i - 1, j, k);
                s0 += mem.load(C1, i, j, k) * mem.load(P, i, j - 1, k);
                s0 += mem.load(C2, i, j, k) * mem.load(P, i, j, k - 1);
                const double a3 = mem.load(A3, i, j, k);
                const double centre = mem.load(P, i, j, k);
                const double ss = s0 * a3 - centre;
                mem.store(WRK, centre + omega * ss, i, j, k);
            }
}

}  // namespace kernels

/// Run the loop nest of `spec` against a memory policy.
template <class Mem>
void run_kernel(const PatternSpec& spec, Mem& mem) {
    auto ext = [](unsigned b) { return std::uint64_t{1} << b; };
    switch (spec.kind) {
        case PatternKind::MMijk: kernels::mm_ijk(mem, ext(spec.m)); break;
        case PatternKind::MMikj: kernels::mm_ikj(mem, ext(spec.m)); break;
        case PatternKind::MMTijk: kernels::mmt_ijk(mem, ext(spec.m), ext(spec.n)); break;
        case PatternKind::MMTikj: kernels::mmt_ikj(mem, ext(spec.m), ext(spec.n)); break;
        case PatternKind::Jacobi2D: kernels::jacobi2d(mem, ext(spec.m), ext(spec.n)); break;
        case PatternKind::Cholesky: kernels::cholesky(mem, ext(spec.m)); break;
        case PatternKind::Crout: kernels::crout(mem, ext(spec.m)); break;
        case PatternKind::Himeno: kernels::himeno(mem, ext(spec.m), ext(spec.n), ext(spec.p)); break;
    }
}

/// Memory policy that turns element accesses into AccessEvents.
template <class Sink>
class TraceMemory {
public:
    TraceMemory(const std::vector<ArrayBinding>& bindings, std::uint32_t element_size, Sink& sink)
        : bindings_(bindings), size_(element_size), sink_(sink) {}

    double load(int a, std::uint64_t i, std::uint64_t j) {
        emit(AccessKind::load, a, std::array<std::uint64_t, 2>{j, i});
        return 1.0;
    }
    double load(int a, std::uint64_t i, std::uint64_t j, std::uint64_t k) {
        emit(AccessKind::load, a, std::array<std::uint64_t, 3>{k, j, i});
        return 1.0;
    }
    void store(int a, double, std::uint64_t i, std::uint64_t j) {
        emit(AccessKind::store, a, std::array<std::uint64_t, 2>{j, i});
    }
    void store(int a, double, std::uint64_t i, std::uint64_t j, std::uint64_t k) {
        emit(AccessKind::store, a, std::array<std::uint64_t, 3>{k, j, i});
    }

private:
    template <std::size_t N>
    void emit(AccessKind op, int a, const std::array<std::uint64_t, N>& coord) {
        const ArrayBinding& b = bindings_[static_cast<std::size_t>(a)];
        sink_(AccessEvent{op, b.base + b.layout.index_unchecked(coord) * size_, size_});
    }

    const std::vector<ArrayBinding>& bindings_;
    std::uint32_t size_;
    Sink& sink_;
};

/// Memory policy over real data stored in layout order.
class DataMemory {
public:
    explicit DataMemory(const std::vector<ArrayBinding>& bindings) : bindings_(bindings) {
        for (const auto& b : bindings_) data_.emplace_back(b.layout.shape().elements(), 0.0);
    }

    double load(int a, std::uint64_t i, std::uint64_t j) const { return data_[a][at(a, {j, i})]; }
    double load(int a, std::uint64_t i, std::uint64_t j, std::uint64_t k) const {
        return data_[a][at(a, {k, j, i})];
    }
    void store(int a, double v, std::uint64_t i, std::uint64_t j) { data_[a][at(a, {j, i})] = v; }
    void store(int a, double v, std::uint64_t i, std::uint64_t j, std::uint64_t k) {
        data_[a][at(a, {k, j, i})] = v;
    }

    std::span<const double> raw(int a) const { return data_[a]; }
    std::size_t arrays() const noexcept { return data_.size(); }

private:
    std::size_t at(int a, std::initializer_list<std::uint64_t> coord) const {
        return static_cast<std::size_t>(bindings_[static_cast<std::size_t>(a)].layout.index_unchecked(
            std::span<const std::uint64_t>(coord.begin(), coord.size())));
    }

    const std::vector<ArrayBinding>& bindings_;
    std::vector<std::vector<double>> data_;
};

/// Deterministic inputs: every array gets 1/(2+i+j+k); square 2D arrays also
/// get 2^m on the diagonal, which makes them symmetric and diagonally dominant
/// (so Cholesky and Crout are well defined).
inline void fill_inputs(const PatternSpec& spec, DataMemory& mem) {
    const auto decls = array_decls(spec);
    for (std::size_t a = 0; a < decls.size(); ++a) {
        const auto& b = decls[a].bits;
        const int ai = static_cast<int>(a);
        if (b.size() == 2) {
            const std::uint64_t rows = std::uint64_t{1} << b[1], cols = std::uint64_t{1} << b[0];
            for (std::uint64_t i = 0; i < rows; ++i)
                for (std::uint64_t j = 0; j < cols; ++j) {
                    double v = 1.0 / static_cast<double>(2 + i + j);
                    if (rows == cols && i == j) v += static_cast<double>(rows);
                    mem.store(ai, v, i, j);
                }
        } else {
            const std::uint64_t ni = std::uint64_t{1} << b[2], nj = std::uint64_t{1} << b[1],
                                nk = std::uint64_t{1} << b[0];
            for (std::uint64_t i = 0; i < ni; ++i)
                for (std::uint64_t j = 0; j < nj; ++j)
                    for (std::uint64_t k = 0; k < nk; ++k)
                        mem.store(ai, 1.0 / static_cast<double>(2 + i + j + k), i, j, k);
        }
    }
}

/// Stream the kernel's events, in loop-nest order, into `sink`.
template <class Sink>
void generate_trace(const PatternSpec& spec, const Layout& layout, Sink&& sink,
                    std::uint64_t line = 64) {
    const auto bindings = bind_arrays(spec, layout, line);
    TraceMemory<std::remove_reference_t<Sink>> mem(bindings, spec.element_size, sink);
    run_kernel(spec, mem);
}

inline std::vector<AccessEvent> collect_trace(const PatternSpec& spec, const Layout& layout,
                                              std::uint64_t line = 64) {
    std::vector<AccessEvent> events;
    generate_trace(spec, layout, [&](const AccessEvent& e) { events.push_back(e); }, line);
    return events;
}

/// One event per line: "L 0x1f0" or "S 0x40".
inline void write_trace_line(std::ostream& os, const AccessEvent& e) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c 0x%llx\n", e.op == AccessKind::load ? 'L' : 'S',
                  static_cast<unsigned long long>(e.address));
    os << buf;
}

}  // namespace gmorton

#endif  // GMORTON_PATTERNS_HPP
