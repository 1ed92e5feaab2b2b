// SPDX-License-Identifier: Apache-2.0

#ifndef GMORTON_HIERARCHY_HPP
#define GMORTON_HIERARCHY_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gmorton {

struct CacheLevelSpec {
    std::string name;
    std::uint64_t sets = 0;
    std::uint64_t ways = 0;
    std::uint64_t line = 0;
    std::string replacement = "LRU";
    bool write_back = true;
    std::uint64_t latency = 0;
    std::optional<std::string> load_from;
    std::optional<std::string> store_to;
    std::optional<std::string> victim_to;

    std::uint64_t capacity() const noexcept { return sets * ways * line; }

    friend bool operator==(const CacheLevelSpec&, const CacheLevelSpec&) = default;
};

/// Declarative cache hierarchy, levels listed from the first (L1) outward.
struct HierarchySpec {
    std::vector<CacheLevelSpec> levels;
    std::string first;
    std::string last;
    std::uint64_t memory_latency = 0;

    std::optional<std::size_t> find(std::string_view name) const noexcept {
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (levels[i].name == name) return i;
        return std::nullopt;
    }

    const CacheLevelSpec& level(std::string_view name) const {
        auto idx = find(name);
        if (!idx) throw std::out_of_range("no cache level named " + std::string(name));
        return levels[*idx];
    }

    friend bool operator==(const HierarchySpec&, const HierarchySpec&) = default;
};

/// Throws std::invalid_argument describing the first violated constraint.
inline void validate_hierarchy(const HierarchySpec& spec) {
    auto bad = [](const std::string& why) { return std::invalid_argument("cache spec: " + why); };
    if (spec.levels.empty()) throw bad("no cache levels declared");
    if (spec.memory_latency < 1) throw bad("memory latency must be at least 1");
    for (std::size_t i = 0; i < spec.levels.size(); ++i) {
        const auto& l = spec.levels[i];
        if (l.name.empty()) throw bad("level with empty name");
        for (std::size_t j = 0; j < i; ++j)
            if (spec.levels[j].name == l.name) throw bad("duplicate level " + l.name);
        if (l.sets < 1) throw bad(l.name + ": sets must be at least 1");
        if (l.ways < 1) throw bad(l.name + ": ways must be at least 1");
        if (l.line == 0 || (l.line & (l.line - 1)) != 0)
            throw bad(l.name + ": line size must be a power of two");
        if (l.latency < 1) throw bad(l.name + ": latency must be at least 1");
        if (l.replacement != "LRU")
            throw bad(l.name + ": unsupported replacement policy " + l.replacement);
        for (const auto* link : {&l.load_from, &l.store_to, &l.victim_to}) {
            if (*link && !spec.find(**link))
                throw bad(l.name + " links to undeclared level " + **link);
            if (*link && **link == l.name) throw bad(l.name + " links to itself");
        }
    }
    if (!spec.find(spec.first)) throw bad("first level " + spec.first + " is not declared");
    if (!spec.find(spec.last)) throw bad("last level " + spec.last + " is not declared");

    // Cycle check over all link kinds (depth-first, three colours).
    const std::size_t n = spec.levels.size();
    std::vector<int> colour(n, 0);
    auto visit = [&](auto&& self, std::size_t i) -> void {
        colour[i] = 1;
        const auto& l = spec.levels[i];
        for (const auto* link : {&l.load_from, &l.store_to, &l.victim_to}) {
            if (!*link) continue;
            std::size_t j = *spec.find(**link);
            if (colour[j] == 1) throw bad("cycle in level graph through " + l.name);
            if (colour[j] == 0) self(self, j);
        }
        colour[i] = 2;
    };
    for (std::size_t i = 0; i < n; ++i)
        if (colour[i] == 0) visit(visit, i);

    // The demand path from `first` must end at `last`.
    std::size_t at = *spec.find(spec.first);
    while (spec.levels[at].load_from) at = *spec.find(*spec.levels[at].load_from);
    if (spec.levels[at].name != spec.last)
        throw bad("load path from " + spec.first + " ends at " + spec.levels[at].name +
                  ", not at last level " + spec.last);
}

/// Render in the same key order the bundled presets use.
inline std::string render_cache_spec(const HierarchySpec& spec) {
    std::string out = "caches:\n";
    for (const auto& l : spec.levels) {
        out += "  " + l.name + ":\n";
        out += "    sets: " + std::to_string(l.sets) + "\n";
        out += "    ways: " + std::to_string(l.ways) + "\n";
        out += "    line: " + std::to_string(l.line) + "\n";
        out += "    replacement: " + l.replacement + "\n";
        out += std::string("    write_back: ") + (l.write_back ? "true" : "false") + "\n";
        if (l.store_to) out += "    store_to: " + *l.store_to + "\n";
        if (l.load_from) out += "    load_from: " + *l.load_from + "\n";
        if (l.victim_to) out += "    victim_to: " + *l.victim_to + "\n";
        out += "    latency: " + std::to_string(l.latency) + "\n";
    }
    out += "memory:\n";
    out += "  first: " + spec.first + "\n";
    out += "  last: " + spec.last + "\n";
    out += "  latency: " + std::to_string(spec.memory_latency) + "\n";
    return out;
}

namespace presets {

/// Intel Xeon E5-2660 v3 (Haswell), single-core view.
inline constexpr std::string_view haswell = R"(caches:
  L1:
    sets: 64
    ways: 8
    line: 64
    replacement: LRU
    write_back: true
    store_to: L2
    load_from: L2
    latency: 4
  L2:
    sets: 512
    ways: 8
    line: 64
    replacement: LRU
    write_back: true
    store_to: L3
    load_from: L3
    victim_to: L3
    latency: 12
  L3:
    sets: 25600
    ways: 16
    line: 64
    replacement: LRU
    write_back: true
    latency: 36
memory:
  first: L1
  last: L3
  latency: 200
)";

/// AMD EPYC 7413 (Zen 3), single-core view; floating-point L1 latency.
inline constexpr std::string_view zen3 = R"(caches:
  L1:
    sets: 64
    ways: 8
    line: 64
    replacement: LRU
    write_back: true
    store_to: L2
    load_from: L2
    latency: 7
  L2:
    sets: 1024
    ways: 8
    line: 64
    replacement: LRU
    write_back: true
    store_to: L3
    load_from: L3
    victim_to: L3
    latency: 12
  L3:
    sets: 32768
    ways: 16
    line: 64
    replacement: LRU
    write_back: true
    latency: 46
memory:
  first: L1
  last: L3
  latency: 200
)";

inline std::optional<std::string_view> find(std::string_view name) noexcept {
    if (name == "haswell") return haswell;
    if (name == "zen3") return zen3;
    return std::nullopt;
}

}  // namespace presets

}  // namespace gmorton

#endif  // GMORTON_HIERARCHY_HPP
