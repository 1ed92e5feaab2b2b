// SPDX-License-Identifier: Apache-2.0

#ifndef GMORTON_CACHESIM_HPP
#define GMORTON_CACHESIM_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmorton/hierarchy.hpp"

namespace gmorton {

enum class AccessKind : std::uint8_t { load, store };

struct AccessEvent {
    AccessKind op = AccessKind::load;
    std::uint64_t address = 0;
    std::uint32_t size = 0;

    friend bool operator==(const AccessEvent&, const AccessEvent&) = default;
};

/// Counters of one cache level. Only demand traffic (loads and stores issued
/// by the program, plus the fetches they cause) counts as hits or misses;
/// victim installs and write-backs are tallied separately.
struct LevelStats {
    std::string name;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t loads = 0;       // demand loads arriving here (including fetches for inner misses)
    std::uint64_t stores = 0;      // demand stores arriving here
    std::uint64_t evictions = 0;
    std::uint64_t writebacks = 0;  // dirty lines this level sent outward
    std::uint64_t victims_in = 0;
    std::uint64_t writebacks_in = 0;

    std::uint64_t accesses() const noexcept { return hits + misses; }
    friend bool operator==(const LevelStats&, const LevelStats&) = default;
};

struct SimStats {
    std::vector<LevelStats> levels;
    std::uint64_t memory_loads = 0;   // M_hit: demand fetches served by main memory
    std::uint64_t memory_stores = 0;  // write-backs that reached main memory
    std::uint64_t loads = 0;
    std::uint64_t stores = 0;

    std::uint64_t accesses() const noexcept { return loads + stores; }

    const LevelStats& level(std::string_view name) const {
        for (const auto& l : levels)
            if (l.name == name) return l;
        throw std::out_of_range("no level " + std::string(name) + " in statistics");
    }

    friend bool operator==(const SimStats&, const SimStats&) = default;
};

/// Result of a single demand access: the index of the level that held the
/// line, or `memory` when every level on the load path missed.
struct AccessOutcome {
    static constexpr std::size_t memory = std::numeric_limits<std::size_t>::max();
    std::size_t served_by = memory;

    bool l1_hit() const noexcept { return served_by == 0; }
    bool from_memory() const noexcept { return served_by == memory; }
};

/// Mutable state of a write-back, write-allocate, strict-LRU cache hierarchy.
/// Single-threaded; independent instances share nothing.
class CacheState {
public:
    explicit CacheState(const HierarchySpec& spec) {
        validate_hierarchy(spec);
        const std::size_t n = spec.levels.size();
        auto index_of = [&](const std::optional<std::string>& name) {
            return name ? *spec.find(*name) : none;
        };
        // Simulation order puts `first` at position 0 and follows the spec
        // otherwise; `order_` maps positions back to spec indices.
        levels_.reserve(n);
        for (const auto& ls : spec.levels) {
            Level l;
            l.sets = ls.sets;
            l.ways = ls.ways;
            l.line = ls.line;
            l.line_shift = static_cast<unsigned>(__builtin_ctzll(ls.line));
            l.sets_pow2 = (ls.sets & (ls.sets - 1)) == 0;
            l.write_back = ls.write_back;
            l.load_from = index_of(ls.load_from);
            l.store_to = index_of(ls.store_to);
            l.victim_to = index_of(ls.victim_to);
            l.tags.assign(ls.sets * ls.ways, 0);
            l.dirty.assign(ls.sets * ls.ways, 0);
            l.fill.assign(ls.sets, 0);
            l.stats.name = ls.name;
            levels_.push_back(std::move(l));
        }
        first_ = *spec.find(spec.first);
        flush_order_ = topological_order();
    }

    /// Issue one demand access. Throws std::invalid_argument if it straddles a
    /// line of the first level.
    AccessOutcome access(AccessKind op, std::uint64_t address, std::uint32_t size) {
        const Level& l1 = levels_[first_];
        if (size == 0 || (address & (l1.line - 1)) + size > l1.line)
            throw std::invalid_argument("access of " + std::to_string(size) + " bytes at " +
                                        std::to_string(address) + " straddles a cache line");
        if (op == AccessKind::load) ++loads_;
        else ++stores_;
        AccessOutcome out;
        out.served_by = demand(first_, address, op == AccessKind::store);
        return out;
    }

    AccessOutcome access(const AccessEvent& ev) { return access(ev.op, ev.address, ev.size); }
    AccessOutcome load(std::uint64_t address, std::uint32_t size = 1) {
        return access(AccessKind::load, address, size);
    }
    AccessOutcome store(std::uint64_t address, std::uint32_t size = 1) {
        return access(AccessKind::store, address, size);
    }

    /// Write every dirty line outward through its store_to chain, innermost
    /// level first, leaving all caches clean.
    SimStats flush_writeback() {
        for (std::size_t li : flush_order_) {
            Level& l = levels_[li];
            for (std::uint64_t s = 0; s < l.sets; ++s) {
                const std::uint64_t base = s * l.ways;
                for (std::uint32_t w = 0; w < l.fill[s]; ++w) {
                    if (!l.dirty[base + w]) continue;
                    l.dirty[base + w] = 0;
                    ++l.stats.writebacks;
                    write_back(l.store_to, l.tags[base + w] << l.line_shift);
                }
            }
        }
        return stats();
    }

    SimStats stats() const {
        SimStats s;
        s.levels.reserve(levels_.size());
        for (const auto& l : levels_) s.levels.push_back(l.stats);
        s.memory_loads = memory_loads_;
        s.memory_stores = memory_stores_;
        s.loads = loads_;
        s.stores = stores_;
        return s;
    }

    bool contains(std::size_t level, std::uint64_t address) const {
        const Level& l = levels_.at(level);
        const std::uint64_t tag = address >> l.line_shift;
        const std::uint64_t base = l.set_of(tag) * l.ways;
        for (std::uint32_t w = 0; w < l.fill[l.set_of(tag)]; ++w)
            if (l.tags[base + w] == tag) return true;
        return false;
    }

    bool is_dirty(std::size_t level, std::uint64_t address) const {
        const Level& l = levels_.at(level);
        const std::uint64_t tag = address >> l.line_shift;
        const std::uint64_t set = l.set_of(tag);
        for (std::uint32_t w = 0; w < l.fill[set]; ++w)
            if (l.tags[set * l.ways + w] == tag) return l.dirty[set * l.ways + w] != 0;
        return false;
    }

private:
    static constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

    struct Level {
        std::uint64_t sets = 0;
        std::uint32_t ways = 0;
        std::uint64_t line = 0;
        unsigned line_shift = 0;
        bool sets_pow2 = false;
        bool write_back = true;
        std::size_t load_from = none;
        std::size_t store_to = none;
        std::size_t victim_to = none;
        // Per set: `ways` slots ordered most- to least-recently used; the first
        // `fill[set]` are valid.
        std::vector<std::uint64_t> tags;
        std::vector<std::uint8_t> dirty;
        std::vector<std::uint32_t> fill;
        LevelStats stats;

        std::uint64_t set_of(std::uint64_t tag) const noexcept {
            return sets_pow2 ? (tag & (sets - 1)) : tag % sets;
        }
    };

    struct Victim {
        bool valid = false;
        std::uint64_t tag = 0;
        bool dirty = false;
    };

    // Find `tag` in its set; on hit move it to the MRU slot and return true.
    static bool touch(Level& l, std::uint64_t set, std::uint64_t tag, bool make_dirty) {
        const std::uint64_t base = set * l.ways;
        const std::uint32_t fill = l.fill[set];
        for (std::uint32_t w = 0; w < fill; ++w) {
            if (l.tags[base + w] != tag) continue;
            const std::uint8_t d = l.dirty[base + w] | static_cast<std::uint8_t>(make_dirty);
            std::copy_backward(l.tags.begin() + base, l.tags.begin() + base + w,
                               l.tags.begin() + base + w + 1);
            std::copy_backward(l.dirty.begin() + base, l.dirty.begin() + base + w,
                               l.dirty.begin() + base + w + 1);
            l.tags[base] = tag;
            l.dirty[base] = d;
            return true;
        }
        return false;
    }

    // Insert at MRU; returns the LRU line pushed out of a full set.
    static Victim insert(Level& l, std::uint64_t set, std::uint64_t tag, bool dirty) {
        const std::uint64_t base = set * l.ways;
        Victim v;
        std::uint32_t fill = l.fill[set];
        if (fill == l.ways) {
            v = {true, l.tags[base + fill - 1], l.dirty[base + fill - 1] != 0};
            --fill;
        } else {
            ++l.fill[set];
        }
        std::copy_backward(l.tags.begin() + base, l.tags.begin() + base + fill,
                           l.tags.begin() + base + fill + 1);
        std::copy_backward(l.dirty.begin() + base, l.dirty.begin() + base + fill,
                           l.dirty.begin() + base + fill + 1);
        l.tags[base] = tag;
        l.dirty[base] = dirty ? 1 : 0;
        return v;
    }

    std::size_t demand(std::size_t li, std::uint64_t address, bool is_store) {
        Level& l = levels_[li];
        if (is_store) ++l.stats.stores;
        else ++l.stats.loads;
        const std::uint64_t tag = address >> l.line_shift;
        const std::uint64_t set = l.set_of(tag);
        const bool mark_dirty = is_store && l.write_back;
        if (touch(l, set, tag, mark_dirty)) {
            ++l.stats.hits;
            if (is_store && !l.write_back) write_back(l.store_to, address);
            return li;
        }
        ++l.stats.misses;
        std::size_t served;
        if (l.load_from != none) {
            served = demand(l.load_from, address, false);
        } else {
            ++memory_loads_;
            served = AccessOutcome::memory;
        }
        // `l` stays valid: levels_ never reallocates after construction.
        Victim v = insert(l, set, tag, mark_dirty);
        if (is_store && !l.write_back) write_back(l.store_to, address);
        if (v.valid) evict(li, v);
        return served;
    }

    void evict(std::size_t li, const Victim& v) {
        Level& l = levels_[li];
        ++l.stats.evictions;
        const std::uint64_t address = v.tag << l.line_shift;
        if (l.victim_to != none) {
            if (v.dirty) ++l.stats.writebacks;
            Level& t = levels_[l.victim_to];
            ++t.stats.victims_in;
            place(l.victim_to, address, v.dirty);
        } else if (v.dirty) {
            ++l.stats.writebacks;
            write_back(l.store_to, address);
        }
    }

    void write_back(std::size_t target, std::uint64_t address) {
        if (target == none) {
            ++memory_stores_;
            return;
        }
        ++levels_[target].stats.writebacks_in;
        place(target, address, true);
    }

    // Non-demand install (victim or write-back): no fetch, no hit/miss count.
    void place(std::size_t li, std::uint64_t address, bool dirty) {
        Level& l = levels_[li];
        const std::uint64_t tag = address >> l.line_shift;
        const std::uint64_t set = l.set_of(tag);
        const bool keep_dirty = dirty && l.write_back;
        if (touch(l, set, tag, keep_dirty)) {
            if (dirty && !l.write_back) write_back(l.store_to, address);
            return;
        }
        Victim v = insert(l, set, tag, keep_dirty);
        if (dirty && !l.write_back) write_back(l.store_to, address);
        if (v.valid) evict(li, v);
    }

    std::vector<std::size_t> topological_order() const {
        const std::size_t n = levels_.size();
        std::vector<std::size_t> order;
        std::vector<bool> done(n, false);
        // Reverse post-order of a DFS along outward links: inner levels first.
        auto visit = [&](auto&& self, std::size_t i) -> void {
            done[i] = true;
            for (std::size_t j : {levels_[i].load_from, levels_[i].store_to, levels_[i].victim_to})
                if (j != none && !done[j]) self(self, j);
            order.push_back(i);
        };
        visit(visit, first_);
        for (std::size_t i = 0; i < n; ++i)
            if (!done[i]) visit(visit, i);
        std::reverse(order.begin(), order.end());
        return order;
    }

    std::vector<Level> levels_;
    std::size_t first_ = 0;
    std::vector<std::size_t> flush_order_;
    std::uint64_t memory_loads_ = 0;
    std::uint64_t memory_stores_ = 0;
    std::uint64_t loads_ = 0;
    std::uint64_t stores_ = 0;
};

inline CacheState build_hierarchy(const HierarchySpec& spec) { return CacheState(spec); }

inline SimStats collect_stats(const CacheState& state) { return state.stats(); }

}  // namespace gmorton

#endif  // GMORTON_CACHESIM_HPP
