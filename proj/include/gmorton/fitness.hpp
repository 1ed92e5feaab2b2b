// SPDX-License-Identifier: Apache-2.0

#ifndef GMORTON_FITNESS_HPP
#define GMORTON_FITNESS_HPP

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "gmorton/cachesim.hpp"
#include "gmorton/hierarchy.hpp"
#include "gmorton/layout.hpp"
#include "gmorton/patterns.hpp"

namespace gmorton {

struct FitnessValue {
    double value = 0.0;
    std::uint64_t cycles = 0;
    SimStats stats;

    friend bool operator==(const FitnessValue&, const FitnessValue&) = default;
};

/// Data-retrieval cycle estimate: memory fetches at memory latency plus every
/// level's hits at that level's latency.
inline std::uint64_t cycles(const SimStats& stats, const HierarchySpec& spec) {
    if (stats.levels.size() != spec.levels.size())
        throw std::invalid_argument("statistics do not match the hierarchy");
    std::uint64_t total = stats.memory_loads * spec.memory_latency;
    for (std::size_t i = 0; i < spec.levels.size(); ++i)
        total += stats.levels[i].hits * spec.levels[i].latency;
    return total;
}

/// Accesses per L1-normalised cycle, (L1 hits + L1 misses) / (L1 latency * cycles).
/// Equals 1 / L1_lat^2 exactly when every access hits L1.
inline FitnessValue fitness(const SimStats& stats, const HierarchySpec& spec) {
    const auto first = spec.find(spec.first);
    if (!first) throw std::invalid_argument("hierarchy has no first level " + spec.first);
    const LevelStats& l1 = stats.levels.at(*first);
    const std::uint64_t accesses = l1.hits + l1.misses;
    if (accesses == 0) throw std::domain_error("fitness is undefined for an empty trace");
    FitnessValue f;
    f.cycles = cycles(stats, spec);
    f.value = static_cast<double>(accesses) /
              (static_cast<double>(spec.levels[*first].latency) * static_cast<double>(f.cycles));
    f.stats = stats;
    return f;
}

/// Full pipeline, no memoisation: fresh hierarchy, stream the trace, flush,
/// collect, score.
inline FitnessValue evaluate(const Layout& layout, const PatternSpec& pattern,
                             const HierarchySpec& spec) {
    CacheState state(spec);
    const auto& l1 = spec.level(spec.first);
    if (l1.line < pattern.element_size)
        throw std::invalid_argument("cache line smaller than the element size");
    generate_trace(pattern, layout, [&](const AccessEvent& e) { state.access(e); }, l1.line);
    return fitness(state.flush_writeback(), spec);
}

/// Memoising evaluator bound to one pattern and hierarchy. Safe to call from
/// several threads.
class Evaluator {
public:
    Evaluator(PatternSpec pattern, HierarchySpec spec)
        : pattern_(pattern), spec_(std::move(spec)) {
        validate_hierarchy(spec_);
        validate_pattern(pattern_);
        key_suffix_ = "|" + to_string(pattern_) + "|" + render_cache_spec(spec_);
    }

    const PatternSpec& pattern() const noexcept { return pattern_; }
    const HierarchySpec& hierarchy() const noexcept { return spec_; }
    Shape shape() const { return pattern_shape(pattern_); }

    FitnessValue operator()(const Layout& layout) const {
        const std::string key = to_string(layout) + key_suffix_;
        {
            std::lock_guard lock(mutex_);
            if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        }
        FitnessValue f = evaluate(layout, pattern_, spec_);
        std::lock_guard lock(mutex_);
        ++computed_;
        memo_.insert_or_assign(key, f);
        return f;
    }

    /// Evaluate a batch; results keep input order for any thread count.
    std::vector<FitnessValue> operator()(const std::vector<Layout>& layouts,
                                         unsigned threads = 1) const {
        std::vector<FitnessValue> out(layouts.size());
        threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(layouts.size())));
        if (threads == 1) {
            for (std::size_t i = 0; i < layouts.size(); ++i) out[i] = (*this)(layouts[i]);
            return out;
        }
        std::vector<std::exception_ptr> errors(threads);
        {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < threads; ++t)
                pool.emplace_back([&, t] {
                    try {
                        for (std::size_t i = t; i < layouts.size(); i += threads)
                            out[i] = (*this)(layouts[i]);
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        return out;
    }

    std::size_t memo_size() const {
        std::lock_guard lock(mutex_);
        return memo_.size();
    }
    /// Number of full simulations run so far (cache misses of the memo).
    std::size_t simulations() const {
        std::lock_guard lock(mutex_);
        return computed_;
    }

private:
    PatternSpec pattern_;
    HierarchySpec spec_;
    std::string key_suffix_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, FitnessValue> memo_;
    mutable std::size_t computed_ = 0;
};

}  // namespace gmorton

#endif  // GMORTON_FITNESS_HPP
