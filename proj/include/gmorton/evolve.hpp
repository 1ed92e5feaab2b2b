// SPDX-License-Identifier: Apache-2.0

#ifndef GMORTON_EVOLVE_HPP
#define GMORTON_EVOLVE_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gmorton/fitness.hpp"
#include "gmorton/layout.hpp"
#include "gmorton/rng.hpp"

namespace gmorton {

/// Require the `min_bits` least significant ranks to come from `dim`, so that
/// mode-`dim` fibers are contiguous in blocks of 2^min_bits elements.
struct ContiguityConstraint {
    unsigned dim = 0;
    unsigned min_bits = 0;

    std::uint64_t min_block() const noexcept { return std::uint64_t{1} << min_bits; }
    bool satisfied_by(const Layout& layout) const {
        return contiguity_block(layout, dim) >= min_block();
    }
};

/// Parse "d:k" (dimension d, block of 2^k elements).
inline ContiguityConstraint parse_contiguity(std::string_view text) {
    const auto colon = text.find(':');
    auto number = [&](std::string_view s) -> unsigned {
        if (s.empty() || s.size() > 3 || s.find_first_not_of("0123456789") != std::string_view::npos)
            throw std::invalid_argument("malformed contiguity constraint '" + std::string(text) +
                                        "', expected d:k");
        return static_cast<unsigned>(std::stoul(std::string(s)));
    };
    if (colon == std::string_view::npos)
        throw std::invalid_argument("malformed contiguity constraint '" + std::string(text) +
                                    "', expected d:k");
    return {number(text.substr(0, colon)), number(text.substr(colon + 1))};
}

struct GAConfig {
    std::size_t mu = 20;
    std::size_t lambda = 20;
    double mutation_rate = 0.25;
    std::size_t generations = 20;
    std::uint64_t seed = 0;
    std::optional<ContiguityConstraint> contiguity;
    unsigned threads = 1;
    /// Breeding attempts per offspring before giving up on the constraint.
    std::size_t max_attempts = 100000;
};

inline void validate_config(const GAConfig& c) {
    if (c.mu < 1) throw std::invalid_argument("mu must be at least 1");
    if (c.lambda < c.mu) throw std::invalid_argument("comma selection needs lambda >= mu");
    if (!(c.mutation_rate >= 0.0 && c.mutation_rate <= 1.0))
        throw std::invalid_argument("mutation rate must lie in [0, 1]");
}

struct Individual {
    Layout layout;
    FitnessValue fitness;
};

/// Higher fitness first; equal fitness falls back to lexicographic rank order.
inline bool fitter(const Individual& a, const Individual& b) {
    if (a.fitness.value != b.fitness.value) return a.fitness.value > b.fitness.value;
    return a.layout < b.layout;
}

using BatchEvaluator = std::function<std::vector<FitnessValue>(const std::vector<Layout>&)>;

inline BatchEvaluator batch_of(const Evaluator& eval, unsigned threads = 1) {
    return [&eval, threads](const std::vector<Layout>& ls) { return eval(ls, threads); };
}

/// The two canonical seeds: axis orders (0..n-1) and (n-1..0). Under a
/// contiguity constraint on d, d is moved to the front of both orders.
inline std::vector<Layout> seed_layouts(const Shape& shape,
                                        const std::optional<ContiguityConstraint>& c = {}) {
    std::vector<unsigned> up(shape.dims());
    std::iota(up.begin(), up.end(), 0u);
    std::vector<unsigned> down(up.rbegin(), up.rend());
    if (c) {
        if (c->dim >= shape.dims())
            throw std::invalid_argument("contiguity dimension out of range");
        if (c->min_bits > shape.bits(c->dim))
            throw std::invalid_argument("contiguity block larger than the dimension");
        for (auto* order : {&up, &down}) {
            std::erase(*order, c->dim);
            order->insert(order->begin(), c->dim);
        }
    }
    return {canonical_layout(shape, up), canonical_layout(shape, down)};
}

inline std::vector<Individual> initial_population(const Shape& shape, const BatchEvaluator& eval,
                                                  const std::optional<ContiguityConstraint>& c = {}) {
    auto seeds = seed_layouts(shape, c);
    auto fit = eval(seeds);
    std::vector<Individual> pop;
    for (std::size_t i = 0; i < seeds.size(); ++i) pop.push_back({seeds[i], fit[i]});
    return pop;
}

/// Ordered crossover on multiset permutations. Copies of a gene are told apart
/// by occurrence (the k-th 0 in parent_b is the same gene as the k-th 0 in
/// parent_a), which makes this plain OX on the labelled permutation: keep
/// parent_a's [begin, end) in place and fill the other positions left to
/// right with parent_b's remaining genes in order.
inline Layout ox_crossover(const Layout& parent_a, const Layout& parent_b, std::size_t begin,
                           std::size_t end) {
    if (parent_a.shape().bits().size() != parent_b.shape().bits().size() ||
        !parent_a.shape().same_family(parent_b.shape()))
        throw std::invalid_argument("crossover parents have different shapes");
    const std::size_t len = parent_a.size();
    if (begin >= end || end > len) throw std::invalid_argument("invalid crossover cut");
    const std::size_t dims = parent_a.dims();
    // taken[d * len + k]: the k-th occurrence of d sits in the kept segment.
    std::vector<char> taken(dims * len, 0);
    std::vector<unsigned> seen(dims, 0);
    std::vector<unsigned> child(len);
    for (std::size_t k = 0; k < end; ++k) {
        const unsigned d = parent_a.rank(k);
        if (k >= begin) {
            child[k] = d;
            taken[d * len + seen[d]] = 1;
        }
        ++seen[d];
    }
    std::fill(seen.begin(), seen.end(), 0u);
    std::size_t pos = begin == 0 ? end : 0;
    for (std::size_t k = 0; k < len && pos < len; ++k) {
        const unsigned d = parent_b.rank(k);
        if (taken[d * len + seen[d]++]) continue;
        child[pos++] = d;
        if (pos == begin) pos = end;
    }
    return Layout(std::move(child), parent_a.shape());
}

/// Reverse ranks[begin, end).
inline Layout inversion_mutation(const Layout& layout, std::size_t begin, std::size_t end) {
    if (begin >= end || end > layout.size()) throw std::invalid_argument("invalid inversion segment");
    auto ranks = layout.rank_vector();
    std::reverse(ranks.begin() + static_cast<std::ptrdiff_t>(begin),
                 ranks.begin() + static_cast<std::ptrdiff_t>(end));
    return Layout(std::move(ranks), layout.shape());
}

/// Uniform cut pair 0 <= begin < end <= len.
inline std::pair<std::size_t, std::size_t> random_cut(std::size_t len, Rng& rng) {
    std::size_t a = rng.below(len + 1);
    std::size_t b = rng.below(len);
    if (b >= a) ++b;
    return {std::min(a, b), std::max(a, b)};
}

/// Fitness-proportional pick with replacement.
inline std::size_t roulette(const std::vector<Individual>& pop, Rng& rng) {
    double total = 0.0;
    for (const auto& ind : pop) total += ind.fitness.value;
    if (!(total > 0.0)) return rng.below(pop.size());
    const double target = rng.unit() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        acc += pop[i].fitness.value;
        if (target < acc) return i;
    }
    return pop.size() - 1;
}

/// Uniformly random multiset permutation (Fisher-Yates over the rank multiset).
inline Layout random_layout(const Shape& shape, Rng& rng) {
    std::vector<unsigned> ranks;
    for (unsigned d = 0; d < shape.dims(); ++d) ranks.insert(ranks.end(), shape.bits(d), d);
    for (std::size_t i = ranks.size(); i > 1; --i) std::swap(ranks[i - 1], ranks[rng.below(i)]);
    return Layout(std::move(ranks), shape);
}

/// Breed lambda offspring (all random draws happen here, before any
/// evaluation) and keep the mu fittest of them.
inline std::vector<Layout> breed(const std::vector<Individual>& population, const GAConfig& config,
                                 Rng& rng) {
    if (population.empty()) throw std::invalid_argument("empty population");
    const std::size_t len = population.front().layout.size();
    std::vector<Layout> offspring;
    offspring.reserve(config.lambda);
    while (offspring.size() < config.lambda) {
        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt == config.max_attempts)
                throw std::runtime_error("no offspring satisfied the contiguity constraint");
            const auto& a = population[roulette(population, rng)].layout;
            const auto& b = population[roulette(population, rng)].layout;
            auto [ci, cj] = random_cut(len, rng);
            Layout child = ox_crossover(a, b, ci, cj);
            if (rng.unit() < config.mutation_rate) {
                auto [mi, mj] = random_cut(len, rng);
                child = inversion_mutation(child, mi, mj);
            }
            if (config.contiguity && !config.contiguity->satisfied_by(child)) continue;
            offspring.push_back(std::move(child));
            break;
        }
    }
    return offspring;
}

/// Comma selection: parents never survive; the next population is the mu
/// fittest of the lambda offspring.
inline std::vector<Individual> next_generation(const std::vector<Individual>& population,
                                               const GAConfig& config, const BatchEvaluator& eval,
                                               Rng& rng) {
    validate_config(config);
    auto children = breed(population, config, rng);
    auto fit = eval(children);
    std::vector<Individual> next;
    next.reserve(children.size());
    for (std::size_t i = 0; i < children.size(); ++i) next.push_back({children[i], fit[i]});
    std::stable_sort(next.begin(), next.end(), fitter);
    next.resize(std::min(config.mu, next.size()), next.front());
    return next;
}

struct GenerationRecord {
    std::size_t generation = 0;
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
    Individual best;
    std::vector<Individual> population;
};

struct EvolutionHistory {
    std::vector<GenerationRecord> generations;
    std::optional<Individual> best;
    std::size_t best_generation = 0;

    /// Best fitness seen in generations 0..g.
    double best_so_far(std::size_t g) const {
        double b = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i <= g && i < generations.size(); ++i)
            b = std::max(b, generations[i].max);
        return b;
    }
};

inline GenerationRecord summarize(std::size_t generation, std::vector<Individual> population) {
    GenerationRecord rec{generation, 0.0, 0.0, 0.0, population.front(), {}};
    double sum = 0.0;
    rec.min = std::numeric_limits<double>::infinity();
    rec.max = -std::numeric_limits<double>::infinity();
    for (const auto& ind : population) {
        sum += ind.fitness.value;
        rec.min = std::min(rec.min, ind.fitness.value);
        rec.max = std::max(rec.max, ind.fitness.value);
        if (fitter(ind, rec.best)) rec.best = ind;
    }
    rec.mean = sum / static_cast<double>(population.size());
    rec.population = std::move(population);
    return rec;
}

inline EvolutionHistory run_evolution(const Shape& shape, const BatchEvaluator& eval,
                                      const GAConfig& config) {
    validate_config(config);
    Rng rng(config.seed);
    EvolutionHistory history;
    auto population = initial_population(shape, eval, config.contiguity);
    auto record = [&](std::size_t g, const std::vector<Individual>& pop) {
        history.generations.push_back(summarize(g, pop));
        const Individual& b = history.generations.back().best;
        if (!history.best || b.fitness.value > history.best->fitness.value) {
            history.best = b;
            history.best_generation = g;
        }
    };
    record(0, population);
    for (std::size_t g = 1; g <= config.generations; ++g) {
        population = next_generation(population, config, eval, rng);
        record(g, population);
    }
    return history;
}

inline EvolutionHistory run_evolution(const PatternSpec& pattern, const HierarchySpec& hierarchy,
                                      const GAConfig& config) {
    Evaluator eval(pattern, hierarchy);
    return run_evolution(eval.shape(), batch_of(eval, config.threads), config);
}

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// generation,min_fitness,mean_fitness,max_fitness,best_layout
inline void write_history_csv(std::ostream& os, const EvolutionHistory& history) {
    os << "generation,min_fitness,mean_fitness,max_fitness,best_layout\n";
    for (const auto& g : history.generations)
        os << g.generation << ',' << format_real(g.min) << ',' << format_real(g.mean) << ','
           << format_real(g.max) << ",\"" << to_string(g.best.layout) << "\"\n";
}

}  // namespace gmorton

#endif  // GMORTON_EVOLVE_HPP
