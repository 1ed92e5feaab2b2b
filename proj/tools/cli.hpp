// SPDX-License-Identifier: Apache-2.0

#ifndef GMORTON_TOOLS_CLI_HPP
#define GMORTON_TOOLS_CLI_HPP

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmorton/gmorton.hpp"

namespace gmorton::cli {

enum ExitCode : int { ok = 0, usage_error = 1, runtime_error = 2 };

/// Preset or spec path used when --cache is absent; GMORTON_CACHE overrides.
inline std::string default_cache() {
    const char* env = std::getenv("GMORTON_CACHE");
    return env && *env ? env : "haswell";
}

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::vector<std::uint64_t> parse_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
            throw std::invalid_argument("expected comma-separated integers, got '" + text + "'");
        out.push_back(std::stoull(item));
    }
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

inline Shape parse_bits(const std::string& text, unsigned element_size = 4) {
    std::vector<unsigned> bits;
    for (auto b : parse_list(text)) {
        if (b > max_total_bits) throw std::invalid_argument("bit width too large");
        bits.push_back(static_cast<unsigned>(b));
    }
    return Shape(std::move(bits), element_size);
}

/// Opens `--out` targets; "-" or empty means the given fallback stream.
class Output {
public:
    Output(const std::string& dir, const std::string& file, std::ostream& fallback)
        : stream_(&fallback) {
        if (dir.empty() || dir == "-") return;
        std::filesystem::create_directories(dir);
        path_ = std::filesystem::path(dir) / file;
        file_.open(path_);
        if (!file_) throw std::runtime_error("cannot write " + path_.string());
        stream_ = &file_;
    }
    std::ostream& stream() { return *stream_; }
    bool to_file() const { return !path_.empty(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::ofstream file_;
    std::filesystem::path path_;
    std::ostream* stream_;
};

inline void print_report(std::ostream& out, const Layout& layout, const PatternSpec& pattern,
                         const std::string& cache, const FitnessValue& f) {
    out << "layout: " << to_string(layout) << '\n';
    out << "pattern: " << to_string(pattern) << '\n';
    out << "cache: " << cache << '\n';
    for (const auto& l : f.stats.levels)
        out << l.name << ": hits " << l.hits << " misses " << l.misses << " evictions "
            << l.evictions << " writebacks " << l.writebacks << '\n';
    out << "memory: loads " << f.stats.memory_loads << " stores " << f.stats.memory_stores << '\n';
    out << "accesses: " << f.stats.accesses() << " (loads " << f.stats.loads << ", stores "
        << f.stats.stores << ")\n";
    out << "cycles: " << f.cycles << '\n';
    out << "fitness: " << format_real(f.value) << '\n';
}

/// Entry point shared by the executable and the tests.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generalized Morton array layouts: indexing, cache simulation, evolution"};
    app.require_subcommand(1);

    std::string bits_text, layout_text, pattern_text, cache = default_cache(), out_dir;
    std::string coord_text, contiguity_text;
    std::uint64_t cap = 10000, seed = 0, count = 100, inverse = 0;
    std::size_t mu = 20, lambda = 20, generations = 20, repeat = 3;
    double rate = 0.25;
    unsigned threads = 1;

    auto* enumerate = app.add_subcommand("enumerate", "Count layouts of a shape and list them");
    enumerate->add_option("--bits", bits_text, "Per-dimension bit widths, e.g. 3,3")->required();
    enumerate->add_option("--cap", cap, "List layouts only when the count is at most this");

    auto* index = app.add_subcommand("index", "Map a coordinate to its linear index (or back)");
    index->add_option("-l,--layout", layout_text, "Layout, e.g. [0,1,0,1,0,1]")->required();
    auto* coord_opt = index->add_option("--coord", coord_text, "Coordinate x0,x1,...");
    auto* inverse_opt = index->add_option("--inverse", inverse, "Linear index to invert");
    coord_opt->excludes(inverse_opt);

    auto* simulate = app.add_subcommand("simulate", "Simulate one layout and report fitness");
    simulate->add_option("-l,--layout", layout_text)->required();
    simulate->add_option("-p,--pattern", pattern_text, "e.g. MMijk(9;4)")->required();
    simulate->add_option("-c,--cache", cache, "Preset (haswell, zen3) or spec file");

    auto* trace = app.add_subcommand("trace", "Print the access trace of a layout and pattern");
    trace->add_option("-l,--layout", layout_text)->required();
    trace->add_option("-p,--pattern", pattern_text)->required();
    trace->add_option("-c,--cache", cache, "Hierarchy whose L1 line size aligns the arrays");

    auto* evolve = app.add_subcommand("evolve", "Search layouts with a (mu,lambda) evolution strategy");
    evolve->add_option("-p,--pattern", pattern_text)->required();
    evolve->add_option("-c,--cache", cache);
    evolve->add_option("--mu", mu);
    evolve->add_option("--lambda", lambda);
    evolve->add_option("--mutation-rate", rate);
    evolve->add_option("--generations", generations);
    evolve->add_option("--seed", seed);
    evolve->add_option("--contiguity", contiguity_text, "d:k, keep 2^k-element mode-d blocks");
    evolve->add_option("--threads", threads);
    evolve->add_option("--out", out_dir, "Directory for history.csv and best.txt");

    auto* sample = app.add_subcommand("sample", "Evaluate uniformly random layouts");
    sample->add_option("-p,--pattern", pattern_text)->required();
    sample->add_option("-c,--cache", cache);
    sample->add_option("--count", count)->check(CLI::PositiveNumber);
    sample->add_option("--seed", seed);
    sample->add_option("--threads", threads);
    sample->add_option("--out", out_dir, "Directory for sample.csv");

    auto* preset = app.add_subcommand("preset", "Print a bundled cache specification");
    std::string preset_name;
    preset->add_option("name", preset_name, "haswell or zen3")->required();

    auto* bench = app.add_subcommand(
        "bench", "Run the kernel natively on real data (timings are hardware dependent)");
    bench->add_option("-l,--layout", layout_text)->required();
    bench->add_option("-p,--pattern", pattern_text)->required();
    bench->add_option("--repeat", repeat);

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    }

    try {
        if (*enumerate) {
            const Shape shape = parse_bits(bits_text);
            const BigCount total = count_layouts(shape);
            out << total.str() << '\n';
            if (total <= cap)
                for_each_layout(shape, cap, [&](const Layout& l) { out << to_string(l) << '\n'; });
        } else if (*index) {
            const Layout layout = parse_layout(layout_text);
            if (*coord_opt) {
                out << layout.linear_index(parse_list(coord_text)) << '\n';
            } else if (*inverse_opt) {
                const auto c = layout.inverse_index(inverse);
                for (std::size_t d = 0; d < c.size(); ++d) out << (d ? "," : "") << c[d];
                out << '\n';
            } else {
                throw std::invalid_argument("index needs --coord or --inverse");
            }
        } else if (*simulate) {
            const PatternSpec pattern = parse_pattern(pattern_text);
            const Layout layout = parse_layout(layout_text, pattern_shape(pattern));
            const HierarchySpec spec = load_cache_spec(cache);
            print_report(out, layout, pattern, cache, evaluate(layout, pattern, spec));
        } else if (*trace) {
            const PatternSpec pattern = parse_pattern(pattern_text);
            const Layout layout = parse_layout(layout_text, pattern_shape(pattern));
            const HierarchySpec spec = load_cache_spec(cache);
            generate_trace(pattern, layout, [&](const AccessEvent& e) { write_trace_line(out, e); },
                           spec.level(spec.first).line);
        } else if (*evolve) {
            const PatternSpec pattern = parse_pattern(pattern_text);
            const HierarchySpec spec = load_cache_spec(cache);
            GAConfig config;
            config.mu = mu;
            config.lambda = lambda;
            config.mutation_rate = rate;
            config.generations = generations;
            config.seed = seed;
            config.threads = threads;
            if (!contiguity_text.empty()) config.contiguity = parse_contiguity(contiguity_text);
            validate_config(config);
            const auto history = run_evolution(pattern, spec, config);
            Output csv(out_dir, "history.csv", out);
            write_history_csv(csv.stream(), history);
            std::ostream& summary = csv.to_file() ? out : err;
            summary << "best fitness " << format_real(history.best->fitness.value)
                    << " at generation " << history.best_generation << '\n';
            summary << "best layout " << to_string(history.best->layout) << '\n';
            if (csv.to_file()) {
                std::ofstream best(std::filesystem::path(out_dir) / "best.txt");
                print_report(best, history.best->layout, pattern, cache, history.best->fitness);
            }
        } else if (*sample) {
            const PatternSpec pattern = parse_pattern(pattern_text);
            const HierarchySpec spec = load_cache_spec(cache);
            const Evaluator eval(pattern, spec);
            Rng rng(seed);
            std::vector<Layout> layouts;
            for (std::uint64_t i = 0; i < count; ++i) layouts.push_back(random_layout(eval.shape(), rng));
            const auto fits = eval(layouts, threads);
            Output csv(out_dir, "sample.csv", out);
            auto& os = csv.stream();
            os << "layout,fitness,cycles";
            for (const auto& l : spec.levels) os << ',' << lower(l.name) << "_hit," << lower(l.name) << "_miss";
            os << ",mem_hit\n";
            for (std::size_t i = 0; i < layouts.size(); ++i) {
                const auto& f = fits[i];
                os << '"' << to_string(layouts[i]) << "\"," << format_real(f.value) << ',' << f.cycles;
                for (const auto& l : f.stats.levels) os << ',' << l.hits << ',' << l.misses;
                os << ',' << f.stats.memory_loads << '\n';
            }
        } else if (*preset) {
            auto text = presets::find(preset_name);
            if (!text) throw std::invalid_argument("unknown preset " + preset_name);
            out << *text;
        } else if (*bench) {
            const PatternSpec pattern = parse_pattern(pattern_text);
            const Layout layout = parse_layout(layout_text, pattern_shape(pattern));
            const auto bindings = bind_arrays(pattern, layout);
            double best_ms = 0.0, checksum = 0.0;
            for (std::size_t r = 0; r < std::max<std::size_t>(repeat, 1); ++r) {
                DataMemory mem(bindings);
                fill_inputs(pattern, mem);
                const auto t0 = std::chrono::steady_clock::now();
                run_kernel(pattern, mem);
                const auto t1 = std::chrono::steady_clock::now();
                const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
                best_ms = r == 0 ? ms : std::min(best_ms, ms);
                checksum = 0.0;
                for (std::size_t a = 0; a < bindings.size(); ++a)
                    for (double v : mem.raw(static_cast<int>(a))) checksum += v;
            }
            out << "best_ms " << format_real(best_ms) << '\n';
            out << "checksum " << format_real(checksum) << '\n';
        }
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return runtime_error;
    }
    return ok;
}

}  // namespace gmorton::cli

#endif  // GMORTON_TOOLS_CLI_HPP
