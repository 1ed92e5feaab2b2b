// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "gmorton/cache_spec.hpp"

using namespace gmorton;

namespace {

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    if (pos != std::string::npos) text.replace(pos, from.size(), to);
    return text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST(Presets, HaswellValues) {
    const auto h = parse_cache_spec(presets::haswell);
    ASSERT_EQ(h.levels.size(), 3u);
    EXPECT_EQ(h.levels[0].sets, 64u);
    EXPECT_EQ(h.levels[0].ways, 8u);
    EXPECT_EQ(h.levels[0].latency, 4u);
    EXPECT_EQ(h.levels[1].sets, 512u);
    EXPECT_EQ(h.levels[1].latency, 12u);
    EXPECT_EQ(h.levels[2].sets, 25600u);
    EXPECT_EQ(h.levels[2].ways, 16u);
    EXPECT_EQ(h.levels[2].latency, 36u);
    EXPECT_EQ(h.levels[1].victim_to, "L3");
    EXPECT_FALSE(h.levels[0].victim_to);
    EXPECT_EQ(h.first, "L1");
    EXPECT_EQ(h.last, "L3");
    EXPECT_EQ(h.memory_latency, 200u);
    EXPECT_EQ(h.levels[0].capacity(), 32u * 1024u);
}

TEST(Presets, Zen3Values) {
    const auto z = parse_cache_spec(presets::zen3);
    EXPECT_EQ(z.levels[0].latency, 7u);
    EXPECT_EQ(z.levels[1].sets, 1024u);
    EXPECT_EQ(z.levels[2].sets, 32768u);
    EXPECT_EQ(z.levels[2].latency, 46u);
    EXPECT_EQ(z.memory_latency, 200u);
}

TEST(Presets, LookupByName) {
    EXPECT_TRUE(presets::find("haswell"));
    EXPECT_TRUE(presets::find("zen3"));
    EXPECT_FALSE(presets::find("skylake"));
    EXPECT_EQ(load_cache_spec("zen3"), parse_cache_spec(presets::zen3));
    EXPECT_THROW(load_cache_spec("/nonexistent/file.yml"), std::invalid_argument);
}

TEST(Presets, ShippedConfigFilesMatchEmbeddedText) {
    EXPECT_EQ(read_file(GMORTON_SOURCE_DIR "/configs/haswell.yml"), presets::haswell);
    EXPECT_EQ(read_file(GMORTON_SOURCE_DIR "/configs/zen3.yml"), presets::zen3);
    EXPECT_EQ(load_cache_spec(GMORTON_SOURCE_DIR "/configs/haswell.yml"),
              parse_cache_spec(presets::haswell));
}

TEST(Render, RoundTripsPresets) {
    for (auto text : {presets::haswell, presets::zen3}) {
        const auto spec = parse_cache_spec(text);
        EXPECT_EQ(render_cache_spec(spec), text);
        EXPECT_EQ(parse_cache_spec(render_cache_spec(spec)), spec);
    }
}

TEST(Render, RoundTripsEditedSpec) {
    auto spec = parse_cache_spec(presets::haswell);
    spec.levels[0].ways = 4;
    spec.levels[2].sets = 3000;
    spec.memory_latency = 150;
    EXPECT_EQ(parse_cache_spec(render_cache_spec(spec)), spec);
}

TEST(Parse, OptionalKeysDefault) {
    const std::string text =
        "caches:\n  L1:\n    sets: 4\n    ways: 2\n    line: 32\n    latency: 3\n"
        "memory:\n  first: L1\n  last: L1\n  latency: 50\n";
    const auto spec = parse_cache_spec(text);
    EXPECT_EQ(spec.levels[0].replacement, "LRU");
    EXPECT_TRUE(spec.levels[0].write_back);
    EXPECT_EQ(spec.levels[0].line, 32u);
}

TEST(ParseErrors, UnsupportedReplacementPolicy) {
    const auto text = replace_once(std::string(presets::haswell), "replacement: LRU", "replacement: FIFO");
    try {
        parse_cache_spec(text);
        FAIL() << "expected an error";
    } catch (const CacheSpecError& e) {
        EXPECT_NE(std::string(e.what()).find("FIFO"), std::string::npos) << e.what();
        EXPECT_EQ(e.line(), 6);
    }
}

TEST(ParseErrors, UnknownKeyReportsLine) {
    const auto text = replace_once(std::string(presets::haswell), "    latency: 12\n",
                                   "    latency: 12\n    prefetch: true\n");
    try {
        parse_cache_spec(text);
        FAIL() << "expected an error";
    } catch (const CacheSpecError& e) {
        EXPECT_NE(std::string(e.what()).find("prefetch"), std::string::npos) << e.what();
        EXPECT_EQ(e.line(), 21);
    }
}

TEST(ParseErrors, MissingRequiredKey) {
    const auto text = replace_once(std::string(presets::haswell), "    ways: 16\n", "");
    try {
        parse_cache_spec(text);
        FAIL() << "expected an error";
    } catch (const CacheSpecError& e) {
        EXPECT_NE(std::string(e.what()).find("ways"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_cache_spec(replace_once(std::string(presets::haswell), "  latency: 200\n", "")),
                 CacheSpecError);
}

TEST(ParseErrors, MalformedValues) {
    const std::string base(presets::haswell);
    EXPECT_THROW(parse_cache_spec(replace_once(base, "sets: 64", "sets: -1")), std::invalid_argument);
    EXPECT_THROW(parse_cache_spec(replace_once(base, "sets: 64", "sets: many")), std::invalid_argument);
    EXPECT_THROW(parse_cache_spec(replace_once(base, "line: 64", "line: 48")), std::invalid_argument);
    EXPECT_THROW(parse_cache_spec(replace_once(base, "write_back: true", "write_back: maybe")),
                 std::invalid_argument);
    EXPECT_THROW(parse_cache_spec(replace_once(base, "load_from: L2", "load_from: L7")),
                 std::invalid_argument);
    EXPECT_THROW(parse_cache_spec(replace_once(base, "last: L3", "last: L2")), std::invalid_argument);
    EXPECT_THROW(parse_cache_spec("caches: [1, 2]\n"), std::invalid_argument);
    EXPECT_THROW(parse_cache_spec("caches:\n  L1: {sets: 1\n"), std::invalid_argument);
    EXPECT_THROW(parse_cache_spec(""), std::invalid_argument);
}
