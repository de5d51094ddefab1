#include <doctest.h>

#include <cmath>

#include "sitqc/audio.hpp"
#include "sitqc/errors.hpp"
#include "sitqc/rng.hpp"

#include "test_util.hpp"

using namespace sitqc;

TEST_CASE("to_mono: symmetric channels cancel") {
    AudioClip clip;
    clip.sample_rate = 8000;
    clip.channels = {{1.0, 1.0}, {-1.0, -1.0}};
    const MonoClip mono = to_mono(clip);
    CHECK(mono.samples == std::vector<double>{0.0, 0.0});
    CHECK(mono.sample_rate == 8000);
}

TEST_CASE("to_mono: single channel is the identity") {
    AudioClip clip;
    clip.sample_rate = 4000;
    clip.channels = {{0.1, -0.2, 0.3}};
    CHECK(to_mono(clip).samples == clip.channels[0]);
}

TEST_CASE("to_mono: four-channel hand-computed mean") {
    AudioClip clip;
    clip.sample_rate = 4000;
    clip.channels = {{0.5, 0.0}, {0.1, 0.2}, {0.3, 0.2}, {0.1, 0.0}};
    const MonoClip mono = to_mono(clip);
    CHECK(mono.samples[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(mono.samples[1] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("segment: 30 s at 4 kHz with 50% overlap gives 14 chunks of 16000") {
    MonoClip clip = testutil::mono_of(std::vector<double>(120000, 0.0), 4000);
    SegmentationConfig cfg;  // 4 s window, 2 s hop, 4 kHz
    const auto chunks = segment(clip, cfg);
    REQUIRE(chunks.size() == 14);
    for (std::size_t k = 0; k < chunks.size(); ++k) {
        CHECK(chunks[k].samples.size() == 16000);
        CHECK(chunks[k].start_s == doctest::Approx(2.0 * static_cast<double>(k)));
    }
    CHECK(chunks.back().start_s == doctest::Approx(26.0));
}

TEST_CASE("segment: exactly one window") {
    MonoClip clip = testutil::mono_of(std::vector<double>(16000, 0.1), 4000);
    SegmentationConfig cfg;
    CHECK(segment(clip, cfg).size() == 1);
}

TEST_CASE("segment: training hop (= window) on 30 s gives 7 windows") {
    MonoClip clip = testutil::mono_of(std::vector<double>(120000, 0.0), 4000);
    SegmentationConfig cfg;
    cfg.hop_s = 4.0;
    CHECK(segment(clip, cfg).size() == 7);
}

TEST_CASE("segment: clip shorter than one window errors") {
    MonoClip clip = testutil::mono_of(std::vector<double>(15999, 0.0), 4000);
    SegmentationConfig cfg;
    CHECK_THROWS_AS(segment(clip, cfg), DataError);
}

TEST_CASE("segment: count formula over random valid shapes") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const auto window = 1 + rng.below(50);
        const auto hop = 1 + rng.below(window);
        const auto len = window + rng.below(400);
        CHECK(window_count(len, window, hop) == (len - window) / hop + 1);

        // Cross-check against an actual segmentation at 1 kHz-style rates.
        MonoClip clip = testutil::mono_of(std::vector<double>(len * 10, 0.0), 1000);
        SegmentationConfig cfg;
        cfg.window_s = static_cast<double>(window) / 100.0;
        cfg.hop_s = static_cast<double>(hop) / 100.0;
        cfg.analysis_rate = 1000;
        CHECK(segment(clip, cfg).size() == window_count(len * 10, window * 10, hop * 10));
    }
}

TEST_CASE("segment after to_mono equals per-channel segment then mean") {
    Rng rng(7);
    AudioClip clip;
    clip.sample_rate = 4000;
    clip.channels.assign(4, {});
    for (auto& ch : clip.channels) {
        ch.resize(40000);
        for (auto& v : ch) v = rng.uniform(-1.0, 1.0);
    }
    SegmentationConfig cfg;
    const auto mono_chunks = segment(to_mono(clip), cfg);

    std::vector<std::vector<Chunk>> per_channel;
    for (const auto& ch : clip.channels) {
        per_channel.push_back(segment(testutil::mono_of(ch, 4000), cfg));
    }
    REQUIRE(mono_chunks.size() == per_channel[0].size());
    for (std::size_t k = 0; k < mono_chunks.size(); ++k) {
        for (std::size_t i = 0; i < mono_chunks[k].samples.size(); i += 997) {
            double mean = 0.0;
            for (const auto& chunks : per_channel) mean += chunks[k].samples[i];
            mean /= static_cast<double>(per_channel.size());
            CHECK(mono_chunks[k].samples[i] == doctest::Approx(mean).epsilon(1e-9));
        }
    }
}

TEST_CASE("validate rejects out-of-range and ragged clips") {
    AudioClip clip;
    clip.sample_rate = 4000;
    clip.channels = {{0.0, 2.0}};
    CHECK_THROWS_AS(validate(clip), DataError);
    clip.channels = {{0.0, 0.5}, {0.1}};
    CHECK_THROWS_AS(validate(clip), DataError);
    MonoClip nan_clip = testutil::mono_of({0.0, std::nan("")}, 4000);
    CHECK_THROWS_AS(validate(nan_clip), DataError);
}
