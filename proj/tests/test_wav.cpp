#include <doctest.h>

#include <cstdint>
#include <fstream>
#include <vector>

#include "sitqc/errors.hpp"
#include "sitqc/wav.hpp"

#include "test_util.hpp"

using namespace sitqc;

TEST_CASE("wav: 16-bit stereo header round-trip") {
    testutil::TempDir tmp("wav_rt");
    AudioClip clip;
    clip.sample_rate = 44100;
    clip.channels = {{0.0, 0.25, -0.25, 0.5, -0.5, 0.9, -0.9, 0.1, -0.1, 0.0},
                     {0.1, 0.2, 0.3, 0.4, 0.5, -0.1, -0.2, -0.3, -0.4, -0.5}};
    write_wav16(clip, tmp / "s.wav");

    const AudioClip back = read_wav(tmp / "s.wav");
    CHECK(back.channels.size() == 2);
    CHECK(back.sample_rate == 44100);
    CHECK(back.frames() == 10);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < 10; ++i)
            CHECK(back.channels[c][i] == doctest::Approx(clip.channels[c][i]).epsilon(1e-3));
}

TEST_CASE("wav: 4-channel 30 s at 44.1 kHz has 1323000 frames per channel") {
    testutil::TempDir tmp("wav_30s");
    AudioClip clip;
    clip.sample_rate = 44100;
    clip.channels.assign(4, std::vector<double>(44100 * 30, 0.0));
    clip.channels[2][123456] = 0.5;
    write_wav16(clip, tmp / "long.wav");

    const AudioClip back = read_wav(tmp / "long.wav");
    CHECK(back.channels.size() == 4);
    CHECK(back.frames() == 1323000);
    CHECK(back.channels[2][123456] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("wav: missing file, malformed data, unsupported codec are distinct") {
    testutil::TempDir tmp("wav_err");

    CHECK_THROWS_WITH_AS(read_wav(tmp / "nope.wav"), doctest::Contains("missing file"), IoError);

    // Truncated data chunk: declared size exceeds the bytes present.
    {
        AudioClip clip;
        clip.sample_rate = 8000;
        clip.channels = {std::vector<double>(100, 0.1)};
        write_wav16(clip, tmp / "trunc.wav");
        std::ifstream in(tmp / "trunc.wav", std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        bytes.resize(bytes.size() - 37);
        std::ofstream out(tmp / "trunc.wav", std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_WITH_AS(read_wav(tmp / "trunc.wav"), doctest::Contains("malformed"), IoError);

    // Not a RIFF file at all.
    {
        std::ofstream out(tmp / "noise.wav", std::ios::binary);
        out << "this is not audio, it only ends in .wav";
    }
    CHECK_THROWS_WITH_AS(read_wav(tmp / "noise.wav"), doctest::Contains("malformed"), IoError);

    // Valid RIFF structure with an unsupported codec tag (mu-law = 7).
    {
        AudioClip clip;
        clip.sample_rate = 8000;
        clip.channels = {std::vector<double>(10, 0.0)};
        write_wav16(clip, tmp / "mulaw.wav");
        std::fstream f(tmp / "mulaw.wav", std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(20);
        const char mulaw[2] = {7, 0};
        f.write(mulaw, 2);
    }
    CHECK_THROWS_WITH_AS(read_wav(tmp / "mulaw.wav"), doctest::Contains("unsupported"), IoError);
}

TEST_CASE("wav: float and 24-bit readers normalize into [-1, 1]") {
    testutil::TempDir tmp("wav_fmt");

    // Hand-built 32-bit float WAV, one channel, three samples.
    {
        std::ofstream f(tmp / "f32.wav", std::ios::binary);
        auto u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<char*>(&v), 4); };
        auto u16 = [&](std::uint16_t v) { f.write(reinterpret_cast<char*>(&v), 2); };
        f.write("RIFF", 4);
        u32(36 + 12);
        f.write("WAVE", 4);
        f.write("fmt ", 4);
        u32(16);
        u16(3);  // IEEE float
        u16(1);
        u32(16000);
        u32(16000 * 4);
        u16(4);
        u16(32);
        f.write("data", 4);
        u32(12);
        for (float v : {0.5f, -0.25f, 2.0f}) f.write(reinterpret_cast<char*>(&v), 4);
    }
    const AudioClip f32 = read_wav(tmp / "f32.wav");
    CHECK(f32.channels[0][0] == doctest::Approx(0.5));
    CHECK(f32.channels[0][1] == doctest::Approx(-0.25));
    CHECK(f32.channels[0][2] == doctest::Approx(1.0));  // clamped

    // Hand-built 24-bit PCM: full-scale positive and negative.
    {
        std::ofstream f(tmp / "p24.wav", std::ios::binary);
        auto u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<char*>(&v), 4); };
        auto u16 = [&](std::uint16_t v) { f.write(reinterpret_cast<char*>(&v), 2); };
        f.write("RIFF", 4);
        u32(36 + 6);
        f.write("WAVE", 4);
        f.write("fmt ", 4);
        u32(16);
        u16(1);
        u16(1);
        u32(8000);
        u32(8000 * 3);
        u16(3);
        u16(24);
        f.write("data", 4);
        u32(6);
        const unsigned char pos[3] = {0xFF, 0xFF, 0x7F};  // +8388607
        const unsigned char neg[3] = {0x00, 0x00, 0x80};  // -8388608
        f.write(reinterpret_cast<const char*>(pos), 3);
        f.write(reinterpret_cast<const char*>(neg), 3);
    }
    const AudioClip p24 = read_wav(tmp / "p24.wav");
    CHECK(p24.channels[0][0] == doctest::Approx(8388607.0 / 8388608.0));
    CHECK(p24.channels[0][1] == doctest::Approx(-1.0));
}
