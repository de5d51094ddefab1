#include "sitqc/audio.hpp"

#include <cmath>

#include "sitqc/errors.hpp"

namespace sitqc {

void validate(const AudioClip& clip) {
    if (clip.channels.empty()) throw DataError("audio: clip has no channels");
    if (clip.sample_rate <= 0) throw DataError("audio: non-positive sample rate");
    const std::size_t n = clip.channels.front().size();
    for (const auto& ch : clip.channels) {
        if (ch.size() != n) throw DataError("audio: channels differ in length");
        for (double v : ch)
            if (!std::isfinite(v) || v < -1.0 || v > 1.0)
                throw DataError("audio: sample outside [-1, 1] or non-finite");
    }
}

void validate(const MonoClip& clip) {
    if (clip.samples.empty()) throw DataError("audio: empty mono clip");
    if (clip.sample_rate <= 0) throw DataError("audio: non-positive sample rate");
    for (double v : clip.samples)
        if (!std::isfinite(v)) throw DataError("audio: non-finite sample");
}

MonoClip to_mono(const AudioClip& clip) {
    if (clip.channels.empty()) throw DataError("audio: to_mono needs at least one channel");
    const std::size_t n = clip.channels.front().size();
    for (const auto& ch : clip.channels)
        if (ch.size() != n) throw DataError("audio: to_mono on ragged channels");

    MonoClip mono;
    mono.sample_rate = clip.sample_rate;
    mono.samples.assign(n, 0.0);
    for (const auto& ch : clip.channels)
        for (std::size_t i = 0; i < n; ++i) mono.samples[i] += ch[i];
    const double inv = 1.0 / static_cast<double>(clip.channels.size());
    for (auto& v : mono.samples) v *= inv;
    return mono;
}

std::size_t window_count(std::size_t len, std::size_t window, std::size_t hop) {
    if (len < window) return 0;
    return (len - window) / hop + 1;
}

namespace {

std::size_t whole_samples(double seconds, int rate, const char* what) {
    const double exact = seconds * rate;
    const double rounded = std::round(exact);
    if (rounded <= 0.0 || std::abs(exact - rounded) > 1e-9)
        throw DataError(std::string("segment: ") + what +
                        " must be a positive whole number of samples");
    return static_cast<std::size_t>(rounded);
}

}  // namespace

std::vector<Chunk> segment(const MonoClip& clip, const SegmentationConfig& cfg) {
    if (clip.sample_rate != cfg.analysis_rate)
        throw DataError("segment: clip rate " + std::to_string(clip.sample_rate) +
                        " != analysis rate " + std::to_string(cfg.analysis_rate));
    if (!(cfg.hop_s > 0.0) || cfg.hop_s > cfg.window_s)
        throw DataError("segment: hop must satisfy 0 < hop <= window");

    const std::size_t window = whole_samples(cfg.window_s, cfg.analysis_rate, "window");
    const std::size_t hop = whole_samples(cfg.hop_s, cfg.analysis_rate, "hop");
    if (clip.samples.size() < window)
        throw DataError("segment: clip too short (" + std::to_string(clip.samples.size()) +
                        " samples, window " + std::to_string(window) + ")");

    const std::size_t count = window_count(clip.samples.size(), window, hop);
    std::vector<Chunk> chunks;
    chunks.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Chunk c;
        c.index = k;
        c.start_s = static_cast<double>(k * hop) / cfg.analysis_rate;
        c.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(k * hop),
                         clip.samples.begin() + static_cast<std::ptrdiff_t>(k * hop + window));
        chunks.push_back(std::move(c));
    }
    return chunks;
}

}  // namespace sitqc
