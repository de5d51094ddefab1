#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sitqc {

/// Multi-channel PCM audio, samples normalized to [-1, 1].
struct AudioClip {
    std::vector<std::vector<double>> channels;  // equal-length
    int sample_rate = 0;                        // Hz, > 0
    std::string source_path;                    // provenance, may be empty

    std::size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
};

struct MonoClip {
    std::vector<double> samples;
    int sample_rate = 0;

    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

/// Fixed-length analysis window cut out of a MonoClip.
struct Chunk {
    std::vector<double> samples;
    std::size_t index = 0;
    double start_s = 0.0;
};

struct SegmentationConfig {
    double window_s = 4.0;
    double hop_s = 2.0;  // = window_s for non-overlapping training windows
    int analysis_rate = 4000;
};

/// Throws DataError if the clip violates its invariants (empty, non-finite
/// or out-of-range samples, ragged channels, bad rate).
void validate(const AudioClip& clip);
void validate(const MonoClip& clip);

/// Per-sample arithmetic mean across channels; rate unchanged.
MonoClip to_mono(const AudioClip& clip);

/// Number of full windows: floor((len - window) / hop) + 1.
std::size_t window_count(std::size_t len, std::size_t window, std::size_t hop);

/// Cut the clip into full windows of window_s seconds every hop_s seconds.
/// Trailing partial windows are discarded. The clip must already be at
/// cfg.analysis_rate and at least one window long.
std::vector<Chunk> segment(const MonoClip& clip, const SegmentationConfig& cfg);

}  // namespace sitqc
