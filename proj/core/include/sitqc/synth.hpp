#pragma once

#include <cstdint>
#include <filesystem>

#include "sitqc/audio.hpp"
#include "sitqc/manifest.hpp"

namespace sitqc {

/// Synthetic wingbeat container recording. Each insect is a harmonic stack
/// at a seeded random fundamental within its class band, gated by a
/// low-frequency flight-bout envelope; the four channels are decorrelated
/// mixtures (per-insect, per-channel gains) plus independent noise.
/// Band defaults place female fundamentals below male ones; they are test
/// fixtures, not measured wingbeat frequencies.
struct WingbeatSpec {
    ContainerClass container_class = ContainerClass::male;
    int n_insects = 250;
    double male_f0_lo_hz = 650.0;
    double male_f0_hi_hz = 850.0;
    double female_f0_lo_hz = 400.0;
    double female_f0_hi_hz = 600.0;
    int harmonics = 3;           // amplitudes decay as 1/h
    double am_rate_lo_hz = 0.8;  // flight-bout envelope rate range
    double am_rate_hi_hz = 2.5;
    double noise_floor_db = -50.0;  // relative to full scale
    double duration_s = 30.0;
    std::uint64_t seed = 1;
    // Optional global amplitude decay (per second) modelling reduced flight
    // activity over time in the recording box. Off by default.
    double habituation_decay_per_s = 0.0;
};

/// Number of insects synthesized with female parameters (25% for the mixed
/// class, rounded half up).
int female_insect_count(const WingbeatSpec& spec);

/// Deterministic per (spec, seed): 4 channels, 44.1 kHz, 16-bit-safe range.
AudioClip generate_clip(const WingbeatSpec& spec);

struct DatasetLayout {
    int days = 4;
    int first_day_since_sexing = 6;
    int clips_per_container = 16;  // split over two sessions
    // 0 keeps the training container at clips_per_container; a positive value
    // sizes it independently (handy for quick fixtures that still need a
    // full-size training set).
    int train_clips_per_container = 0;
    double clip_duration_s = 30.0;
    int n_insects = 250;

    /// 4 days x {train-male, test-male, female, mixed} x 16 clips of 30 s.
    static DatasetLayout paper();
};

/// Write WAVs plus a manifest into out_dir. Clip seeds derive from
/// (seed, clip_id), so regeneration with the same seed is byte-identical.
DatasetManifest generate_dataset(const DatasetLayout& layout,
                                 const std::filesystem::path& out_dir,
                                 std::uint64_t seed);

}  // namespace sitqc
