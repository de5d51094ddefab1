#pragma once

#include "sitqc/audio.hpp"

namespace sitqc {

/// Reduced upsample/downsample factors for a rate conversion
/// (e.g. 44100 -> 4000 gives up = 40, down = 441).
struct RationalRatio {
    int up = 1;
    int down = 1;
};
RationalRatio resample_ratio(int source_rate, int target_rate);

/// Anti-aliasing filter design for the polyphase resampler. Band edges in Hz.
struct ResampleFilterSpec {
    double passband_edge_hz = 0.0;  // preserved within ripple
    double stopband_edge_hz = 0.0;  // attenuated by >= stopband_atten_db
    double stopband_atten_db = 70.0;
};

/// Default design: passband to 0.40x and stopband from 0.45x of the lower of
/// the two rates, 70 dB attenuation. Guards the band right below the new
/// Nyquist, where wingbeat harmonics sit.
ResampleFilterSpec default_resample_filter(int source_rate, int target_rate);

/// Polyphase rational resampler: conceptual upsample by L, Kaiser-windowed
/// sinc low-pass, downsample by M. Identity when the rates are equal.
/// Output length is ceil(n * L / M); filter group delay is compensated.
MonoClip resample(const MonoClip& clip, int target_rate);
MonoClip resample(const MonoClip& clip, int target_rate, const ResampleFilterSpec& spec);

}  // namespace sitqc
