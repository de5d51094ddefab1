#include "sitqc/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "sitqc/errors.hpp"

namespace sitqc {

namespace {

// sinc(x) = sin(pi x) / (pi x)
double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

// Zero-order modified Bessel function of the first kind (series form),
// summed until the term stops changing the total.
double bessel_i0(double x) {
    const double half = x / 2.0;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 1000; ++k) {
        const double y = half / k;
        term *= y * y;
        const double next = sum + term;
        if (next == sum) break;
        sum = next;
    }
    return sum;
}

// Kaiser window parameters from the required stopband attenuation (dB) and
// transition width (fraction of the sampling rate).
double kaiser_beta(double atten_db) {
    if (atten_db > 50.0) return 0.1102 * (atten_db - 8.7);
    if (atten_db >= 21.0)
        return 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
    return 0.0;
}

std::size_t kaiser_order(double atten_db, double transition) {
    const double w = 2.0 * std::numbers::pi * transition;
    const double n = atten_db > 21.0 ? (atten_db - 7.95) / (2.285 * w) : 5.79 / w;
    return static_cast<std::size_t>(std::ceil(n));
}

// Kaiser-windowed sinc low-pass with the given cutoff (fraction of the
// sampling rate) and linear gain. Odd length, centered at (taps-1)/2.
std::vector<double> design_lowpass(double cutoff, double transition, double atten_db, double gain) {
    const double beta = kaiser_beta(atten_db);
    std::size_t half = (kaiser_order(atten_db, transition) + 1) / 2;
    if (half < 1) half = 1;
    const std::size_t taps = 2 * half + 1;
    const double i0_beta = bessel_i0(beta);

    std::vector<double> h(taps);
    for (std::size_t i = 0; i < taps; ++i) {
        const double x = static_cast<double>(i) - static_cast<double>(half);
        const double k = x / static_cast<double>(half);  // [-1, 1]
        const double window = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - k * k))) / i0_beta;
        h[i] = gain * 2.0 * cutoff * sinc(2.0 * cutoff * x) * window;
    }
    return h;
}

}  // namespace

RationalRatio resample_ratio(int source_rate, int target_rate) {
    if (source_rate <= 0 || target_rate <= 0)
        throw DataError("resample: rates must be positive");
    const int g = std::gcd(source_rate, target_rate);
    return {target_rate / g, source_rate / g};
}

ResampleFilterSpec default_resample_filter(int source_rate, int target_rate) {
    const double lower = static_cast<double>(std::min(source_rate, target_rate));
    ResampleFilterSpec spec;
    spec.passband_edge_hz = 0.40 * lower;
    spec.stopband_edge_hz = 0.45 * lower;
    spec.stopband_atten_db = 70.0;
    return spec;
}

MonoClip resample(const MonoClip& clip, int target_rate) {
    return resample(clip, target_rate, default_resample_filter(clip.sample_rate, target_rate));
}

MonoClip resample(const MonoClip& clip, int target_rate, const ResampleFilterSpec& spec) {
    if (target_rate <= 0) throw DataError("resample: target rate must be positive");
    if (clip.sample_rate <= 0) throw DataError("resample: source rate must be positive");
    if (clip.sample_rate == target_rate) return clip;

    const auto [up, down] = resample_ratio(clip.sample_rate, target_rate);
    const double up_rate = static_cast<double>(clip.sample_rate) * up;

    // Filter design lives in the upsampled domain. Cutoff at the middle of
    // the transition band keeps both edges at roughly half the design ripple.
    const double cutoff = 0.5 * (spec.passband_edge_hz + spec.stopband_edge_hz) / up_rate;
    const double transition = (spec.stopband_edge_hz - spec.passband_edge_hz) / up_rate;
    if (!(cutoff > 0.0) || !(transition > 0.0))
        throw DataError("resample: filter band edges must satisfy 0 < pass < stop");
    const std::vector<double> h =
        design_lowpass(cutoff, transition, spec.stopband_atten_db, static_cast<double>(up));

    const std::size_t n_in = clip.samples.size();
    const std::size_t n_out =
        (n_in * static_cast<std::size_t>(up) + static_cast<std::size_t>(down) - 1) /
        static_cast<std::size_t>(down);
    const std::size_t delay = (h.size() - 1) / 2;  // group delay, compensated below

    MonoClip out;
    out.sample_rate = target_rate;
    out.samples.assign(n_out, 0.0);

    const double* in = clip.samples.data();
    const auto L = static_cast<std::size_t>(up);
    const auto M = static_cast<std::size_t>(down);
    for (std::size_t i = 0; i < n_out; ++i) {
        // Position in the conceptual upsampled stream; only every L-th
        // upsampled sample is nonzero, so the filter is applied in phases.
        const std::size_t u = delay + i * M;
        std::size_t t = u % L;            // first live tap
        std::size_t src = u / L;          // input sample hit by that tap
        double acc = 0.0;
        if (src >= n_in) {
            const std::size_t skip = src - n_in + 1;  // each tap step moves src by one
            t += skip * L;
            src -= skip;
        }
        for (; t < h.size(); t += L) {
            acc += h[t] * in[src];
            if (src == 0) break;
            --src;
        }
        out.samples[i] = acc;
    }
    return out;
}

}  // namespace sitqc
