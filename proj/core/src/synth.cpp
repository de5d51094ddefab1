#include "sitqc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sitqc/errors.hpp"
#include "sitqc/parallel.hpp"
#include "sitqc/resample.hpp"
#include "sitqc/rng.hpp"
#include "sitqc/wav.hpp"

namespace sitqc {

namespace {

constexpr int kOutputRate = 44100;
constexpr int kChannels = 4;
// Fraction of the bout-envelope cycle above which an insect is audible.
constexpr double kBoutGate = 0.35;

struct Oscillator {
    double re = 1.0, im = 0.0;   // cos/sin of the current phase
    double wr = 1.0, wi = 0.0;   // per-sample rotation

    void init(double freq_hz, double phase, double t0, double rate) {
        const double theta = 2.0 * std::numbers::pi * freq_hz * t0 + phase;
        re = std::cos(theta);
        im = std::sin(theta);
        const double step = 2.0 * std::numbers::pi * freq_hz / rate;
        wr = std::cos(step);
        wi = std::sin(step);
    }

    double advance() {
        const double s = im;
        const double nr = re * wr - im * wi;
        const double ni = re * wi + im * wr;
        re = nr;
        im = ni;
        return s;
    }
};

// Synthesis runs below the output rate when the requested spectral content
// allows it; the channels are then upsampled by an exact integer factor.
int pick_synthesis_rate(double max_content_hz) {
    for (const int div : {5, 3, 1}) {
        const int rate = kOutputRate / div;
        if (max_content_hz * 1.05 <= 0.40 * rate) return rate;
    }
    return kOutputRate;
}

}  // namespace

int female_insect_count(const WingbeatSpec& spec) {
    switch (spec.container_class) {
        case ContainerClass::male: return 0;
        case ContainerClass::female: return spec.n_insects;
        case ContainerClass::mixed_25_75:
            return static_cast<int>(std::lround(0.25 * spec.n_insects));
    }
    return 0;
}

AudioClip generate_clip(const WingbeatSpec& spec) {
    if (spec.n_insects < 0) throw DataError("synth: negative insect count");
    if (spec.harmonics < 1) throw DataError("synth: need at least one harmonic");
    if (!(spec.duration_s > 0.0)) throw DataError("synth: duration must be positive");
    if (!(spec.male_f0_lo_hz > 0.0) || spec.male_f0_hi_hz < spec.male_f0_lo_hz ||
        !(spec.female_f0_lo_hz > 0.0) || spec.female_f0_hi_hz < spec.female_f0_lo_hz)
        throw DataError("synth: fundamental bands must be positive and ordered");
    if (!(spec.am_rate_lo_hz > 0.0) || spec.am_rate_hi_hz < spec.am_rate_lo_hz)
        throw DataError("synth: bout rate range must be positive and ordered");

    const double max_f0 = std::max(spec.male_f0_hi_hz, spec.female_f0_hi_hz);
    const double max_content = max_f0 * spec.harmonics + spec.am_rate_hi_hz;
    if (max_content >= 0.45 * kOutputRate)
        throw DataError("synth: spectral content exceeds what 44.1 kHz output can carry");
    const int synth_rate = pick_synthesis_rate(max_content);

    const auto n_synth = static_cast<std::size_t>(std::llround(spec.duration_s * synth_rate));
    if (n_synth == 0) throw DataError("synth: duration rounds to zero samples");

    std::vector<std::vector<double>> mix(kChannels, std::vector<double>(n_synth, 0.0));

    // Harmonic weights decay as 1/h, normalized to unit sum.
    std::vector<double> harmonic_amp(static_cast<std::size_t>(spec.harmonics));
    {
        double sum = 0.0;
        for (int h = 1; h <= spec.harmonics; ++h) sum += 1.0 / h;
        for (int h = 1; h <= spec.harmonics; ++h)
            harmonic_amp[static_cast<std::size_t>(h - 1)] = (1.0 / h) / sum;
    }
    // Level chosen so the peak stays well under full scale for any realistic
    // population: the clip-level safety rescale below must stay dormant, or
    // clips pick up individual global gains that read as anomalies.
    const double insect_amp = 1.0 / std::sqrt(static_cast<double>(std::max(spec.n_insects, 1)));
    const int n_female = female_insect_count(spec);

    const double gate_angle = std::asin(kBoutGate);
    const double two_pi = 2.0 * std::numbers::pi;

    // One period of an insect's harmonic stack, sampled into a lookup table;
    // playback is a phase accumulator with linear interpolation. The bout
    // envelope varies at a few Hz at most, so it is evaluated exactly at
    // block boundaries and interpolated within.
    constexpr std::size_t kTableSize = 2048;
    constexpr std::size_t kEnvBlock = 32;
    std::vector<double> table(kTableSize + 1);
    std::vector<double> bout_buf;  // one insect-bout waveform, reused
    std::vector<Oscillator> osc(static_cast<std::size_t>(spec.harmonics));
    for (int insect = 0; insect < spec.n_insects; ++insect) {
        Rng rng(Rng::derive(spec.seed, static_cast<std::uint64_t>(insect) + 1));
        const bool female = insect < n_female;
        // Stratified population parameters: insect k of a class fills
        // stratum k of the fundamental band, the bout-rate range and (with a
        // per-channel offset) the gain range. Two containers of the same
        // class then share the same population-level spectral envelope and
        // energy budget, as equally-sized cohorts do, while every insect
        // stays individually random.
        const double band_lo = female ? spec.female_f0_lo_hz : spec.male_f0_lo_hz;
        const double band_hi = female ? spec.female_f0_hi_hz : spec.male_f0_hi_hz;
        const int class_size = std::max(female ? n_female : spec.n_insects - n_female, 1);
        const int class_index = female ? insect : insect - n_female;
        auto stratified = [&](int index) {
            return (static_cast<double>(index % class_size) + rng.uniform()) / class_size;
        };
        const double f0 = band_lo + (band_hi - band_lo) * stratified(class_index);
        std::vector<double> phase(static_cast<std::size_t>(spec.harmonics));
        for (auto& p : phase) p = rng.uniform(0.0, two_pi);
        const double am_rate =
            spec.am_rate_lo_hz +
            (spec.am_rate_hi_hz - spec.am_rate_lo_hz) * stratified(class_index * 7 + 3);
        const double am_phase = rng.uniform(0.0, two_pi);
        double gain[kChannels];
        for (int c = 0; c < kChannels; ++c)
            gain[c] = 0.35 + 0.65 * stratified(class_index + c * (class_size / 4 + 1));

        // One table period holds the whole harmonic stack.
        {
            for (int h = 0; h < spec.harmonics; ++h) {
                auto& o = osc[static_cast<std::size_t>(h)];
                const double step = two_pi * (h + 1) / static_cast<double>(kTableSize);
                o.re = std::cos(phase[static_cast<std::size_t>(h)]);
                o.im = std::sin(phase[static_cast<std::size_t>(h)]);
                o.wr = std::cos(step);
                o.wi = std::sin(step);
            }
            for (std::size_t k = 0; k < kTableSize; ++k) {
                double v = 0.0;
                for (int h = 0; h < spec.harmonics; ++h)
                    v += harmonic_amp[static_cast<std::size_t>(h)] *
                         osc[static_cast<std::size_t>(h)].advance();
                table[k] = v;
            }
            table[kTableSize] = table[0];  // lerp guard
        }
        const double table_step = f0 / synth_rate * static_cast<double>(kTableSize);

        // Audible bouts are where sin(2 pi f_am t + phi) exceeds the gate;
        // the silent stretches between them are skipped entirely.
        const double omega = two_pi * am_rate;
        const auto k_first =
            static_cast<long long>(std::floor((am_phase - gate_angle) / two_pi)) - 1;
        for (long long k = k_first;; ++k) {
            const double bout_start =
                (gate_angle - am_phase + two_pi * static_cast<double>(k)) / omega;
            const double bout_end =
                (std::numbers::pi - gate_angle - am_phase + two_pi * static_cast<double>(k)) /
                omega;
            if (bout_start >= spec.duration_s) break;
            if (bout_end <= 0.0) continue;

            const auto n0 = static_cast<std::size_t>(
                std::max(0.0, std::ceil(bout_start * synth_rate)));
            const auto n1 =
                std::min(n_synth, static_cast<std::size_t>(
                                      std::max(0.0, std::floor(bout_end * synth_rate))) +
                                      1);
            if (n0 >= n1) continue;

            const double t0 = static_cast<double>(n0) / synth_rate;
            double pos = f0 * t0 + phase[0] / two_pi;  // phase[0] doubles as table offset
            pos = (pos - std::floor(pos)) * static_cast<double>(kTableSize);

            // Envelope (and optional habituation decay) at block rate.
            Oscillator am_block;
            am_block.init(am_rate, am_phase, t0,
                          static_cast<double>(synth_rate) / static_cast<double>(kEnvBlock));
            const bool decay_on = spec.habituation_decay_per_s > 0.0;
            const double block_dt = static_cast<double>(kEnvBlock) / synth_rate;
            constexpr double gate_scale = 1.0 / (1.0 - kBoutGate);

            bout_buf.resize(n1 - n0);
            double* buf = bout_buf.data();
            const std::size_t total = n1 - n0;
            double env_next = std::max(0.0, (am_block.advance() - kBoutGate) * gate_scale);
            std::size_t done = 0;
            std::size_t block_index = 0;
            while (done < total) {
                const std::size_t len = std::min(kEnvBlock, total - done);
                const double env0 = env_next;
                env_next = std::max(0.0, (am_block.advance() - kBoutGate) * gate_scale);
                double a0 = insect_amp * env0;
                double a1 = insect_amp * env_next;
                if (decay_on) {
                    const double t_block =
                        t0 + static_cast<double>(block_index) * block_dt;
                    a0 *= std::exp(-spec.habituation_decay_per_s * t_block);
                    a1 *= std::exp(-spec.habituation_decay_per_s * (t_block + block_dt));
                }
                const double da = (a1 - a0) / static_cast<double>(kEnvBlock);
                double a = a0;
                for (std::size_t n = 0; n < len; ++n) {
                    const auto idx = static_cast<std::size_t>(pos);
                    const double frac = pos - static_cast<double>(idx);
                    buf[done + n] = a * (table[idx] + frac * (table[idx + 1] - table[idx]));
                    a += da;
                    pos += table_step;
                    if (pos >= static_cast<double>(kTableSize))
                        pos -= static_cast<double>(kTableSize);
                }
                done += len;
                ++block_index;
            }
            for (int c = 0; c < kChannels; ++c) {
                double* ch = mix[static_cast<std::size_t>(c)].data() + n0;
                const double g = gain[c];
                for (std::size_t n = 0; n < total; ++n) ch[n] += g * buf[n];
            }
        }
    }

    AudioClip clip;
    clip.sample_rate = kOutputRate;
    clip.channels.resize(kChannels);
    for (int c = 0; c < kChannels; ++c) {
        if (synth_rate == kOutputRate) {
            clip.channels[static_cast<std::size_t>(c)] = std::move(mix[static_cast<std::size_t>(c)]);
        } else {
            // Band edges hug the actual content so the image-rejection filter
            // stays short; images of content f land at synth_rate - f.
            ResampleFilterSpec up;
            up.passband_edge_hz = max_content * 1.08;
            up.stopband_edge_hz = synth_rate - up.passband_edge_hz;
            up.stopband_atten_db = 70.0;
            MonoClip m;
            m.sample_rate = synth_rate;
            m.samples = std::move(mix[static_cast<std::size_t>(c)]);
            clip.channels[static_cast<std::size_t>(c)] =
                std::move(resample(m, kOutputRate, up).samples);
        }
    }

    // White uniform noise floor, independent per channel.
    const double noise_rms = std::pow(10.0, spec.noise_floor_db / 20.0);
    const double noise_span = noise_rms * std::sqrt(3.0);
    for (int c = 0; c < kChannels; ++c) {
        Rng noise_rng(Rng::derive(spec.seed, 0xC0FFEEULL + static_cast<std::uint64_t>(c)));
        for (auto& v : clip.channels[static_cast<std::size_t>(c)])
            v += noise_span * (2.0 * noise_rng.uniform() - 1.0);
    }

    double peak = 0.0;
    for (const auto& ch : clip.channels)
        for (double v : ch) peak = std::max(peak, std::abs(v));
    if (peak > 0.999) {
        const double scale = 0.999 / peak;
        for (auto& ch : clip.channels)
            for (auto& v : ch) v *= scale;
    }
    return clip;
}

DatasetLayout DatasetLayout::paper() { return DatasetLayout{}; }

namespace {

struct ContainerDef {
    const char* tag;
    ContainerClass cls;
    Role role;
};

constexpr ContainerDef kContainers[] = {
    {"train_male", ContainerClass::male, Role::train},
    {"test_male", ContainerClass::male, Role::test},
    {"female", ContainerClass::female, Role::test},
    {"mix25", ContainerClass::mixed_25_75, Role::test},
};

}  // namespace

DatasetManifest generate_dataset(const DatasetLayout& layout,
                                 const std::filesystem::path& out_dir, std::uint64_t seed) {
    if (layout.days < 1 || layout.clips_per_container < 1)
        throw DataError("synth: layout needs at least one day and one clip per container");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("synth: cannot create output directory " + out_dir.string());

    struct Job {
        WingbeatSpec spec;
        std::filesystem::path wav_path;
    };
    DatasetManifest manifest;
    std::vector<Job> jobs;
    for (int d = 0; d < layout.days; ++d) {
        const int day = layout.first_day_since_sexing + d;
        for (const auto& container : kContainers) {
            const int clips = container.role == Role::train && layout.train_clips_per_container > 0
                                  ? layout.train_clips_per_container
                                  : layout.clips_per_container;
            for (int i = 0; i < clips; ++i) {
                const int session = i < (clips + 1) / 2 ? 1 : 2;
                char id[96];
                std::snprintf(id, sizeof id, "d%d_%s_s%d_c%02d", day, container.tag, session, i);

                Job job;
                job.spec.container_class = container.cls;
                job.spec.n_insects = layout.n_insects;
                job.spec.duration_s = layout.clip_duration_s;
                job.spec.seed = Rng::derive(seed, fnv1a64(id));
                job.wav_path = out_dir / (std::string(id) + ".wav");
                jobs.push_back(std::move(job));

                ManifestEntry e;
                e.path = out_dir / (std::string(id) + ".wav");
                e.clip_id = id;
                e.container_class = container.cls;
                e.day_since_sexing = day;
                e.session = session;
                e.role = container.role;
                manifest.entries.push_back(std::move(e));
            }
        }
    }

    // Clip seeds derive from the clip id alone, so generation order (and
    // thread scheduling) cannot change the output bytes.
    run_parallel(jobs.size(), [&](std::size_t j) {
        const AudioClip clip = generate_clip(jobs[j].spec);
        write_wav16(clip, jobs[j].wav_path);
    });

    save_manifest(manifest, out_dir / "manifest.csv");
    return manifest;
}

}  // namespace sitqc
