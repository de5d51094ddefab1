#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sitqc/audio.hpp"
#include "sitqc/errors.hpp"
#include "sitqc/features.hpp"
#include "sitqc/fft.hpp"
#include "sitqc/resample.hpp"
#include "sitqc/synth.hpp"
#include "sitqc/wav.hpp"

#include "test_util.hpp"

using namespace sitqc;

namespace {

std::vector<char> file_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("generate_clip: shape, range, determinism") {
    WingbeatSpec spec;
    spec.duration_s = 2.0;
    spec.n_insects = 40;
    spec.seed = 7;
    const AudioClip a = generate_clip(spec);
    CHECK(a.channels.size() == 4);
    CHECK(a.sample_rate == 44100);
    CHECK(a.frames() == 88200);
    validate(a);  // finite, in range, equal lengths

    const AudioClip b = generate_clip(spec);
    for (int c = 0; c < 4; ++c) CHECK(a.channels[c] == b.channels[c]);

    spec.seed = 8;
    const AudioClip c = generate_clip(spec);
    CHECK(a.channels[0] != c.channels[0]);
}

TEST_CASE("generate_clip: zero insects leaves only the noise floor") {
    WingbeatSpec spec;
    spec.duration_s = 2.0;
    spec.n_insects = 0;
    const AudioClip clip = generate_clip(spec);
    const MonoClip mono = to_mono(clip);
    const double level = testutil::rms(mono.samples);
    // Mono average of 4 independent noise channels: sigma/2 each.
    const double expected = std::pow(10.0, spec.noise_floor_db / 20.0) / 2.0;
    CHECK(level == doctest::Approx(expected).epsilon(0.1));

    // No tonal peak: spectrum peak within a few dB of the median level.
    const auto p = power_spectrum(std::span<const double>(mono.samples.data(), 65536), 65536);
    std::vector<double> sorted(p.begin() + 1, p.end());
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double peak = sorted.back();
    CHECK(10.0 * std::log10(peak / median) < 15.0);
}

TEST_CASE("generate_clip: male spectral centroid sits above female, same seed") {
    WingbeatSpec male;
    male.duration_s = 4.0;
    male.n_insects = 100;
    male.seed = 21;
    WingbeatSpec female = male;
    female.container_class = ContainerClass::female;

    const MonoClip m = to_mono(generate_clip(male));
    const MonoClip f = to_mono(generate_clip(female));
    const double cm = testutil::spectral_centroid_hz(m.samples, 44100, 200.0, 2000.0);
    const double cf = testutil::spectral_centroid_hz(f.samples, 44100, 200.0, 2000.0);
    CHECK(cm > cf);
}

TEST_CASE("generate_clip: tonal energy stays within the configured bands") {
    WingbeatSpec spec;
    spec.duration_s = 4.0;
    spec.n_insects = 60;
    spec.noise_floor_db = -200.0;  // effectively no noise
    spec.seed = 33;
    const MonoClip mono = to_mono(generate_clip(spec));

    const std::size_t nfft = next_power_of_two(mono.samples.size());
    const auto p = power_spectrum(mono.samples, nfft);
    const double total = testutil::band_energy(p, 44100, nfft, 0.0, 22050.0);
    // Fundamentals 650-850 with 3 harmonics plus AM sidebands.
    double in_band = 0.0;
    for (int h = 1; h <= spec.harmonics; ++h)
        in_band += testutil::band_energy(p, 44100, nfft, spec.male_f0_lo_hz * h - 25.0,
                                         spec.male_f0_hi_hz * h + 25.0);
    CHECK(in_band / total > 0.99);
}

TEST_CASE("female_insect_count: exact quarter for the mixed class") {
    WingbeatSpec spec;
    spec.container_class = ContainerClass::mixed_25_75;
    spec.n_insects = 8;
    CHECK(female_insect_count(spec) == 2);
    spec.n_insects = 250;
    CHECK(female_insect_count(spec) == 63);  // rounded half up
    spec.container_class = ContainerClass::male;
    CHECK(female_insect_count(spec) == 0);
    spec.container_class = ContainerClass::female;
    CHECK(female_insect_count(spec) == 250);
}

TEST_CASE("embeddings of male vs female chunks are linearly separable") {
    // Nearest-class-centroid (a linear rule) on held-out chunks.
    SpectralEmbedConfig fcfg;
    SegmentationConfig seg;
    auto chunks_of = [&](ContainerClass cls, std::uint64_t seed) {
        WingbeatSpec spec;
        spec.container_class = cls;
        spec.duration_s = 30.0;
        spec.n_insects = 120;
        spec.seed = seed;
        const MonoClip mono = resample(to_mono(generate_clip(spec)), 4000);
        std::vector<FeatureVector> out;
        for (const auto& ch : segment(mono, seg))
            out.push_back(extract_spectral_embedding(ch, 4000, fcfg, "x"));
        return out;
    };

    const auto male_train = chunks_of(ContainerClass::male, 1);
    const auto female_train = chunks_of(ContainerClass::female, 2);
    const auto male_test = chunks_of(ContainerClass::male, 3);
    const auto female_test = chunks_of(ContainerClass::female, 4);

    auto centroid = [](const std::vector<FeatureVector>& rows) {
        std::vector<double> c(rows.front().values.size(), 0.0);
        for (const auto& r : rows)
            for (std::size_t i = 0; i < c.size(); ++i) c[i] += r.values[i];
        for (auto& v : c) v /= static_cast<double>(rows.size());
        return c;
    };
    const auto cm = centroid(male_train);
    const auto cf = centroid(female_train);
    auto d2 = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return s;
    };

    int correct = 0, total = 0;
    for (const auto& r : male_test) {
        correct += d2(r.values, cm) < d2(r.values, cf) ? 1 : 0;
        ++total;
    }
    for (const auto& r : female_test) {
        correct += d2(r.values, cf) < d2(r.values, cm) ? 1 : 0;
        ++total;
    }
    CHECK(static_cast<double>(correct) / total >= 0.95);
}

TEST_CASE("generate_dataset: custom layout arithmetic and manifest") {
    testutil::TempDir tmp("synth_ds");
    DatasetLayout layout;
    layout.days = 1;
    layout.clips_per_container = 2;
    layout.clip_duration_s = 1.0;
    layout.n_insects = 10;
    const DatasetManifest m = generate_dataset(layout, tmp.path(), 5);
    CHECK(m.entries.size() == 8);  // 4 containers x 2 clips

    int train = 0, female = 0, mixed = 0;
    for (const auto& e : m.entries) {
        if (e.role == Role::train) ++train;
        if (e.container_class == ContainerClass::female) ++female;
        if (e.container_class == ContainerClass::mixed_25_75) ++mixed;
        CHECK(std::filesystem::exists(e.path));
    }
    CHECK(train == 2);
    CHECK(female == 2);
    CHECK(mixed == 2);

    const DatasetManifest loaded = load_manifest(tmp / "manifest.csv");
    CHECK(loaded.entries.size() == 8);

    // Sessions split the clips per container in half.
    CHECK(m.entries[0].session == 1);
    CHECK(m.entries[1].session == 2);
}

TEST_CASE("generate_dataset: same seed reproduces byte-identical WAVs") {
    testutil::TempDir a("synth_det_a");
    testutil::TempDir b("synth_det_b");
    DatasetLayout layout;
    layout.days = 1;
    layout.clips_per_container = 1;
    layout.clip_duration_s = 1.0;
    layout.n_insects = 25;
    const DatasetManifest ma = generate_dataset(layout, a.path(), 77);
    const DatasetManifest mb = generate_dataset(layout, b.path(), 77);
    REQUIRE(ma.entries.size() == mb.entries.size());
    for (std::size_t i = 0; i < ma.entries.size(); ++i)
        CHECK(file_bytes(ma.entries[i].path) == file_bytes(mb.entries[i].path));
}

TEST_CASE("generate_clip: invalid specs are rejected") {
    WingbeatSpec spec;
    spec.n_insects = -1;
    CHECK_THROWS_AS(generate_clip(spec), DataError);
    spec = {};
    spec.duration_s = 0.0;
    CHECK_THROWS_AS(generate_clip(spec), DataError);
    spec = {};
    spec.harmonics = 40;  // content above what the output rate carries
    CHECK_THROWS_AS(generate_clip(spec), DataError);
}
