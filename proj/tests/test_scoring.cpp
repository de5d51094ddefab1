#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sitqc/config.hpp"
#include "sitqc/errors.hpp"
#include "sitqc/resample.hpp"
#include "sitqc/scoring.hpp"
#include "sitqc/synth.hpp"
#include "sitqc/wav.hpp"

#include "test_util.hpp"

using namespace sitqc;

namespace {

// One shared tiny dataset on disk for the manifest-driven cases.
struct ScoringFixture {
    testutil::TempDir tmp{"scoring"};
    DatasetManifest manifest;
    PipelineConfig cfg;

    ScoringFixture() {
        DatasetLayout layout;
        layout.days = 1;
        layout.clips_per_container = 8;
        layout.clip_duration_s = 30.0;
        layout.n_insects = 120;
        manifest = generate_dataset(layout, tmp.path(), 905);
    }
};

ScoringFixture& fixture() {
    static ScoringFixture f;
    return f;
}

const TrainedDetectors& trained() {
    static TrainedDetectors d = train_from_manifest(fixture().manifest, fixture().cfg);
    return d;
}

// In-distribution male container audio at 4 kHz, with female-band tones
// added on [on_start_s, on_end_s). Zero-length burst means a plain male clip.
MonoClip male_clip_with_female_burst(double duration_s, double on_start_s, double on_end_s) {
    WingbeatSpec spec;
    spec.duration_s = duration_s;
    spec.n_insects = 120;  // matches the training fixture
    spec.seed = 777;
    MonoClip mono = resample(to_mono(generate_clip(spec)), 4000);
    for (std::size_t i = 0; i < mono.samples.size(); ++i) {
        const double t = static_cast<double>(i) / 4000.0;
        if (t >= on_start_s && t < on_end_s)
            mono.samples[i] += 0.2 * std::sin(2.0 * std::numbers::pi * 480.0 * t) +
                               0.1 * std::sin(2.0 * std::numbers::pi * 960.0 * t) +
                               0.07 * std::sin(2.0 * std::numbers::pi * 1440.0 * t);
    }
    return mono;
}

}  // namespace

TEST_CASE("make_clip_decision: zero scores mean clean, boundary is clean, strict above flips") {
    const auto zeros = make_clip_decision("z", Detector::iforest,
                                          {{0.0, 0.0}, {2.0, 0.0}, {4.0, 0.0}}, 0.5);
    CHECK(zeros.mean_score == 0.0);
    CHECK_FALSE(zeros.contaminated);

    const auto boundary =
        make_clip_decision("b", Detector::iforest, {{0.0, 0.4}, {2.0, 0.6}}, 0.5);
    CHECK(boundary.mean_score == doctest::Approx(0.5));
    CHECK_FALSE(boundary.contaminated);  // exactly at threshold stays clean

    const auto above =
        make_clip_decision("a", Detector::iforest, {{0.0, 0.4}, {2.0, 0.6000001}}, 0.5);
    CHECK(above.contaminated);

    CHECK_THROWS_AS(make_clip_decision("e", Detector::iforest, {}, 0.5), DataError);
}

TEST_CASE("training features: layout arithmetic (clips x 6 windows)") {
    const FeatureMatrix m = training_features_from_manifest(fixture().manifest, fixture().cfg);
    CHECK(m.size() == 8 * 6);  // 8 training clips in the fixture
    CHECK(m.dim == 512);
}

TEST_CASE("train_from_manifest: rejects female training clips and empty manifests") {
    DatasetManifest bad = fixture().manifest;
    for (auto& e : bad.entries)
        if (e.container_class == ContainerClass::female) e.role = Role::train;
    CHECK_THROWS_WITH_AS(train_from_manifest(bad, fixture().cfg),
                         doctest::Contains("male-only"), DataError);

    DatasetManifest empty;
    CHECK_THROWS_AS(train_from_manifest(empty, fixture().cfg), DataError);
}

TEST_CASE("train_from_manifest: row counts and recorded nu") {
    const TrainedDetectors& d = trained();
    CHECK(d.training_rows == 48);
    CHECK(d.effective_nu == fixture().cfg.ocsvm.nu);  // 0.1 > 1/48, no clamp
    CHECK(d.ocsvm.nu == d.effective_nu);
    CHECK(d.iforest.effective_subsample == 48);
    CHECK(d.training_clips.size() == 8);
}

TEST_CASE("train_from_manifest: one training clip still fits, tiny nu clamped to 1/6") {
    DatasetManifest tiny;
    for (const auto& e : fixture().manifest.entries)
        if (e.role == Role::train && tiny.entries.empty()) tiny.entries.push_back(e);
    REQUIRE(tiny.entries.size() == 1);
    PipelineConfig cfg = fixture().cfg;
    cfg.ocsvm.nu = 0.05;  // 0.05 * 6 < 1: infeasible without the clamp
    const TrainedDetectors d = train_from_manifest(tiny, cfg);
    CHECK(d.training_rows == 6);
    CHECK(d.effective_nu == doctest::Approx(1.0 / 6.0));
    CHECK(d.ocsvm.nu == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("score_clip: 30 s clip gives 14 scores at starts 0..26") {
    const MonoClip clip = male_clip_with_female_burst(30.0, 100.0, 100.0);  // no burst
    const ClipDecision d = score_clip(trained(), clip, Detector::iforest, "m");
    REQUIRE(d.chunk_scores.size() == 14);
    for (std::size_t k = 0; k < 14; ++k)
        CHECK(d.chunk_scores[k].start_s == doctest::Approx(2.0 * static_cast<double>(k)));
    double mean = 0.0;
    for (const auto& c : d.chunk_scores) mean += c.score;
    CHECK(d.mean_score == mean / 14.0);  // exact arithmetic mean
}

TEST_CASE("score_clip: too-short clip and wrong rate are data errors") {
    const MonoClip tiny = testutil::mono_of(std::vector<double>(4000 * 3, 0.0), 4000);
    CHECK_THROWS_WITH_AS(score_clip(trained(), tiny, Detector::iforest, "t"),
                         doctest::Contains("too short"), DataError);
    const MonoClip wrong = testutil::mono_of(std::vector<double>(44100, 0.0), 44100);
    CHECK_THROWS_AS(score_clip(trained(), wrong, Detector::iforest, "w"), DataError);
}

TEST_CASE("score_clip: female burst windows outscore the median of the rest (iforest)") {
    // Burst on [8, 18) fully covers windows 4..7 ([8,12) .. [14,18)).
    const MonoClip clip = male_clip_with_female_burst(30.0, 8.0, 18.0);
    const ClipDecision d = score_clip(trained(), clip, Detector::iforest, "burst");
    REQUIRE(d.chunk_scores.size() == 14);

    std::vector<double> others;
    for (std::size_t k = 0; k < 14; ++k)
        if (k < 4 || k > 7) others.push_back(d.chunk_scores[k].score);
    std::nth_element(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(others.size() / 2),
                     others.end());
    const double median_rest = others[others.size() / 2];
    for (std::size_t k = 4; k <= 7; ++k) CHECK(d.chunk_scores[k].score > median_rest);
}

TEST_CASE("chunk scores are independent of surrounding chunks") {
    const MonoClip long_clip = male_clip_with_female_burst(30.0, 8.0, 18.0);
    const ClipDecision whole = score_clip(trained(), long_clip, Detector::iforest, "w");

    // Score window 5 ([10, 14) s) alone as its own 4 s clip.
    const auto begin = static_cast<std::ptrdiff_t>(10.0 * 4000);
    MonoClip solo = testutil::mono_of(
        std::vector<double>(long_clip.samples.begin() + begin,
                            long_clip.samples.begin() + begin + 16000),
        4000);
    const ClipDecision alone = score_clip(trained(), solo, Detector::iforest, "s");
    REQUIRE(alone.chunk_scores.size() == 1);
    CHECK(alone.chunk_scores[0].score == whole.chunk_scores[5].score);
}

TEST_CASE("score_manifest: order, determinism, and error aggregation") {
    const ScoreBatchResult a =
        score_manifest(trained(), fixture().manifest, {Detector::iforest, Detector::ocsvm});
    const std::size_t n_test = fixture().manifest.select(Role::test).size();
    CHECK(a.decisions.size() == 2 * n_test);
    CHECK(a.errors.empty());

    // Two runs produce identical decisions.
    const ScoreBatchResult b =
        score_manifest(trained(), fixture().manifest, {Detector::iforest, Detector::ocsvm});
    REQUIRE(b.decisions.size() == a.decisions.size());
    for (std::size_t i = 0; i < a.decisions.size(); ++i) {
        CHECK(a.decisions[i].clip_id == b.decisions[i].clip_id);
        CHECK(a.decisions[i].mean_score == b.decisions[i].mean_score);
    }

    // Output order equals manifest order, detectors interleaved per clip.
    std::size_t pos = 0;
    for (const auto* e : fixture().manifest.select(Role::test)) {
        CHECK(a.decisions[pos].clip_id == e->clip_id);
        CHECK(a.decisions[pos].detector == Detector::iforest);
        CHECK(a.decisions[pos + 1].clip_id == e->clip_id);
        CHECK(a.decisions[pos + 1].detector == Detector::ocsvm);
        pos += 2;
    }

    // A missing file is excluded without aborting the batch.
    DatasetManifest broken = fixture().manifest;
    ManifestEntry ghost;
    ghost.path = fixture().tmp / "ghost.wav";
    ghost.clip_id = "ghost";
    ghost.container_class = ContainerClass::male;
    ghost.day_since_sexing = 6;
    ghost.session = 1;
    ghost.role = Role::test;
    broken.entries.push_back(ghost);
    const ScoreBatchResult c = score_manifest(trained(), broken, {Detector::iforest});
    CHECK(c.decisions.size() == n_test);
    REQUIRE(c.errors.size() == 1);
    CHECK(c.errors[0].clip_id == "ghost");

    // Empty test set gives an empty result.
    DatasetManifest train_only = fixture().manifest;
    std::erase_if(train_only.entries, [](const ManifestEntry& e) { return e.role == Role::test; });
    const ScoreBatchResult d = score_manifest(trained(), train_only, {Detector::iforest});
    CHECK(d.decisions.empty());
    CHECK(d.errors.empty());
}

TEST_CASE("detectors can disagree: ocsvm at zero while iforest stays mid-range") {
    // The window whose decision attains the training max maps to ocsvm
    // score 0 by construction, while the isolation forest gives the same
    // window an unremarkable mid-range score, not zero.
    const FeatureMatrix feats =
        training_features_from_manifest(fixture().manifest, fixture().cfg);
    double best_decision = -1e300;
    std::size_t best = 0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        const double d = trained().ocsvm.decision(feats.rows[i].values);
        if (d > best_decision) {
            best_decision = d;
            best = i;
        }
    }
    CHECK(trained().ocsvm.anomaly_score(feats.rows[best].values) < 0.01);
    CHECK(trained().iforest.score(feats.rows[best].values) > 0.3);
}

TEST_CASE("detectors persistence: save/load reproduces scores bitwise") {
    testutil::TempDir tmp("det_io");
    save_detectors(trained(), tmp.path());
    const TrainedDetectors back = load_detectors(tmp.path());
    CHECK(back.training_rows == trained().training_rows);
    CHECK(back.manifest_hash == trained().manifest_hash);
    CHECK(back.config == trained().config);

    const MonoClip clip = male_clip_with_female_burst(30.0, 8.0, 18.0);
    for (auto det : {Detector::iforest, Detector::ocsvm}) {
        const ClipDecision a = score_clip(trained(), clip, det, "x");
        const ClipDecision b = score_clip(back, clip, det, "x");
        for (std::size_t k = 0; k < a.chunk_scores.size(); ++k)
            CHECK(a.chunk_scores[k].score == b.chunk_scores[k].score);
    }
}

TEST_CASE("feature-config mismatch between model and pipeline is a hard error") {
    TrainedDetectors altered = trained();
    altered.config.features.n_mels = 32;  // different config, same dim
    const MonoClip clip = male_clip_with_female_burst(30.0, 100.0, 100.0);
    CHECK_THROWS_WITH_AS(score_clip(altered, clip, Detector::iforest, "x"),
                         doctest::Contains("hash mismatch"), DataError);

    TrainedDetectors wrong_dim = trained();
    wrong_dim.config.features.output_dim = 256;
    CHECK_THROWS_WITH_AS(score_clip(wrong_dim, clip, Detector::iforest, "x"),
                         doctest::Contains("dimension"), DataError);
}

TEST_CASE("decision CSV exports") {
    std::vector<ClipDecision> ds;
    ds.push_back(make_clip_decision("c1", Detector::iforest, {{0.0, 0.25}, {2.0, 0.75}}, 0.5));
    ds.push_back(make_clip_decision("c2", Detector::ocsvm, {{0.0, 1.0}}, 0.5));
    const std::string long_csv = decisions_long_csv(ds);
    CHECK(long_csv.find("clip_id,detector,chunk_start_s,chunk_score\n") == 0);
    CHECK(long_csv.find("c1,iforest,0,0.25") != std::string::npos);
    CHECK(long_csv.find("c1,iforest,2,0.75") != std::string::npos);
    const std::string summary = decisions_summary_csv(ds);
    CHECK(summary.find("c1,iforest,0.5,clean") != std::string::npos);
    CHECK(summary.find("c2,ocsvm,1,contaminated") != std::string::npos);
}
