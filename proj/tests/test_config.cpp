#include <doctest.h>

#include "sitqc/config.hpp"
#include "sitqc/errors.hpp"

#include "test_util.hpp"

using namespace sitqc;

TEST_CASE("config: JSON round-trip is lossless") {
    PipelineConfig cfg;
    cfg.analysis_rate = 8000;
    cfg.window_s = 2.0;
    cfg.hop_s = 1.0;
    cfg.threshold = 0.42;
    cfg.train_windows_per_clip = 4;
    cfg.features.n_mels = 32;
    cfg.features.band_hi_hz = 3500.5;
    cfg.iforest.n_trees = 17;
    cfg.iforest.seed = 12345678901234ULL;
    cfg.ocsvm.nu = 0.0625;
    cfg.ocsvm.gamma = 0.125;

    const PipelineConfig back = pipeline_config_from_json(pipeline_config_json(cfg));
    CHECK(back == cfg);

    // And byte-stable through a second round.
    CHECK(pipeline_config_json(back) == pipeline_config_json(cfg));
}

TEST_CASE("config: file round-trip and defaults") {
    testutil::TempDir tmp("config_rt");
    const PipelineConfig def;
    save_pipeline_config(def, tmp / "c.json");
    CHECK(load_pipeline_config(tmp / "c.json") == def);
    CHECK(def.analysis_rate == 4000);
    CHECK(def.window_s == 4.0);
    CHECK(def.hop_s == 2.0);
    CHECK(def.threshold == 0.5);
    CHECK(def.train_windows_per_clip == 6);
    CHECK(def.features.output_dim == 512);
}

TEST_CASE("config: unknown keys are rejected at every level") {
    CHECK_THROWS_WITH_AS(pipeline_config_from_json(R"({"thresold": 0.4})"),
                         doctest::Contains("unknown key"), ConfigError);
    CHECK_THROWS_WITH_AS(pipeline_config_from_json(R"({"iforest": {"trees": 5}})"),
                         doctest::Contains("unknown key"), ConfigError);
    CHECK_THROWS_WITH_AS(pipeline_config_from_json(R"({"features": {"nfft": 256}})"),
                         doctest::Contains("unknown key"), ConfigError);
    CHECK_THROWS_AS(pipeline_config_from_json("{"), ConfigError);
    CHECK_THROWS_AS(pipeline_config_from_json(R"({"schema_version": 3})"), ConfigError);
    CHECK_THROWS_AS(pipeline_config_from_json(R"({"threshold": "high"})"), ConfigError);
    CHECK_THROWS_AS(load_pipeline_config("/nonexistent/cfg.json"), IoError);
}
