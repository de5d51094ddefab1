#include "sitqc/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "sitqc/errors.hpp"

namespace sitqc {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!known.contains(key))
            throw ConfigError("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void read_into(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + std::string(key) + "' in " + where);
    }
}

}  // namespace

std::string pipeline_config_json(const PipelineConfig& cfg) {
    const json doc = {
        {"schema_version", 1},
        {"analysis_rate_hz", cfg.analysis_rate},
        {"window_s", cfg.window_s},
        {"hop_s", cfg.hop_s},
        {"threshold", cfg.threshold},
        {"train_windows_per_clip", cfg.train_windows_per_clip},
        {"features",
         {{"extractor", "builtin"},
          {"n_fft", cfg.features.n_fft},
          {"hop", cfg.features.hop},
          {"n_mels", cfg.features.n_mels},
          {"band_lo_hz", cfg.features.band_lo_hz},
          {"band_hi_hz", cfg.features.band_hi_hz},
          {"output_dim", cfg.features.output_dim},
          {"rate_reinterpretation", cfg.features.rate_reinterpretation}}},
        {"iforest",
         {{"n_trees", cfg.iforest.n_trees},
          {"subsample", cfg.iforest.subsample},
          {"seed", cfg.iforest.seed},
          {"contamination", cfg.iforest.contamination}}},
        {"ocsvm",
         {{"nu", cfg.ocsvm.nu},
          {"gamma", cfg.ocsvm.gamma},
          {"tolerance", cfg.ocsvm.tolerance},
          {"max_iterations", cfg.ocsvm.max_iterations}}},
    };
    return doc.dump(2);
}

PipelineConfig pipeline_config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown_keys(doc,
                        {"schema_version", "analysis_rate_hz", "window_s", "hop_s", "threshold",
                         "train_windows_per_clip", "features", "iforest", "ocsvm"},
                        "config");
    if (doc.contains("schema_version") && doc["schema_version"].get<int>() != 1)
        throw ConfigError("config: unsupported schema_version");

    PipelineConfig cfg;
    read_into(doc, "analysis_rate_hz", cfg.analysis_rate, "config");
    read_into(doc, "window_s", cfg.window_s, "config");
    read_into(doc, "hop_s", cfg.hop_s, "config");
    read_into(doc, "threshold", cfg.threshold, "config");
    read_into(doc, "train_windows_per_clip", cfg.train_windows_per_clip, "config");

    if (doc.contains("features")) {
        const json& f = doc["features"];
        reject_unknown_keys(f,
                            {"extractor", "n_fft", "hop", "n_mels", "band_lo_hz", "band_hi_hz",
                             "output_dim", "rate_reinterpretation"},
                            "features");
        if (f.contains("extractor") && f["extractor"].get<std::string>() != "builtin")
            throw ConfigError("config: unknown extractor (only 'builtin' is configurable; "
                              "external embeddings are ingested from files)");
        read_into(f, "n_fft", cfg.features.n_fft, "features");
        read_into(f, "hop", cfg.features.hop, "features");
        read_into(f, "n_mels", cfg.features.n_mels, "features");
        read_into(f, "band_lo_hz", cfg.features.band_lo_hz, "features");
        read_into(f, "band_hi_hz", cfg.features.band_hi_hz, "features");
        read_into(f, "output_dim", cfg.features.output_dim, "features");
        read_into(f, "rate_reinterpretation", cfg.features.rate_reinterpretation, "features");
    }
    if (doc.contains("iforest")) {
        const json& i = doc["iforest"];
        reject_unknown_keys(i, {"n_trees", "subsample", "seed", "contamination"}, "iforest");
        read_into(i, "n_trees", cfg.iforest.n_trees, "iforest");
        read_into(i, "subsample", cfg.iforest.subsample, "iforest");
        read_into(i, "seed", cfg.iforest.seed, "iforest");
        read_into(i, "contamination", cfg.iforest.contamination, "iforest");
    }
    if (doc.contains("ocsvm")) {
        const json& o = doc["ocsvm"];
        reject_unknown_keys(o, {"nu", "gamma", "tolerance", "max_iterations"}, "ocsvm");
        read_into(o, "nu", cfg.ocsvm.nu, "ocsvm");
        read_into(o, "gamma", cfg.ocsvm.gamma, "ocsvm");
        read_into(o, "tolerance", cfg.ocsvm.tolerance, "ocsvm");
        read_into(o, "max_iterations", cfg.ocsvm.max_iterations, "ocsvm");
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("config: missing file " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return pipeline_config_from_json(text);
}

void save_pipeline_config(const PipelineConfig& cfg, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("config: cannot open for writing: " + path.string());
    f << pipeline_config_json(cfg) << '\n';
    if (!f) throw IoError("config: write failed: " + path.string());
}

bool operator==(const SpectralEmbedConfig& a, const SpectralEmbedConfig& b) {
    return a.n_fft == b.n_fft && a.hop == b.hop && a.n_mels == b.n_mels &&
           a.band_lo_hz == b.band_lo_hz && a.band_hi_hz == b.band_hi_hz &&
           a.output_dim == b.output_dim && a.rate_reinterpretation == b.rate_reinterpretation;
}

bool operator==(const IforestParams& a, const IforestParams& b) {
    return a.n_trees == b.n_trees && a.subsample == b.subsample && a.seed == b.seed &&
           a.contamination == b.contamination;
}

bool operator==(const OcsvmParams& a, const OcsvmParams& b) {
    return a.nu == b.nu && a.gamma == b.gamma && a.tolerance == b.tolerance &&
           a.max_iterations == b.max_iterations;
}

bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
    return a.analysis_rate == b.analysis_rate && a.window_s == b.window_s && a.hop_s == b.hop_s &&
           a.threshold == b.threshold && a.train_windows_per_clip == b.train_windows_per_clip &&
           a.features == b.features && a.iforest == b.iforest && a.ocsvm == b.ocsvm;
}

}  // namespace sitqc
