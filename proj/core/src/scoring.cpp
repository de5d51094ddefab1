#include "sitqc/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "sitqc/config.hpp"
#include "sitqc/errors.hpp"
#include "sitqc/eval.hpp"
#include "sitqc/parallel.hpp"
#include "sitqc/resample.hpp"
#include "sitqc/rng.hpp"
#include "sitqc/wav.hpp"

namespace sitqc {

std::string to_string(Detector d) { return d == Detector::iforest ? "iforest" : "ocsvm"; }

Detector detector_from_string(const std::string& s) {
    if (s == "iforest") return Detector::iforest;
    if (s == "ocsvm") return Detector::ocsvm;
    throw DataError("scoring: unknown detector '" + s + "'");
}

ClipDecision make_clip_decision(std::string clip_id, Detector detector,
                                std::vector<ChunkScore> chunk_scores, double threshold) {
    if (chunk_scores.empty()) throw DataError("scoring: decision needs at least one chunk score");
    ClipDecision d;
    d.clip_id = std::move(clip_id);
    d.detector = detector;
    d.threshold = threshold;
    double sum = 0.0;
    for (const auto& c : chunk_scores) sum += c.score;
    d.mean_score = sum / static_cast<double>(chunk_scores.size());
    d.contaminated = d.mean_score > threshold;  // a mean exactly at threshold is clean
    d.chunk_scores = std::move(chunk_scores);
    return d;
}

namespace {

void check_feature_compat(const std::string& model_name, const std::string& extractor_id,
                          const std::string& config_hash, int dim, const PipelineConfig& cfg) {
    if (dim != cfg.features.output_dim)
        throw DataError("scoring: " + model_name + " expects dimension " + std::to_string(dim) +
                        " but the feature config produces " +
                        std::to_string(cfg.features.output_dim));
    if (!extractor_id.empty() && extractor_id != spectral_embed_extractor_id())
        throw DataError("scoring: " + model_name + " was fit on extractor '" + extractor_id +
                        "', not the built-in extractor");
    if (!config_hash.empty() && config_hash != sitqc::config_hash(cfg.features))
        throw DataError("scoring: " + model_name +
                        " was fit with a different feature config (hash mismatch)");
}

FeatureMatrix embed_chunks(const std::vector<Chunk>& chunks, const PipelineConfig& cfg,
                           const std::string& clip_id) {
    FeatureMatrix m;
    m.dim = cfg.features.output_dim;
    m.extractor_id = spectral_embed_extractor_id();
    m.config_hash = config_hash(cfg.features);
    m.rows.reserve(chunks.size());
    for (const auto& chunk : chunks)
        m.rows.push_back(extract_spectral_embedding(chunk, cfg.analysis_rate, cfg.features, clip_id));
    return m;
}

}  // namespace

FeatureMatrix training_features_from_manifest(const DatasetManifest& manifest,
                                              const PipelineConfig& cfg) {
    const auto train_entries = manifest.select(Role::train);
    if (train_entries.empty()) throw DataError("scoring: manifest has no training clips");
    for (const auto* e : train_entries)
        if (e->container_class != ContainerClass::male)
            throw DataError("scoring: training clip '" + e->clip_id +
                            "' is not male-only (training data must contain no females)");

    SegmentationConfig seg;
    seg.window_s = cfg.window_s;
    seg.hop_s = cfg.window_s;  // non-overlapping training windows
    seg.analysis_rate = cfg.analysis_rate;

    // Per-clip extraction is independent; results are stacked in manifest
    // order regardless of which thread finished first.
    std::vector<FeatureMatrix> per_clip(train_entries.size());
    run_parallel(train_entries.size(), [&](std::size_t i) {
        const AudioClip clip = read_wav(train_entries[i]->path);
        const MonoClip mono = resample(to_mono(clip), cfg.analysis_rate);
        auto chunks = segment(mono, seg);
        const auto keep = std::min<std::size_t>(
            chunks.size(), static_cast<std::size_t>(cfg.train_windows_per_clip));
        chunks.resize(keep);
        per_clip[i] = embed_chunks(chunks, cfg, train_entries[i]->clip_id);
    });

    FeatureMatrix all;
    all.dim = cfg.features.output_dim;
    all.extractor_id = spectral_embed_extractor_id();
    all.config_hash = config_hash(cfg.features);
    for (auto& m : per_clip)
        for (auto& row : m.rows) all.rows.push_back(std::move(row));
    return all;
}

TrainedDetectors train_from_manifest(const DatasetManifest& manifest, const PipelineConfig& cfg) {
    FeatureMatrix features = training_features_from_manifest(manifest, cfg);
    const std::size_t rows = features.size();

    TrainedDetectors out;
    out.config = cfg;
    out.manifest_hash = manifest_hash(manifest);
    out.training_rows = rows;
    for (const auto* e : manifest.select(Role::train)) out.training_clips.push_back(e->clip_id);

    // A nominal nu below 1/l makes the dual infeasible; clamp up and record.
    OcsvmParams ocsvm_params = cfg.ocsvm;
    out.effective_nu = std::max(ocsvm_params.nu, 1.0 / static_cast<double>(rows));
    ocsvm_params.nu = out.effective_nu;

    out.iforest = fit_iforest(features, cfg.iforest);
    out.ocsvm = fit_ocsvm(features, ocsvm_params);
    return out;
}

namespace {

// Features are extracted once per clip and scored by every requested
// detector; chunk scores depend only on the chunk, never on its neighbors.
std::vector<ClipDecision> score_clip_features(const TrainedDetectors& detectors,
                                              const std::vector<Chunk>& chunks,
                                              const FeatureMatrix& features,
                                              const std::vector<Detector>& which,
                                              const std::string& clip_id) {
    const PipelineConfig& cfg = detectors.config;
    std::vector<ClipDecision> out;
    out.reserve(which.size());
    for (const Detector det : which) {
        if (det == Detector::iforest)
            check_feature_compat("iforest model", detectors.iforest.feature_extractor_id,
                                 detectors.iforest.feature_config_hash,
                                 detectors.iforest.feature_dim, cfg);
        else
            check_feature_compat("ocsvm model", detectors.ocsvm.support_vectors.extractor_id,
                                 detectors.ocsvm.support_vectors.config_hash,
                                 detectors.ocsvm.support_vectors.dim, cfg);

        std::vector<ChunkScore> scores;
        scores.reserve(chunks.size());
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const double s = det == Detector::iforest
                                 ? detectors.iforest.score(features.rows[i].values)
                                 : detectors.ocsvm.anomaly_score(features.rows[i].values);
            scores.push_back({chunks[i].start_s, s});
        }
        out.push_back(make_clip_decision(clip_id, det, std::move(scores), cfg.threshold));
    }
    return out;
}

std::vector<Chunk> segment_for_scoring(const MonoClip& clip, const PipelineConfig& cfg) {
    if (clip.sample_rate != cfg.analysis_rate)
        throw DataError("scoring: clip rate " + std::to_string(clip.sample_rate) +
                        " != analysis rate " + std::to_string(cfg.analysis_rate) +
                        " (resample first)");
    if (clip.duration_s() < cfg.window_s - 1e-12)
        throw DataError("scoring: clip too short (" + std::to_string(clip.duration_s()) +
                        " s, need " + std::to_string(cfg.window_s) + " s)");
    SegmentationConfig seg;
    seg.window_s = cfg.window_s;
    seg.hop_s = cfg.hop_s;
    seg.analysis_rate = cfg.analysis_rate;
    return segment(clip, seg);
}

}  // namespace

ClipDecision score_clip(const TrainedDetectors& detectors, const MonoClip& clip, Detector which,
                        const std::string& clip_id) {
    const auto chunks = segment_for_scoring(clip, detectors.config);
    const FeatureMatrix features = embed_chunks(chunks, detectors.config, clip_id);
    return std::move(score_clip_features(detectors, chunks, features, {which}, clip_id).front());
}

std::vector<ClipDecision> score_wav(const TrainedDetectors& detectors,
                                    const std::filesystem::path& wav_path,
                                    const std::vector<Detector>& which,
                                    const std::string& clip_id) {
    const AudioClip clip = read_wav(wav_path);
    const MonoClip mono = resample(to_mono(clip), detectors.config.analysis_rate);
    const std::string id = clip_id.empty() ? wav_path.stem().string() : clip_id;
    const auto chunks = segment_for_scoring(mono, detectors.config);
    const FeatureMatrix features = embed_chunks(chunks, detectors.config, id);
    return score_clip_features(detectors, chunks, features, which, id);
}

ScoreBatchResult score_manifest(const TrainedDetectors& detectors, const DatasetManifest& manifest,
                                const std::vector<Detector>& which) {
    const auto entries = manifest.select(Role::test);

    // Models are read-only here, so clips are scored concurrently; results
    // are keyed by manifest position to keep the output order.
    std::vector<std::vector<ClipDecision>> per_clip(entries.size());
    std::vector<std::unique_ptr<ClipError>> per_clip_error(entries.size());
    run_parallel(entries.size(), [&](std::size_t i) {
        try {
            per_clip[i] = score_wav(detectors, entries[i]->path, which, entries[i]->clip_id);
        } catch (const Error& err) {
            per_clip_error[i] = std::make_unique<ClipError>(
                ClipError{entries[i]->clip_id, err.what()});
        }
    });

    ScoreBatchResult result;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (auto& d : per_clip[i]) result.decisions.push_back(std::move(d));
        if (per_clip_error[i]) result.errors.push_back(*per_clip_error[i]);
    }
    return result;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void save_detectors(const TrainedDetectors& detectors, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_iforest(detectors.iforest, dir / "iforest.json");
    save_ocsvm(detectors.ocsvm, dir / "ocsvm.json");

    char hash_buf[20];
    std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                  static_cast<unsigned long long>(detectors.manifest_hash));
    const nlohmann::json doc = {
        {"schema_version", 1},
        {"model", "sitqc-detectors"},
        {"pipeline", nlohmann::json::parse(pipeline_config_json(detectors.config))},
        {"provenance",
         {{"manifest_hash", hash_buf},
          {"training_clips", detectors.training_clips},
          {"training_rows", detectors.training_rows},
          {"effective_nu", detectors.effective_nu}}},
    };
    std::ofstream f(dir / "detectors.json", std::ios::trunc);
    if (!f) throw IoError("scoring: cannot write " + (dir / "detectors.json").string());
    f << doc.dump(2) << '\n';
}

TrainedDetectors load_detectors(const std::filesystem::path& dir) {
    std::ifstream f(dir / "detectors.json");
    if (!f) throw IoError("scoring: missing " + (dir / "detectors.json").string());
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("scoring: malformed detectors.json: " + std::string(e.what()));
    }
    TrainedDetectors out;
    try {
        if (doc.at("model").get<std::string>() != "sitqc-detectors")
            throw IoError("scoring: not a detectors file: " + (dir / "detectors.json").string());
        out.config = pipeline_config_from_json(doc.at("pipeline").dump());
        const auto& prov = doc.at("provenance");
        out.manifest_hash =
            std::stoull(prov.at("manifest_hash").get<std::string>(), nullptr, 16);
        out.training_clips = prov.at("training_clips").get<std::vector<std::string>>();
        out.training_rows = prov.at("training_rows").get<std::size_t>();
        out.effective_nu = prov.at("effective_nu").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("scoring: malformed detectors.json: " + std::string(e.what()));
    }
    out.iforest = load_iforest(dir / "iforest.json");
    out.ocsvm = load_ocsvm(dir / "ocsvm.json");
    return out;
}

std::string decisions_long_csv(const std::vector<ClipDecision>& decisions) {
    std::ostringstream os;
    os << "clip_id,detector,chunk_start_s,chunk_score\n";
    for (const auto& d : decisions)
        for (const auto& c : d.chunk_scores)
            os << d.clip_id << ',' << to_string(d.detector) << ',' << format_double(c.start_s)
               << ',' << format_double(c.score) << '\n';
    return os.str();
}

std::string decisions_summary_csv(const std::vector<ClipDecision>& decisions) {
    std::ostringstream os;
    os << "clip_id,detector,mean,verdict\n";
    for (const auto& d : decisions)
        os << d.clip_id << ',' << to_string(d.detector) << ',' << format_double(d.mean_score)
           << ',' << (d.contaminated ? "contaminated" : "clean") << '\n';
    return os.str();
}

}  // namespace sitqc
