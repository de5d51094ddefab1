#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sitqc/audio.hpp"
#include "sitqc/features.hpp"
#include "sitqc/iforest.hpp"
#include "sitqc/manifest.hpp"
#include "sitqc/ocsvm.hpp"

namespace sitqc {

enum class Detector { iforest, ocsvm };
std::string to_string(Detector d);
Detector detector_from_string(const std::string& s);

struct PipelineConfig {
    int analysis_rate = 4000;
    double window_s = 4.0;
    double hop_s = 2.0;               // test-time hop (50% overlap)
    double threshold = 0.5;
    int train_windows_per_clip = 6;   // non-overlapping windows kept per training clip
    SpectralEmbedConfig features;
    IforestParams iforest;
    OcsvmParams ocsvm;
};

struct ChunkScore {
    double start_s = 0.0;
    double score = 0.0;
};

struct ClipDecision {
    std::string clip_id;
    Detector detector = Detector::iforest;
    std::vector<ChunkScore> chunk_scores;
    double mean_score = 0.0;
    double threshold = 0.5;
    bool contaminated = false;  // mean_score strictly above threshold
};

/// Assemble a decision from per-chunk scores. Verdict is contaminated iff
/// the mean is strictly above the threshold (a mean exactly at the
/// threshold is clean).
ClipDecision make_clip_decision(std::string clip_id, Detector detector,
                                std::vector<ChunkScore> chunk_scores, double threshold);

struct TrainedDetectors {
    IsolationForest iforest;
    OcsvmModel ocsvm;
    PipelineConfig config;
    // Provenance.
    std::uint64_t manifest_hash = 0;
    std::vector<std::string> training_clips;
    std::size_t training_rows = 0;
    double effective_nu = 0.0;  // nu after clamping to 1/rows when needed
};

/// Training half of the pipeline, exposed for inspection: every role=train
/// clip is read, averaged to mono, resampled to the analysis rate, cut into
/// non-overlapping windows (hop = window), and the first
/// train_windows_per_clip windows are embedded.
FeatureMatrix training_features_from_manifest(const DatasetManifest& manifest,
                                              const PipelineConfig& cfg);

/// Fit both detectors on the identical feature matrix. Hard error if the
/// manifest has no training clips or any training clip is not male-only.
TrainedDetectors train_from_manifest(const DatasetManifest& manifest,
                                     const PipelineConfig& cfg);

/// Score one clip (already mono at the analysis rate): overlapping windows,
/// embeddings, per-chunk anomaly scores, mean-vs-threshold verdict.
ClipDecision score_clip(const TrainedDetectors& detectors, const MonoClip& clip,
                        Detector which, const std::string& clip_id = "");

/// Full file path: read -> mono -> resample -> score, for each detector.
std::vector<ClipDecision> score_wav(const TrainedDetectors& detectors,
                                    const std::filesystem::path& wav_path,
                                    const std::vector<Detector>& which,
                                    const std::string& clip_id = "");

struct ClipError {
    std::string clip_id;
    std::string message;
};

struct ScoreBatchResult {
    std::vector<ClipDecision> decisions;  // manifest order, detectors interleaved per clip
    std::vector<ClipError> errors;        // excluded clips; never aborts the batch
};

/// Apply score_wav to every role=test entry. Per-clip failures are collected
/// as exclusions; one bad file does not abort the batch.
ScoreBatchResult score_manifest(const TrainedDetectors& detectors,
                                const DatasetManifest& manifest,
                                const std::vector<Detector>& which);

/// Model persistence: writes iforest.json, ocsvm.json and detectors.json
/// (pipeline config + provenance) into the directory.
void save_detectors(const TrainedDetectors& detectors, const std::filesystem::path& dir);
TrainedDetectors load_detectors(const std::filesystem::path& dir);

/// CSV exports. Long form: clip_id,detector,chunk_start_s,chunk_score.
/// Summary: clip_id,detector,mean,verdict.
std::string decisions_long_csv(const std::vector<ClipDecision>& decisions);
std::string decisions_summary_csv(const std::vector<ClipDecision>& decisions);

}  // namespace sitqc
