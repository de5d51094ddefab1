#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sitqc/audio.hpp"

namespace sitqc {

struct SpectralEmbedConfig {
    int n_fft = 512;
    int hop = 160;
    int n_mels = 64;
    double band_lo_hz = 200.0;
    double band_hi_hz = 2000.0;
    int output_dim = 512;
    // The analysis chunks are nominally relabeled to a higher rate before
    // being fed to an external embedding network. A pure relabeling of the
    // time axis does not change sample values, so for the built-in extractor
    // this is provenance metadata only.
    std::string rate_reinterpretation = "4s@4kHz treated as 1s@16kHz";
};

/// Stable id + hash used to refuse scoring features a model was not fit on.
std::string spectral_embed_extractor_id();
std::string config_hash(const SpectralEmbedConfig& cfg);

struct FeatureVector {
    std::vector<double> values;
    std::size_t chunk_index = 0;
    std::string clip_id;
};

struct FeatureMatrix {
    std::vector<FeatureVector> rows;  // all rows share dim
    int dim = 0;
    std::string extractor_id;
    std::string config_hash;

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
};

/// Throws DataError on ragged rows, non-finite values or dim mismatch.
void validate(const FeatureMatrix& m);

/// Triangular mel filter bank restricted to [band_lo_hz, band_hi_hz].
/// Filters have unit peak; weights outside the band are zero by construction.
class MelFilterBank {
public:
    MelFilterBank(int n_fft, int sample_rate, int n_mels, double band_lo_hz, double band_hi_hz);

    /// Project a power spectrum (n_fft/2 + 1 bins) onto the mel bands.
    std::vector<double> apply(std::span<const double> power_bins) const;

    int n_mels() const { return n_mels_; }
    /// Center frequency (Hz) of band m; the triangle spans
    /// [center(m-1), center(m+1)] in mel space.
    double center_hz(int m) const { return centers_hz_[m + 1]; }
    /// Triangle weight of band m at frequency f (continuous, for oracles).
    double weight_at(int m, double f_hz) const;

private:
    int n_mels_;
    std::vector<double> centers_hz_;             // n_mels + 2 edge/center points
    std::vector<std::vector<double>> weights_;   // per band, per bin
};

/// log(1 + mel energy) per frame; shape frames x n_mels with
/// frames = floor((len - n_fft) / hop) + 1.
std::vector<std::vector<double>> log_mel_spectrogram(std::span<const double> samples,
                                                     int sample_rate,
                                                     const SpectralEmbedConfig& cfg);

/// Deterministic fixed-dimension embedding of one chunk: per-mel-band mean,
/// standard deviation, max and rectified spectral flux of the log-mel
/// spectrogram, concatenated and zero-padded or truncated to output_dim.
FeatureVector extract_spectral_embedding(const Chunk& chunk,
                                         int sample_rate,
                                         const SpectralEmbedConfig& cfg,
                                         const std::string& clip_id);

/// Feature file: UTF-8 CSV, header "clip_id,chunk_index,d0,...,d{D-1}",
/// rows sorted by (clip_id, chunk_index), floats at full round-trip
/// precision. A sidecar "<path>.meta.json" records extractor id, config
/// hash and dimension.
void save_embeddings(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix load_embeddings(const std::filesystem::path& path);

}  // namespace sitqc
