#include "sitqc/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sitqc/errors.hpp"
#include "sitqc/fft.hpp"
#include "sitqc/rng.hpp"

namespace sitqc {

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string spectral_embed_extractor_id() { return "spectral-stats-v1"; }

std::string config_hash(const SpectralEmbedConfig& cfg) {
    std::ostringstream os;
    os << cfg.n_fft << '|' << cfg.hop << '|' << cfg.n_mels << '|' << format_double(cfg.band_lo_hz)
       << '|' << format_double(cfg.band_hi_hz) << '|' << cfg.output_dim << '|'
       << cfg.rate_reinterpretation;
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(os.str())));
    return buf;
}

void validate(const FeatureMatrix& m) {
    for (const auto& row : m.rows) {
        if (static_cast<int>(row.values.size()) != m.dim)
            throw DataError("features: row dimension " + std::to_string(row.values.size()) +
                            " != matrix dimension " + std::to_string(m.dim));
        for (double v : row.values)
            if (!std::isfinite(v)) throw DataError("features: non-finite value");
    }
}

MelFilterBank::MelFilterBank(int n_fft, int sample_rate, int n_mels, double band_lo_hz,
                             double band_hi_hz) {
    if (n_mels < 1) throw DataError("mel: need at least one band");
    if (!(band_lo_hz >= 0.0) || !(band_hi_hz > band_lo_hz))
        throw DataError("mel: band edges must satisfy 0 <= lo < hi");
    if (band_hi_hz > sample_rate / 2.0 + 1e-9)
        throw DataError("mel: band upper edge " + std::to_string(band_hi_hz) +
                        " Hz above Nyquist of " + std::to_string(sample_rate) + " Hz rate");

    n_mels_ = n_mels;
    const double mel_lo = hz_to_mel(band_lo_hz);
    const double mel_hi = hz_to_mel(band_hi_hz);
    centers_hz_.resize(static_cast<std::size_t>(n_mels) + 2);
    for (int i = 0; i < n_mels + 2; ++i)
        centers_hz_[static_cast<std::size_t>(i)] =
            mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));

    const int n_bins = n_fft / 2 + 1;
    const double bin_hz = static_cast<double>(sample_rate) / n_fft;
    weights_.assign(static_cast<std::size_t>(n_mels), std::vector<double>(n_bins, 0.0));
    for (int m = 0; m < n_mels; ++m)
        for (int k = 0; k < n_bins; ++k)
            weights_[m][k] = weight_at(m, k * bin_hz);
}

double MelFilterBank::weight_at(int m, double f_hz) const {
    const double lo = centers_hz_[static_cast<std::size_t>(m)];
    const double mid = centers_hz_[static_cast<std::size_t>(m) + 1];
    const double hi = centers_hz_[static_cast<std::size_t>(m) + 2];
    if (f_hz <= lo || f_hz >= hi) return 0.0;
    if (f_hz <= mid) return (f_hz - lo) / (mid - lo);
    return (hi - f_hz) / (hi - mid);
}

std::vector<double> MelFilterBank::apply(std::span<const double> power_bins) const {
    std::vector<double> out(static_cast<std::size_t>(n_mels_), 0.0);
    for (int m = 0; m < n_mels_; ++m) {
        const auto& w = weights_[static_cast<std::size_t>(m)];
        const std::size_t n = std::min(w.size(), power_bins.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += w[k] * power_bins[k];
        out[static_cast<std::size_t>(m)] = acc;
    }
    return out;
}

std::vector<std::vector<double>> log_mel_spectrogram(std::span<const double> samples,
                                                     int sample_rate,
                                                     const SpectralEmbedConfig& cfg) {
    const auto n_fft = static_cast<std::size_t>(cfg.n_fft);
    if (!is_power_of_two(n_fft)) throw DataError("features: n_fft must be a power of two");
    if (samples.size() < n_fft)
        throw DataError("features: chunk shorter than n_fft (" +
                        std::to_string(samples.size()) + " < " + std::to_string(n_fft) + ")");
    if (cfg.hop <= 0) throw DataError("features: hop must be positive");

    const MelFilterBank bank(cfg.n_fft, sample_rate, cfg.n_mels, cfg.band_lo_hz, cfg.band_hi_hz);

    std::vector<double> hann(n_fft);
    for (std::size_t i = 0; i < n_fft; ++i)
        hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                       static_cast<double>(n_fft));

    const std::size_t hop = static_cast<std::size_t>(cfg.hop);
    const std::size_t frames = (samples.size() - n_fft) / hop + 1;

    std::vector<std::vector<double>> mel(frames);
    std::vector<std::complex<double>> buf(n_fft);
    std::vector<double> power(n_fft / 2 + 1);
    for (std::size_t f = 0; f < frames; ++f) {
        const double* frame = samples.data() + f * hop;
        for (std::size_t i = 0; i < n_fft; ++i) buf[i] = frame[i] * hann[i];
        fft(buf);
        for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
        auto energies = bank.apply(power);
        for (auto& e : energies) e = std::log1p(e);  // log(1+0) = 0 keeps silence at zero
        mel[f] = std::move(energies);
    }
    return mel;
}

FeatureVector extract_spectral_embedding(const Chunk& chunk, int sample_rate,
                                         const SpectralEmbedConfig& cfg,
                                         const std::string& clip_id) {
    const auto mel = log_mel_spectrogram(chunk.samples, sample_rate, cfg);
    const std::size_t frames = mel.size();
    const auto n_mels = static_cast<std::size_t>(cfg.n_mels);

    // Per-band statistics over time: mean, population std, max, and mean
    // rectified flux (positive frame-to-frame increase).
    std::vector<double> stats;
    stats.reserve(4 * n_mels);
    std::vector<double> mean(n_mels, 0.0), stddev(n_mels, 0.0), peak(n_mels, 0.0),
        flux(n_mels, 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t m = 0; m < n_mels; ++m) {
            const double v = mel[f][m];
            mean[m] += v;
            peak[m] = std::max(peak[m], v);
            if (f > 0) flux[m] += std::max(0.0, v - mel[f - 1][m]);
        }
    }
    for (std::size_t m = 0; m < n_mels; ++m) mean[m] /= static_cast<double>(frames);
    for (std::size_t f = 0; f < frames; ++f)
        for (std::size_t m = 0; m < n_mels; ++m) {
            const double d = mel[f][m] - mean[m];
            stddev[m] += d * d;
        }
    for (std::size_t m = 0; m < n_mels; ++m) {
        stddev[m] = std::sqrt(stddev[m] / static_cast<double>(frames));
        if (frames > 1) flux[m] /= static_cast<double>(frames - 1);
    }
    stats.insert(stats.end(), mean.begin(), mean.end());
    stats.insert(stats.end(), stddev.begin(), stddev.end());
    stats.insert(stats.end(), peak.begin(), peak.end());
    stats.insert(stats.end(), flux.begin(), flux.end());

    FeatureVector out;
    out.chunk_index = chunk.index;
    out.clip_id = clip_id;
    out.values.assign(static_cast<std::size_t>(cfg.output_dim), 0.0);
    const std::size_t n = std::min(stats.size(), out.values.size());
    std::copy_n(stats.begin(), n, out.values.begin());
    return out;
}

void save_embeddings(const FeatureMatrix& m, const std::filesystem::path& path) {
    validate(m);

    std::vector<const FeatureVector*> order;
    order.reserve(m.rows.size());
    for (const auto& r : m.rows) order.push_back(&r);
    std::sort(order.begin(), order.end(), [](const FeatureVector* a, const FeatureVector* b) {
        if (a->clip_id != b->clip_id) return a->clip_id < b->clip_id;
        return a->chunk_index < b->chunk_index;
    });

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("features: cannot open for writing: " + path.string());
    f << "clip_id,chunk_index";
    for (int d = 0; d < m.dim; ++d) f << ",d" << d;
    f << '\n';
    for (const auto* row : order) {
        f << row->clip_id << ',' << row->chunk_index;
        for (double v : row->values) f << ',' << format_double(v);
        f << '\n';
    }
    if (!f) throw IoError("features: write failed: " + path.string());
    f.close();

    nlohmann::json meta = {
        {"schema_version", 1},
        {"extractor_id", m.extractor_id},
        {"config_hash", m.config_hash},
        {"dim", m.dim},
    };
    std::ofstream mf(path.string() + ".meta.json", std::ios::trunc);
    if (!mf) throw IoError("features: cannot write sidecar for " + path.string());
    mf << meta.dump(2) << '\n';
}

FeatureMatrix load_embeddings(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("features: missing file " + path.string());

    std::string header;
    if (!std::getline(f, header)) throw IoError("features: empty file " + path.string());
    if (!header.empty() && header.back() == '\r') header.pop_back();

    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    if (cols.size() < 2 || cols[0] != "clip_id" || cols[1] != "chunk_index")
        throw IoError("features: malformed header in " + path.string());
    const int dim = static_cast<int>(cols.size()) - 2;
    for (int d = 0; d < dim; ++d)
        if (cols[static_cast<std::size_t>(d) + 2] != "d" + std::to_string(d))
            throw IoError("features: malformed header column in " + path.string());

    FeatureMatrix m;
    m.dim = dim;
    m.extractor_id = "external";

    std::set<std::pair<std::string, std::size_t>> seen;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        FeatureVector row;
        std::size_t pos = 0;
        auto next_field = [&](bool& last) -> std::string {
            const std::size_t comma = line.find(',', pos);
            last = comma == std::string::npos;
            std::string field = last ? line.substr(pos) : line.substr(pos, comma - pos);
            pos = last ? line.size() : comma + 1;
            return field;
        };

        bool last = false;
        row.clip_id = next_field(last);
        if (last) throw DataError("features: truncated row at line " + std::to_string(line_no));
        const std::string idx_str = next_field(last);
        try {
            row.chunk_index = std::stoull(idx_str);
        } catch (const std::exception&) {
            throw DataError("features: non-numeric chunk_index at line " + std::to_string(line_no));
        }

        row.values.reserve(static_cast<std::size_t>(dim));
        while (!last) {
            const std::string field = next_field(last);
            char* end = nullptr;
            const double v = std::strtod(field.c_str(), &end);
            if (end == field.c_str() || *end != '\0' || !std::isfinite(v))
                throw DataError("features: non-numeric cell at line " + std::to_string(line_no));
            row.values.push_back(v);
        }
        if (static_cast<int>(row.values.size()) != dim)
            throw DataError("features: row with " + std::to_string(row.values.size()) +
                            " values under d" + std::to_string(dim) + " header at line " +
                            std::to_string(line_no));
        if (!seen.insert({row.clip_id, row.chunk_index}).second)
            throw DataError("features: duplicate (clip_id, chunk_index) at line " +
                            std::to_string(line_no));
        m.rows.push_back(std::move(row));
    }

    const auto meta_path = std::filesystem::path(path.string() + ".meta.json");
    if (std::filesystem::exists(meta_path)) {
        std::ifstream mf(meta_path);
        nlohmann::json meta;
        try {
            mf >> meta;
        } catch (const nlohmann::json::exception& e) {
            throw IoError("features: malformed sidecar " + meta_path.string() + ": " + e.what());
        }
        m.extractor_id = meta.value("extractor_id", std::string("external"));
        m.config_hash = meta.value("config_hash", std::string());
        if (meta.contains("dim") && meta["dim"].get<int>() != dim)
            throw DataError("features: sidecar dimension disagrees with header in " +
                            path.string());
    }
    return m;
}

}  // namespace sitqc
