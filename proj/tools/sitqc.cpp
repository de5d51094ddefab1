// sitqc: batch quality control for SIT release containers.
//
// Detects female-mosquito contamination from container audio: recordings are
// averaged to mono, resampled to the analysis rate, cut into overlapping
// windows, embedded, and scored by male-trained anomaly detectors (isolation
// forest and one-class SVM). A clip is flagged contaminated when the mean
// per-window anomaly score exceeds the decision threshold.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sitqc/config.hpp"
#include "sitqc/errors.hpp"
#include "sitqc/eval.hpp"
#include "sitqc/features.hpp"
#include "sitqc/resample.hpp"
#include "sitqc/scoring.hpp"
#include "sitqc/synth.hpp"
#include "sitqc/wav.hpp"

namespace {

using namespace sitqc;

std::vector<Detector> detectors_from_flag(const std::string& flag) {
    if (flag == "both") return {Detector::iforest, Detector::ocsvm};
    return {detector_from_string(flag)};
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << content;
    if (!f) throw IoError("write failed: " + path.string());
}

// Score-trace plot as a standalone SVG: one polyline per detector, threshold
// rule, time axis in seconds. Static artifact, no timestamps.
std::string trace_svg(const std::vector<ClipDecision>& decisions) {
    constexpr int width = 640, height = 320, margin = 48;
    const double plot_w = width - 2 * margin;
    const double plot_h = height - 2 * margin;

    double t_max = 4.0;
    for (const auto& d : decisions)
        for (const auto& c : d.chunk_scores) t_max = std::max(t_max, c.start_s);
    const double t_span = t_max > 0 ? t_max : 1.0;

    auto x_of = [&](double t) { return margin + plot_w * t / t_span; };
    auto y_of = [&](double s) { return margin + plot_h * (1.0 - s); };

    std::string svg;
    char buf[256];
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"320\" "
           "viewBox=\"0 0 640 320\">\n";
    svg += "<rect width=\"640\" height=\"320\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%d\" y=\"%d\" width=\"%.0f\" height=\"%.0f\" fill=\"none\" "
                  "stroke=\"black\"/>\n",
                  margin, margin, plot_w, plot_h);
    svg += buf;
    const double threshold = decisions.empty() ? 0.5 : decisions.front().threshold;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"gray\" "
                  "stroke-dasharray=\"4 3\"/>\n",
                  x_of(0), y_of(threshold), x_of(t_span), y_of(threshold));
    svg += buf;

    const char* colors[] = {"crimson", "steelblue"};
    int color = 0;
    for (const auto& d : decisions) {
        std::string points;
        for (const auto& c : d.chunk_scores) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x_of(c.start_s), y_of(c.score));
            points += buf;
        }
        std::snprintf(buf, sizeof buf,
                      "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" "
                      "points=\"%s\"/>\n",
                      colors[color % 2], points.c_str());
        svg += buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" fill=\"%s\" font-size=\"12\">%s "
                                       "(mean %.3f)</text>\n",
                      margin + 8 + 170 * (color % 2), margin - 8, colors[color % 2],
                      to_string(d.detector).c_str(), d.mean_score);
        svg += buf;
        ++color;
    }
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%d\" y=\"%d\" font-size=\"12\">window start (s)</text>\n",
                  width / 2 - 40, height - 12);
    svg += buf;
    svg += "<text x=\"14\" y=\"170\" font-size=\"12\" transform=\"rotate(-90 14 170)\">anomaly "
           "score</text>\n";
    svg += "</svg>\n";
    return svg;
}

// Log-mel spectrogram rendered as an 8-bit grayscale PGM (time on x,
// low bands at the bottom).
std::string spectrogram_pgm(const std::vector<std::vector<double>>& mel) {
    const std::size_t frames = mel.size();
    const std::size_t bands = frames ? mel.front().size() : 0;
    double lo = 0.0, hi = 1e-12;
    for (const auto& f : mel)
        for (double v : f) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    std::string pgm = "P5\n" + std::to_string(frames) + " " + std::to_string(bands) + "\n255\n";
    pgm.reserve(pgm.size() + frames * bands);
    for (std::size_t b = bands; b-- > 0;)
        for (std::size_t f = 0; f < frames; ++f) {
            const double norm = (mel[f][b] - lo) / (hi - lo);
            pgm.push_back(static_cast<char>(static_cast<unsigned char>(
                std::clamp(norm, 0.0, 1.0) * 255.0 + 0.5)));
        }
    return pgm;
}

struct CommonFlags {
    std::string config_path;
    double threshold = -1.0;  // < 0 means "not set"

    PipelineConfig resolve() const {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = load_pipeline_config(config_path);
        if (threshold >= 0.0) cfg.threshold = threshold;  // flags win over the file
        return cfg;
    }
};

int cmd_synth(const std::string& out_dir, std::uint64_t seed, const std::string& layout_kind,
              int days, int first_day, int clips_per_container, double duration_s, int insects) {
    DatasetLayout layout = DatasetLayout::paper();
    if (layout_kind == "custom") {
        layout.days = days;
        layout.first_day_since_sexing = first_day;
        layout.clips_per_container = clips_per_container;
        layout.clip_duration_s = duration_s;
        layout.n_insects = insects;
    }
    const DatasetManifest manifest = generate_dataset(layout, out_dir, seed);
    std::cout << "wrote " << manifest.entries.size() << " clips and manifest to " << out_dir
              << "\n";
    return 0;
}

int cmd_train(const CommonFlags& common, const std::string& manifest_path,
              const std::string& models_dir, std::optional<int> day,
              std::optional<std::uint64_t> seed) {
    PipelineConfig cfg = common.resolve();
    if (seed) cfg.iforest.seed = *seed;

    DatasetManifest manifest = load_manifest(manifest_path);
    if (day) {
        DatasetManifest filtered;
        for (const auto& e : manifest.entries)
            if (e.day_since_sexing == *day) filtered.entries.push_back(e);
        manifest = std::move(filtered);
    }

    const TrainedDetectors detectors = train_from_manifest(manifest, cfg);
    save_detectors(detectors, models_dir);

    // Operator-facing training report: row counts plus the nu-property
    // numbers that tell whether the one-class fit is healthy.
    std::ostringstream report;
    report << "training clips: " << detectors.training_clips.size() << "\n"
           << "feature rows: " << detectors.training_rows << "\n"
           << "feature dim: " << detectors.config.features.output_dim << "\n"
           << "iforest trees: " << detectors.iforest.trees.size()
           << " subsample: " << detectors.iforest.effective_subsample << "\n"
           << "ocsvm nu (effective): " << detectors.effective_nu << "\n"
           << "ocsvm gamma: " << detectors.ocsvm.gamma << "\n"
           << "ocsvm support_fraction: " << detectors.ocsvm.support_fraction
           << " (nu-property lower bound: nu)\n"
           << "ocsvm train_outlier_fraction: " << detectors.ocsvm.train_outlier_fraction
           << " (nu-property upper bound: nu)\n"
           << "ocsvm iterations: " << detectors.ocsvm.iterations << "\n";
    write_text_file(std::filesystem::path(models_dir) / "training_report.txt", report.str());

    std::cout << "trained on " << detectors.training_rows << " feature rows from "
              << detectors.training_clips.size() << " clips\n";
    std::cout << "ocsvm: nu=" << detectors.effective_nu
              << " support_fraction=" << detectors.ocsvm.support_fraction
              << " train_outlier_fraction=" << detectors.ocsvm.train_outlier_fraction
              << " iterations=" << detectors.ocsvm.iterations << "\n";
    std::cout << "models written to " << models_dir << "\n";
    return 0;
}

int cmd_score(const CommonFlags& common, const std::string& models_dir,
              const std::string& wav_path, const std::string& detector_flag,
              const std::string& trace_out) {
    TrainedDetectors detectors = load_detectors(models_dir);
    if (common.threshold >= 0.0) detectors.config.threshold = common.threshold;

    const auto decisions = score_wav(detectors, wav_path, detectors_from_flag(detector_flag));
    for (const auto& d : decisions)
        std::cout << d.clip_id << " " << to_string(d.detector) << " mean=" << d.mean_score
                  << " threshold=" << d.threshold << " verdict="
                  << (d.contaminated ? "contaminated" : "clean") << "\n";
    if (!trace_out.empty()) write_text_file(trace_out, decisions_long_csv(decisions));
    const bool any_contaminated =
        std::any_of(decisions.begin(), decisions.end(),
                    [](const ClipDecision& d) { return d.contaminated; });
    std::cout << (any_contaminated ? "CONTAMINATED" : "CLEAN") << "\n";
    return 0;
}

int cmd_evaluate(const CommonFlags& common, const std::string& models_dir,
                 const std::string& manifest_path, const std::string& out_dir,
                 const std::string& detector_flag) {
    TrainedDetectors detectors = load_detectors(models_dir);
    if (common.threshold >= 0.0) detectors.config.threshold = common.threshold;

    const DatasetManifest manifest = load_manifest(manifest_path);
    const ScoreBatchResult batch =
        score_manifest(detectors, manifest, detectors_from_flag(detector_flag));
    const AccuracyTable table = evaluate(batch.decisions, manifest);

    const std::string text = render_accuracy_text(table);
    std::cout << text;
    if (!batch.errors.empty()) {
        std::cout << "excluded " << batch.errors.size() << " clip(s); see exclusions.txt\n";
    }

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path out(out_dir);
    write_text_file(out / "report.txt", text);
    write_text_file(out / "report.csv", render_accuracy_csv(table));
    write_text_file(out / "decisions_long.csv", decisions_long_csv(batch.decisions));
    write_text_file(out / "decisions_summary.csv", decisions_summary_csv(batch.decisions));
    std::string exclusions;
    for (const auto& e : batch.errors) exclusions += e.clip_id + ": " + e.message + "\n";
    write_text_file(out / "exclusions.txt", exclusions);
    std::cout << "reports written to " << out_dir << "\n";
    return 0;
}

int cmd_plot(const CommonFlags& common, const std::string& models_dir,
             const std::string& wav_path, const std::string& out_dir,
             const std::string& detector_flag) {
    TrainedDetectors detectors = load_detectors(models_dir);
    if (common.threshold >= 0.0) detectors.config.threshold = common.threshold;

    const AudioClip clip = read_wav(wav_path);
    const MonoClip mono = resample(to_mono(clip), detectors.config.analysis_rate);
    const std::string clip_id = std::filesystem::path(wav_path).stem().string();

    std::vector<ClipDecision> decisions;
    for (const Detector d : detectors_from_flag(detector_flag))
        decisions.push_back(score_clip(detectors, mono, d, clip_id));

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path out(out_dir);
    write_text_file(out / (clip_id + "_trace.csv"), decisions_long_csv(decisions));
    write_text_file(out / (clip_id + "_trace.svg"), trace_svg(decisions));

    const auto mel =
        log_mel_spectrogram(mono.samples, detectors.config.analysis_rate, detectors.config.features);
    std::ofstream pgm(out / (clip_id + "_spectrogram.pgm"), std::ios::binary | std::ios::trunc);
    if (!pgm) throw IoError("cannot open for writing: " + (out / (clip_id + "_spectrogram.pgm")).string());
    const std::string img = spectrogram_pgm(mel);
    pgm.write(img.data(), static_cast<std::streamsize>(img.size()));

    std::cout << "plots written to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sitqc: acoustic contamination QC for SIT release containers"};
    app.require_subcommand(1);

    CommonFlags common;

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic wingbeat dataset");
    std::string synth_out;
    std::uint64_t synth_seed = 1;
    std::string layout_kind = "paper";
    int days = 1, first_day = 6, clips_per_container = 2, insects = 250;
    double duration_s = 30.0;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", synth_seed, "dataset seed");
    synth->add_option("--layout", layout_kind, "paper | custom")
        ->check(CLI::IsMember({"paper", "custom"}));
    synth->add_option("--days", days, "custom layout: number of days");
    synth->add_option("--first-day", first_day, "custom layout: first day since sexing");
    synth->add_option("--clips-per-container", clips_per_container,
                      "custom layout: clips per container per day");
    synth->add_option("--duration-s", duration_s, "custom layout: clip duration (s)");
    synth->add_option("--insects", insects, "custom layout: insects per container");

    // train
    auto* train = app.add_subcommand("train", "fit both detectors from a manifest");
    std::string train_manifest, train_models;
    int train_day = -1;
    std::uint64_t train_seed = 0;
    bool train_seed_set = false;
    train->add_option("--manifest", train_manifest, "dataset manifest")->required();
    train->add_option("--models-dir", train_models, "output model directory")->required();
    train->add_option("--config", common.config_path, "pipeline config JSON");
    train->add_option("--day", train_day, "restrict training to one day since sexing");
    train->add_option("--seed", train_seed, "isolation-forest seed override")
        ->each([&](const std::string&) { train_seed_set = true; });

    // score
    auto* score = app.add_subcommand("score", "score one WAV and print verdicts");
    std::string score_models, score_wav_path, score_detector = "both", score_trace;
    score->add_option("--models-dir", score_models, "trained model directory")->required();
    score->add_option("--wav", score_wav_path, "30 s container recording")->required();
    score->add_option("--detector", score_detector, "iforest | ocsvm | both")
        ->check(CLI::IsMember({"iforest", "ocsvm", "both"}));
    score->add_option("--threshold", common.threshold, "decision threshold override");
    score->add_option("--config", common.config_path, "pipeline config JSON");
    score->add_option("--out", score_trace, "write per-window score trace CSV here");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score a test manifest and tabulate accuracy");
    std::string eval_models, eval_manifest, eval_out, eval_detector = "both";
    evaluate->add_option("--models-dir", eval_models, "trained model directory")->required();
    evaluate->add_option("--manifest", eval_manifest, "dataset manifest")->required();
    evaluate->add_option("--out", eval_out, "report output directory")->required();
    evaluate->add_option("--detector", eval_detector, "iforest | ocsvm | both")
        ->check(CLI::IsMember({"iforest", "ocsvm", "both"}));
    evaluate->add_option("--threshold", common.threshold, "decision threshold override");
    evaluate->add_option("--config", common.config_path, "pipeline config JSON");

    // plot
    auto* plot = app.add_subcommand("plot", "score-trace SVG/CSV and spectrogram for one WAV");
    std::string plot_models, plot_wav, plot_out, plot_detector = "both";
    plot->add_option("--models-dir", plot_models, "trained model directory")->required();
    plot->add_option("--wav", plot_wav, "container recording")->required();
    plot->add_option("--out", plot_out, "output directory")->required();
    plot->add_option("--detector", plot_detector, "iforest | ocsvm | both")
        ->check(CLI::IsMember({"iforest", "ocsvm", "both"}));
    plot->add_option("--threshold", common.threshold, "decision threshold override");
    plot->add_option("--config", common.config_path, "pipeline config JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(sitqc::ErrorClass::config);
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_out, synth_seed, layout_kind, days, first_day,
                             clips_per_container, duration_s, insects);
        if (train->parsed())
            return cmd_train(common, train_manifest, train_models,
                             train_day >= 0 ? std::optional<int>(train_day) : std::nullopt,
                             train_seed_set ? std::optional<std::uint64_t>(train_seed)
                                            : std::nullopt);
        if (score->parsed())
            return cmd_score(common, score_models, score_wav_path, score_detector, score_trace);
        if (evaluate->parsed())
            return cmd_evaluate(common, eval_models, eval_manifest, eval_out, eval_detector);
        if (plot->parsed())
            return cmd_plot(common, plot_models, plot_wav, plot_out, plot_detector);
    } catch (const sitqc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.error_class());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
