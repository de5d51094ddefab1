#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "sitqc/manifest.hpp"
#include "sitqc/scoring.hpp"

namespace sitqc {

enum class Verdict { clean, contaminated };
std::string to_string(Verdict v);

/// Ground truth per container class: only the all-male container is clean.
Verdict expected_verdict(ContainerClass cls);

struct AccuracyCellKey {
    int day = 0;
    ContainerClass cls = ContainerClass::male;
    Detector detector = Detector::iforest;

    auto operator<=>(const AccuracyCellKey&) const = default;
};

struct AccuracyCount {
    std::int64_t correct = 0;
    std::int64_t total = 0;

    bool operator==(const AccuracyCount&) const = default;
};

/// Per-(day, class, detector) correct/total counts, kept as exact integers;
/// percentages are derived only at render time.
struct AccuracyTable {
    std::map<AccuracyCellKey, AccuracyCount> cells;

    /// Pooled over all days (sums counts; not the mean of daily accuracies).
    AccuracyCount marginal(ContainerClass cls, Detector det) const;

    bool operator==(const AccuracyTable&) const = default;
};

/// Compare each decision's verdict with the expected verdict of its
/// manifest class. Decisions must reference manifest clips; days with no
/// decisions simply have no cells.
AccuracyTable evaluate(std::span<const ClipDecision> decisions, const DatasetManifest& manifest);

/// 100 * correct / total as an exact rational rendered at two decimals,
/// trailing zeros trimmed ("87.5", "73.44", "100").
std::string format_percent(const AccuracyCount& c);

/// Text grid shaped like the per-day accuracy table: one row per day plus a
/// pooled "All" row, detector columns grouped under each container class.
std::string render_accuracy_text(const AccuracyTable& table);

/// CSV: day,container_class,detector,correct,total,accuracy.
/// Round-trips through parse_accuracy_csv to an identical table (the All
/// row is derived, not stored).
std::string render_accuracy_csv(const AccuracyTable& table);
AccuracyTable parse_accuracy_csv(const std::string& csv);

}  // namespace sitqc
