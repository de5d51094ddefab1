#include "sitqc/eval.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <vector>

#include "sitqc/errors.hpp"

namespace sitqc {

std::string to_string(Verdict v) { return v == Verdict::clean ? "clean" : "contaminated"; }

Verdict expected_verdict(ContainerClass cls) {
    return cls == ContainerClass::male ? Verdict::clean : Verdict::contaminated;
}

AccuracyCount AccuracyTable::marginal(ContainerClass cls, Detector det) const {
    AccuracyCount out;
    for (const auto& [key, count] : cells) {
        if (key.cls == cls && key.detector == det) {
            out.correct += count.correct;
            out.total += count.total;
        }
    }
    return out;
}

AccuracyTable evaluate(std::span<const ClipDecision> decisions, const DatasetManifest& manifest) {
    std::map<std::string, const ManifestEntry*> by_id;
    for (const auto& e : manifest.entries) by_id[e.clip_id] = &e;

    AccuracyTable table;
    for (const auto& d : decisions) {
        const auto it = by_id.find(d.clip_id);
        if (it == by_id.end())
            throw DataError("eval: decision for clip '" + d.clip_id + "' has no manifest entry");
        const ManifestEntry& e = *it->second;
        const Verdict expected = expected_verdict(e.container_class);
        const Verdict got = d.contaminated ? Verdict::contaminated : Verdict::clean;

        auto& cell = table.cells[{e.day_since_sexing, e.container_class, d.detector}];
        cell.total += 1;
        if (got == expected) cell.correct += 1;
    }
    return table;
}

std::string format_percent(const AccuracyCount& c) {
    if (c.total <= 0) return "-";
    // 100 * correct / total at two decimals: integer fixed-point with
    // round half away from zero, then trailing zeros trimmed.
    const std::int64_t num = 20000 * c.correct + c.total;  // adds the half for rounding
    const std::int64_t hundredths = num / (2 * c.total);
    std::string s = std::to_string(hundredths / 100);
    const auto frac = static_cast<int>(hundredths % 100);
    if (frac != 0) {
        char buf[8];
        std::snprintf(buf, sizeof buf, ".%02d", frac);
        s += buf;
        while (s.back() == '0') s.pop_back();
    }
    return s;
}

namespace {

constexpr ContainerClass kClassOrder[] = {ContainerClass::male, ContainerClass::mixed_25_75,
                                          ContainerClass::female};
constexpr Detector kDetectorOrder[] = {Detector::ocsvm, Detector::iforest};

std::string class_heading(ContainerClass c) {
    switch (c) {
        case ContainerClass::male: return "100% male";
        case ContainerClass::mixed_25_75: return "25% female 75% male";
        case ContainerClass::female: return "100% female";
    }
    return "?";
}

std::string detector_heading(Detector d) { return d == Detector::ocsvm ? "OCSVM" : "iForest"; }

std::string ordinal(int day) {
    const int mod100 = day % 100;
    const int mod10 = day % 10;
    const char* suffix = "th";
    if (mod100 < 11 || mod100 > 13) {
        if (mod10 == 1) suffix = "st";
        else if (mod10 == 2) suffix = "nd";
        else if (mod10 == 3) suffix = "rd";
    }
    return std::to_string(day) + suffix;
}

}  // namespace

std::string render_accuracy_text(const AccuracyTable& table) {
    std::vector<int> days;
    for (const auto& [key, count] : table.cells)
        if (std::find(days.begin(), days.end(), key.day) == days.end()) days.push_back(key.day);
    std::sort(days.begin(), days.end());

    const int day_w = 5;
    const int cell_w = 11;  // two detector columns span the widest class heading

    std::ostringstream os;
    os << std::string(day_w, ' ') << " |";
    for (const auto cls : kClassOrder) {
        std::string h = class_heading(cls);
        h.resize(static_cast<std::size_t>(2 * cell_w + 1), ' ');
        os << ' ' << h << '|';
    }
    os << '\n';
    auto pad = [](std::string s, int w) {
        if (static_cast<int>(s.size()) < w) s.resize(static_cast<std::size_t>(w), ' ');
        return s;
    };
    os << pad("Day", day_w) << " |";
    for ([[maybe_unused]] const auto cls : kClassOrder) {
        for (const auto det : kDetectorOrder) os << ' ' << pad(detector_heading(det), cell_w - 1);
        os << " |";
    }
    os << '\n';

    auto row = [&](const std::string& label, auto cell_of) {
        os << pad(label, day_w) << " |";
        for (const auto cls : kClassOrder) {
            for (const auto det : kDetectorOrder) {
                const AccuracyCount c = cell_of(cls, det);
                os << ' ' << pad(format_percent(c), cell_w - 1);
            }
            os << " |";
        }
        os << '\n';
    };

    for (const int day : days)
        row(ordinal(day), [&](ContainerClass cls, Detector det) {
            const auto it = table.cells.find({day, cls, det});
            return it == table.cells.end() ? AccuracyCount{} : it->second;
        });
    row("All", [&](ContainerClass cls, Detector det) { return table.marginal(cls, det); });
    return os.str();
}

std::string render_accuracy_csv(const AccuracyTable& table) {
    std::ostringstream os;
    os << "day,container_class,detector,correct,total,accuracy\n";
    for (const auto& [key, count] : table.cells) {
        os << key.day << ',' << to_string(key.cls) << ',' << to_string(key.detector) << ','
           << count.correct << ',' << count.total << ',' << format_percent(count) << '\n';
    }
    return os.str();
}

AccuracyTable parse_accuracy_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw DataError("eval: empty accuracy CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "day,container_class,detector,correct,total,accuracy")
        throw DataError("eval: unexpected accuracy CSV header");

    AccuracyTable table;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string day_s, cls_s, det_s, correct_s, total_s, acc_s;
        if (!std::getline(ss, day_s, ',') || !std::getline(ss, cls_s, ',') ||
            !std::getline(ss, det_s, ',') || !std::getline(ss, correct_s, ',') ||
            !std::getline(ss, total_s, ',') || !std::getline(ss, acc_s))
            throw DataError("eval: malformed accuracy CSV row '" + line + "'");
        AccuracyCellKey key;
        AccuracyCount count;
        try {
            key.day = std::stoi(day_s);
            count.correct = std::stoll(correct_s);
            count.total = std::stoll(total_s);
        } catch (const std::exception&) {
            throw DataError("eval: non-numeric accuracy CSV field in '" + line + "'");
        }
        key.cls = container_class_from_string(cls_s);
        key.detector = detector_from_string(det_s);
        table.cells[key] = count;
    }
    return table;
}

}  // namespace sitqc
