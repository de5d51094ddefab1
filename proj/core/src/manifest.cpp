#include "sitqc/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "sitqc/errors.hpp"
#include "sitqc/rng.hpp"

namespace sitqc {

std::string to_string(ContainerClass c) {
    switch (c) {
        case ContainerClass::male: return "male";
        case ContainerClass::female: return "female";
        case ContainerClass::mixed_25_75: return "mixed_25_75";
    }
    return "?";
}

std::string to_string(Role r) { return r == Role::train ? "train" : "test"; }

ContainerClass container_class_from_string(const std::string& s) {
    if (s == "male") return ContainerClass::male;
    if (s == "female") return ContainerClass::female;
    if (s == "mixed_25_75") return ContainerClass::mixed_25_75;
    throw DataError("manifest: unknown container class '" + s + "'");
}

Role role_from_string(const std::string& s) {
    if (s == "train") return Role::train;
    if (s == "test") return Role::test;
    throw DataError("manifest: unknown role '" + s + "'");
}

std::vector<const ManifestEntry*> DatasetManifest::select(std::optional<Role> role,
                                                          std::optional<int> day,
                                                          std::optional<ContainerClass> cls) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries) {
        if (role && e.role != *role) continue;
        if (day && e.day_since_sexing != *day) continue;
        if (cls && e.container_class != *cls) continue;
        out.push_back(&e);
    }
    return out;
}

void validate(const DatasetManifest& m) {
    std::set<std::string> ids;
    std::set<int> days;
    for (const auto& e : m.entries) {
        if (e.clip_id.empty()) throw DataError("manifest: empty clip_id");
        if (!ids.insert(e.clip_id).second)
            throw DataError("manifest: duplicate clip_id '" + e.clip_id + "'");
        if (e.session != 1 && e.session != 2)
            throw DataError("manifest: session must be 1 or 2 for clip '" + e.clip_id + "'");
        days.insert(e.day_since_sexing);
    }
    if (!days.empty()) {
        int expected = *days.begin();
        for (int d : days) {
            if (d != expected)
                throw DataError("manifest: days are not contiguous (missing day " +
                                std::to_string(expected) + ")");
            ++expected;
        }
    }
}

namespace {

constexpr const char* kSchemaLine = "# sitqc-manifest v1";
constexpr const char* kHeaderLine = "path,clip_id,container_class,day_since_sexing,session,role";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("manifest: missing file " + path.string());

    std::string line;
    if (!std::getline(f, line)) throw IoError("manifest: empty file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSchemaLine)
        throw IoError("manifest: unsupported schema line in " + path.string() + ": '" + line + "'");
    if (!std::getline(f, line)) throw IoError("manifest: missing header in " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeaderLine)
        throw IoError("manifest: unexpected header in " + path.string());

    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    DatasetManifest m;
    std::size_t line_no = 2;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 6)
            throw DataError("manifest: expected 6 fields at line " + std::to_string(line_no));
        ManifestEntry e;
        std::filesystem::path p(fields[0]);
        e.path = p.is_absolute() ? p : base / p;
        e.clip_id = fields[1];
        e.container_class = container_class_from_string(fields[2]);
        try {
            e.day_since_sexing = std::stoi(fields[3]);
            e.session = std::stoi(fields[4]);
        } catch (const std::exception&) {
            throw DataError("manifest: non-numeric day/session at line " + std::to_string(line_no));
        }
        e.role = role_from_string(fields[5]);
        m.entries.push_back(std::move(e));
    }
    validate(m);
    return m;
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    validate(m);
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("manifest: cannot open for writing: " + path.string());
    f << kSchemaLine << '\n' << kHeaderLine << '\n';
    for (const auto& e : m.entries) {
        std::error_code ec;
        auto rel = std::filesystem::relative(e.path, base, ec);
        const auto& p = (!ec && !rel.empty()) ? rel : e.path;
        f << p.generic_string() << ',' << e.clip_id << ',' << to_string(e.container_class) << ','
          << e.day_since_sexing << ',' << e.session << ',' << to_string(e.role) << '\n';
    }
    if (!f) throw IoError("manifest: write failed: " + path.string());
}

std::uint64_t manifest_hash(const DatasetManifest& m) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& e : m.entries) {
        std::ostringstream os;
        os << e.path.filename().generic_string() << '|' << e.clip_id << '|'
           << to_string(e.container_class) << '|' << e.day_since_sexing << '|' << e.session << '|'
           << to_string(e.role) << '\n';
        h = fnv1a64(os.str(), h);
    }
    return h;
}

}  // namespace sitqc
