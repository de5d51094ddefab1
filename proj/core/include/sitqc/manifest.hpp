#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sitqc {

enum class ContainerClass { male, female, mixed_25_75 };
enum class Role { train, test };

std::string to_string(ContainerClass c);
std::string to_string(Role r);
ContainerClass container_class_from_string(const std::string& s);
Role role_from_string(const std::string& s);

struct ManifestEntry {
    std::filesystem::path path;  // resolved against the manifest directory on load
    std::string clip_id;
    ContainerClass container_class = ContainerClass::male;
    int day_since_sexing = 0;
    int session = 1;  // 1 or 2
    Role role = Role::test;
};

/// Dataset description: one line per clip.
/// File format (schema line, CSV header, then rows):
///   # sitqc-manifest v1
///   path,clip_id,container_class,day_since_sexing,session,role
struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::vector<const ManifestEntry*> select(std::optional<Role> role = {},
                                             std::optional<int> day = {},
                                             std::optional<ContainerClass> cls = {}) const;
};

/// Throws DataError on duplicate clip_ids, invalid sessions, or a
/// non-contiguous day range.
void validate(const DatasetManifest& m);

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

/// Provenance hash over the canonical serialization of all entries.
std::uint64_t manifest_hash(const DatasetManifest& m);

}  // namespace sitqc
