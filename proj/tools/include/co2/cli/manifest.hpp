#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace co2::cli {

/// Lowercase hex SHA-256 of a file's bytes.
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

struct ManifestEntry {
    std::string path;  ///< relative to the output directory, '/' separated
    std::string sha256;
};

struct Manifest {
    bool complete = false;
    std::string failed_stage;  ///< empty when complete
    std::string error;
    std::vector<ManifestEntry> entries;
};

/// Hashes every regular file under out_dir except the manifest itself.
[[nodiscard]] Manifest collect_manifest(const std::filesystem::path& out_dir);

/// Writes `manifest.txt` into out_dir. Entries are sorted by path.
void write_manifest(const std::filesystem::path& out_dir, Manifest manifest);

inline constexpr const char* kManifestName = "manifest.txt";

}  // namespace co2::cli
