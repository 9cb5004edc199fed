#include "co2/cli/manifest.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <openssl/evp.h>

#include "co2/error.hpp"

namespace co2::cli {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot read {}", path.string()));

    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 initialisation failed");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        const auto got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) != 1) {
            throw Error("SHA-256 update failed");
        }
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw Error("SHA-256 finalisation failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

Manifest collect_manifest(const std::filesystem::path& out_dir) {
    Manifest m;
    if (!std::filesystem::exists(out_dir)) return m;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(out_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(entry.path(), out_dir).generic_string();
        if (rel == kManifestName) continue;
        m.entries.push_back({rel, sha256_file(entry.path())});
    }
    return m;
}

void write_manifest(const std::filesystem::path& out_dir, Manifest manifest) {
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const auto& a, const auto& b) { return a.path < b.path; });
    const auto path = out_dir / kManifestName;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", path.string()));
    fmt::print(out, "co2model-manifest 1\n");
    fmt::print(out, "status {}\n", manifest.complete ? "complete" : "incomplete");
    if (!manifest.complete) {
        fmt::print(out, "failed_stage {}\n", manifest.failed_stage);
        fmt::print(out, "error {}\n", manifest.error);
    }
    // some scoring APIs report MSE negated; every file here stores it positive
    fmt::print(out, "mse_sign positive\n");
    for (const auto& e : manifest.entries) {
        fmt::print(out, "{}  {}\n", e.sha256, e.path);
    }
}

}  // namespace co2::cli
