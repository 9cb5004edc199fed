#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "co2/data.hpp"
#include "co2/importance.hpp"
#include "co2/selection.hpp"
#include "co2/stationarity.hpp"
#include "co2/svr.hpp"

namespace co2::cli {

enum class StandardizeMode { Global, TrainOnly };

[[nodiscard]] StandardizeMode parse_standardize_mode(std::string_view s);
[[nodiscard]] std::string_view to_string(StandardizeMode m);

struct PcrSpec {
    std::optional<std::size_t> k;  ///< pinned component count
    double target_evr = 0.90;      ///< used when k is unset
};

// Offsets added to the global seed for each stage.
inline constexpr std::uint64_t kSplitSeedOffset = 1;
inline constexpr std::uint64_t kFoldSeedOffset = 2;
inline constexpr std::uint64_t kImportanceSeedOffset = 3;

struct RunConfig {
    std::filesystem::path input_path;
    std::filesystem::path output_dir;
    double test_fraction = 0.2;
    StandardizeMode standardize_mode = StandardizeMode::Global;
    std::optional<svr::SvrConfig> svr;
    std::optional<selection::Grid> grid;
    std::size_t folds = 5;
    PcrSpec pcr;
    stationarity::AdfSpec adf;
    importance::ImportanceConfig importance;
    std::uint64_t seed = 0;

    [[nodiscard]] data::SplitSpec split_spec() const {
        return {test_fraction, seed + kSplitSeedOffset, true};
    }
    [[nodiscard]] std::uint64_t fold_seed() const { return seed + kFoldSeedOffset; }
    [[nodiscard]] std::uint64_t importance_seed() const { return seed + kImportanceSeedOffset; }

    /// Range checks; at most one of svr and grid may be set. With neither,
    /// the pipeline tunes over the default grid.
    void validate() const;
};

/// INI-style file with sections [data], [svr] or [grid], [pcr], [adf],
/// [importance]. Relative paths resolve against the file's directory.
/// Unknown sections or keys raise ConfigError.
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);
[[nodiscard]] RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});

/// Echo of the effective configuration without the output directory.
void write_config(const RunConfig& cfg, std::ostream& out);

}  // namespace co2::cli
