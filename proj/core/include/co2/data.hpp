#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "co2/linalg.hpp"

namespace co2::data {

inline constexpr std::size_t kFeatureCount = 10;
inline constexpr const char* kTargetColumn = "co2_kt";

/// One of the ten explanatory variables.
struct FeatureId {
    std::size_t index = 0;
    std::string name;   ///< CSV column key
    std::string label;  ///< human-readable name used in report tables
    std::string unit;

    friend bool operator==(const FeatureId&, const FeatureId&) = default;
};

/// The ten features in canonical column order.
[[nodiscard]] const std::vector<FeatureId>& default_features();

struct PanelSchema {
    std::vector<FeatureId> features = default_features();
    int first_year = 1992;
    int last_year = 2019;
};

struct Observation {
    std::string country;
    int year = 0;
    std::vector<double> features;
    double target = 0.0;

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Country × year panel. Construction validates the invariants: unique
/// (country, year) keys, one value per feature, finite values and years
/// inside the schema range.
class PanelDataset {
public:
    PanelDataset() = default;
    PanelDataset(PanelSchema schema, std::vector<Observation> rows);

    [[nodiscard]] const PanelSchema& schema() const noexcept { return schema_; }
    [[nodiscard]] const std::vector<Observation>& rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }
    [[nodiscard]] bool empty() const noexcept { return rows_.empty(); }
    [[nodiscard]] std::set<std::string> countries() const;

    /// n × 10 feature matrix in row order.
    [[nodiscard]] linalg::Matrix feature_matrix() const;
    [[nodiscard]] std::vector<double> targets() const;

    [[nodiscard]] PanelDataset subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const PanelDataset& a, const PanelDataset& b) {
        return a.rows_ == b.rows_ && a.schema_.features == b.schema_.features &&
               a.schema_.first_year == b.schema_.first_year &&
               a.schema_.last_year == b.schema_.last_year;
    }

private:
    PanelSchema schema_;
    std::vector<Observation> rows_;
};

/// Reads the panel CSV (`country,year,<features>,co2_kt`).
[[nodiscard]] PanelDataset load_panel(const std::filesystem::path& path,
                                      const PanelSchema& schema = {});
[[nodiscard]] PanelDataset parse_panel(std::istream& in, const PanelSchema& schema = {},
                                       const std::string& source = "<stream>");

void write_panel(const PanelDataset& data, const std::filesystem::path& path);
void write_panel(const PanelDataset& data, std::ostream& out);

struct StandardizationParams {
    std::vector<double> means;
    std::vector<double> stds;
    double target_mean = 0.0;
    double target_std = 1.0;

    [[nodiscard]] double standardize_target(double v) const { return (v - target_mean) / target_std; }
    [[nodiscard]] double restore_target(double z) const { return z * target_std + target_mean; }
};

/// Column means and sample (n-1) standard deviations over all rows.
[[nodiscard]] StandardizationParams fit_standardizer(const PanelDataset& data);
[[nodiscard]] PanelDataset apply_standardizer(const StandardizationParams& params,
                                              const PanelDataset& data);
[[nodiscard]] PanelDataset invert_standardizer(const StandardizationParams& params,
                                               const PanelDataset& data);

void write_standardizer(const StandardizationParams& params, const std::filesystem::path& path);
[[nodiscard]] StandardizationParams read_standardizer(const std::filesystem::path& path);

struct SplitSpec {
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    bool shuffle = true;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Row indices of the train/test partition. The test side takes
/// round(n · test_fraction) rows from the end of the (optionally shuffled) order.
[[nodiscard]] SplitIndices split_indices(std::size_t n, const SplitSpec& spec);
[[nodiscard]] std::pair<PanelDataset, PanelDataset> split(const PanelDataset& data,
                                                          const SplitSpec& spec);

}  // namespace co2::data
