#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "co2/data.hpp"

namespace co2::reporting {

/// |actual| at or below this many kilotonnes leaves the percentage undefined.
inline constexpr double kPctGuardKt = 1e-9;

struct CountrySeries {
    std::string country;
    std::vector<int> years;
    std::vector<double> actual;     ///< kilotonnes
    std::vector<double> predicted;  ///< kilotonnes
    std::vector<double> difference;  ///< actual − predicted; positive = underestimation
    std::vector<std::optional<double>> pct_difference;  ///< 100 · difference / actual
};

/// De-standardizes targets and predictions, groups rows by country (sorted by
/// name) and orders each series by year.
[[nodiscard]] std::vector<CountrySeries> country_report(const data::PanelDataset& data,
                                                        std::span<const double> predictions,
                                                        const data::StandardizationParams& params);

/// `country,year,actual_kt,predicted_kt,diff_kt,pct_diff`; undefined
/// percentages are left empty.
void write_country_report(const std::vector<CountrySeries>& series, std::ostream& out);

struct ScatterTable {
    std::vector<std::pair<double, double>> points;  ///< (actual, predicted)
    /// Endpoints of the identity line spanning every value; absent when empty.
    std::optional<std::pair<double, double>> line;
};

[[nodiscard]] ScatterTable scatter_data(std::span<const double> actual,
                                        std::span<const double> predicted);

/// Writes `<country>_diff.svg` and `<country>_pct.svg` per series plus
/// `scatter.svg`. Returns the paths in write order.
std::vector<std::filesystem::path> emit_plots(const std::vector<CountrySeries>& series,
                                              const std::filesystem::path& out_dir);

/// Country name reduced to a safe file-name stem.
[[nodiscard]] std::string file_stem(const std::string& country);

struct SyntheticSpec {
    std::size_t n_countries = 62;
    int first_year = 1992;
    int last_year = 2019;
    std::uint64_t seed = 0;
    /// Linear weights on the standardized latent features.
    std::vector<double> coefficients{1.0, 0.3, 0.25, 0.2, 0.15, 0.1, 0.1, 0.05, 0.05, 0.05};
    double quadratic = 0.15;  ///< weight of the squared latent feature 0
    double noise_std = 0.1;
    std::set<std::size_t> unit_root_features;
    double size_loading = 0.9;   ///< weight of the country-size factor in every feature
    double common_loading = 0.3;  ///< weight of the country's AR(1) business cycle
    double own_loading = 0.35;    ///< weight of the feature's own AR(1) (or random walk)
    double cycle_rho = 0.3;
    double own_rho = 0.2;
};

/// Country panel where each feature mixes a persistent country-size factor,
/// a country business cycle and its own AR(1) term (a random walk for the
/// unit-root features). The target is linear plus quadratic in the latent
/// features with Gaussian noise, scaled to kilotonnes.
[[nodiscard]] data::PanelDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace co2::reporting
