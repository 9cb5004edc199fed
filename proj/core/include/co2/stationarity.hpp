#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "co2/data.hpp"

namespace co2::stationarity {

enum class RegressionKind { Constant, ConstantAndTrend };
enum class LagSelection { Fixed, Aic };

struct AdfSpec {
    RegressionKind regression_kind = RegressionKind::Constant;
    /// Upper bound on the lag order; empty selects ⌊12·(T/100)^{1/4}⌋.
    std::optional<std::size_t> max_lag;
    LagSelection lag_selection = LagSelection::Aic;
};

struct CriticalValues {
    double pct1 = 0.0;
    double pct5 = 0.0;
    double pct10 = 0.0;
};

struct AdfResult {
    double statistic = 0.0;  ///< t-ratio of the coefficient on y_{t-1}
    double gamma_hat = 0.0;
    std::size_t chosen_lag = 0;
    std::size_t nobs = 0;    ///< observations in the final regression
    CriticalValues critical_values;
    bool stationary_at_5pct = false;
};

/// MacKinnon (2010) response-surface critical values for `nobs` observations.
[[nodiscard]] CriticalValues mackinnon_critical_values(RegressionKind kind, std::size_t nobs);

/// Schwert rule capped so that max_lag < (T - 2) / 2.
[[nodiscard]] std::size_t default_max_lag(std::size_t length);

/// AIC = T·ln(SSR/T) + 2k for the auxiliary regression with `lag` lagged
/// differences, fitted over the sample shared by every lag up to `max_lag`.
[[nodiscard]] double adf_aic(std::span<const double> series, RegressionKind kind, std::size_t lag,
                             std::size_t max_lag);

/// Augmented Dickey-Fuller test of a single series.
///
/// Regresses Δy_t on an intercept, an optional trend, y_{t-1} and p lagged
/// differences. With AIC selection the lag minimising adf_aic over
/// 0..max_lag is refitted on its full available sample.
[[nodiscard]] AdfResult adf_test(std::span<const double> series, const AdfSpec& spec = {});

struct SeriesOutcome {
    std::string country;
    std::optional<AdfResult> result;
    std::string error;  ///< set when the test could not run on this series
};

struct FeatureStationarity {
    data::FeatureId feature;
    std::vector<SeriesOutcome> per_country;
    double stationary_fraction = 0.0;  ///< over series that produced a result
    bool stationary = false;           ///< stationary_fraction >= 0.5
};

/// Runs adf_test on every country's year-ordered series of every feature.
[[nodiscard]] std::vector<FeatureStationarity> test_all_features(const data::PanelDataset& data,
                                                                 const AdfSpec& spec = {});

/// CSV: feature,country,statistic,lag,crit_5pct,stationary
void write_adf_report(const std::vector<FeatureStationarity>& report, std::ostream& out);

}  // namespace co2::stationarity
