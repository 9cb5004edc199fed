#include "co2/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "co2/error.hpp"
#include "co2/linalg.hpp"

namespace co2::stationarity {

namespace {

// MacKinnon (2010), Table 2: cv(T) = b0 + b1/T + b2/T² + b3/T³ for the
// 1%, 5% and 10% levels.
constexpr double kConstant[3][4] = {
    {-3.43035, -6.5393, -16.786, -79.433},
    {-2.86154, -2.8903, -4.234, -40.040},
    {-2.56677, -1.5384, -2.809, 0.0},
};
constexpr double kConstantTrend[3][4] = {
    {-3.95877, -9.0531, -28.428, -134.155},
    {-3.41049, -4.3904, -9.036, -45.374},
    {-3.12705, -2.5856, -3.925, -22.380},
};

double response_surface(const double (&b)[4], double t) {
    return b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t);
}

std::size_t deterministic_terms(RegressionKind kind) {
    return kind == RegressionKind::Constant ? 1 : 2;
}

struct AuxRegression {
    linalg::Matrix design;
    std::vector<double> response;
    std::size_t gamma_column = 0;
};

// Rows t = start..T-1 of Δy_t = α [+ βt] + γ y_{t-1} + Σ δ_i Δy_{t-i}.
AuxRegression build_regression(std::span<const double> y, RegressionKind kind, std::size_t lag,
                               std::size_t start) {
    const std::size_t n_det = deterministic_terms(kind);
    const std::size_t k = n_det + 1 + lag;
    const std::size_t nobs = y.size() - start;
    AuxRegression reg{linalg::Matrix(nobs, k), std::vector<double>(nobs), n_det};
    for (std::size_t r = 0; r < nobs; ++r) {
        const std::size_t t = start + r;
        reg.response[r] = y[t] - y[t - 1];
        reg.design(r, 0) = 1.0;
        if (kind == RegressionKind::ConstantAndTrend) {
            reg.design(r, 1) = static_cast<double>(t);
        }
        reg.design(r, n_det) = y[t - 1];
        for (std::size_t i = 1; i <= lag; ++i) {
            reg.design(r, n_det + i) = y[t - i] - y[t - i - 1];
        }
    }
    return reg;
}

void check_series(std::span<const double> series, std::size_t max_lag) {
    if (series.empty()) {
        throw LengthError("ADF test on an empty series");
    }
    for (double v : series) {
        if (!std::isfinite(v)) {
            throw DegenerateError("ADF series contains non-finite values");
        }
    }
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    if (*lo == *hi) {
        throw DegenerateError("ADF test on a constant series");
    }
    if (series.size() < max_lag + 4) {
        throw LengthError(fmt::format("ADF needs at least {} observations for max_lag {}, got {}",
                                      max_lag + 4, max_lag, series.size()));
    }
    if (2 * max_lag >= series.size() - 2) {
        throw ConfigError(fmt::format("max_lag {} must be below (T - 2)/2 for T = {}", max_lag,
                                      series.size()));
    }
}

}  // namespace

CriticalValues mackinnon_critical_values(RegressionKind kind, std::size_t nobs) {
    const auto& table = kind == RegressionKind::Constant ? kConstant : kConstantTrend;
    const double t = static_cast<double>(nobs);
    return {response_surface(table[0], t), response_surface(table[1], t),
            response_surface(table[2], t)};
}

std::size_t default_max_lag(std::size_t length) {
    const double t = static_cast<double>(length);
    auto schwert = static_cast<std::size_t>(std::floor(12.0 * std::pow(t / 100.0, 0.25)));
    // largest p with 2p < T - 2
    const std::size_t cap = length > 3 ? (length - 3) / 2 : 0;
    return std::min(schwert, cap);
}

double adf_aic(std::span<const double> series, RegressionKind kind, std::size_t lag,
               std::size_t max_lag) {
    if (lag > max_lag) {
        throw ConfigError(fmt::format("lag {} exceeds max_lag {}", lag, max_lag));
    }
    const auto reg = build_regression(series, kind, lag, max_lag + 1);
    const std::size_t nobs = reg.response.size();
    const std::size_t k = reg.design.cols();
    if (nobs <= k) {
        throw LengthError(fmt::format("ADF regression has {} observations for {} regressors", nobs, k));
    }
    const auto fit = linalg::lstsq(reg.design, reg.response);
    const double t = static_cast<double>(nobs);
    return t * std::log(fit.rss / t) + 2.0 * static_cast<double>(k);
}

AdfResult adf_test(std::span<const double> series, const AdfSpec& spec) {
    const std::size_t max_lag = spec.max_lag.value_or(default_max_lag(series.size()));
    check_series(series, max_lag);

    std::size_t lag = max_lag;
    if (spec.lag_selection == LagSelection::Aic) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p <= max_lag; ++p) {
            const double aic = adf_aic(series, spec.regression_kind, p, max_lag);
            if (aic < best) {
                best = aic;
                lag = p;
            }
        }
    }

    const auto reg = build_regression(series, spec.regression_kind, lag, lag + 1);
    const std::size_t nobs = reg.response.size();
    const std::size_t k = reg.design.cols();
    if (nobs <= k) {
        throw LengthError(fmt::format("ADF regression has {} observations for {} regressors", nobs, k));
    }
    const auto fit = linalg::lstsq(reg.design, reg.response);
    if (fit.rss <= 0.0) {
        throw DegenerateError("ADF auxiliary regression fits exactly; statistic undefined");
    }
    const double sigma2 = fit.rss / static_cast<double>(nobs - k);
    const double se =
        std::sqrt(sigma2 * fit.unscaled_covariance(reg.gamma_column, reg.gamma_column));

    AdfResult out;
    out.gamma_hat = fit.coefficients[reg.gamma_column];
    out.statistic = out.gamma_hat / se;
    out.chosen_lag = lag;
    out.nobs = nobs;
    out.critical_values = mackinnon_critical_values(spec.regression_kind, nobs);
    out.stationary_at_5pct = out.statistic < out.critical_values.pct5;
    return out;
}

std::vector<FeatureStationarity> test_all_features(const data::PanelDataset& data,
                                                   const AdfSpec& spec) {
    if (data.empty()) {
        throw LengthError("stationarity tests need a non-empty dataset");
    }
    // country -> row indices ordered by year
    std::map<std::string, std::vector<std::size_t>> by_country;
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_country[data.rows()[i].country].push_back(i);
    }
    for (auto& [_, idx] : by_country) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return data.rows()[a].year < data.rows()[b].year;
        });
    }

    std::vector<FeatureStationarity> report;
    for (const auto& feature : data.schema().features) {
        FeatureStationarity fs{feature, {}, 0.0, false};
        std::size_t tested = 0;
        std::size_t stationary = 0;
        for (const auto& [country, idx] : by_country) {
            std::vector<double> series(idx.size());
            for (std::size_t t = 0; t < idx.size(); ++t) {
                series[t] = data.rows()[idx[t]].features[feature.index];
            }
            SeriesOutcome outcome{country, std::nullopt, {}};
            try {
                outcome.result = adf_test(series, spec);
                ++tested;
                if (outcome.result->stationary_at_5pct) {
                    ++stationary;
                }
            } catch (const Error& e) {
                outcome.error = e.what();
            }
            fs.per_country.push_back(std::move(outcome));
        }
        if (tested > 0) {
            fs.stationary_fraction = static_cast<double>(stationary) / static_cast<double>(tested);
            fs.stationary = fs.stationary_fraction >= 0.5;
        }
        report.push_back(std::move(fs));
    }
    return report;
}

void write_adf_report(const std::vector<FeatureStationarity>& report, std::ostream& out) {
    out << "feature,country,statistic,lag,crit_5pct,stationary\n";
    for (const auto& fs : report) {
        for (const auto& s : fs.per_country) {
            if (s.result) {
                fmt::print(out, "{},{},{},{},{},{}\n", fs.feature.name, s.country,
                           s.result->statistic, s.result->chosen_lag,
                           s.result->critical_values.pct5, s.result->stationary_at_5pct ? 1 : 0);
            } else {
                fmt::print(out, "{},{},nan,,,\n", fs.feature.name, s.country);
            }
        }
    }
}

}  // namespace co2::stationarity
