#include "co2/reporting.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "co2/error.hpp"

namespace co2::reporting {

std::vector<CountrySeries> country_report(const data::PanelDataset& data,
                                          std::span<const double> predictions,
                                          const data::StandardizationParams& params) {
    if (predictions.size() != data.size()) {
        throw DimensionError(fmt::format("country report: {} rows but {} predictions", data.size(),
                                         predictions.size()));
    }
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.size(); ++i) {
        groups[data.rows()[i].country].push_back(i);
    }
    std::vector<CountrySeries> out;
    for (auto& [country, idx] : groups) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return data.rows()[a].year < data.rows()[b].year;
        });
        CountrySeries s;
        s.country = country;
        for (std::size_t i : idx) {
            const double a = params.restore_target(data.rows()[i].target);
            const double p = params.restore_target(predictions[i]);
            const double d = a - p;
            s.years.push_back(data.rows()[i].year);
            s.actual.push_back(a);
            s.predicted.push_back(p);
            s.difference.push_back(d);
            if (std::abs(a) > kPctGuardKt) {
                s.pct_difference.emplace_back(100.0 * d / a);
            } else {
                s.pct_difference.emplace_back(std::nullopt);
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_country_report(const std::vector<CountrySeries>& series, std::ostream& out) {
    fmt::print(out, "country,year,actual_kt,predicted_kt,diff_kt,pct_diff\n");
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.years.size(); ++i) {
            fmt::print(out, "{},{},{},{},{},", s.country, s.years[i], s.actual[i], s.predicted[i],
                       s.difference[i]);
            if (s.pct_difference[i]) fmt::print(out, "{}", *s.pct_difference[i]);
            out << '\n';
        }
    }
}

ScatterTable scatter_data(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) {
        throw DimensionError(fmt::format("scatter: {} actual values but {} predictions",
                                         actual.size(), predicted.size()));
    }
    ScatterTable t;
    if (actual.empty()) return t;
    double lo = actual[0];
    double hi = actual[0];
    for (std::size_t i = 0; i < actual.size(); ++i) {
        t.points.emplace_back(actual[i], predicted[i]);
        lo = std::min({lo, actual[i], predicted[i]});
        hi = std::max({hi, actual[i], predicted[i]});
    }
    t.line = std::make_pair(lo, hi);
    return t;
}

std::string file_stem(const std::string& country) {
    std::string out;
    for (char ch : country) {
        const auto u = static_cast<unsigned char>(ch);
        out += (std::isalnum(u) || ch == '-' || ch == '_') ? ch : '_';
    }
    return out.empty() ? std::string("unnamed") : out;
}

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 360;
constexpr double kMargin = 50;
constexpr const char* kGreen = "#2e8b57";
constexpr const char* kBrown = "#8b4513";

struct Axis {
    double lo;
    double hi;
    double px_lo;
    double px_hi;
    [[nodiscard]] double map(double v) const {
        const double span = hi - lo;
        if (span == 0.0) return 0.5 * (px_lo + px_hi);
        return px_lo + (v - lo) / span * (px_hi - px_lo);
    }
};

std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

void svg_open(std::ostream& out, const std::string& title) {
    fmt::print(out,
               "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
               "viewBox=\"0 0 {0} {1}\">\n",
               kWidth, kHeight);
    fmt::print(out, "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
    fmt::print(out, "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" "
                    "text-anchor=\"middle\">{}</text>\n",
               kWidth / 2, escape(title));
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(fmt::format("cannot write {}", path.string()));
    f << body;
    if (!f) throw Error(fmt::format("write failed for {}", path.string()));
}

// Bars above or below zero, one per year.
std::string bar_plot(const std::string& title, const std::string& unit, const std::vector<int>& years,
                     const std::vector<std::optional<double>>& values) {
    std::ostringstream out;
    svg_open(out, title);
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& v : values) {
        if (v) {
            lo = std::min(lo, *v);
            hi = std::max(hi, *v);
        }
    }
    const Axis y{lo, hi, kHeight - kMargin, kMargin};
    const double zero = y.map(0.0);
    const std::size_t n = years.size();
    const double slot = n > 0 ? (kWidth - 2 * kMargin) / static_cast<double>(n) : 0.0;
    fmt::print(out, "<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"black\"/>\n",
               kMargin, zero, kWidth - kMargin, zero);
    fmt::print(out, "<text x=\"12\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" "
                    "transform=\"rotate(-90 12 {})\" text-anchor=\"middle\">{}</text>\n",
               kHeight / 2, kHeight / 2, escape(unit));
    fmt::print(out, "<text x=\"{}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\" "
                    "text-anchor=\"end\">{:.6g}</text>\n",
               kMargin - 4, y.map(hi) + 4, hi);
    fmt::print(out, "<text x=\"{}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\" "
                    "text-anchor=\"end\">{:.6g}</text>\n",
               kMargin - 4, y.map(lo) + 4, lo);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = kMargin + slot * static_cast<double>(i);
        if (!values[i]) {
            fmt::print(out, "<!-- year={} value=undefined -->\n", years[i]);
            continue;
        }
        const double v = *values[i];
        const double top = std::min(zero, y.map(v));
        const double h = std::abs(y.map(v) - zero);
        fmt::print(out, "<!-- year={} value={} -->\n", years[i], v);
        fmt::print(out,
                   "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                   x + 0.1 * slot, top, 0.8 * slot, h, v >= 0.0 ? kGreen : kBrown);
    }
    if (n > 0) {
        for (std::size_t i : {std::size_t{0}, n - 1}) {
            fmt::print(out, "<text x=\"{:.2f}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" "
                            "text-anchor=\"middle\">{}</text>\n",
                       kMargin + slot * (static_cast<double>(i) + 0.5), kHeight - kMargin + 16,
                       years[i]);
        }
    }
    out << "</svg>\n";
    return out.str();
}

std::string scatter_plot(const ScatterTable& t) {
    std::ostringstream out;
    svg_open(out, "Predicted vs actual (kt)");
    if (t.line) {
        const auto [lo, hi] = *t.line;
        const Axis x{lo, hi, kMargin, kWidth - kMargin};
        const Axis y{lo, hi, kHeight - kMargin, kMargin};
        fmt::print(out, "<!-- identity line {} {} -->\n", lo, hi);
        fmt::print(out,
                   "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"grey\" "
                   "stroke-dasharray=\"4 3\"/>\n",
                   x.map(lo), y.map(lo), x.map(hi), y.map(hi));
        for (const auto& [a, p] : t.points) {
            fmt::print(out, "<!-- actual={} predicted={} -->\n", a, p);
            fmt::print(out, "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\" fill=\"{}\"/>\n", x.map(a),
                       y.map(p), a - p >= 0.0 ? kGreen : kBrown);
        }
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace

std::vector<std::filesystem::path> emit_plots(const std::vector<CountrySeries>& series,
                                              const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(fmt::format("cannot create {}: {}", out_dir.string(), ec.message()));

    std::vector<std::filesystem::path> written;
    std::vector<double> all_actual;
    std::vector<double> all_pred;
    for (const auto& s : series) {
        const auto stem = file_stem(s.country);
        std::vector<std::optional<double>> diff(s.difference.begin(), s.difference.end());
        auto path = out_dir / (stem + "_diff.svg");
        write_file(path, bar_plot(s.country + ": actual - predicted", "kt", s.years, diff));
        written.push_back(path);
        path = out_dir / (stem + "_pct.svg");
        write_file(path, bar_plot(s.country + ": difference relative to actual", "%", s.years,
                                  s.pct_difference));
        written.push_back(path);
        all_actual.insert(all_actual.end(), s.actual.begin(), s.actual.end());
        all_pred.insert(all_pred.end(), s.predicted.begin(), s.predicted.end());
    }
    const auto path = out_dir / "scatter.svg";
    write_file(path, scatter_plot(scatter_data(all_actual, all_pred)));
    written.push_back(path);
    return written;
}

namespace {

// Stationary AR(1) with unit marginal variance.
class Ar1 {
public:
    Ar1(double rho, std::mt19937_64& rng, std::normal_distribution<double>& z)
        : rho_(rho), sd_(std::sqrt(1.0 - rho * rho)), value_(z(rng)) {}
    double next(std::mt19937_64& rng, std::normal_distribution<double>& z) {
        const double out = value_;
        value_ = rho_ * value_ + sd_ * z(rng);
        return out;
    }

private:
    double rho_;
    double sd_;
    double value_;
};

// Typical magnitude of each feature in its own unit.
constexpr std::array<double, data::kFeatureCount> kFeatureScale{
    1e5, 1e11, 1e7, 5e6, 5e4, 1e5, 1e10, 2e10, 1e7, 1e4};
constexpr double kTargetScale = 5e4;
constexpr double kOffset = 6.0;

}  // namespace

data::PanelDataset generate_synthetic(const SyntheticSpec& spec) {
    const std::size_t p = data::kFeatureCount;
    if (spec.coefficients.size() != p) {
        throw ConfigError(fmt::format("synthetic generator needs {} coefficients, got {}", p,
                                      spec.coefficients.size()));
    }
    for (double c : spec.coefficients) {
        if (!std::isfinite(c)) throw ConfigError("synthetic coefficients must be finite");
    }
    if (!(spec.noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
    if (spec.last_year < spec.first_year) throw ConfigError("empty synthetic year range");
    for (std::size_t j : spec.unit_root_features) {
        if (j >= p) throw ConfigError(fmt::format("unit-root feature {} out of range", j));
    }

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> z(0.0, 1.0);
    data::PanelSchema schema;
    schema.first_year = spec.first_year;
    schema.last_year = spec.last_year;

    std::vector<data::Observation> rows;
    for (std::size_t c = 0; c < spec.n_countries; ++c) {
        const std::string name = fmt::format("country_{:02}", c + 1);
        const double size = z(rng);
        Ar1 cycle(spec.cycle_rho, rng, z);
        std::vector<Ar1> own;
        std::vector<double> walk(p, 0.0);
        for (std::size_t j = 0; j < p; ++j) own.emplace_back(spec.own_rho, rng, z);
        for (int year = spec.first_year; year <= spec.last_year; ++year) {
            const double common = cycle.next(rng, z);
            std::vector<double> latent(p);
            for (std::size_t j = 0; j < p; ++j) {
                double idio = own[j].next(rng, z);
                if (spec.unit_root_features.contains(j)) {
                    idio = walk[j];
                    walk[j] += z(rng);
                }
                latent[j] = spec.size_loading * size + spec.common_loading * common +
                            spec.own_loading * idio;
            }
            double y = spec.quadratic * latent[0] * latent[0];
            for (std::size_t j = 0; j < p; ++j) y += spec.coefficients[j] * latent[j];
            y += spec.noise_std * z(rng);

            data::Observation obs;
            obs.country = name;
            obs.year = year;
            for (std::size_t j = 0; j < p; ++j) {
                obs.features.push_back(kFeatureScale[j] * (kOffset + latent[j]));
            }
            obs.target = kTargetScale * (kOffset + y);
            rows.push_back(std::move(obs));
        }
    }
    return {schema, std::move(rows)};
}

}  // namespace co2::reporting
