#include "co2/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "co2/error.hpp"

namespace co2::data {

const std::vector<FeatureId>& default_features() {
    static const std::vector<FeatureId> features = {
        {0, "total_fossil_fuel_consumption_gwh", "Total Fossil Fuel Consumption (GWh)", "GWh"},
        {1, "gdp_usd", "GDP (US $)", "USD"},
        {2, "population", "Population", "individuals"},
        {3, "urban_population", "Urban Population", "individuals"},
        {4, "electricity_production_gwh", "Electricity Production (GWh)", "GWh"},
        {5, "surface_area_km2", "Surface Area (Square KM)", "km2"},
        {6, "construction_value_usd", "Construction Value (US $)", "USD"},
        {7, "manufacturing_usd", "Manufacturing (US $)", "USD"},
        {8, "livestock_heads", "Number of Livestock (Heads)", "heads"},
        {9, "agriculture_gross_production_musd", "Agriculture Gross Production (million US $)",
         "million USD"},
    };
    return features;
}

PanelDataset::PanelDataset(PanelSchema schema, std::vector<Observation> rows)
    : schema_(std::move(schema)), rows_(std::move(rows)) {
    std::set<std::pair<std::string, int>> seen;
    const std::size_t width = schema_.features.size();
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto& obs = rows_[i];
        if (obs.features.size() != width) {
            throw SchemaError(fmt::format("row {} has {} feature values, expected {}", i,
                                          obs.features.size(), width));
        }
        if (obs.year < schema_.first_year || obs.year > schema_.last_year) {
            throw IntegrityError(fmt::format("row {} ({}): year {} outside {}-{}", i, obs.country,
                                             obs.year, schema_.first_year, schema_.last_year));
        }
        for (std::size_t j = 0; j < width; ++j) {
            if (!std::isfinite(obs.features[j])) {
                throw IntegrityError(fmt::format("row {} ({}, {}): non-finite value in {}", i,
                                                 obs.country, obs.year,
                                                 schema_.features[j].name));
            }
        }
        if (!std::isfinite(obs.target)) {
            throw IntegrityError(
                fmt::format("row {} ({}, {}): non-finite target", i, obs.country, obs.year));
        }
        if (!seen.emplace(obs.country, obs.year).second) {
            throw IntegrityError(
                fmt::format("duplicate observation for ({}, {})", obs.country, obs.year));
        }
    }
}

std::set<std::string> PanelDataset::countries() const {
    std::set<std::string> out;
    for (const auto& r : rows_) {
        out.insert(r.country);
    }
    return out;
}

linalg::Matrix PanelDataset::feature_matrix() const {
    linalg::Matrix x(rows_.size(), schema_.features.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        std::copy(rows_[i].features.begin(), rows_[i].features.end(), x.row(i).begin());
    }
    return x;
}

std::vector<double> PanelDataset::targets() const {
    std::vector<double> y(rows_.size());
    std::transform(rows_.begin(), rows_.end(), y.begin(),
                   [](const Observation& o) { return o.target; });
    return y;
}

PanelDataset PanelDataset::subset(std::span<const std::size_t> indices) const {
    std::vector<Observation> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) {
        out.push_back(rows_.at(i));
    }
    return PanelDataset(schema_, std::move(out));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

template <typename T>
T parse_number(const std::string& cell, std::size_t line, const std::string& column,
               const std::string& source) {
    T value{};
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || cell.empty()) {
        throw ParseError(fmt::format("{}:{}: column '{}': cannot parse '{}' as a number", source,
                                     line, column, cell));
    }
    return value;
}

}  // namespace

PanelDataset parse_panel(std::istream& in, const PanelSchema& schema, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaError(fmt::format("{}: missing header row", source));
    }
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
        line.erase(0, 3);  // UTF-8 BOM
    }
    std::vector<std::string> header;
    for (auto& h : split_csv_line(line)) {
        header.push_back(trim(h));
    }

    std::vector<std::string> expected = {"country", "year"};
    for (const auto& f : schema.features) {
        expected.push_back(f.name);
    }
    expected.emplace_back(kTargetColumn);

    for (const auto& name : expected) {
        if (std::find(header.begin(), header.end(), name) == header.end()) {
            throw SchemaError(fmt::format("{}: missing column '{}'", source, name));
        }
    }
    for (const auto& name : header) {
        if (std::find(expected.begin(), expected.end(), name) == expected.end()) {
            throw SchemaError(fmt::format("{}: unexpected column '{}'", source, name));
        }
    }
    if (header.size() != expected.size()) {
        throw SchemaError(fmt::format("{}: duplicated column in header", source));
    }

    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) {
        position[header[i]] = i;
    }

    std::vector<Observation> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError(fmt::format("{}:{}: expected {} cells, found {}", source, line_no,
                                         header.size(), cells.size()));
        }
        for (auto& c : cells) {
            c = trim(c);
        }
        Observation obs;
        obs.country = cells[position["country"]];
        if (obs.country.empty()) {
            throw ParseError(fmt::format("{}:{}: empty country code", source, line_no));
        }
        obs.year = parse_number<int>(cells[position["year"]], line_no, "year", source);
        obs.features.resize(schema.features.size());
        for (std::size_t j = 0; j < schema.features.size(); ++j) {
            const auto& name = schema.features[j].name;
            obs.features[j] = parse_number<double>(cells[position[name]], line_no, name, source);
        }
        obs.target =
            parse_number<double>(cells[position[kTargetColumn]], line_no, kTargetColumn, source);
        rows.push_back(std::move(obs));
    }
    return PanelDataset(schema, std::move(rows));
}

PanelDataset load_panel(const std::filesystem::path& path, const PanelSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw Error(fmt::format("cannot open input file '{}'", path.string()));
    }
    return parse_panel(in, schema, path.string());
}

void write_panel(const PanelDataset& data, std::ostream& out) {
    out << "country,year";
    for (const auto& f : data.schema().features) {
        out << ',' << f.name;
    }
    out << ',' << kTargetColumn << '\n';
    for (const auto& r : data.rows()) {
        out << r.country << ',' << r.year;
        for (double v : r.features) {
            fmt::print(out, ",{}", v);
        }
        fmt::print(out, ",{}\n", r.target);
    }
}

void write_panel(const PanelDataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(fmt::format("cannot write '{}'", path.string()));
    }
    write_panel(data, out);
}

StandardizationParams fit_standardizer(const PanelDataset& data) {
    if (data.size() < 2) {
        throw LengthError(
            fmt::format("standardization needs at least 2 rows, got {}", data.size()));
    }
    const auto moments = linalg::column_moments(data.feature_matrix());
    for (std::size_t j = 0; j < moments.stds.size(); ++j) {
        if (!(moments.stds[j] > 0.0)) {
            throw DegenerateError(fmt::format("feature '{}' is constant",
                                              data.schema().features[j].name));
        }
    }
    linalg::Matrix y(data.size(), 1, data.targets());
    const auto target = linalg::column_moments(y);
    if (!(target.stds[0] > 0.0)) {
        throw DegenerateError(fmt::format("target '{}' is constant", kTargetColumn));
    }
    return {moments.means, moments.stds, target.means[0], target.stds[0]};
}

namespace {

void check_compatible(const StandardizationParams& params, const PanelDataset& data) {
    const std::size_t width = data.schema().features.size();
    if (params.means.size() != width || params.stds.size() != width) {
        throw SchemaError(fmt::format("standardization params cover {} features, dataset has {}",
                                      params.means.size(), width));
    }
}

}  // namespace

PanelDataset apply_standardizer(const StandardizationParams& params, const PanelDataset& data) {
    check_compatible(params, data);
    std::vector<Observation> rows = data.rows();
    for (auto& r : rows) {
        for (std::size_t j = 0; j < r.features.size(); ++j) {
            r.features[j] = (r.features[j] - params.means[j]) / params.stds[j];
        }
        r.target = params.standardize_target(r.target);
    }
    return PanelDataset(data.schema(), std::move(rows));
}

PanelDataset invert_standardizer(const StandardizationParams& params, const PanelDataset& data) {
    check_compatible(params, data);
    std::vector<Observation> rows = data.rows();
    for (auto& r : rows) {
        for (std::size_t j = 0; j < r.features.size(); ++j) {
            r.features[j] = r.features[j] * params.stds[j] + params.means[j];
        }
        r.target = params.restore_target(r.target);
    }
    return PanelDataset(data.schema(), std::move(rows));
}

void write_standardizer(const StandardizationParams& params, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(fmt::format("cannot write '{}'", path.string()));
    }
    out << "column,mean,std\n";
    for (std::size_t j = 0; j < params.means.size(); ++j) {
        fmt::print(out, "{},{},{}\n", j, params.means[j], params.stds[j]);
    }
    fmt::print(out, "target,{},{}\n", params.target_mean, params.target_std);
}

StandardizationParams read_standardizer(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(fmt::format("cannot open '{}'", path.string()));
    }
    std::string line;
    std::getline(in, line);
    StandardizationParams params;
    std::size_t line_no = 1;
    bool have_target = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != 3) {
            throw ParseError(fmt::format("{}:{}: expected 3 cells", path.string(), line_no));
        }
        const double mean = parse_number<double>(trim(cells[1]), line_no, "mean", path.string());
        const double sd = parse_number<double>(trim(cells[2]), line_no, "std", path.string());
        if (trim(cells[0]) == "target") {
            params.target_mean = mean;
            params.target_std = sd;
            have_target = true;
        } else {
            params.means.push_back(mean);
            params.stds.push_back(sd);
        }
    }
    if (!have_target) {
        throw ParseError(fmt::format("{}: missing target row", path.string()));
    }
    return params;
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
        throw ConfigError(fmt::format("test_fraction must lie in (0, 1), got {}", spec.test_fraction));
    }
    const auto n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * spec.test_fraction));
    if (n_test == 0 || n_test >= n) {
        throw ConfigError(fmt::format(
            "test_fraction {} on {} rows leaves an empty train or test side", spec.test_fraction, n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (spec.shuffle) {
        std::mt19937_64 rng(spec.seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    SplitIndices out;
    out.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_test));
    out.test.assign(order.end() - static_cast<std::ptrdiff_t>(n_test), order.end());
    return out;
}

std::pair<PanelDataset, PanelDataset> split(const PanelDataset& data, const SplitSpec& spec) {
    if (data.empty()) {
        throw LengthError("cannot split an empty dataset");
    }
    const auto idx = split_indices(data.size(), spec);
    return {data.subset(idx.train), data.subset(idx.test)};
}

}  // namespace co2::data
