#include "co2/pca.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "co2/error.hpp"

namespace co2::pca {

PcaBasis fit_pca(const linalg::Matrix& x) {
    if (x.rows() < 2) {
        throw LengthError(fmt::format("PCA needs at least 2 rows, got {}", x.rows()));
    }
    const auto moments = linalg::column_moments(x);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        if (!(moments.stds[j] > 0.0)) {
            throw DegenerateError(fmt::format("PCA input column {} is constant", j));
        }
    }
    const auto centered = linalg::center(x, moments.means);
    const auto eig = linalg::eigh(linalg::covariance(centered));

    PcaBasis basis;
    basis.loadings = eig.eigenvectors;
    basis.eigenvalues = eig.eigenvalues;
    basis.column_means = moments.means;
    const double total = std::accumulate(eig.eigenvalues.begin(), eig.eigenvalues.end(), 0.0);
    basis.explained_variance_ratios.resize(eig.eigenvalues.size());
    for (std::size_t i = 0; i < eig.eigenvalues.size(); ++i) {
        basis.explained_variance_ratios[i] = eig.eigenvalues[i] / total;
    }
    return basis;
}

linalg::Matrix project(const PcaBasis& basis, const linalg::Matrix& x, std::size_t k) {
    if (x.cols() != basis.column_means.size()) {
        throw DimensionError(fmt::format("PCA basis has {} features, input has {}",
                                         basis.column_means.size(), x.cols()));
    }
    if (k == 0 || k > basis.n_components_total()) {
        throw ConfigError(fmt::format("k = {} outside 1..{}", k, basis.n_components_total()));
    }
    return linalg::multiply(linalg::center(x, basis.column_means), basis.loadings.left_columns(k));
}

std::size_t select_k(const PcaBasis& basis, double target_evr) {
    if (!(target_evr > 0.0 && target_evr <= 1.0)) {
        throw ConfigError(fmt::format("target EVR must lie in (0, 1], got {}", target_evr));
    }
    double cumulative = 0.0;
    const std::size_t total = basis.n_components_total();
    for (std::size_t k = 0; k < total; ++k) {
        cumulative += basis.explained_variance_ratios[k];
        // rounding in the running sum must not push k past the last component
        if (cumulative >= target_evr - 1e-12) {
            return k + 1;
        }
    }
    return total;
}

PcrModel fit_pcr(const linalg::Matrix& x, std::span<const double> y, std::size_t k) {
    if (y.size() != x.rows()) {
        throw DimensionError(fmt::format("PCR: {} rows but {} targets", x.rows(), y.size()));
    }
    PcrModel model;
    model.basis = fit_pca(x);
    model.k = k;
    const auto z = project(model.basis, x, k);

    linalg::Matrix design(z.rows(), k + 1);
    for (std::size_t r = 0; r < z.rows(); ++r) {
        design(r, 0) = 1.0;
        for (std::size_t c = 0; c < k; ++c) {
            design(r, c + 1) = z(r, c);
        }
    }
    const auto fit = linalg::lstsq(design, y);
    model.intercept = fit.coefficients[0];
    model.coefficients.assign(fit.coefficients.begin() + 1, fit.coefficients.end());
    return model;
}

std::vector<double> predict_pcr(const PcrModel& model, const linalg::Matrix& x) {
    const auto z = project(model.basis, x, model.k);
    std::vector<double> out(z.rows());
    for (std::size_t r = 0; r < z.rows(); ++r) {
        out[r] = model.intercept + linalg::dot(z.row(r), model.coefficients);
    }
    return out;
}

std::vector<double> feature_coefficients(const PcrModel& model) {
    return linalg::multiply(model.basis.loadings.left_columns(model.k), model.coefficients);
}

void write_loadings(const PcaBasis& basis, std::size_t k, std::span<const std::string> feature_names,
                    std::ostream& out) {
    const std::size_t p = basis.column_means.size();
    if (feature_names.size() != p) {
        throw DimensionError(fmt::format("{} feature names for {} features", feature_names.size(), p));
    }
    if (k == 0 || k > p) {
        throw ConfigError(fmt::format("k = {} outside 1..{}", k, p));
    }
    fmt::print(out, "feature");
    for (std::size_t c = 0; c < k; ++c) fmt::print(out, ",PC{}", c + 1);
    out << '\n';
    for (std::size_t r = 0; r < p; ++r) {
        fmt::print(out, "\"{}\"", feature_names[r]);
        for (std::size_t c = 0; c < k; ++c) fmt::print(out, ",{}", basis.loadings(r, c));
        out << '\n';
    }
}

void write_evr(const PcaBasis& basis, std::ostream& out) {
    const std::size_t p = basis.n_components_total();
    for (std::size_t c = 0; c < p; ++c) fmt::print(out, c == 0 ? "PC{}" : ",PC{}", c + 1);
    out << '\n';
    for (std::size_t c = 0; c < p; ++c) {
        fmt::print(out, c == 0 ? "{}" : ",{}", basis.explained_variance_ratios[c]);
    }
    out << '\n';
}

void save_pcr(const PcrModel& model, std::ostream& out) {
    const std::size_t p = model.basis.column_means.size();
    fmt::print(out, "co2-pcr-model 1\n");
    fmt::print(out, "n_features {}\nk {}\nintercept {}\n", p, model.k, model.intercept);
    fmt::print(out, "coefficients");
    for (double v : model.coefficients) fmt::print(out, " {}", v);
    fmt::print(out, "\nmeans");
    for (double v : model.basis.column_means) fmt::print(out, " {}", v);
    fmt::print(out, "\neigenvalues");
    for (double v : model.basis.eigenvalues) fmt::print(out, " {}", v);
    fmt::print(out, "\nloadings\n");
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < p; ++c) {
            fmt::print(out, c == 0 ? "{}" : " {}", model.basis.loadings(r, c));
        }
        out << '\n';
    }
}

namespace {

void expect(std::istream& in, const std::string& key) {
    std::string word;
    if (!(in >> word) || word != key) {
        throw ParseError(fmt::format("PCR model: expected '{}'", key));
    }
}

std::vector<double> read_values(std::istream& in, std::size_t n, const std::string& what) {
    std::vector<double> v(n);
    for (auto& e : v) {
        if (!(in >> e)) throw ParseError(fmt::format("PCR model: truncated {}", what));
    }
    return v;
}

}  // namespace

PcrModel load_pcr(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "co2-pcr-model" || version != 1) {
        throw ParseError("PCR model: bad header");
    }
    PcrModel m;
    std::size_t p = 0;
    expect(in, "n_features");
    in >> p;
    expect(in, "k");
    in >> m.k;
    expect(in, "intercept");
    in >> m.intercept;
    expect(in, "coefficients");
    m.coefficients = read_values(in, m.k, "coefficients");
    expect(in, "means");
    m.basis.column_means = read_values(in, p, "means");
    expect(in, "eigenvalues");
    m.basis.eigenvalues = read_values(in, p, "eigenvalues");
    expect(in, "loadings");
    m.basis.loadings = linalg::Matrix(p, p, read_values(in, p * p, "loadings"));
    const double total =
        std::accumulate(m.basis.eigenvalues.begin(), m.basis.eigenvalues.end(), 0.0);
    for (double l : m.basis.eigenvalues) {
        m.basis.explained_variance_ratios.push_back(l / total);
    }
    if (!in) throw ParseError("PCR model: malformed file");
    return m;
}

}  // namespace co2::pca
