#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "co2/linalg.hpp"

namespace co2::pca {

struct PcaBasis {
    linalg::Matrix loadings;  ///< p × p, columns are unit eigenvectors
    std::vector<double> eigenvalues;
    std::vector<double> explained_variance_ratios;
    std::vector<double> column_means;

    [[nodiscard]] std::size_t n_components_total() const noexcept { return eigenvalues.size(); }
};

/// Centers the columns, eigendecomposes their covariance and records the
/// loadings with the largest-entry-positive sign convention.
[[nodiscard]] PcaBasis fit_pca(const linalg::Matrix& x);

/// Component scores of the first k components: (x − means) · V_k.
[[nodiscard]] linalg::Matrix project(const PcaBasis& basis, const linalg::Matrix& x,
                                     std::size_t k);

/// Smallest k whose cumulative explained variance reaches target_evr.
[[nodiscard]] std::size_t select_k(const PcaBasis& basis, double target_evr);

struct PcrModel {
    PcaBasis basis;
    std::size_t k = 0;
    std::vector<double> coefficients;  ///< one per retained component
    double intercept = 0.0;
};

/// Regresses y on an intercept plus the first k component scores.
[[nodiscard]] PcrModel fit_pcr(const linalg::Matrix& x, std::span<const double> y, std::size_t k);

[[nodiscard]] std::vector<double> predict_pcr(const PcrModel& model, const linalg::Matrix& x);

/// Feature-space slope of the fitted PCR: V_k · B.
[[nodiscard]] std::vector<double> feature_coefficients(const PcrModel& model);

/// Loadings of the first k components, one row per feature:
/// `feature,PC1,...,PCk`.
void write_loadings(const PcaBasis& basis, std::size_t k, std::span<const std::string> feature_names,
                    std::ostream& out);
/// Explained variance ratios as a header line `PC1,...,PCp` and one value line.
void write_evr(const PcaBasis& basis, std::ostream& out);

void save_pcr(const PcrModel& model, std::ostream& out);
[[nodiscard]] PcrModel load_pcr(std::istream& in);

}  // namespace co2::pca
