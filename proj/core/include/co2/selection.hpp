#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "co2/linalg.hpp"
#include "co2/svr.hpp"

namespace co2::selection {

/// 1 − Σ(a − p)² / Σ(a − ā)². Throws DegenerateError on constant actual.
[[nodiscard]] double r_squared(std::span<const double> actual, std::span<const double> predicted);

/// Mean squared difference, always ≥ 0.
[[nodiscard]] double mse(std::span<const double> actual, std::span<const double> predicted);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// k disjoint test folds over a seeded shuffle of 0..n-1. The first n mod k
/// folds hold one extra index. Train indices are sorted ascending.
[[nodiscard]] std::vector<Fold> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed);

struct Grid {
    std::vector<svr::KernelKind> kernels{svr::KernelKind::Linear, svr::KernelKind::Polynomial,
                                         svr::KernelKind::Rbf};
    std::vector<double> c_values{0.1, 1, 10, 100, 1000, 2000, 3000, 4000, 5000};
    std::vector<svr::GammaMode> gamma_modes{svr::GammaMode::Scale, svr::GammaMode::Auto};
    std::vector<int> degrees{2, 3, 4};
    double epsilon = 0.1;
    double tolerance = 1e-3;
    /// Pair-update cap per fold fit; 0 means 50 · (fold training rows).
    std::size_t max_passes = 0;
    std::size_t threads = 1;
};

/// Cartesian product in (kernel, C, gamma, degree) order; the degree axis is
/// expanded for the polynomial kernel only.
[[nodiscard]] std::vector<svr::SvrConfig> expand_grid(const Grid& grid);

/// Per-fold cap applied when Grid::max_passes is 0.
[[nodiscard]] std::size_t grid_fit_cap(const Grid& grid, std::size_t n_train);

struct CvScores {
    std::vector<double> fold_r2;
    std::vector<double> fold_mse;
    double mean_r2 = 0.0;
    double mean_mse = 0.0;
};

struct CandidateResult {
    svr::SvrConfig config;
    CvScores scores;
    bool failed = false;
    std::string reason;
    bool converged = true;  ///< every fold fit converged before its cap
};

struct CvReport {
    std::vector<CandidateResult> candidates;
    std::optional<std::size_t> best;  ///< index into candidates
    std::size_t n_folds = 0;

    [[nodiscard]] const CandidateResult& best_candidate() const;
};

/// Column statistics of the training rows of one fold.
struct FoldScaler {
    std::vector<double> means;
    std::vector<double> stds;
    double y_mean = 0.0;
    double y_std = 1.0;
};

[[nodiscard]] FoldScaler fit_fold_scaler(const linalg::Matrix& x, std::span<const double> y,
                                         std::span<const std::size_t> rows);
[[nodiscard]] linalg::Matrix scale_rows(const FoldScaler& s, const linalg::Matrix& x,
                                        std::span<const std::size_t> rows);

/// Scores one SVR config on one fold. Features and target are standardized
/// with statistics of the fold's training rows only; predictions are mapped
/// back to the scale of y before scoring.
struct FoldOutcome {
    double r2 = 0.0;
    double mse = 0.0;
    bool converged = true;
};
[[nodiscard]] FoldOutcome evaluate_svr_fold(const linalg::Matrix& x, std::span<const double> y,
                                            const Fold& fold, const svr::SvrConfig& cfg);

/// Exhaustive grid search with k-fold CV on folds shared by all candidates.
/// best maximises mean R², ties go to lower mean MSE, then earlier order.
[[nodiscard]] CvReport grid_search_svr(const linalg::Matrix& x, std::span<const double> y,
                                       const Grid& grid, std::size_t k, std::uint64_t seed);

/// PCR fitted inside each training fold (PCA and standardization included).
[[nodiscard]] CvScores cross_validate_pcr(const linalg::Matrix& x, std::span<const double> y,
                                          std::size_t k_components, std::size_t n_folds,
                                          std::uint64_t seed);

/// `kernel,c,gamma,degree,fold,r2,mse`; fold is the 1-based index, `mean`
/// for the candidate summary, and a final `best` row repeats the winner.
void write_cv_table(const CvReport& report, std::ostream& out);
void write_pcr_cv_table(const CvScores& scores, std::size_t k_components, std::ostream& out);

/// The chosen configuration as an `[svr]` section of the config file format.
void write_best_config(const CandidateResult& best, std::ostream& out);

}  // namespace co2::selection
