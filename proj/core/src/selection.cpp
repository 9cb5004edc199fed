#include "co2/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "co2/error.hpp"
#include "co2/pca.hpp"

namespace co2::selection {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> p, const char* what) {
    if (a.size() != p.size()) {
        throw DimensionError(
            fmt::format("{}: {} actual values but {} predictions", what, a.size(), p.size()));
    }
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Runs fn(0..count-1) on up to `threads` workers. Each slot is written by
// exactly one task, so the caller's reduction does not depend on scheduling.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
}

bool same_effective_config(const svr::SvrConfig& a, const svr::SvrConfig& b) {
    if (a.c != b.c || a.epsilon != b.epsilon || a.tolerance != b.tolerance ||
        a.max_passes != b.max_passes || a.kernel.kind != b.kernel.kind) {
        return false;
    }
    switch (a.kernel.kind) {
        case svr::KernelKind::Linear:
            return true;
        case svr::KernelKind::Polynomial:
            return a.kernel.degree == b.kernel.degree && a.kernel.gamma_mode == b.kernel.gamma_mode;
        case svr::KernelKind::Rbf:
            return a.kernel.gamma_mode == b.kernel.gamma_mode;
    }
    return false;
}

std::string gamma_field(const svr::KernelConfig& k) {
    if (k.gamma_mode == svr::GammaMode::Fixed) return fmt::format("{}", k.gamma_value);
    return std::string(svr::to_string(k.gamma_mode));
}

std::string degree_field(const svr::KernelConfig& k) {
    return k.kind == svr::KernelKind::Polynomial ? fmt::format("{}", k.degree) : std::string("");
}

}  // namespace

double r_squared(std::span<const double> actual, std::span<const double> predicted) {
    check_lengths(actual, predicted, "r_squared");
    if (actual.size() < 2) {
        throw LengthError("r_squared needs at least 2 values");
    }
    const double mean =
        std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(actual.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
        ss_tot += (actual[i] - mean) * (actual[i] - mean);
    }
    if (!(ss_tot > 0.0)) {
        throw DegenerateError("r_squared is undefined for a constant actual vector");
    }
    return 1.0 - ss_res / ss_tot;
}

double mse(std::span<const double> actual, std::span<const double> predicted) {
    check_lengths(actual, predicted, "mse");
    if (actual.empty()) {
        throw LengthError("mse needs at least 1 value");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        s += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    }
    return s / static_cast<double>(actual.size());
}

std::vector<Fold> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) {
        throw ConfigError(fmt::format("k-fold needs k >= 2, got {}", k));
    }
    if (n < k) {
        throw LengthError(fmt::format("k-fold with k = {} needs at least {} rows, got {}", k, k, n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Fold> folds(k);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = n / k + (f < n % k ? 1 : 0);
        folds[f].test.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                             order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    for (auto& fold : folds) {
        std::vector<char> in_test(n, 0);
        for (std::size_t i : fold.test) in_test[i] = 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_test[i]) fold.train.push_back(i);
        }
    }
    return folds;
}

std::vector<svr::SvrConfig> expand_grid(const Grid& grid) {
    if (grid.kernels.empty() || grid.c_values.empty() || grid.gamma_modes.empty() ||
        grid.degrees.empty()) {
        throw ConfigError("every grid axis needs at least one value");
    }
    std::vector<svr::SvrConfig> out;
    for (auto kind : grid.kernels) {
        for (double c : grid.c_values) {
            for (auto gamma : grid.gamma_modes) {
                const bool poly = kind == svr::KernelKind::Polynomial;
                const std::vector<int> degrees = poly ? grid.degrees : std::vector<int>{3};
                for (int d : degrees) {
                    svr::SvrConfig cfg;
                    cfg.c = c;
                    cfg.epsilon = grid.epsilon;
                    cfg.tolerance = grid.tolerance;
                    cfg.max_passes = grid.max_passes;
                    cfg.kernel.kind = kind;
                    cfg.kernel.gamma_mode = gamma;
                    cfg.kernel.degree = d;
                    out.push_back(cfg);
                }
            }
        }
    }
    return out;
}

std::size_t grid_fit_cap(const Grid& grid, std::size_t n_train) {
    return grid.max_passes > 0 ? grid.max_passes : 50 * n_train;
}

const CandidateResult& CvReport::best_candidate() const {
    if (!best) {
        throw DegenerateError("every grid candidate failed");
    }
    return candidates.at(*best);
}

FoldScaler fit_fold_scaler(const linalg::Matrix& x, std::span<const double> y,
                           std::span<const std::size_t> rows) {
    if (rows.size() < 2) {
        throw LengthError(fmt::format("fold training set has {} rows; need at least 2", rows.size()));
    }
    const auto sub = x.select_rows(rows);
    const auto moments = linalg::column_moments(sub);
    for (std::size_t j = 0; j < sub.cols(); ++j) {
        if (!(moments.stds[j] > 0.0)) {
            throw DegenerateError(fmt::format("feature column {} is constant on a training fold", j));
        }
    }
    FoldScaler s{moments.means, moments.stds, 0.0, 1.0};
    double m = 0.0;
    for (std::size_t r : rows) m += y[r];
    m /= static_cast<double>(rows.size());
    double v = 0.0;
    for (std::size_t r : rows) v += (y[r] - m) * (y[r] - m);
    v /= static_cast<double>(rows.size() - 1);
    if (!(v > 0.0)) {
        throw DegenerateError("target is constant on a training fold");
    }
    s.y_mean = m;
    s.y_std = std::sqrt(v);
    return s;
}

linalg::Matrix scale_rows(const FoldScaler& s, const linalg::Matrix& x,
                          std::span<const std::size_t> rows) {
    linalg::Matrix out(rows.size(), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = x.row(rows[r]);
        for (std::size_t c = 0; c < x.cols(); ++c) {
            out(r, c) = (src[c] - s.means[c]) / s.stds[c];
        }
    }
    return out;
}

FoldOutcome evaluate_svr_fold(const linalg::Matrix& x, std::span<const double> y,
                              const Fold& fold, const svr::SvrConfig& cfg) {
    const auto scaler = fit_fold_scaler(x, y, fold.train);
    const auto xtr = scale_rows(scaler, x, fold.train);
    const auto xte = scale_rows(scaler, x, fold.test);
    std::vector<double> ytr;
    ytr.reserve(fold.train.size());
    for (std::size_t r : fold.train) ytr.push_back((y[r] - scaler.y_mean) / scaler.y_std);

    const auto model = svr::fit(xtr, ytr, cfg);
    auto pred = svr::predict(model, xte);
    for (double& p : pred) p = p * scaler.y_std + scaler.y_mean;
    std::vector<double> actual;
    actual.reserve(fold.test.size());
    for (std::size_t r : fold.test) actual.push_back(y[r]);

    return {r_squared(actual, pred), mse(actual, pred), model.diagnostics.converged};
}

CvReport grid_search_svr(const linalg::Matrix& x, std::span<const double> y, const Grid& grid,
                         std::size_t k, std::uint64_t seed) {
    if (y.size() != x.rows()) {
        throw DimensionError(fmt::format("grid search: {} rows but {} targets", x.rows(), y.size()));
    }
    const auto configs = expand_grid(grid);
    const auto folds = kfold_indices(x.rows(), k, seed);

    CvReport report;
    report.n_folds = k;
    report.candidates.resize(configs.size());

    // Linear candidates that differ only in gamma share their evaluation.
    std::vector<std::size_t> canonical(configs.size());
    std::vector<std::size_t> unique;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        canonical[c] = c;
        for (std::size_t u : unique) {
            if (same_effective_config(configs[c], configs[u])) {
                canonical[c] = u;
                break;
            }
        }
        if (canonical[c] == c) unique.push_back(c);
    }

    struct Slot {
        FoldOutcome outcome;
        std::string error;
    };
    std::vector<Slot> slots(unique.size() * k);
    parallel_for(slots.size(), grid.threads, [&](std::size_t task) {
        const std::size_t u = task / k;
        const std::size_t f = task % k;
        auto cfg = configs[unique[u]];
        cfg.max_passes = grid_fit_cap(grid, folds[f].train.size());
        try {
            slots[task].outcome = evaluate_svr_fold(x, y, folds[f], cfg);
        } catch (const std::exception& e) {
            slots[task].error = fmt::format("fold {}: {}", f + 1, e.what());
        }
    });

    std::vector<CandidateResult> unique_results(unique.size());
    for (std::size_t u = 0; u < unique.size(); ++u) {
        auto& res = unique_results[u];
        for (std::size_t f = 0; f < k; ++f) {
            const auto& slot = slots[u * k + f];
            if (!slot.error.empty()) {
                if (!res.failed) {
                    res.failed = true;
                    res.reason = slot.error;
                }
                continue;
            }
            res.scores.fold_r2.push_back(slot.outcome.r2);
            res.scores.fold_mse.push_back(slot.outcome.mse);
            res.converged = res.converged && slot.outcome.converged;
        }
        if (!res.failed) {
            res.scores.mean_r2 = mean_of(res.scores.fold_r2);
            res.scores.mean_mse = mean_of(res.scores.fold_mse);
        }
    }

    for (std::size_t c = 0; c < configs.size(); ++c) {
        const auto pos = std::find(unique.begin(), unique.end(), canonical[c]) - unique.begin();
        report.candidates[c] = unique_results[static_cast<std::size_t>(pos)];
        report.candidates[c].config = configs[c];
    }

    for (std::size_t c = 0; c < report.candidates.size(); ++c) {
        const auto& cand = report.candidates[c];
        if (cand.failed) continue;
        if (!report.best) {
            report.best = c;
            continue;
        }
        const auto& cur = report.candidates[*report.best].scores;
        if (cand.scores.mean_r2 > cur.mean_r2 ||
            (cand.scores.mean_r2 == cur.mean_r2 && cand.scores.mean_mse < cur.mean_mse)) {
            report.best = c;
        }
    }
    return report;
}

CvScores cross_validate_pcr(const linalg::Matrix& x, std::span<const double> y,
                            std::size_t k_components, std::size_t n_folds, std::uint64_t seed) {
    if (y.size() != x.rows()) {
        throw DimensionError(fmt::format("PCR CV: {} rows but {} targets", x.rows(), y.size()));
    }
    const auto folds = kfold_indices(x.rows(), n_folds, seed);
    CvScores scores;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto& fold = folds[f];
        // intercept plus k components must leave at least one residual degree of freedom
        if (fold.train.size() < k_components + 2) {
            throw LengthError(fmt::format("fold {} has {} training rows, too few for k = {}", f + 1,
                                          fold.train.size(), k_components));
        }
        const auto scaler = fit_fold_scaler(x, y, fold.train);
        const auto xtr = scale_rows(scaler, x, fold.train);
        const auto xte = scale_rows(scaler, x, fold.test);
        std::vector<double> ytr;
        for (std::size_t r : fold.train) ytr.push_back(y[r]);
        const auto model = pca::fit_pcr(xtr, ytr, k_components);
        const auto pred = pca::predict_pcr(model, xte);
        std::vector<double> actual;
        for (std::size_t r : fold.test) actual.push_back(y[r]);

        scores.fold_mse.push_back(mse(actual, pred));
        if (actual.size() >= 2) {
            scores.fold_r2.push_back(r_squared(actual, pred));
        } else {
            // single-row folds (leave-one-out) have no R²
            scores.fold_r2.push_back(std::nan(""));
        }
    }
    scores.mean_r2 = mean_of(scores.fold_r2);
    scores.mean_mse = mean_of(scores.fold_mse);
    return scores;
}

void write_cv_table(const CvReport& report, std::ostream& out) {
    fmt::print(out, "kernel,c,gamma,degree,fold,r2,mse\n");
    const auto row = [&](const CandidateResult& cand, const std::string& fold, double r2,
                         double m) {
        const auto& k = cand.config.kernel;
        fmt::print(out, "{},{},{},{},{},{},{}\n", svr::to_string(k.kind), cand.config.c,
                   gamma_field(k), degree_field(k), fold, r2, m);
    };
    for (const auto& cand : report.candidates) {
        if (cand.failed) {
            const auto& k = cand.config.kernel;
            fmt::print(out, "{},{},{},{},failed,,\n", svr::to_string(k.kind), cand.config.c,
                       gamma_field(k), degree_field(k));
            continue;
        }
        for (std::size_t f = 0; f < cand.scores.fold_r2.size(); ++f) {
            row(cand, fmt::format("{}", f + 1), cand.scores.fold_r2[f], cand.scores.fold_mse[f]);
        }
        row(cand, "mean", cand.scores.mean_r2, cand.scores.mean_mse);
    }
    if (report.best) {
        const auto& b = report.candidates[*report.best];
        row(b, "best", b.scores.mean_r2, b.scores.mean_mse);
    }
}

void write_pcr_cv_table(const CvScores& scores, std::size_t k_components, std::ostream& out) {
    fmt::print(out, "k,fold,r2,mse\n");
    for (std::size_t f = 0; f < scores.fold_r2.size(); ++f) {
        fmt::print(out, "{},{},{},{}\n", k_components, f + 1, scores.fold_r2[f], scores.fold_mse[f]);
    }
    fmt::print(out, "{},mean,{},{}\n", k_components, scores.mean_r2, scores.mean_mse);
}

void write_best_config(const CandidateResult& best, std::ostream& out) {
    const auto& cfg = best.config;
    fmt::print(out, "[svr]\n");
    fmt::print(out, "kernel = {}\n", svr::to_string(cfg.kernel.kind));
    fmt::print(out, "c = {}\n", cfg.c);
    fmt::print(out, "gamma = {}\n", gamma_field(cfg.kernel));
    if (cfg.kernel.kind == svr::KernelKind::Polynomial) {
        fmt::print(out, "degree = {}\n", cfg.kernel.degree);
    }
    fmt::print(out, "epsilon = {}\n", cfg.epsilon);
    fmt::print(out, "tolerance = {}\n", cfg.tolerance);
    if (cfg.max_passes > 0) {
        fmt::print(out, "max_passes = {}\n", cfg.max_passes);
    }
}

}  // namespace co2::selection
