#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "co2/error.hpp"
#include "co2/selection.hpp"

using namespace co2::selection;
using co2::linalg::Matrix;
using co2::svr::GammaMode;
using co2::svr::KernelKind;

namespace {

struct Data {
    Matrix x;
    std::vector<double> y;
};

Data gaussian(std::size_t n, std::size_t p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> v(n * p);
    for (auto& e : v) e = z(rng);
    return {Matrix(n, p, std::move(v)), std::vector<double>(n)};
}

// y = (w·x)² + small noise
Data quadratic_signal(std::size_t n, std::uint64_t seed) {
    auto d = gaussian(n, 3, seed);
    const std::vector<double> w{0.8, -0.5, 0.3};
    std::mt19937_64 rng(seed + 1);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = co2::linalg::dot(w, d.x.row(i));
        d.y[i] = s * s + noise(rng);
    }
    return d;
}

}  // namespace

TEST(Metrics, RSquaredExamples) {
    const std::vector<double> a{1, 2, 3};
    EXPECT_EQ(r_squared(a, a), 1.0);
    EXPECT_EQ(r_squared(a, std::vector<double>{2, 2, 2}), 0.0);
    EXPECT_EQ(r_squared(a, std::vector<double>{1, 2, 4}), 0.5);
    EXPECT_THROW((void)r_squared(std::vector<double>{4, 4, 4}, a), co2::DegenerateError);
    EXPECT_THROW((void)r_squared(a, std::vector<double>{1, 2}), co2::DimensionError);
}

TEST(Metrics, MseExamples) {
    const std::vector<double> a{1, 2, 3};
    EXPECT_EQ(mse(a, a), 0.0);
    EXPECT_EQ(mse(std::vector<double>{0, 0}, std::vector<double>{1, 1}), 1.0);
    EXPECT_EQ(mse(std::vector<double>{1, 2}, std::vector<double>{2, 4}), 2.5);
}

TEST(Metrics, IdentitiesOnRandomVectors) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = gaussian(5 + seed, 1, seed);
        const auto a = d.x.column(0);
        EXPECT_EQ(r_squared(a, a), 1.0);
        EXPECT_EQ(mse(a, a), 0.0);
    }
}

TEST(Folds, TenByFive) {
    const auto folds = kfold_indices(10, 5, 3);
    ASSERT_EQ(folds.size(), 5u);
    std::set<std::size_t> all;
    for (const auto& f : folds) {
        EXPECT_EQ(f.test.size(), 2u);
        for (auto i : f.test) EXPECT_TRUE(all.insert(i).second);
    }
    EXPECT_EQ(all.size(), 10u);
}

TEST(Folds, ElevenByFiveSizes) {
    const auto folds = kfold_indices(11, 5, 0);
    std::vector<std::size_t> sizes;
    for (const auto& f : folds) sizes.push_back(f.test.size());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 2, 2, 2}));
}

TEST(Folds, Deterministic) {
    const auto a = kfold_indices(37, 4, 99);
    const auto b = kfold_indices(37, 4, 99);
    for (std::size_t f = 0; f < 4; ++f) {
        EXPECT_EQ(a[f].test, b[f].test);
        EXPECT_EQ(a[f].train, b[f].train);
    }
}

TEST(Folds, DisjointCoverProperty) {
    for (std::size_t n = 5; n <= 200; n += 13) {
        for (std::size_t k = 2; k <= std::min<std::size_t>(10, n); ++k) {
            const auto folds = kfold_indices(n, k, n * 31 + k);
            std::vector<int> seen(n, 0);
            for (const auto& f : folds) {
                for (auto i : f.test) ++seen[i];
                EXPECT_EQ(f.train.size() + f.test.size(), n);
                EXPECT_TRUE(std::is_sorted(f.train.begin(), f.train.end()));
                std::set<std::size_t> tr(f.train.begin(), f.train.end());
                for (auto i : f.test) EXPECT_EQ(tr.count(i), 0u);
            }
            EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
        }
    }
}

TEST(Folds, Errors) {
    EXPECT_THROW((void)kfold_indices(10, 1, 0), co2::ConfigError);
    EXPECT_THROW((void)kfold_indices(3, 5, 0), co2::LengthError);
}

TEST(Grid, ExpansionOrderAndDegreeAxis) {
    Grid g;
    EXPECT_EQ(expand_grid(g).size(), 9u * 2 + 9u * 2 * 3 + 9u * 2);
    g.kernels = {KernelKind::Rbf, KernelKind::Polynomial};
    g.c_values = {1};
    g.gamma_modes = {GammaMode::Auto};
    g.degrees = {2, 4};
    const auto c = expand_grid(g);
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c[0].kernel.kind, KernelKind::Rbf);
    EXPECT_EQ(c[1].kernel.degree, 2);
    EXPECT_EQ(c[2].kernel.degree, 4);
    EXPECT_EQ(grid_fit_cap(g, 100), 5000u);
    g.max_passes = 7;
    EXPECT_EQ(grid_fit_cap(g, 100), 7u);
}

TEST(GridSearch, SingleCandidateIsBest) {
    auto d = quadratic_signal(60, 2);
    Grid g;
    g.kernels = {KernelKind::Rbf};
    g.c_values = {10};
    g.gamma_modes = {GammaMode::Scale};
    const auto rep = grid_search_svr(d.x, d.y, g, 5, 1);
    ASSERT_EQ(rep.candidates.size(), 1u);
    ASSERT_TRUE(rep.best.has_value());
    EXPECT_EQ(*rep.best, 0u);
    EXPECT_EQ(rep.best_candidate().config.kernel.kind, KernelKind::Rbf);
    EXPECT_EQ(rep.best_candidate().config.c, 10.0);
}

TEST(GridSearch, QuadraticSignalPrefersDegreeTwo) {
    auto d = quadratic_signal(150, 7);
    Grid g;
    g.kernels = {KernelKind::Linear, KernelKind::Polynomial};
    g.c_values = {1, 10};
    g.gamma_modes = {GammaMode::Auto};
    g.degrees = {2, 3};
    const auto rep = grid_search_svr(d.x, d.y, g, 5, 11);
    const auto& best = rep.best_candidate();
    EXPECT_EQ(best.config.kernel.kind, KernelKind::Polynomial);
    EXPECT_EQ(best.config.kernel.degree, 2);
    double best_linear = -1e300;
    for (const auto& c : rep.candidates)
        if (c.config.kernel.kind == KernelKind::Linear) best_linear = std::max(best_linear, c.scores.mean_r2);
    EXPECT_GT(best.scores.mean_r2 - best_linear, 0.05);

    // dominance and mean consistency
    for (const auto& c : rep.candidates) {
        EXPECT_GE(best.scores.mean_r2, c.scores.mean_r2);
        ASSERT_EQ(c.scores.fold_r2.size(), 5u);
        double s = 0.0;
        double m = 0.0;
        for (std::size_t f = 0; f < 5; ++f) {
            s += c.scores.fold_r2[f];
            m += c.scores.fold_mse[f];
        }
        EXPECT_NEAR(c.scores.mean_r2, s / 5.0, 1e-12);
        EXPECT_NEAR(c.scores.mean_mse, m / 5.0, 1e-12);
    }
}

TEST(GridSearch, ThreadCountDoesNotChangeReport) {
    auto d = quadratic_signal(50, 3);
    Grid g;
    g.kernels = {KernelKind::Linear, KernelKind::Rbf};
    g.c_values = {1, 10};
    const auto one = grid_search_svr(d.x, d.y, g, 3, 5);
    g.threads = 3;
    const auto many = grid_search_svr(d.x, d.y, g, 3, 5);
    std::ostringstream a;
    std::ostringstream b;
    write_cv_table(one, a);
    write_cv_table(many, b);
    EXPECT_EQ(a.str(), b.str());
}

TEST(GridSearch, CvTableLayout) {
    auto d = quadratic_signal(30, 4);
    Grid g;
    g.kernels = {KernelKind::Polynomial};
    g.c_values = {1};
    g.gamma_modes = {GammaMode::Auto};
    g.degrees = {2};
    const auto rep = grid_search_svr(d.x, d.y, g, 3, 5);
    std::ostringstream out;
    write_cv_table(rep, out);
    std::istringstream in(out.str());
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 1u + 3 + 1 + 1);
    EXPECT_EQ(lines[0], "kernel,c,gamma,degree,fold,r2,mse");
    EXPECT_EQ(lines[1].rfind("poly,1,auto,2,1,", 0), 0u);
    EXPECT_EQ(lines[4].rfind("poly,1,auto,2,mean,", 0), 0u);
    EXPECT_EQ(lines[5].rfind("poly,1,auto,2,best,", 0), 0u);

    std::ostringstream cfg;
    write_best_config(rep.best_candidate(), cfg);
    EXPECT_NE(cfg.str().find("[svr]\nkernel = poly\nc = 1\ngamma = auto\ndegree = 2\n"), std::string::npos);
}

TEST(Leakage, TestFoldOutlierLeavesTrainingStatisticsUnchanged) {
    auto d = gaussian(40, 3, 21);
    for (std::size_t i = 0; i < 40; ++i) d.y[i] = d.x(i, 0) + 0.1 * d.x(i, 1);
    const auto folds = kfold_indices(40, 5, 2);
    const auto& fold = folds[1];
    const auto before = fit_fold_scaler(d.x, d.y, fold.train);
    auto x2 = d.x;
    auto y2 = d.y;
    x2(fold.test[0], 0) = 1e6;
    y2[fold.test[0]] = -1e6;
    const auto after = fit_fold_scaler(x2, y2, fold.train);
    EXPECT_EQ(before.means, after.means);
    EXPECT_EQ(before.stds, after.stds);
    EXPECT_EQ(before.y_mean, after.y_mean);
    EXPECT_EQ(before.y_std, after.y_std);
    EXPECT_EQ(scale_rows(before, d.x, fold.train), scale_rows(after, x2, fold.train));

    // the fold model is unaffected: predictions for untouched test rows agree
    co2::svr::SvrConfig cfg;
    cfg.kernel.kind = KernelKind::Linear;
    Fold trimmed = fold;
    trimmed.test.erase(trimmed.test.begin());
    const auto a = evaluate_svr_fold(d.x, d.y, trimmed, cfg);
    const auto b = evaluate_svr_fold(x2, y2, trimmed, cfg);
    EXPECT_EQ(a.r2, b.r2);
    EXPECT_EQ(a.mse, b.mse);
}

TEST(Leakage, FoldScalerUsesTrainingRowsOnly) {
    const Matrix x{{1, 0}, {3, 1}, {100, 50}, {5, 2}};
    const std::vector<double> y{1, 2, 1000, 3};
    const std::vector<std::size_t> rows{0, 1, 3};
    const auto s = fit_fold_scaler(x, y, rows);
    EXPECT_DOUBLE_EQ(s.means[0], 3.0);
    EXPECT_DOUBLE_EQ(s.stds[0], 2.0);
    EXPECT_DOUBLE_EQ(s.y_mean, 2.0);
    EXPECT_DOUBLE_EQ(s.y_std, 1.0);
}

TEST(PcrCv, ExactLinearTargetScoresOne) {
    auto d = gaussian(50, 4, 5);
    for (std::size_t i = 0; i < 50; ++i)
        d.y[i] = 2.0 * d.x(i, 0) - d.x(i, 1) + 0.5 * d.x(i, 3) + 7.0;
    for (std::size_t folds : {2u, 5u, 10u}) {
        const auto s = cross_validate_pcr(d.x, d.y, 4, folds, 3);
        ASSERT_EQ(s.fold_r2.size(), folds);
        for (double r : s.fold_r2) EXPECT_NEAR(r, 1.0, 1e-8);
    }
}

TEST(PcrCv, LeaveOneOut) {
    auto d = gaussian(10, 3, 8);
    for (std::size_t i = 0; i < 10; ++i) d.y[i] = d.x(i, 0) + 0.3 * d.x(i, 2) + 0.01 * d.x(i, 1) * d.x(i, 1);
    const auto s = cross_validate_pcr(d.x, d.y, 2, 10, 1);
    ASSERT_EQ(s.fold_r2.size(), 10u);
    ASSERT_EQ(s.fold_mse.size(), 10u);
    for (double r : s.fold_r2) EXPECT_TRUE(std::isnan(r));
    for (double m : s.fold_mse) EXPECT_TRUE(std::isfinite(m));
}

TEST(PcrCv, FoldTooSmallForComponents) {
    auto d = gaussian(6, 4, 1);
    for (std::size_t i = 0; i < 6; ++i) d.y[i] = d.x(i, 0);
    EXPECT_THROW((void)cross_validate_pcr(d.x, d.y, 4, 3, 0), co2::LengthError);
}
