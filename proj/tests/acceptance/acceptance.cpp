// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: co2_acceptance <work_dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "co2/cli/config.hpp"
#include "co2/cli/manifest.hpp"
#include "co2/cli/pipeline.hpp"
#include "co2/error.hpp"
#include "co2/importance.hpp"
#include "co2/linalg.hpp"
#include "co2/pca.hpp"
#include "co2/reporting.hpp"
#include "co2/selection.hpp"
#include "co2/stationarity.hpp"
#include "co2/svr.hpp"
#include "svr_checks.hpp"

namespace fs = std::filesystem;
namespace la = co2::linalg;
using la::Matrix;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Matrix gaussian(std::size_t n, std::size_t p, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> z(0.0, sd);
    std::vector<double> v(n * p);
    for (auto& e : v) e = z(rng);
    return Matrix(n, p, std::move(v));
}

std::vector<double> gaussian_vec(std::size_t n, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> z(0.0, sd);
    std::vector<double> v(n);
    for (auto& e : v) e = z(rng);
    return v;
}

// LU determinant with partial pivoting.
double determinant(Matrix a) {
    const std::size_t n = a.rows();
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        if (piv != c) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a(c, k), a(piv, k));
            det = -det;
        }
        det *= a(c, c);
        if (a(c, c) == 0.0) return 0.0;
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a(r, c) / a(c, c);
            for (std::size_t k = c; k < n; ++k) a(r, k) -= f * a(c, k);
        }
    }
    return det;
}

Outcome ac1_svr_oracle() {
    const std::vector<double> c_values{0.1, 1.0, 10.0, 100.0};
    const std::vector<double> eps_values{0.01, 0.1, 0.3};
    const double tol = 1e-7;
    double worst_rel = 0.0;
    double worst_kkt = 0.0;
    std::size_t fits = 0;
    std::size_t unconverged = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(10'000 + seed);
        const std::size_t n = 5 + seed % 16;  // 5..20
        const std::size_t d = 1 + seed % 4;   // 1..4
        const auto x = gaussian(n, d, rng);
        auto y = gaussian_vec(n, rng);
        for (std::size_t i = 0; i < n; ++i) y[i] += std::sin(2.0 * x(i, 0));
        for (auto kind : {co2::svr::KernelKind::Linear, co2::svr::KernelKind::Polynomial,
                          co2::svr::KernelKind::Rbf}) {
            co2::svr::SvrConfig cfg;
            cfg.kernel.kind = kind;
            cfg.kernel.degree = 2 + static_cast<int>(seed % 2);
            cfg.kernel.gamma_mode = seed % 3 == 0 ? co2::svr::GammaMode::Auto : co2::svr::GammaMode::Scale;
            cfg.c = c_values[seed % c_values.size()];
            cfg.epsilon = eps_values[(seed / 4) % eps_values.size()];
            cfg.tolerance = tol;
            const auto model = co2::svr::fit(x, y, cfg);
            ++fits;
            if (!model.diagnostics.converged) ++unconverged;
            const double primal = co2::svr::primal_objective(model, x, y);
            const double oracle = co2::testing::oracle_primal(model, x, y);
            worst_rel = std::max(worst_rel, std::abs(primal - oracle) / std::max(std::abs(oracle), 1e-12));
            worst_kkt = std::max(worst_kkt, co2::testing::kkt_violation(model, x, y));
        }
    }
    return {worst_rel <= 1e-4 && worst_kkt <= 10 * tol && unconverged == 0,
            fmt::format("{} fits, max primal rel. gap {:.2e} (limit 1e-4), max KKT violation {:.2e} "
                        "(limit {:.0e}), unconverged {}",
                        fits, worst_rel, worst_kkt, 10 * tol, unconverged)};
}

Outcome ac2_pcr_ols() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(20'000 + seed);
        const std::size_t p = 2 + seed % 9;
        const std::size_t n = p + 5 + seed * 3;
        const auto mix = gaussian(p, p, rng);
        const auto x = la::multiply(gaussian(n, p, rng), mix);
        const auto noise = gaussian_vec(n, rng, 0.3);
        const auto w = gaussian_vec(p, rng);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = 4.0 + la::dot(w, x.row(i)) + noise[i];

        const auto pcr = co2::pca::fit_pcr(x, y, p);
        const auto pred = co2::pca::predict_pcr(pcr, x);
        Matrix a(n, p + 1);
        for (std::size_t i = 0; i < n; ++i) {
            a(i, 0) = 1.0;
            for (std::size_t j = 0; j < p; ++j) a(i, j + 1) = x(i, j);
        }
        const auto ols = la::multiply(a, la::lstsq(a, y).coefficients);
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(pred[i] - ols[i]));
    }
    return {worst <= 1e-8, fmt::format("20 datasets, max |PCR - OLS| {:.2e} (limit 1e-8)", worst)};
}

Outcome ac3_eigh() {
    double worst_trace = 0.0;
    double worst_det = 0.0;
    double worst_recon = 0.0;
    double worst_eig = 0.0;
    double worst_orth = 0.0;
    bool sorted = true;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(30'000 + seed);
        const std::size_t n = 1 + seed % 10;
        const auto a = gaussian(n, n, rng);
        Matrix c(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) c(i, j) = 0.5 * (a(i, j) + a(j, i));
        const auto e = la::eigh(c);
        double trace = 0.0;
        double sum = 0.0;
        double prod = 1.0;
        double abs_prod = 1.0;
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            trace += c(i, i);
            sum += e.eigenvalues[i];
            prod *= e.eigenvalues[i];
            abs_prod *= std::max(std::abs(e.eigenvalues[i]), 1e-300);
            if (i > 0 && e.eigenvalues[i - 1] < e.eigenvalues[i]) sorted = false;
        }
        for (double v : c.values()) norm += v * v;
        norm = std::sqrt(norm);
        worst_trace = std::max(worst_trace, std::abs(trace - sum) / std::max(1.0, norm));
        worst_det = std::max(worst_det, std::abs(prod - determinant(c)) / abs_prod);

        // V Λ Vᵀ = C, C v = λ v, VᵀV = I
        double recon = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                double g = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    s += e.eigenvectors(i, k) * e.eigenvalues[k] * e.eigenvectors(j, k);
                    g += e.eigenvectors(k, i) * e.eigenvectors(k, j);
                }
                recon += (s - c(i, j)) * (s - c(i, j));
                worst_orth = std::max(worst_orth, std::abs(g - (i == j ? 1.0 : 0.0)));
            }
            const auto v = e.eigenvectors.column(i);
            const auto cv = la::multiply(c, v);
            for (std::size_t r = 0; r < n; ++r)
                worst_eig = std::max(worst_eig, std::abs(cv[r] - e.eigenvalues[i] * v[r]));
        }
        worst_recon = std::max(worst_recon, std::sqrt(recon) / std::max(norm, 1e-300));
    }
    const bool pass = sorted && worst_trace <= 1e-10 && worst_det <= 1e-8 && worst_recon <= 1e-10 &&
                      worst_eig <= 1e-8 && worst_orth <= 1e-10;
    return {pass, fmt::format("100 matrices up to 10x10: trace {:.1e}, det {:.1e}, reconstruction {:.1e}, "
                              "Cv-lv {:.1e}, orthonormality {:.1e}, sorted {}",
                              worst_trace, worst_det, worst_recon, worst_eig, worst_orth, sorted)};
}

Outcome ac4_adf() {
    int noise_ok = 0;
    int walk_ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(40'000 + seed);
        const auto e = gaussian_vec(200, rng);
        if (co2::stationarity::adf_test(e).stationary_at_5pct) ++noise_ok;
        std::mt19937_64 rng2(50'000 + seed);
        auto w = gaussian_vec(200, rng2);
        for (std::size_t t = 1; t < w.size(); ++t) w[t] += w[t - 1];
        if (!co2::stationarity::adf_test(w).stationary_at_5pct) ++walk_ok;
    }
    return {noise_ok >= 95 && walk_ok >= 90,
            fmt::format("white noise stationary {}/100 (need 95), random walk non-stationary {}/100 (need 90)",
                        noise_ok, walk_ok)};
}

Outcome ac5_importance() {
    // ignored features: a model reading only column 0
    bool zeros = true;
    {
        std::mt19937_64 rng(60'000);
        const auto x = gaussian(120, 5, rng);
        auto y = x.column(0);
        const co2::importance::Predictor only0 = [](const Matrix& m) { return m.column(0); };
        const co2::importance::Predictor constant = [](const Matrix& m) {
            return std::vector<double>(m.rows(), 0.5);
        };
        const auto r = co2::importance::permutation_importance(only0, x, y, {10, 1});
        for (std::size_t j = 1; j < 5; ++j) zeros = zeros && r.per_feature[j].importance == 0.0;
        const auto rc = co2::importance::permutation_importance(constant, x, y, {10, 1});
        for (const auto& f : rc.per_feature) zeros = zeros && f.importance == 0.0;
    }
    // single-signal generative model, fitted by least squares on every feature
    int recovered = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(61'000 + seed);
        const std::size_t n = 100;
        const auto x = gaussian(n, 5, rng);
        const auto noise = gaussian_vec(n, rng, 0.5);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = x(i, 0) + noise[i];
        Matrix a(n, 6);
        for (std::size_t i = 0; i < n; ++i) {
            a(i, 0) = 1.0;
            for (std::size_t j = 0; j < 5; ++j) a(i, j + 1) = x(i, j);
        }
        const auto beta = la::lstsq(a, y).coefficients;
        const co2::importance::Predictor ols = [beta](const Matrix& m) {
            std::vector<double> out(m.rows(), beta[0]);
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < m.cols(); ++j) out[i] += beta[j + 1] * m(i, j);
            return out;
        };
        const auto r = co2::importance::permutation_importance(ols, x, y, {10, seed});
        if (r.ranking.front() == 0) ++recovered;
    }
    return {zeros && recovered >= 95,
            fmt::format("ignored features exactly 0: {}, dominant feature ranked first {}/100 (need 95)",
                        zeros ? "yes" : "no", recovered)};
}

Outcome ac6_grid() {
    std::mt19937_64 rng(70'000);
    const std::size_t n = 200;
    const auto x = gaussian(n, 3, rng);
    const auto noise = gaussian_vec(n, rng, 0.05);
    const std::vector<double> w{0.8, -0.5, 0.3};
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = la::dot(w, x.row(i));
        y[i] = s * s + noise[i];
    }
    co2::selection::Grid grid;
    grid.kernels = {co2::svr::KernelKind::Linear, co2::svr::KernelKind::Polynomial};
    grid.c_values = {1, 10, 100};
    grid.gamma_modes = {co2::svr::GammaMode::Scale, co2::svr::GammaMode::Auto};
    grid.degrees = {2, 3};
    const auto rep = co2::selection::grid_search_svr(x, y, grid, 5, 71);
    double best_linear = -1e300;
    double best_poly2 = -1e300;
    for (const auto& c : rep.candidates) {
        if (c.failed) continue;
        if (c.config.kernel.kind == co2::svr::KernelKind::Linear) best_linear = std::max(best_linear, c.scores.mean_r2);
        if (c.config.kernel.kind == co2::svr::KernelKind::Polynomial && c.config.kernel.degree == 2)
            best_poly2 = std::max(best_poly2, c.scores.mean_r2);
    }
    const auto& best = rep.best_candidate().config;
    return {best_poly2 - best_linear > 0.05,
            fmt::format("best poly-2 mean R2 {:.4f}, best linear {:.4f}, margin {:.4f} (need > 0.05); "
                        "overall winner {} degree {} C {}",
                        best_poly2, best_linear, best_poly2 - best_linear,
                        co2::svr::to_string(best.kernel.kind), best.kernel.degree, best.c)};
}

Outcome ac7_end_to_end(const fs::path& work) {
    co2::reporting::SyntheticSpec spec;
    spec.seed = 42;
    const auto panel = co2::reporting::generate_synthetic(spec);
    fs::create_directories(work);
    const auto input = work / "panel.csv";
    co2::data::write_panel(panel, input);

    co2::cli::RunConfig cfg;
    cfg.input_path = input;
    cfg.seed = 42;
    cfg.standardize_mode = co2::cli::StandardizeMode::TrainOnly;
    const auto prep = co2::cli::prepare(cfg);
    const auto report = co2::cli::run_grid(prep, cfg);
    const auto svr_cfg = co2::cli::chosen_svr_config(cfg, &report, prep.train.size());
    const auto xtr = prep.train.feature_matrix();
    const auto xte = prep.test.feature_matrix();
    const auto model = co2::svr::fit(xtr, prep.train.targets(), svr_cfg);
    const double svr_r2 = co2::selection::r_squared(prep.test.targets(), co2::svr::predict(model, xte));

    const std::size_t k = co2::cli::pcr_components(prep, cfg);
    const auto pcr_cv = co2::selection::cross_validate_pcr(xtr, prep.train.targets(), k, cfg.folds, cfg.fold_seed());

    auto icfg = cfg.importance;
    icfg.seed = cfg.importance_seed();
    const co2::importance::Predictor predictor = [&model](const Matrix& m) { return co2::svr::predict(model, m); };
    const auto imp = co2::importance::permutation_importance(predictor, xte, prep.test.targets(), icfg,
                                                             prep.raw.schema().features);
    const std::size_t top = imp.ranking.front();

    const bool pass = svr_r2 >= 0.95 && std::abs(pcr_cv.mean_r2 - svr_r2) <= 0.10 && top == 0;
    return {pass, fmt::format("{} rows; tuned SVR ({} C={} gamma={} degree={}) test R2 {:.4f} (need >= 0.95); "
                              "PCR k={} 5-fold mean R2 {:.4f}, gap {:.4f} (limit 0.10); top feature '{}' {:.2f}%",
                              panel.size(), co2::svr::to_string(svr_cfg.kernel.kind), svr_cfg.c,
                              co2::svr::to_string(svr_cfg.kernel.gamma_mode), svr_cfg.kernel.degree, svr_r2, k,
                              pcr_cv.mean_r2, std::abs(pcr_cv.mean_r2 - svr_r2),
                              imp.per_feature[top].feature.label, 100.0 * imp.per_feature[top].importance)};
}

Outcome ac8_metrics() {
    using co2::selection::mse;
    using co2::selection::r_squared;
    const std::vector<double> a{1, 2, 3};
    bool exact = r_squared(a, a) == 1.0 && r_squared(a, std::vector<double>{2, 2, 2}) == 0.0 &&
                 r_squared(a, std::vector<double>{1, 2, 4}) == 0.5 && mse(a, a) == 0.0 &&
                 mse(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 1.0 &&
                 mse(std::vector<double>{1, 2}, std::vector<double>{2, 4}) == 2.5;
    try {
        (void)r_squared(std::vector<double>{3, 3, 3}, a);
        exact = false;
    } catch (const co2::DegenerateError&) {
    }
    std::size_t checked = 0;
    bool cover = true;
    for (std::size_t n = 5; n <= 200; ++n) {
        for (std::size_t k = 2; k <= std::min<std::size_t>(10, n); ++k) {
            const auto folds = co2::selection::kfold_indices(n, k, n * 1000 + k);
            std::vector<int> seen(n, 0);
            std::size_t biggest = 0;
            std::size_t smallest = n;
            for (const auto& f : folds) {
                biggest = std::max(biggest, f.test.size());
                smallest = std::min(smallest, f.test.size());
                for (auto i : f.test) ++seen[i];
                std::vector<int> in_train(n, 0);
                for (auto i : f.train) ++in_train[i];
                for (auto i : f.test) cover = cover && in_train[i] == 0;
                cover = cover && f.train.size() + f.test.size() == n;
            }
            cover = cover && folds.size() == k && biggest - smallest <= 1 &&
                    std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
            ++checked;
        }
    }
    return {exact && cover, fmt::format("hand examples exact: {}; disjoint cover on {} (n, k) pairs: {}",
                                        exact ? "yes" : "no", checked, cover ? "yes" : "no")};
}

Outcome ac9_determinism(const fs::path& work, const fs::path& config) {
    auto cfg = co2::cli::load_config(config);
    std::string manifests[2];
    for (int run = 0; run < 2; ++run) {
        cfg.output_dir = work / fmt::format("run{}", run + 1);
        fs::remove_all(cfg.output_dir);
        std::ostringstream log;
        std::ostringstream err;
        if (co2::cli::run_pipeline(cfg, log, err) != 0) {
            return {false, fmt::format("run {} failed: {}", run + 1, err.str())};
        }
        std::ifstream in(cfg.output_dir / co2::cli::kManifestName, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        manifests[run] = s.str();
    }
    const auto lines = std::count(manifests[0].begin(), manifests[0].end(), '\n');
    const bool complete = manifests[0].find("status complete") != std::string::npos;
    return {complete && manifests[0] == manifests[1],
            fmt::format("config {}: manifests {} ({} lines, status {})", config.filename().string(),
                        manifests[0] == manifests[1] ? "byte-identical" : "DIFFER", lines,
                        complete ? "complete" : "incomplete")};
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "co2_acceptance";
    const fs::path config = argc > 2 ? fs::path(argv[2]) : fs::path(CO2_DEFAULT_CONFIG);
    fs::create_directories(work);

    struct Criterion {
        const char* id;
        const char* title;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"AC1", "SVR oracle equivalence", 60, ac1_svr_oracle},
        {"AC2", "PCR equals OLS at full rank", 5, ac2_pcr_ols},
        {"AC3", "eigensolver identities", 5, ac3_eigh},
        {"AC4", "ADF discrimination", 10, ac4_adf},
        {"AC5", "permutation importance", 30, ac5_importance},
        {"AC6", "grid search prefers poly-2 on quadratic signal", 120, ac6_grid},
        {"AC7", "end-to-end synthetic reproduction", 300, [&] { return ac7_end_to_end(work / "ac7"); }},
        {"AC8", "metric exactness and fold partitions", 5, ac8_metrics},
        {"AC9", "pipeline determinism", 600, [&] { return ac9_determinism(work / "ac9", config); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.limit_s;
        const bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        std::cout << fmt::format("{} {} {}: {} [{:.1f} s, limit {:.0f} s{}]\n", c.id, pass ? "PASS" : "FAIL",
                                 c.title, o.detail, secs, c.limit_s, in_time ? "" : ", TOO SLOW")
                  << std::flush;
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
