#include "co2/cli/pipeline.hpp"

#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "co2/cli/manifest.hpp"
#include "co2/error.hpp"
#include "co2/importance.hpp"
#include "co2/reporting.hpp"

namespace co2::cli {

void write_text(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", path.string()));
    out << contents;
    if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

importance::Predictor load_predictor(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open model file {}", path.string()));
    std::string magic;
    in >> magic;
    in.seekg(0);
    if (magic == "co2-svr-model") {
        auto model = std::make_shared<svr::SvrModel>(svr::load_model(in));
        return [model](const linalg::Matrix& x) { return svr::predict(*model, x); };
    }
    if (magic == "co2-pcr-model") {
        auto model = std::make_shared<pca::PcrModel>(pca::load_pcr(in));
        return [model](const linalg::Matrix& x) { return pca::predict_pcr(*model, x); };
    }
    throw ParseError(fmt::format("{} is not a saved SVR or PCR model", path.string()));
}

void write_pcr_artifacts(const pca::PcrModel& model, const std::vector<data::FeatureId>& features,
                         const std::filesystem::path& dir) {
    std::vector<std::string> labels;
    for (const auto& f : features) labels.push_back(f.label);
    std::ostringstream m;
    pca::save_pcr(model, m);
    write_text(dir / "pcr_model.txt", m.str());
    std::ostringstream l;
    pca::write_loadings(model.basis, model.k, labels, l);
    write_text(dir / "pcr_loadings.csv", l.str());
    std::ostringstream e;
    pca::write_evr(model.basis, e);
    write_text(dir / "pcr_evr.csv", e.str());
}

Prepared prepare(const RunConfig& cfg) {
    Prepared p;
    if (!std::filesystem::exists(cfg.input_path)) {
        throw Error(fmt::format("input file not found: {}", cfg.input_path.string()));
    }
    p.raw = data::load_panel(cfg.input_path);
    p.split = data::split_indices(p.raw.size(), cfg.split_spec());
    if (cfg.standardize_mode == StandardizeMode::Global) {
        p.params = data::fit_standardizer(p.raw);
    } else {
        p.params = data::fit_standardizer(p.raw.subset(p.split.train));
    }
    p.standardized = data::apply_standardizer(p.params, p.raw);
    p.train = p.standardized.subset(p.split.train);
    p.test = p.standardized.subset(p.split.test);
    return p;
}

std::vector<stationarity::FeatureStationarity> run_adf(const Prepared& p, const RunConfig& cfg) {
    return stationarity::test_all_features(p.standardized, cfg.adf);
}

selection::CvReport run_grid(const Prepared& p, const RunConfig& cfg) {
    const selection::Grid grid = cfg.grid.value_or(selection::Grid{});
    return selection::grid_search_svr(p.train.feature_matrix(), p.train.targets(), grid, cfg.folds,
                                      cfg.fold_seed());
}

svr::SvrConfig chosen_svr_config(const RunConfig& cfg, const selection::CvReport* report,
                                 std::size_t n_train) {
    if (cfg.svr) return *cfg.svr;
    if (report == nullptr) throw ConfigError("no [svr] section and no grid search result");
    auto chosen = report->best_candidate().config;
    chosen.max_passes = selection::grid_fit_cap(cfg.grid.value_or(selection::Grid{}), n_train);
    return chosen;
}

std::size_t pcr_components(const Prepared& p, const RunConfig& cfg) {
    if (cfg.pcr.k) return *cfg.pcr.k;
    return pca::select_k(pca::fit_pca(p.train.feature_matrix()), cfg.pcr.target_evr);
}

Metrics score(std::span<const double> actual, std::span<const double> predicted) {
    return {selection::r_squared(actual, predicted), selection::mse(actual, predicted)};
}

namespace {

template <typename F>
std::string render(F&& f) {
    std::ostringstream out;
    f(out);
    return out.str();
}

struct Stage {
    std::string name;
    std::function<void()> body;
};

}  // namespace

int run_pipeline(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
    const auto& out = cfg.output_dir;
    if (out.empty()) {
        err << "error: no output directory given\n";
        return 2;
    }
    try {
        cfg.validate();
        std::filesystem::create_directories(out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    Prepared prep;
    std::optional<selection::CvReport> grid_report;
    svr::SvrModel svr_model;
    pca::PcrModel pcr_model;
    std::vector<double> svr_test_pred;

    const std::vector<Stage> stages{
        {"load",
         [&] {
             prep = prepare(cfg);
             data::write_standardizer(prep.params, out / "standardizer.csv");
             write_text(out / "config.ini", render([&](std::ostream& o) { write_config(cfg, o); }));
             fmt::print(log, "load: {} rows, {} countries, {} train / {} test ({} standardization)\n",
                        prep.raw.size(), prep.raw.countries().size(), prep.train.size(),
                        prep.test.size(), to_string(cfg.standardize_mode));
         }},
        {"adf",
         [&] {
             const auto res = run_adf(prep, cfg);
             write_text(out / "adf.csv",
                        render([&](std::ostream& o) { stationarity::write_adf_report(res, o); }));
             std::size_t n_stationary = 0;
             for (const auto& f : res) n_stationary += f.stationary ? 1 : 0;
             fmt::print(log, "adf: {} of {} features stationary at 5%\n", n_stationary, res.size());
         }},
        {"grid-search",
         [&] {
             if (cfg.svr) {
                 fmt::print(log, "grid-search: skipped (fixed [svr] config)\n");
                 return;
             }
             grid_report = run_grid(prep, cfg);
             write_text(out / "cv_svr.csv",
                        render([&](std::ostream& o) { selection::write_cv_table(*grid_report, o); }));
             const auto& best = grid_report->best_candidate();
             write_text(out / "best_config.ini",
                        render([&](std::ostream& o) { selection::write_best_config(best, o); }));
             fmt::print(log, "grid-search: {} candidates, best {} C={:.6g} gamma={} degree={} mean R2 {:.6g}\n",
                        grid_report->candidates.size(), svr::to_string(best.config.kernel.kind),
                        best.config.c, svr::to_string(best.config.kernel.gamma_mode),
                        best.config.kernel.degree, best.scores.mean_r2);
         }},
        {"train-svr",
         [&] {
             const auto svr_cfg = chosen_svr_config(cfg, grid_report ? &*grid_report : nullptr,
                                                    prep.train.size());
             svr_model = svr::fit(prep.train.feature_matrix(), prep.train.targets(), svr_cfg);
             write_text(out / "svr_model.txt",
                        render([&](std::ostream& o) { svr::save_model(svr_model, o); }));
             fmt::print(log, "train-svr: {} support vectors, converged {}\n", svr_model.beta.size(),
                        svr_model.diagnostics.converged ? "yes" : "no");
         }},
        {"train-pcr",
         [&] {
             const std::size_t k = pcr_components(prep, cfg);
             const auto x = prep.train.feature_matrix();
             const auto y = prep.train.targets();
             const auto cv = selection::cross_validate_pcr(x, y, k, cfg.folds, cfg.fold_seed());
             write_text(out / "cv_pcr.csv",
                        render([&](std::ostream& o) { selection::write_pcr_cv_table(cv, k, o); }));
             pcr_model = pca::fit_pcr(x, y, k);
             write_pcr_artifacts(pcr_model, prep.raw.schema().features, out);
             fmt::print(log, "train-pcr: k = {}, {}-fold mean R2 {:.6g}\n", k, cfg.folds, cv.mean_r2);
         }},
        {"evaluate",
         [&] {
             const auto xtr = prep.train.feature_matrix();
             const auto xte = prep.test.feature_matrix();
             const auto ytr = prep.train.targets();
             const auto yte = prep.test.targets();
             svr_test_pred = svr::predict(svr_model, xte);
             const auto rows = std::vector<std::tuple<std::string, std::string, Metrics>>{
                 {"svr", "train", score(ytr, svr::predict(svr_model, xtr))},
                 {"svr", "test", score(yte, svr_test_pred)},
                 {"pcr", "train", score(ytr, pca::predict_pcr(pcr_model, xtr))},
                 {"pcr", "test", score(yte, pca::predict_pcr(pcr_model, xte))},
             };
             write_text(out / "metrics.csv", render([&](std::ostream& o) {
                            fmt::print(o, "model,dataset,r2,mse\n");
                            for (const auto& [m, d, s] : rows) fmt::print(o, "{},{},{},{}\n", m, d, s.r2, s.mse);
                        }));
             for (const auto& [m, d, s] : rows) {
                 fmt::print(log, "evaluate: {} {} R2 {:.6g} MSE {:.6g}\n", m, d, s.r2, s.mse);
             }
         }},
        {"importance",
         [&] {
             auto icfg = cfg.importance;
             icfg.seed = cfg.importance_seed();
             const auto report = importance::permutation_importance(
                 [&](const linalg::Matrix& x) { return svr::predict(svr_model, x); },
                 prep.test.feature_matrix(), prep.test.targets(), icfg,
                 prep.raw.schema().features);
             write_text(out / "importance.csv",
                        render([&](std::ostream& o) { importance::write_importance_csv(report, o); }));
             const auto& top = report.per_feature[report.ranking.front()];
             fmt::print(log, "importance: top feature {} ({:.6g}%)\n", top.feature.label,
                        top.importance * 100.0);
         }},
        {"report",
         [&] {
             const auto pred = svr::predict(svr_model, prep.standardized.feature_matrix());
             const auto series = reporting::country_report(prep.standardized, pred, prep.params);
             write_text(out / "country_report.csv",
                        render([&](std::ostream& o) { reporting::write_country_report(series, o); }));
             const auto files = reporting::emit_plots(series, out / "plots");
             fmt::print(log, "report: {} countries, {} plot files\n", series.size(), files.size());
         }},
    };

    for (const auto& stage : stages) {
        try {
            stage.body();
        } catch (const std::exception& e) {
            err << fmt::format("stage '{}' failed: {}\n", stage.name, e.what());
            try {
                auto m = collect_manifest(out);
                m.complete = false;
                m.failed_stage = stage.name;
                m.error = e.what();
                write_manifest(out, std::move(m));
            } catch (const std::exception& e2) {
                err << "could not write manifest: " << e2.what() << '\n';
            }
            return 2;
        }
    }
    auto m = collect_manifest(out);
    m.complete = true;
    const std::size_t n_files = m.entries.size();
    write_manifest(out, std::move(m));
    fmt::print(log, "done: {} artifacts listed in {}\n", n_files, (out / kManifestName).string());
    return 0;
}

}  // namespace co2::cli
