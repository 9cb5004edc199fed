// co2model: command-line driver for the CO2 panel modelling pipeline.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "co2/cli/config.hpp"
#include "co2/cli/pipeline.hpp"
#include "co2/error.hpp"
#include "co2/importance.hpp"
#include "co2/reporting.hpp"
#include "co2/selection.hpp"

namespace {

using namespace co2;
using cli::RunConfig;

struct CommonOptions {
    std::string config;
    std::string input;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> test_fraction;
    std::optional<std::size_t> folds;
    std::string standardize;
    std::optional<std::size_t> components;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--config", o.config, "Config file (INI sections)");
    app->add_option("--input", o.input, "Panel CSV");
    app->add_option("--out", o.out, "Output directory");
    app->add_option("--seed", o.seed, "Global seed");
    app->add_option("--test-fraction", o.test_fraction, "Held-out fraction");
    app->add_option("--folds", o.folds, "Cross-validation folds");
    app->add_option("--standardize", o.standardize, "global | train-only")
        ->check(CLI::IsMember({"global", "train-only"}));
    app->add_option("--components", o.components, "Pin the PCR component count");
}

RunConfig resolve(const CommonOptions& o) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : cli::load_config(o.config);
    if (!o.input.empty()) cfg.input_path = o.input;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.seed) cfg.seed = *o.seed;
    if (o.test_fraction) cfg.test_fraction = *o.test_fraction;
    if (o.folds) cfg.folds = *o.folds;
    if (!o.standardize.empty()) cfg.standardize_mode = cli::parse_standardize_mode(o.standardize);
    if (o.components) cfg.pcr.k = *o.components;
    cfg.validate();
    if (cfg.input_path.empty()) throw ConfigError("no input file given (--input or [data] input)");
    return cfg;
}

std::filesystem::path out_dir(const RunConfig& cfg) {
    if (cfg.output_dir.empty()) throw ConfigError("no output directory given (--out or [data] output)");
    std::filesystem::create_directories(cfg.output_dir);
    return cfg.output_dir;
}

template <typename F>
std::string render(F&& f) {
    std::ostringstream s;
    f(s);
    return s.str();
}

// actual,predicted
std::pair<std::vector<double>, std::vector<double>> read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open predictions file {}", path));
    std::string line;
    std::getline(in, line);
    if (line.rfind("actual,predicted", 0) != 0) {
        throw SchemaError(fmt::format("{}: expected header 'actual,predicted'", path));
    }
    std::vector<double> a;
    std::vector<double> p;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        double x = 0.0;
        double y = 0.0;
        char comma = 0;
        if (!(row >> x >> comma >> y) || comma != ',') {
            throw ParseError(fmt::format("{}:{}: malformed row", path, line_no));
        }
        a.push_back(x);
        p.push_back(y);
    }
    return {a, p};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CO2 emissions panel modelling: ADF, SVR, PCR, grid search, importance"};
    app.require_subcommand(1);

    CommonOptions common;
    std::string model_path;
    std::string predictions_path;
    std::string split_name = "test";
    reporting::SyntheticSpec synth;
    std::vector<std::size_t> unit_root;
    std::string synth_out;

    auto* ingest = app.add_subcommand("ingest-check", "Load and validate a panel CSV");
    add_common(ingest, common);
    auto* adf = app.add_subcommand("adf", "Per-country ADF tests for every feature");
    add_common(adf, common);
    auto* grid = app.add_subcommand("grid-search", "SVR grid search with k-fold CV");
    add_common(grid, common);
    auto* train_svr = app.add_subcommand("train-svr", "Fit the [svr] config on the training split");
    add_common(train_svr, common);
    auto* train_pcr = app.add_subcommand("train-pcr", "PCR cross-validation and fit");
    add_common(train_pcr, common);
    auto* evaluate = app.add_subcommand("evaluate", "R2 and MSE of a model or a predictions file");
    add_common(evaluate, common);
    evaluate->add_option("--model", model_path, "Saved SVR or PCR model");
    evaluate->add_option("--predictions", predictions_path, "CSV with actual,predicted columns");
    evaluate->add_option("--split", split_name, "train | test | all")
        ->check(CLI::IsMember({"train", "test", "all"}));
    auto* imp = app.add_subcommand("importance", "Permutation importance on the test split");
    add_common(imp, common);
    imp->add_option("--model", model_path, "Saved SVR or PCR model")->required();
    auto* report = app.add_subcommand("report", "Per-country differences and plots");
    add_common(report, common);
    report->add_option("--model", model_path, "Saved SVR or PCR model")->required();
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic panel CSV");
    synth_cmd->add_option("--seed", synth.seed, "Generator seed");
    synth_cmd->add_option("--countries", synth.n_countries, "Number of countries");
    synth_cmd->add_option("--noise", synth.noise_std, "Target noise std (latent scale)");
    synth_cmd->add_option("--unit-root", unit_root, "Feature indices generated as random walks");
    synth_cmd->add_option("--out", synth_out, "Output CSV (default stdout)");
    auto* run = app.add_subcommand("run", "Full pipeline into --out with a manifest");
    add_common(run, common);

    CLI11_PARSE(app, argc, argv);

    const auto* sub = app.get_subcommands().front();
    try {
        if (sub == synth_cmd) {
            synth.unit_root_features = {unit_root.begin(), unit_root.end()};
            const auto panel = reporting::generate_synthetic(synth);
            if (synth_out.empty()) {
                data::write_panel(panel, std::cout);
            } else {
                data::write_panel(panel, synth_out);
            }
            return 0;
        }

        if (sub == evaluate && !predictions_path.empty()) {
            const auto [a, p] = read_predictions(predictions_path);
            const auto m = cli::score(a, p);
            fmt::print("R2 {:.4f}\nMSE {:.4f}\n", m.r2, m.mse);
            return 0;
        }

        const RunConfig cfg = resolve(common);
        if (sub == run) {
            return cli::run_pipeline(cfg, std::cout, std::cerr);
        }

        const auto prep = cli::prepare(cfg);
        if (sub == ingest) {
            fmt::print("rows {}\ncountries {}\ntrain {}\ntest {}\n", prep.raw.size(),
                       prep.raw.countries().size(), prep.train.size(), prep.test.size());
            return 0;
        }
        if (sub == adf) {
            const auto res = cli::run_adf(prep, cfg);
            cli::write_text(out_dir(cfg) / "adf.csv",
                            render([&](std::ostream& o) { stationarity::write_adf_report(res, o); }));
            for (const auto& f : res) {
                fmt::print("{:<45} stationary fraction {:.6g} -> {}\n", f.feature.label,
                           f.stationary_fraction, f.stationary ? "stationary" : "non-stationary");
            }
            return 0;
        }
        if (sub == grid) {
            if (cfg.svr) throw ConfigError("grid-search needs a [grid] section, not [svr]");
            const auto rep = cli::run_grid(prep, cfg);
            const auto dir = out_dir(cfg);
            cli::write_text(dir / "cv_svr.csv",
                            render([&](std::ostream& o) { selection::write_cv_table(rep, o); }));
            auto best = rep.best_candidate();
            best.config.max_passes = selection::grid_fit_cap(cfg.grid.value_or(selection::Grid{}),
                                                             prep.train.size());
            const auto text = render([&](std::ostream& o) { selection::write_best_config(best, o); });
            cli::write_text(dir / "best_config.ini", text);
            fmt::print("{}mean R2 {:.6g}\nmean MSE {:.6g}\n", text, best.scores.mean_r2,
                       best.scores.mean_mse);
            return 0;
        }
        if (sub == train_svr) {
            if (!cfg.svr) throw ConfigError("train-svr needs an [svr] section (grid-search writes one)");
            const auto model = svr::fit(prep.train.feature_matrix(), prep.train.targets(), *cfg.svr);
            const auto dir = out_dir(cfg);
            cli::write_text(dir / "svr_model.txt",
                            render([&](std::ostream& o) { svr::save_model(model, o); }));
            data::write_standardizer(prep.params, dir / "standardizer.csv");
            fmt::print("support vectors {}\nconverged {}\niterations {}\n", model.beta.size(),
                       model.diagnostics.converged ? "yes" : "no", model.diagnostics.iterations);
            return 0;
        }
        if (sub == train_pcr) {
            const std::size_t k = cli::pcr_components(prep, cfg);
            const auto x = prep.train.feature_matrix();
            const auto y = prep.train.targets();
            const auto cv = selection::cross_validate_pcr(x, y, k, cfg.folds, cfg.fold_seed());
            const auto model = pca::fit_pcr(x, y, k);
            const auto dir = out_dir(cfg);
            cli::write_text(dir / "cv_pcr.csv",
                            render([&](std::ostream& o) { selection::write_pcr_cv_table(cv, k, o); }));
            cli::write_pcr_artifacts(model, prep.raw.schema().features, dir);
            fmt::print("k {}\n", k);
            for (std::size_t f = 0; f < cv.fold_r2.size(); ++f) {
                fmt::print("fold {} R2 {:.6g}\n", f + 1, cv.fold_r2[f]);
            }
            fmt::print("mean R2 {:.6g}\n", cv.mean_r2);
            return 0;
        }

        if (model_path.empty()) throw ConfigError("--model or --predictions is required");
        const auto predictor = cli::load_predictor(model_path);
        if (sub == evaluate) {
            const auto& ds = split_name == "train" ? prep.train
                             : split_name == "all" ? prep.standardized
                                                   : prep.test;
            const auto m = cli::score(ds.targets(), predictor(ds.feature_matrix()));
            fmt::print("R2 {:.4f}\nMSE {:.4f}\n", m.r2, m.mse);
            return 0;
        }
        if (sub == imp) {
            auto icfg = cfg.importance;
            icfg.seed = cfg.importance_seed();
            const auto rep = importance::permutation_importance(
                predictor, prep.test.feature_matrix(), prep.test.targets(), icfg,
                prep.raw.schema().features);
            cli::write_text(out_dir(cfg) / "importance.csv",
                            render([&](std::ostream& o) { importance::write_importance_csv(rep, o); }));
            for (const auto& row : importance::to_percentage_table(rep)) {
                fmt::print("{:>2}  {:<45} {:>9}\n", row.rank, row.feature, row.importance_pct);
            }
            return 0;
        }
        if (sub == report) {
            const auto pred = predictor(prep.standardized.feature_matrix());
            const auto series = reporting::country_report(prep.standardized, pred, prep.params);
            const auto dir = out_dir(cfg);
            cli::write_text(dir / "country_report.csv",
                            render([&](std::ostream& o) { reporting::write_country_report(series, o); }));
            const auto files = reporting::emit_plots(series, dir / "plots");
            fmt::print("countries {}\nplot files {}\n", series.size(), files.size());
            return 0;
        }
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "{}: error: {}\n", sub->get_name(), e.what());
        return 2;
    }
    return 0;
}
