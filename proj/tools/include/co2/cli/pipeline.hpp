#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "co2/cli/config.hpp"
#include "co2/data.hpp"
#include "co2/importance.hpp"
#include "co2/pca.hpp"
#include "co2/selection.hpp"
#include "co2/stationarity.hpp"
#include "co2/svr.hpp"

namespace co2::cli {

/// Loaded panel, its standardization and the train/test partition. All
/// datasets except `raw` are on the standardized scale.
struct Prepared {
    data::PanelDataset raw;
    data::StandardizationParams params;
    data::PanelDataset standardized;
    data::SplitIndices split;
    data::PanelDataset train;
    data::PanelDataset test;
};

/// Global mode fits the standardizer on every row before splitting;
/// train-only mode fits it on the training rows.
[[nodiscard]] Prepared prepare(const RunConfig& cfg);

[[nodiscard]] std::vector<stationarity::FeatureStationarity> run_adf(const Prepared& p,
                                                                    const RunConfig& cfg);
[[nodiscard]] selection::CvReport run_grid(const Prepared& p, const RunConfig& cfg);

/// The SVR config to train: the fixed [svr] section, or the grid winner
/// with the grid's per-fit cap.
[[nodiscard]] svr::SvrConfig chosen_svr_config(const RunConfig& cfg,
                                               const selection::CvReport* report,
                                               std::size_t n_train);

[[nodiscard]] std::size_t pcr_components(const Prepared& p, const RunConfig& cfg);

struct Metrics {
    double r2 = 0.0;
    double mse = 0.0;
};
[[nodiscard]] Metrics score(std::span<const double> actual, std::span<const double> predicted);

/// Runs every stage into cfg.output_dir and writes the manifest. Returns 0
/// on success; on failure prints the stage and error to `err`, marks the
/// manifest incomplete and returns 2.
int run_pipeline(const RunConfig& cfg, std::ostream& log, std::ostream& err);

/// Writes a file, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& contents);

/// `pcr_model.txt`, `pcr_loadings.csv` (features × retained components) and
/// `pcr_evr.csv` under dir.
void write_pcr_artifacts(const pca::PcrModel& model, const std::vector<data::FeatureId>& features,
                         const std::filesystem::path& dir);

/// Loads a saved SVR or PCR model (detected from its header) as a predictor.
[[nodiscard]] importance::Predictor load_predictor(const std::filesystem::path& path);

}  // namespace co2::cli
