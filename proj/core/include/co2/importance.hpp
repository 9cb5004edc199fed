#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "co2/data.hpp"
#include "co2/linalg.hpp"

namespace co2::importance {

/// Any fitted model: maps an n × p matrix to n predictions.
using Predictor = std::function<std::vector<double>(const linalg::Matrix&)>;

enum class Score { RSquared, NegMse };

struct ImportanceConfig {
    std::size_t n_permutations = 10;
    std::uint64_t seed = 0;
    Score score = Score::RSquared;
    std::size_t threads = 1;
};

struct FeatureImportance {
    data::FeatureId feature;
    double importance = 0.0;  ///< baseline − mean permuted score
    double std_across_permutations = 0.0;
    std::vector<double> permuted_scores;  ///< one per permutation
};

struct ImportanceReport {
    double baseline_score = 0.0;
    std::vector<FeatureImportance> per_feature;  ///< column order
    std::vector<std::size_t> ranking;            ///< indices into per_feature
};

/// Shuffles each column n_permutations times (fresh seeded permutation per
/// (feature, permutation) pair) on a private copy of x and records the drop
/// of the score. Features default to the panel schema when x has ten
/// columns and to generic names otherwise.
[[nodiscard]] ImportanceReport permutation_importance(const Predictor& model,
                                                      const linalg::Matrix& x,
                                                      std::span<const double> y,
                                                      const ImportanceConfig& cfg,
                                                      std::vector<data::FeatureId> features = {});

struct PercentageRow {
    std::size_t rank = 0;  ///< 1-based
    std::string feature;
    std::string importance_pct;  ///< ×100, four decimals
    std::string std_pct;
};

[[nodiscard]] std::vector<PercentageRow> to_percentage_table(const ImportanceReport& report);

/// `rank,feature,importance_pct,std_pct`
void write_importance_csv(const ImportanceReport& report, std::ostream& out);

[[nodiscard]] std::string_view to_string(Score s);
[[nodiscard]] Score parse_score(std::string_view s);

}  // namespace co2::importance
