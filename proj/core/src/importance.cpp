#include "co2/importance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "co2/error.hpp"
#include "co2/selection.hpp"

namespace co2::importance {

namespace {

double score_of(Score s, std::span<const double> y, std::span<const double> pred) {
    return s == Score::RSquared ? selection::r_squared(y, pred) : -selection::mse(y, pred);
}

std::vector<data::FeatureId> default_names(std::size_t p) {
    if (p == data::kFeatureCount) return data::default_features();
    std::vector<data::FeatureId> out;
    for (std::size_t j = 0; j < p; ++j) {
        const auto name = fmt::format("x{}", j);
        out.push_back({j, name, name, ""});
    }
    return out;
}

std::string pct4(double raw) {
    auto s = fmt::format("{:.4f}", raw * 100.0);
    if (s == "-0.0000") s.erase(0, 1);
    return s;
}

}  // namespace

std::string_view to_string(Score s) {
    return s == Score::RSquared ? "r_squared" : "neg_mse";
}

Score parse_score(std::string_view s) {
    if (s == "r_squared" || s == "r2") return Score::RSquared;
    if (s == "neg_mse") return Score::NegMse;
    throw ConfigError(fmt::format("unknown importance score '{}'", s));
}

ImportanceReport permutation_importance(const Predictor& model, const linalg::Matrix& x,
                                        std::span<const double> y, const ImportanceConfig& cfg,
                                        std::vector<data::FeatureId> features) {
    if (cfg.n_permutations < 1) {
        throw ConfigError("n_permutations must be at least 1");
    }
    if (x.rows() < 2) {
        throw LengthError(fmt::format("permutation importance needs at least 2 rows, got {}", x.rows()));
    }
    if (y.size() != x.rows()) {
        throw DimensionError(fmt::format("importance: {} rows but {} targets", x.rows(), y.size()));
    }
    const std::size_t p = x.cols();
    if (features.empty()) features = default_names(p);
    if (features.size() != p) {
        throw DimensionError(fmt::format("importance: {} feature names for {} columns",
                                         features.size(), p));
    }

    ImportanceReport report;
    report.baseline_score = score_of(cfg.score, y, model(x));

    const std::size_t n_perm = cfg.n_permutations;
    std::vector<double> scores(p * n_perm);
    std::vector<std::string> errors(p * n_perm);
    const auto task = [&](std::size_t t) {
        const std::size_t j = t / n_perm;
        const std::size_t l = t % n_perm;
        try {
            std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed), static_cast<std::uint64_t>(j),
                              static_cast<std::uint64_t>(l)};
            std::mt19937_64 rng(seq);
            std::vector<std::size_t> perm(x.rows());
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            linalg::Matrix shuffled = x;
            for (std::size_t r = 0; r < x.rows(); ++r) shuffled(r, j) = x(perm[r], j);
            scores[t] = score_of(cfg.score, y, model(shuffled));
        } catch (const std::exception& e) {
            errors[t] = e.what();
        }
    };

    const std::size_t count = p * n_perm;
    const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, count));
    if (threads == 1) {
        for (std::size_t t = 0; t < count; ++t) task(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < count; t = next++) task(t);
            });
        }
    }
    for (std::size_t t = 0; t < count; ++t) {
        if (!errors[t].empty()) {
            throw Error(fmt::format("scoring failed for feature {} permutation {}: {}", t / n_perm,
                                    t % n_perm, errors[t]));
        }
    }

    for (std::size_t j = 0; j < p; ++j) {
        FeatureImportance fi;
        fi.feature = features[j];
        fi.permuted_scores.assign(scores.begin() + static_cast<std::ptrdiff_t>(j * n_perm),
                                  scores.begin() + static_cast<std::ptrdiff_t>((j + 1) * n_perm));
        const double mean = std::accumulate(fi.permuted_scores.begin(), fi.permuted_scores.end(), 0.0) /
                            static_cast<double>(n_perm);
        // Average the drops rather than subtracting the mean score, so identical scores give exactly 0.
        double drop = 0.0;
        for (double s : fi.permuted_scores) drop += report.baseline_score - s;
        fi.importance = drop / static_cast<double>(n_perm);
        if (n_perm > 1) {
            double v = 0.0;
            for (double s : fi.permuted_scores) v += (s - mean) * (s - mean);
            fi.std_across_permutations = std::sqrt(v / static_cast<double>(n_perm - 1));
        }
        report.per_feature.push_back(std::move(fi));
    }

    report.ranking.resize(p);
    std::iota(report.ranking.begin(), report.ranking.end(), 0);
    std::stable_sort(report.ranking.begin(), report.ranking.end(), [&](std::size_t a, std::size_t b) {
        return report.per_feature[a].importance > report.per_feature[b].importance;
    });
    return report;
}

std::vector<PercentageRow> to_percentage_table(const ImportanceReport& report) {
    std::vector<PercentageRow> rows;
    for (std::size_t r = 0; r < report.ranking.size(); ++r) {
        const auto& fi = report.per_feature[report.ranking[r]];
        rows.push_back({r + 1, fi.feature.label, pct4(fi.importance), pct4(fi.std_across_permutations)});
    }
    return rows;
}

void write_importance_csv(const ImportanceReport& report, std::ostream& out) {
    fmt::print(out, "rank,feature,importance_pct,std_pct\n");
    for (const auto& row : to_percentage_table(report)) {
        fmt::print(out, "{},\"{}\",{},{}\n", row.rank, row.feature, row.importance_pct, row.std_pct);
    }
}

}  // namespace co2::importance
