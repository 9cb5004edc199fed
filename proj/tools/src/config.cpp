#include "co2/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "co2/error.hpp"

namespace co2::cli {

namespace pt = boost::property_tree;

StandardizeMode parse_standardize_mode(std::string_view s) {
    if (s == "global") return StandardizeMode::Global;
    if (s == "train-only" || s == "train_only") return StandardizeMode::TrainOnly;
    throw ConfigError(fmt::format("unknown standardize mode '{}'", s));
}

std::string_view to_string(StandardizeMode m) {
    return m == StandardizeMode::Global ? "global" : "train-only";
}

void RunConfig::validate() const {
    if (svr && grid) {
        throw ConfigError("config has both a fixed [svr] section and a [grid] section");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError(fmt::format("test_fraction must lie in (0, 1), got {}", test_fraction));
    }
    if (folds < 2) throw ConfigError(fmt::format("folds must be at least 2, got {}", folds));
    if (pcr.k && *pcr.k == 0) throw ConfigError("pcr.k must be positive");
    if (!(pcr.target_evr > 0.0 && pcr.target_evr <= 1.0)) {
        throw ConfigError(fmt::format("pcr.target_evr must lie in (0, 1], got {}", pcr.target_evr));
    }
    if (importance.n_permutations < 1) throw ConfigError("importance.n_permutations must be >= 1");
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    if (out.empty()) throw ConfigError(fmt::format("empty list '{}'", s));
    return out;
}

template <typename T>
T number(const std::string& key, const std::string& s) {
    std::istringstream in(s);
    T v{};
    if (!(in >> v) || !(in >> std::ws).eof()) {
        throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, s));
    }
    return v;
}

void check_keys(const pt::ptree& section, const std::string& name,
                const std::set<std::string>& allowed) {
    for (const auto& [key, _] : section) {
        if (!allowed.contains(key)) {
            throw ConfigError(fmt::format("unknown key '{}' in [{}]", key, name));
        }
    }
}

// gamma = scale | auto | <positive number>
void set_gamma(svr::KernelConfig& k, const std::string& s) {
    if (s == "scale" || s == "auto") {
        k.gamma_mode = svr::parse_gamma_mode(s);
        return;
    }
    k.gamma_mode = svr::GammaMode::Fixed;
    k.gamma_value = number<double>("gamma", s);
}

svr::SvrConfig parse_svr(const pt::ptree& s) {
    check_keys(s, "svr", {"kernel", "c", "gamma", "degree", "epsilon", "tolerance", "max_passes"});
    svr::SvrConfig cfg;
    for (const auto& [key, node] : s) {
        const auto v = node.data();
        if (key == "kernel") cfg.kernel.kind = svr::parse_kernel(v);
        else if (key == "c") cfg.c = number<double>("svr.c", v);
        else if (key == "gamma") set_gamma(cfg.kernel, v);
        else if (key == "degree") cfg.kernel.degree = number<int>("svr.degree", v);
        else if (key == "epsilon") cfg.epsilon = number<double>("svr.epsilon", v);
        else if (key == "tolerance") cfg.tolerance = number<double>("svr.tolerance", v);
        else if (key == "max_passes") cfg.max_passes = number<std::size_t>("svr.max_passes", v);
    }
    return cfg;
}

selection::Grid parse_grid(const pt::ptree& s) {
    check_keys(s, "grid", {"kernels", "c_values", "gamma", "degrees", "epsilon", "tolerance",
                           "max_passes", "threads"});
    selection::Grid g;
    for (const auto& [key, node] : s) {
        const auto v = node.data();
        if (key == "kernels") {
            g.kernels.clear();
            for (const auto& e : split_list(v)) g.kernels.push_back(svr::parse_kernel(e));
        } else if (key == "c_values") {
            g.c_values.clear();
            for (const auto& e : split_list(v)) g.c_values.push_back(number<double>("grid.c_values", e));
        } else if (key == "gamma") {
            g.gamma_modes.clear();
            for (const auto& e : split_list(v)) g.gamma_modes.push_back(svr::parse_gamma_mode(e));
        } else if (key == "degrees") {
            g.degrees.clear();
            for (const auto& e : split_list(v)) g.degrees.push_back(number<int>("grid.degrees", e));
        } else if (key == "epsilon") {
            g.epsilon = number<double>("grid.epsilon", v);
        } else if (key == "tolerance") {
            g.tolerance = number<double>("grid.tolerance", v);
        } else if (key == "max_passes") {
            g.max_passes = number<std::size_t>("grid.max_passes", v);
        } else if (key == "threads") {
            g.threads = number<std::size_t>("grid.threads", v);
        }
    }
    return g;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
    }

    RunConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError(fmt::format("key '{}' outside any section", section));
        }
        if (section == "data") {
            check_keys(body, "data", {"input", "output", "test_fraction", "standardize", "seed", "folds"});
            for (const auto& [key, node] : body) {
                const auto v = node.data();
                if (key == "input") cfg.input_path = resolve(base_dir, v);
                else if (key == "output") cfg.output_dir = resolve(base_dir, v);
                else if (key == "test_fraction") cfg.test_fraction = number<double>("data.test_fraction", v);
                else if (key == "standardize") cfg.standardize_mode = parse_standardize_mode(v);
                else if (key == "seed") cfg.seed = number<std::uint64_t>("data.seed", v);
                else if (key == "folds") cfg.folds = number<std::size_t>("data.folds", v);
            }
        } else if (section == "svr") {
            cfg.svr = parse_svr(body);
        } else if (section == "grid") {
            cfg.grid = parse_grid(body);
        } else if (section == "pcr") {
            check_keys(body, "pcr", {"k", "target_evr"});
            if (body.count("k") && body.count("target_evr")) {
                throw ConfigError("[pcr] sets both k and target_evr");
            }
            for (const auto& [key, node] : body) {
                if (key == "k") cfg.pcr.k = number<std::size_t>("pcr.k", node.data());
                else cfg.pcr.target_evr = number<double>("pcr.target_evr", node.data());
            }
        } else if (section == "adf") {
            check_keys(body, "adf", {"regression", "max_lag", "lag_selection"});
            for (const auto& [key, node] : body) {
                const auto v = node.data();
                if (key == "regression") {
                    if (v == "c") cfg.adf.regression_kind = stationarity::RegressionKind::Constant;
                    else if (v == "ct") cfg.adf.regression_kind = stationarity::RegressionKind::ConstantAndTrend;
                    else throw ConfigError(fmt::format("adf.regression must be c or ct, got '{}'", v));
                } else if (key == "max_lag") {
                    if (v != "auto") cfg.adf.max_lag = number<std::size_t>("adf.max_lag", v);
                } else {
                    if (v == "aic") cfg.adf.lag_selection = stationarity::LagSelection::Aic;
                    else if (v == "fixed") cfg.adf.lag_selection = stationarity::LagSelection::Fixed;
                    else throw ConfigError(fmt::format("adf.lag_selection must be aic or fixed, got '{}'", v));
                }
            }
        } else if (section == "importance") {
            check_keys(body, "importance", {"n_permutations", "score", "threads"});
            for (const auto& [key, node] : body) {
                const auto v = node.data();
                if (key == "n_permutations") {
                    cfg.importance.n_permutations = number<std::size_t>("importance.n_permutations", v);
                } else if (key == "score") {
                    cfg.importance.score = importance::parse_score(v);
                } else {
                    cfg.importance.threads = number<std::size_t>("importance.threads", v);
                }
            }
        } else {
            throw ConfigError(fmt::format("unknown config section [{}]", section));
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
    return parse_config(in, path.parent_path());
}

namespace {

std::string gamma_text(const svr::KernelConfig& k) {
    if (k.gamma_mode == svr::GammaMode::Fixed) return fmt::format("{}", k.gamma_value);
    return std::string(svr::to_string(k.gamma_mode));
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F f) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += f(v[i]);
    }
    return out;
}

}  // namespace

void write_config(const RunConfig& cfg, std::ostream& out) {
    fmt::print(out, "[data]\ninput = {}\ntest_fraction = {}\nstandardize = {}\nseed = {}\nfolds = {}\n",
               cfg.input_path.filename().string(), cfg.test_fraction, to_string(cfg.standardize_mode),
               cfg.seed, cfg.folds);
    if (cfg.svr) {
        const auto& s = *cfg.svr;
        fmt::print(out, "\n[svr]\nkernel = {}\nc = {}\ngamma = {}\ndegree = {}\nepsilon = {}\n"
                        "tolerance = {}\nmax_passes = {}\n",
                   svr::to_string(s.kernel.kind), s.c, gamma_text(s.kernel), s.kernel.degree,
                   s.epsilon, s.tolerance, s.max_passes);
    }
    if (cfg.grid) {
        const auto& g = *cfg.grid;
        fmt::print(out, "\n[grid]\nkernels = {}\nc_values = {}\ngamma = {}\ndegrees = {}\n"
                        "epsilon = {}\ntolerance = {}\nmax_passes = {}\n",
                   join(g.kernels, [](auto k) { return std::string(svr::to_string(k)); }),
                   join(g.c_values, [](double c) { return fmt::format("{}", c); }),
                   join(g.gamma_modes, [](auto m) { return std::string(svr::to_string(m)); }),
                   join(g.degrees, [](int d) { return fmt::format("{}", d); }), g.epsilon,
                   g.tolerance, g.max_passes);
    }
    fmt::print(out, "\n[pcr]\n");
    if (cfg.pcr.k) fmt::print(out, "k = {}\n", *cfg.pcr.k);
    else fmt::print(out, "target_evr = {}\n", cfg.pcr.target_evr);
    fmt::print(out, "\n[adf]\nregression = {}\nmax_lag = {}\nlag_selection = {}\n",
               cfg.adf.regression_kind == stationarity::RegressionKind::Constant ? "c" : "ct",
               cfg.adf.max_lag ? fmt::format("{}", *cfg.adf.max_lag) : std::string("auto"),
               cfg.adf.lag_selection == stationarity::LagSelection::Aic ? "aic" : "fixed");
    fmt::print(out, "\n[importance]\nn_permutations = {}\nscore = {}\n",
               cfg.importance.n_permutations, importance::to_string(cfg.importance.score));
}

}  // namespace co2::cli
