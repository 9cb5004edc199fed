#include "co2/svr.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "co2/error.hpp"

namespace co2::svr {

std::string_view to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::Linear: return "linear";
        case KernelKind::Polynomial: return "poly";
        case KernelKind::Rbf: return "rbf";
    }
    return "?";
}

std::string_view to_string(GammaMode mode) {
    switch (mode) {
        case GammaMode::Scale: return "scale";
        case GammaMode::Auto: return "auto";
        case GammaMode::Fixed: return "fixed";
    }
    return "?";
}

KernelKind parse_kernel(std::string_view s) {
    if (s == "linear") return KernelKind::Linear;
    if (s == "poly" || s == "polynomial") return KernelKind::Polynomial;
    if (s == "rbf") return KernelKind::Rbf;
    throw ConfigError(fmt::format("unknown kernel '{}'", s));
}

GammaMode parse_gamma_mode(std::string_view s) {
    if (s == "scale") return GammaMode::Scale;
    if (s == "auto") return GammaMode::Auto;
    if (s == "fixed") return GammaMode::Fixed;
    throw ConfigError(fmt::format("unknown gamma mode '{}'", s));
}

double kernel_eval(const KernelConfig& cfg, double gamma, std::span<const double> x,
                   std::span<const double> z) {
    if (x.size() != z.size()) {
        throw DimensionError(
            fmt::format("kernel arguments have dimensions {} and {}", x.size(), z.size()));
    }
    switch (cfg.kind) {
        case KernelKind::Linear:
            return linalg::dot(x, z);
        case KernelKind::Polynomial: {
            const double base = gamma * linalg::dot(x, z) + 1.0;
            double out = 1.0;
            for (int i = 0; i < cfg.degree; ++i) {
                out *= base;
            }
            return out;
        }
        case KernelKind::Rbf:
            return std::exp(-gamma * linalg::squared_distance(x, z));
    }
    return 0.0;
}

double resolve_gamma(const KernelConfig& cfg, const linalg::Matrix& train) {
    if (train.empty()) {
        throw LengthError("cannot resolve gamma from an empty training matrix");
    }
    const auto n_features = static_cast<double>(train.cols());
    switch (cfg.gamma_mode) {
        case GammaMode::Auto:
            return 1.0 / n_features;
        case GammaMode::Fixed:
            if (!(cfg.gamma_value > 0.0)) {
                throw ConfigError(fmt::format("fixed gamma must be positive, got {}", cfg.gamma_value));
            }
            return cfg.gamma_value;
        case GammaMode::Scale: {
            // population variance of all entries
            const auto& v = train.values();
            double mean = 0.0;
            for (double e : v) {
                mean += e;
            }
            mean /= static_cast<double>(v.size());
            double var = 0.0;
            for (double e : v) {
                var += (e - mean) * (e - mean);
            }
            var /= static_cast<double>(v.size());
            if (!(var > 0.0)) {
                throw DegenerateError("gamma 'scale' needs a training matrix with nonzero variance");
            }
            return 1.0 / (n_features * var);
        }
    }
    return 1.0;
}

double epsilon_loss(double y, double f, double epsilon) {
    return std::max(0.0, std::abs(y - f) - epsilon);
}

namespace {

constexpr double kTau = 1e-12;

// SMO over the 2n-variable dual
//   min ½ αᵀQα + pᵀα   s.t.  Σ sₜαₜ = 0,  0 ≤ αₜ ≤ C
// Index t < n is αₜ (sₜ = +1, pₜ = ε − yₜ); t ≥ n is α*ₜ₋ₙ (sₜ = −1,
// pₜ = ε + yₜ₋ₙ). Q_ts = sₜ s_s K(t mod n, s mod n).
//
// Bound variables that cannot join a violating pair are shrunk out of the
// active set; their gradients are rebuilt before the final optimality check.
class SmoSolver {
public:
    SmoSolver(const linalg::Matrix& gram, std::span<const double> y, double c, double epsilon)
        : n_(y.size()), l_(2 * n_), gram_(gram), c_(c), alpha_(l_, 0.0), grad_(l_), p_(l_),
          sign_(l_), diag_(n_) {
        for (std::size_t i = 0; i < n_; ++i) {
            p_[i] = epsilon - y[i];
            p_[i + n_] = epsilon + y[i];
            sign_[i] = 1.0;
            sign_[i + n_] = -1.0;
            diag_[i] = gram_(i, i);
        }
        grad_ = p_;
        active_.resize(l_);
        for (std::size_t t = 0; t < l_; ++t) active_[t] = t;
    }

    SolverDiagnostics run(double tolerance, std::size_t max_iter) {
        SolverDiagnostics diag;
        std::size_t counter = std::min(l_, std::size_t{1000});
        bool unshrunk = false;
        while (true) {
            if (--counter == 0) {
                counter = std::min(l_, std::size_t{1000});
                shrink(tolerance, unshrunk);
            }
            std::size_t i = kNone;
            std::size_t j = kNone;
            double violation = select_working_set(i, j);
            if (violation < tolerance || j == kNone) {
                // optimal on the active set; recheck on the full problem
                reactivate_all();
                violation = select_working_set(i, j);
                if (violation < tolerance || j == kNone) {
                    diag.max_violation = std::max(violation, 0.0);
                    diag.converged = true;
                    break;
                }
                counter = 1;
            }
            if (diag.iterations >= max_iter) {
                reactivate_all();
                select_working_set(i, j);
                diag.max_violation = max_violation();
                diag.converged = false;
                break;
            }
            update_pair(i, j);
            ++diag.iterations;
        }
        return diag;
    }

    [[nodiscard]] double beta(std::size_t i) const { return alpha_[i] - alpha_[i + n_]; }

    // Requires every gradient to be current (true after run()).
    [[nodiscard]] double bias() const {
        double ub = std::numeric_limits<double>::infinity();
        double lb = -std::numeric_limits<double>::infinity();
        double sum_free = 0.0;
        std::size_t n_free = 0;
        for (std::size_t t = 0; t < l_; ++t) {
            const double yg = sign_[t] * grad_[t];
            if (upper(t)) {
                if (sign_[t] < 0) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else if (lower(t)) {
                if (sign_[t] > 0) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else {
                ++n_free;
                sum_free += yg;
            }
        }
        const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
        return -rho;
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    [[nodiscard]] bool upper(std::size_t t) const { return alpha_[t] >= c_; }
    [[nodiscard]] bool lower(std::size_t t) const { return alpha_[t] <= 0.0; }
    [[nodiscard]] std::size_t base(std::size_t t) const { return t < n_ ? t : t - n_; }

    // I_up: sₜ = +1 below C or sₜ = −1 above 0; I_low the mirror.
    [[nodiscard]] bool in_up(std::size_t t) const { return sign_[t] > 0 ? !upper(t) : !lower(t); }
    [[nodiscard]] bool in_low(std::size_t t) const { return sign_[t] > 0 ? !lower(t) : !upper(t); }

    double max_violation() const {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmax2 = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < l_; ++t) {
            if (in_up(t)) gmax = std::max(gmax, -sign_[t] * grad_[t]);
            if (in_low(t)) gmax2 = std::max(gmax2, sign_[t] * grad_[t]);
        }
        return std::max(gmax + gmax2, 0.0);
    }

    // Returns m(α) − M(α) over the active set.
    double select_working_set(std::size_t& out_i, std::size_t& out_j) const {
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = kNone;
        for (std::size_t t : active_) {
            if (in_up(t)) {
                const double v = -sign_[t] * grad_[t];
                if (v >= gmax) {
                    gmax = v;
                    i = t;
                }
            }
        }
        out_i = i;
        out_j = kNone;
        if (i == kNone) {
            return 0.0;
        }

        const std::size_t bi = base(i);
        const double si = sign_[i];
        const double kii = diag_[bi];
        const double* ki = gram_.row(bi).data();
        double gmax2 = -std::numeric_limits<double>::infinity();
        double best_obj = std::numeric_limits<double>::infinity();
        std::size_t j = kNone;
        for (std::size_t t : active_) {
            if (!in_low(t)) continue;
            const double st = sign_[t];
            const double yg = st * grad_[t];
            gmax2 = std::max(gmax2, yg);
            const double diff = gmax + yg;
            if (diff > 0.0) {
                const std::size_t bt = base(t);
                double quad = kii + diag_[bt] - 2.0 * si * st * ki[bt];
                if (quad <= 0.0) quad = kTau;
                const double obj = -(diff * diff) / quad;
                if (obj <= best_obj) {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        out_j = j;
        return gmax + gmax2;
    }

    void update_pair(std::size_t i, std::size_t j) {
        const std::size_t bi = base(i);
        const std::size_t bj = base(j);
        const double si = sign_[i];
        const double sj = sign_[j];
        const double qii = diag_[bi];
        const double qjj = diag_[bj];
        const double qij = si * sj * gram_(bi, bj);
        double& ai = alpha_[i];
        double& aj = alpha_[j];
        const double gi = grad_[i];
        const double gj = grad_[j];
        const double old_i = ai;
        const double old_j = aj;

        if (si != sj) {
            double quad = qii + qjj + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-gi - gj) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) { aj = 0.0; ai = diff; }
            } else if (ai < 0.0) {
                ai = 0.0; aj = -diff;
            }
            if (diff > 0.0) {
                if (ai > c_) { ai = c_; aj = c_ - diff; }
            } else if (aj > c_) {
                aj = c_; ai = c_ + diff;
            }
        } else {
            double quad = qii + qjj - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (gi - gj) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > c_) {
                if (ai > c_) { ai = c_; aj = sum - c_; }
            } else if (aj < 0.0) {
                aj = 0.0; ai = sum;
            }
            if (sum > c_) {
                if (aj > c_) { aj = c_; ai = sum - c_; }
            } else if (ai < 0.0) {
                ai = 0.0; aj = sum;
            }
        }

        // G_t += sₜ (K(t, bi) sᵢΔαᵢ + K(t, bj) sⱼΔαⱼ) on the active set
        const double wi = si * (ai - old_i);
        const double wj = sj * (aj - old_j);
        const double* ki = gram_.row(bi).data();
        const double* kj = gram_.row(bj).data();
        for (std::size_t t : active_) {
            const std::size_t bt = base(t);
            grad_[t] += sign_[t] * (ki[bt] * wi + kj[bt] * wj);
        }
    }

    // Inactive gradients are stale; rebuild them from the nonzero α.
    void reconstruct_gradient() {
        if (active_.size() == l_) return;
        std::vector<char> is_active(l_, 0);
        for (std::size_t t : active_) is_active[t] = 1;
        std::vector<double> w(n_, 0.0);  // β = α − α*
        for (std::size_t i = 0; i < n_; ++i) w[i] = alpha_[i] - alpha_[i + n_];
        std::vector<std::size_t> nz;
        for (std::size_t i = 0; i < n_; ++i) {
            if (w[i] != 0.0) nz.push_back(i);
        }
        for (std::size_t t = 0; t < l_; ++t) {
            if (is_active[t]) continue;
            const double* kt = gram_.row(base(t)).data();
            double s = 0.0;
            for (std::size_t i : nz) s += kt[i] * w[i];
            grad_[t] = p_[t] + sign_[t] * s;
        }
    }

    void reactivate_all() {
        reconstruct_gradient();
        if (active_.size() == l_) return;
        active_.resize(l_);
        for (std::size_t t = 0; t < l_; ++t) active_[t] = t;
    }

    [[nodiscard]] bool can_shrink(std::size_t t, double gmax1, double gmax2) const {
        if (upper(t)) {
            return sign_[t] > 0 ? -grad_[t] > gmax1 : -grad_[t] > gmax2;
        }
        if (lower(t)) {
            return sign_[t] > 0 ? grad_[t] > gmax2 : grad_[t] > gmax1;
        }
        return false;
    }

    void shrink(double tolerance, bool& unshrunk) {
        double gmax1 = -std::numeric_limits<double>::infinity();  // max over I_up of −sG
        double gmax2 = -std::numeric_limits<double>::infinity();  // max over I_low of sG
        for (std::size_t t : active_) {
            if (in_up(t)) gmax1 = std::max(gmax1, -sign_[t] * grad_[t]);
            if (in_low(t)) gmax2 = std::max(gmax2, sign_[t] * grad_[t]);
        }
        if (!unshrunk && gmax1 + gmax2 <= tolerance * 10.0) {
            unshrunk = true;
            reactivate_all();
        }
        std::erase_if(active_, [&](std::size_t t) { return can_shrink(t, gmax1, gmax2); });
    }

    std::size_t n_;
    std::size_t l_;
    const linalg::Matrix& gram_;
    double c_;
    std::vector<double> alpha_;
    std::vector<double> grad_;
    std::vector<double> p_;
    std::vector<double> sign_;
    std::vector<double> diag_;
    std::vector<std::size_t> active_;
};

void check_config(const SvrConfig& cfg) {
    if (!(cfg.c > 0.0)) throw ConfigError(fmt::format("C must be positive, got {}", cfg.c));
    if (!(cfg.epsilon >= 0.0))
        throw ConfigError(fmt::format("epsilon must be non-negative, got {}", cfg.epsilon));
    if (!(cfg.tolerance > 0.0))
        throw ConfigError(fmt::format("tolerance must be positive, got {}", cfg.tolerance));
    if (cfg.kernel.kind == KernelKind::Polynomial && cfg.kernel.degree < 1)
        throw ConfigError(fmt::format("polynomial degree must be >= 1, got {}", cfg.kernel.degree));
}

}  // namespace

SvrModel fit(const linalg::Matrix& x, std::span<const double> y, const SvrConfig& cfg) {
    check_config(cfg);
    const std::size_t n = x.rows();
    if (n == 0) {
        throw LengthError("SVR fit needs at least one training row");
    }
    if (y.size() != n) {
        throw DimensionError(fmt::format("SVR fit: {} rows but {} targets", n, y.size()));
    }
    for (double v : x.values()) {
        if (!std::isfinite(v)) throw DimensionError("SVR fit: non-finite feature value");
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw DimensionError("SVR fit: non-finite target value");
    }

    SvrModel model;
    model.kernel = cfg.kernel;
    model.c = cfg.c;
    model.epsilon = cfg.epsilon;
    model.gamma = cfg.kernel.kind == KernelKind::Linear ? 1.0 : resolve_gamma(cfg.kernel, x);

    linalg::Matrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            gram(i, j) = kernel_eval(cfg.kernel, model.gamma, x.row(i), x.row(j));
            gram(j, i) = gram(i, j);
        }
    }

    SmoSolver solver(gram, y, cfg.c, cfg.epsilon);
    const std::size_t cap = cfg.max_passes > 0 ? cfg.max_passes : 10 * n * 1000;
    model.diagnostics = solver.run(cfg.tolerance, cap);
    model.bias = solver.bias();

    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < n; ++i) {
        const double b = solver.beta(i);
        if (b != 0.0) {
            support.push_back(i);
            model.beta.push_back(b);
        }
    }
    model.support_vectors = x.select_rows(support);
    if (support.empty()) {
        model.support_vectors = linalg::Matrix(0, x.cols());
    }
    return model;
}

double predict_one(const SvrModel& model, std::span<const double> x) {
    if (x.size() != model.n_features()) {
        throw DimensionError(fmt::format("SVR predict: model expects {} features, got {}",
                                         model.n_features(), x.size()));
    }
    double f = model.bias;
    for (std::size_t s = 0; s < model.beta.size(); ++s) {
        f += model.beta[s] * kernel_eval(model.kernel, model.gamma, model.support_vectors.row(s), x);
    }
    return f;
}

std::vector<double> predict(const SvrModel& model, const linalg::Matrix& x) {
    if (x.cols() != model.n_features()) {
        throw DimensionError(fmt::format("SVR predict: model expects {} features, got {}",
                                         model.n_features(), x.cols()));
    }
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        out[r] = predict_one(model, x.row(r));
    }
    return out;
}

double primal_objective(const SvrModel& model, const linalg::Matrix& x,
                        std::span<const double> y) {
    double w2 = 0.0;
    const std::size_t m = model.beta.size();
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            w2 += model.beta[a] * model.beta[b] *
                  kernel_eval(model.kernel, model.gamma, model.support_vectors.row(a),
                              model.support_vectors.row(b));
        }
    }
    const auto f = predict(model, x);
    double loss = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        loss += epsilon_loss(y[i], f[i], model.epsilon);
    }
    return 0.5 * w2 + model.c * loss;
}

void save_model(const SvrModel& model, std::ostream& out) {
    fmt::print(out, "co2-svr-model 1\n");
    fmt::print(out, "kernel {}\n", to_string(model.kernel.kind));
    fmt::print(out, "degree {}\n", model.kernel.degree);
    fmt::print(out, "gamma_mode {}\n", to_string(model.kernel.gamma_mode));
    fmt::print(out, "gamma_value {}\n", model.kernel.gamma_value);
    fmt::print(out, "gamma {}\n", model.gamma);
    fmt::print(out, "c {}\n", model.c);
    fmt::print(out, "epsilon {}\n", model.epsilon);
    fmt::print(out, "bias {}\n", model.bias);
    fmt::print(out, "converged {}\n", model.diagnostics.converged ? 1 : 0);
    fmt::print(out, "iterations {}\n", model.diagnostics.iterations);
    fmt::print(out, "max_violation {}\n", model.diagnostics.max_violation);
    fmt::print(out, "n_features {}\n", model.n_features());
    fmt::print(out, "n_support {}\n", model.beta.size());
    for (std::size_t s = 0; s < model.beta.size(); ++s) {
        fmt::print(out, "{}", model.beta[s]);
        for (double v : model.support_vectors.row(s)) {
            fmt::print(out, " {}", v);
        }
        out << '\n';
    }
}

namespace {

template <typename T>
T read_field(std::istream& in, std::string_view key) {
    std::string name;
    T value{};
    if (!(in >> name) || name != key || !(in >> value)) {
        throw ParseError(fmt::format("SVR model: expected field '{}'", key));
    }
    return value;
}

}  // namespace

SvrModel load_model(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "co2-svr-model") {
        throw ParseError("SVR model: bad header");
    }
    if (version != 1) {
        throw ParseError(fmt::format("SVR model: unsupported version {}", version));
    }
    SvrModel m;
    m.kernel.kind = parse_kernel(read_field<std::string>(in, "kernel"));
    m.kernel.degree = read_field<int>(in, "degree");
    m.kernel.gamma_mode = parse_gamma_mode(read_field<std::string>(in, "gamma_mode"));
    m.kernel.gamma_value = read_field<double>(in, "gamma_value");
    m.gamma = read_field<double>(in, "gamma");
    m.c = read_field<double>(in, "c");
    m.epsilon = read_field<double>(in, "epsilon");
    m.bias = read_field<double>(in, "bias");
    m.diagnostics.converged = read_field<int>(in, "converged") != 0;
    m.diagnostics.iterations = read_field<std::size_t>(in, "iterations");
    m.diagnostics.max_violation = read_field<double>(in, "max_violation");
    const auto d = read_field<std::size_t>(in, "n_features");
    const auto n_sv = read_field<std::size_t>(in, "n_support");
    m.support_vectors = linalg::Matrix(n_sv, d);
    m.beta.resize(n_sv);
    for (std::size_t s = 0; s < n_sv; ++s) {
        if (!(in >> m.beta[s])) {
            throw ParseError(fmt::format("SVR model: truncated at support vector {}", s));
        }
        for (std::size_t j = 0; j < d; ++j) {
            if (!(in >> m.support_vectors(s, j))) {
                throw ParseError(fmt::format("SVR model: truncated at support vector {}", s));
            }
        }
    }
    return m;
}

}  // namespace co2::svr
