#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "co2/linalg.hpp"

namespace co2::svr {

enum class KernelKind { Linear, Polynomial, Rbf };

/// How the kernel coefficient γ is derived from the training matrix.
enum class GammaMode {
    Scale,  ///< 1 / (n_features · Var(X))
    Auto,   ///< 1 / n_features
    Fixed,  ///< KernelConfig::gamma_value
};

struct KernelConfig {
    KernelKind kind = KernelKind::Rbf;
    int degree = 3;  ///< polynomial only
    GammaMode gamma_mode = GammaMode::Scale;
    double gamma_value = 0.0;  ///< used when gamma_mode == Fixed

    friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

struct SvrConfig {
    double c = 1.0;
    double epsilon = 0.1;
    KernelConfig kernel;
    double tolerance = 1e-3;  ///< stop when the maximal KKT violation falls below this
    std::size_t max_passes = 0;  ///< pair-update cap; 0 means 10·n·1000
};

struct SolverDiagnostics {
    bool converged = true;
    std::size_t iterations = 0;
    double max_violation = 0.0;
};

/// Trained ε-SVR: f(x) = Σ βᵢ K(svᵢ, x) + b.
struct SvrModel {
    linalg::Matrix support_vectors;
    std::vector<double> beta;  ///< αᵢ − αᵢ*, nonzero for every stored row
    double bias = 0.0;
    KernelConfig kernel;
    double gamma = 1.0;  ///< resolved γ
    double c = 1.0;
    double epsilon = 0.1;
    SolverDiagnostics diagnostics;

    [[nodiscard]] std::size_t n_features() const noexcept { return support_vectors.cols(); }
};

[[nodiscard]] std::string_view to_string(KernelKind kind);
[[nodiscard]] std::string_view to_string(GammaMode mode);
[[nodiscard]] KernelKind parse_kernel(std::string_view s);
[[nodiscard]] GammaMode parse_gamma_mode(std::string_view s);

/// linear ⟨x,z⟩, polynomial (γ⟨x,z⟩ + 1)^d, rbf exp(−γ‖x − z‖²).
[[nodiscard]] double kernel_eval(const KernelConfig& cfg, double gamma, std::span<const double> x,
                                 std::span<const double> z);

[[nodiscard]] double resolve_gamma(const KernelConfig& cfg, const linalg::Matrix& train);

/// max(0, |y − f| − ε)
[[nodiscard]] double epsilon_loss(double y, double f, double epsilon);

/// Solves the ε-SVR dual with SMO (pairwise coordinate descent).
///
/// Each step picks the maximal KKT violator i and, among the variables that
/// form a violating pair with it, the j giving the largest second-order
/// decrease of the dual objective. The bias is the mean of yG over free
/// variables, or the midpoint of the feasible interval when none is free.
/// Hitting max_passes leaves diagnostics.converged false; it does not throw.
[[nodiscard]] SvrModel fit(const linalg::Matrix& x, std::span<const double> y,
                           const SvrConfig& cfg);

[[nodiscard]] std::vector<double> predict(const SvrModel& model, const linalg::Matrix& x);
[[nodiscard]] double predict_one(const SvrModel& model, std::span<const double> x);

/// ½‖w‖² + C Σ max(0, |yᵢ − f(xᵢ)| − ε) of the fitted model on (x, y).
[[nodiscard]] double primal_objective(const SvrModel& model, const linalg::Matrix& x,
                                      std::span<const double> y);

/// Text serialisation, format "co2-svr-model 1". Values are written in
/// shortest round-trip decimal form, so save/load is exact.
void save_model(const SvrModel& model, std::ostream& out);
[[nodiscard]] SvrModel load_model(std::istream& in);

}  // namespace co2::svr
