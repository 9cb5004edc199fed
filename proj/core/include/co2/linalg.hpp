#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace co2::linalg {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept {
        return values_[r * cols_ + c];
    }

    [[nodiscard]] std::span<double> row(std::size_t r) noexcept {
        return {values_.data() + r * cols_, cols_};
    }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return {values_.data() + r * cols_, cols_};
    }

    [[nodiscard]] std::vector<double> column(std::size_t c) const;
    void set_column(std::size_t c, std::span<const double> values);

    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

    /// Rows selected by index, in the given order.
    [[nodiscard]] Matrix select_rows(std::span<const std::size_t> indices) const;
    /// First `n` columns.
    [[nodiscard]] Matrix left_columns(std::size_t n) const;

    [[nodiscard]] Matrix transpose() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

[[nodiscard]] Matrix multiply(const Matrix& a, const Matrix& b);
[[nodiscard]] std::vector<double> multiply(const Matrix& a, std::span<const double> x);
[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double squared_distance(std::span<const double> a, std::span<const double> b);

/// Per-column mean and sample (n-1) standard deviation.
struct ColumnMoments {
    std::vector<double> means;
    std::vector<double> stds;
};

[[nodiscard]] ColumnMoments column_moments(const Matrix& x);

/// Subtract `means` from each row.
[[nodiscard]] Matrix center(const Matrix& x, std::span<const double> means);

/// C = XᵀX / (n-1) of an already centered matrix.
///
/// Throws LengthError for fewer than two rows and DegenerateError naming the
/// worst column when a column mean exceeds 1e-8 · max(1, max |x|).
[[nodiscard]] Matrix covariance(const Matrix& x);

/// Eigen-decomposition of a symmetric matrix.
///
/// Eigenvalues are sorted descending (ties keep the original diagonal order)
/// and eigenvectors are stored as columns, each flipped so that its
/// largest-magnitude entry is positive.
struct EigenDecomposition {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;
};

struct EighOptions {
    int max_sweeps = 100;
    double tolerance = 1e-12;  ///< off-diagonal Frobenius norm, relative to ‖C‖_F
};

/// Cyclic Jacobi eigensolver for symmetric matrices.
[[nodiscard]] EigenDecomposition eigh(const Matrix& c, EighOptions options = {});

struct LeastSquaresResult {
    std::vector<double> coefficients;
    std::vector<double> residuals;
    double rss = 0.0;
    /// (AᵀA)⁻¹, needed for coefficient standard errors.
    Matrix unscaled_covariance;
};

/// Minimises ‖y - A·β‖₂ using a Householder QR factorisation.
///
/// Requires rows >= cols and full column rank; a rank-deficient design
/// raises SingularityError. Rank is judged after scaling every column to
/// unit norm: |R_jj| <= 1e-10 · max |R_ii| counts as deficient.
[[nodiscard]] LeastSquaresResult lstsq(const Matrix& a, std::span<const double> y);

}  // namespace co2::linalg
