#include "co2/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "co2/error.hpp"

namespace co2::linalg {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
        throw DimensionError(fmt::format("matrix storage has {} values, expected {}x{}",
                                         values_.size(), rows_, cols_));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    values_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw DimensionError("ragged matrix initializer");
        }
        values_.insert(values_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) {
            throw DimensionError(fmt::format("row {} has {} values, expected {}", r,
                                             rows[r].size(), cols));
        }
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

void Matrix::set_column(std::size_t c, std::span<const double> values) {
    if (values.size() != rows_) {
        throw DimensionError("column length does not match row count");
    }
    for (std::size_t r = 0; r < rows_; ++r) {
        (*this)(r, c) = values[r];
    }
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix Matrix::left_columns(std::size_t n) const {
    if (n > cols_) {
        throw DimensionError(fmt::format("requested {} columns from a {}-column matrix", n, cols_));
    }
    Matrix out(rows_, n);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            out(r, c) = (*this)(r, c);
        }
    }
    return out;
}

Matrix Matrix::transpose() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            out(c, r) = (*this)(r, c);
        }
    }
    return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError(fmt::format("cannot multiply {}x{} by {}x{}", a.rows(), a.cols(),
                                         b.rows(), b.cols()));
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

std::vector<double> multiply(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) {
        throw DimensionError(fmt::format("cannot multiply {}x{} by vector of length {}", a.rows(),
                                         a.cols(), x.size()));
    }
    std::vector<double> out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        out[i] = dot(a.row(i), x);
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

ColumnMoments column_moments(const Matrix& x) {
    const std::size_t n = x.rows();
    ColumnMoments m{std::vector<double>(x.cols(), 0.0), std::vector<double>(x.cols(), 0.0)};
    if (n == 0) {
        return m;
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            m.means[c] += x(r, c);
        }
    }
    for (auto& v : m.means) {
        v /= static_cast<double>(n);
    }
    if (n < 2) {
        return m;
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double d = x(r, c) - m.means[c];
            m.stds[c] += d * d;
        }
    }
    for (auto& v : m.stds) {
        v = std::sqrt(v / static_cast<double>(n - 1));
    }
    return m;
}

Matrix center(const Matrix& x, std::span<const double> means) {
    if (means.size() != x.cols()) {
        throw DimensionError("mean vector length does not match column count");
    }
    Matrix out = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < x.cols(); ++c) {
            row[c] -= means[c];
        }
    }
    return out;
}

Matrix covariance(const Matrix& x) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (n < 2) {
        throw LengthError(fmt::format("covariance needs at least 2 rows, got {}", n));
    }
    const auto moments = column_moments(x);
    std::size_t worst = 0;
    for (std::size_t c = 1; c < p; ++c) {
        if (std::abs(moments.means[c]) > std::abs(moments.means[worst])) {
            worst = c;
        }
    }
    double magnitude = 1.0;
    for (double v : x.values()) {
        magnitude = std::max(magnitude, std::abs(v));
    }
    if (p > 0 && std::abs(moments.means[worst]) > 1e-8 * magnitude) {
        throw DegenerateError(fmt::format("covariance input is not centered: column {} has mean {}",
                                          worst, moments.means[worst]));
    }
    Matrix c(p, p);
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = x.row(r);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i; j < p; ++j) {
                c(i, j) += row[i] * row[j];
            }
        }
    }
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            c(i, j) /= denom;
            c(j, i) = c(i, j);
        }
    }
    return c;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (i != j) {
                s += a(i, j) * a(i, j);
            }
        }
    }
    return std::sqrt(s);
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.values()) {
        s += v * v;
    }
    return std::sqrt(s);
}

}  // namespace

EigenDecomposition eigh(const Matrix& c, EighOptions options) {
    const std::size_t n = c.rows();
    if (c.cols() != n) {
        throw DimensionError(fmt::format("eigh needs a square matrix, got {}x{}", n, c.cols()));
    }
    double scale = 1.0;
    for (double v : c.values()) {
        if (!std::isfinite(v)) {
            throw DimensionError("eigh input contains non-finite values");
        }
        scale = std::max(scale, std::abs(v));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(c(i, j) - c(j, i)) > 1e-10 * scale) {
                throw DimensionError(
                    fmt::format("eigh input is not symmetric at ({}, {})", i, j));
            }
        }
    }

    Matrix a = c;
    Matrix v = Matrix::identity(n);
    const double threshold = options.tolerance * frobenius_norm(c);

    int sweep = 0;
    double off = off_diagonal_norm(a);
    while (off > threshold) {
        if (sweep++ >= options.max_sweeps) {
            throw ConvergenceError(
                fmt::format("Jacobi eigensolver did not converge in {} sweeps", options.max_sweeps),
                off);
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) {
                    continue;
                }
                // Rotation angle that annihilates a(p, q).
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = cs * akp - sn * akq;
                    a(k, q) = sn * akp + cs * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = cs * apk - sn * aqk;
                    a(q, k) = sn * apk + cs * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = cs * vkp - sn * vkq;
                    v(k, q) = sn * vkp + cs * vkq;
                }
            }
        }
        off = off_diagonal_norm(a);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        out.eigenvalues[k] = a(src, src);
        std::size_t argmax = 0;
        for (std::size_t r = 1; r < n; ++r) {
            if (std::abs(v(r, src)) > std::abs(v(argmax, src))) {
                argmax = r;
            }
        }
        const double sign = v(argmax, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) {
            out.eigenvectors(r, k) = sign * v(r, src);
        }
    }
    return out;
}

LeastSquaresResult lstsq(const Matrix& a, std::span<const double> y) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (y.size() != m) {
        throw DimensionError(
            fmt::format("lstsq: design has {} rows but response has {}", m, y.size()));
    }
    if (m < n || n == 0) {
        throw SingularityError(
            fmt::format("lstsq: {}x{} design cannot have full column rank", m, n));
    }

    // Columns are equilibrated to unit norm so the rank test below does not
    // depend on the units of each regressor.
    std::vector<double> scale(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            scale[j] += a(i, j) * a(i, j);
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        scale[j] = std::sqrt(scale[j]);
        if (scale[j] == 0.0) {
            throw SingularityError(fmt::format("lstsq: design column {} is all zeros", j));
        }
    }
    Matrix r = a;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            r(i, j) /= scale[j];
        }
    }
    std::vector<double> qty(y.begin(), y.end());
    std::vector<double> v(m);

    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < m; ++i) {
            norm += r(i, j) * r(i, j);
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            continue;  // zero column; caught by the rank check below
        }
        const double alpha = r(j, j) > 0.0 ? -norm : norm;
        for (std::size_t i = j; i < m; ++i) {
            v[i] = r(i, j);
        }
        v[j] -= alpha;
        double vnorm2 = 0.0;
        for (std::size_t i = j; i < m; ++i) {
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) {
            continue;
        }
        for (std::size_t k = j; k < n; ++k) {
            double s = 0.0;
            for (std::size_t i = j; i < m; ++i) {
                s += v[i] * r(i, k);
            }
            s = 2.0 * s / vnorm2;
            for (std::size_t i = j; i < m; ++i) {
                r(i, k) -= s * v[i];
            }
        }
        double s = 0.0;
        for (std::size_t i = j; i < m; ++i) {
            s += v[i] * qty[i];
        }
        s = 2.0 * s / vnorm2;
        for (std::size_t i = j; i < m; ++i) {
            qty[i] -= s * v[i];
        }
    }

    double max_diag = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        max_diag = std::max(max_diag, std::abs(r(j, j)));
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(r(j, j)) <= 1e-10 * max_diag || max_diag == 0.0) {
            throw SingularityError(
                fmt::format("lstsq: design matrix is rank deficient at column {}", j));
        }
    }

    LeastSquaresResult out;
    out.coefficients.assign(n, 0.0);
    for (std::size_t jj = n; jj-- > 0;) {
        double s = qty[jj];
        for (std::size_t k = jj + 1; k < n; ++k) {
            s -= r(jj, k) * out.coefficients[k];
        }
        out.coefficients[jj] = s / r(jj, jj);
    }
    for (std::size_t j = 0; j < n; ++j) {
        out.coefficients[j] /= scale[j];
    }

    const auto fitted = multiply(a, out.coefficients);
    out.residuals.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.residuals[i] = y[i] - fitted[i];
        out.rss += out.residuals[i] * out.residuals[i];
    }

    // (AᵀA)⁻¹ = R⁻¹R⁻ᵀ with R⁻¹ upper triangular.
    Matrix rinv(n, n);
    for (std::size_t col = 0; col < n; ++col) {
        rinv(col, col) = 1.0 / r(col, col);
        for (std::size_t row = col; row-- > 0;) {
            double s = 0.0;
            for (std::size_t k = row + 1; k <= col; ++k) {
                s += r(row, k) * rinv(k, col);
            }
            rinv(row, col) = -s / r(row, row);
        }
    }
    out.unscaled_covariance = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = j; k < n; ++k) {
                s += rinv(i, k) * rinv(j, k);
            }
            out.unscaled_covariance(i, j) = s / (scale[i] * scale[j]);
            out.unscaled_covariance(j, i) = s / (scale[i] * scale[j]);
        }
    }
    return out;
}

}  // namespace co2::linalg
