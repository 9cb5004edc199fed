#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "co2/error.hpp"
#include "co2/linalg.hpp"

using co2::linalg::Matrix;
namespace la = co2::linalg;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> v(r * c);
    for (auto& e : v) e = z(rng);
    return Matrix(r, c, std::move(v));
}

Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
    auto a = random_matrix(n, n, seed);
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

Matrix centered(const Matrix& x) { return la::center(x, la::column_moments(x).means); }

// Gaussian elimination with partial pivoting; independent of the QR path.
Matrix inverse(Matrix a) {
    const std::size_t n = a.rows();
    Matrix inv = Matrix::identity(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        for (std::size_t k = 0; k < n; ++k) {
            std::swap(a(c, k), a(piv, k));
            std::swap(inv(c, k), inv(piv, k));
        }
        const double d = a(c, c);
        for (std::size_t k = 0; k < n; ++k) {
            a(c, k) /= d;
            inv(c, k) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a(r, c);
            for (std::size_t k = 0; k < n; ++k) {
                a(r, k) -= f * a(c, k);
                inv(r, k) -= f * inv(c, k);
            }
        }
    }
    return inv;
}

double determinant(Matrix a) {
    const std::size_t n = a.rows();
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        if (piv != c) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a(c, k), a(piv, k));
            det = -det;
        }
        det *= a(c, c);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a(r, c) / a(c, c);
            for (std::size_t k = c; k < n; ++k) a(r, k) -= f * a(c, k);
        }
    }
    return det;
}

}  // namespace

TEST(Matrix, ShapeAndAccess) {
    Matrix m{{1, 2, 3}, {4, 5, 6}};
    EXPECT_EQ(m.rows(), 2u);
    EXPECT_EQ(m.cols(), 3u);
    EXPECT_EQ(m(1, 2), 6.0);
    EXPECT_EQ(m.column(1), (std::vector<double>{2, 5}));
    EXPECT_EQ(m.transpose()(2, 0), 3.0);
    EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), co2::DimensionError);
    EXPECT_THROW((Matrix{{1, 2}, {3}}), co2::DimensionError);
}

TEST(Matrix, MultiplyDimensionMismatch) {
    EXPECT_THROW((void)la::multiply(Matrix(2, 3), Matrix(2, 3)), co2::DimensionError);
    const auto p = la::multiply(Matrix{{1, 2}, {3, 4}}, Matrix{{5}, {6}});
    EXPECT_EQ(p(0, 0), 17.0);
    EXPECT_EQ(p(1, 0), 39.0);
}

TEST(Covariance, SingleCenteredColumn) {
    const auto c = la::covariance(Matrix{{-1}, {0}, {1}});
    EXPECT_DOUBLE_EQ(c(0, 0), 1.0);
}

TEST(Covariance, IdenticalColumnsGiveEqualEntries) {
    const auto c = la::covariance(Matrix{{-2, -2}, {0.5, 0.5}, {1.5, 1.5}});
    EXPECT_DOUBLE_EQ(c(0, 0), c(0, 1));
    EXPECT_DOUBLE_EQ(c(0, 0), c(1, 0));
    EXPECT_DOUBLE_EQ(c(0, 0), c(1, 1));
}

TEST(Covariance, MatchesBruteForcePairwise) {
    const auto x = centered(random_matrix(50, 4, 11));
    const auto c = la::covariance(x);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < 50; ++r) s += x(r, i) * x(r, j);
            EXPECT_NEAR(c(i, j), s / 49.0, 1e-12);
        }
    }
}

TEST(Covariance, Errors) {
    EXPECT_THROW((void)la::covariance(Matrix{{1, 2}}), co2::LengthError);
    try {
        (void)la::covariance(Matrix{{0, 1}, {0, 3}});
        FAIL() << "expected DegenerateError";
    } catch (const co2::DegenerateError& e) {
        EXPECT_NE(std::string(e.what()).find("column 1"), std::string::npos);
    }
}

TEST(Eigh, Identity) {
    const auto e = la::eigh(Matrix::identity(3));
    EXPECT_EQ(e.eigenvalues, (std::vector<double>{1, 1, 1}));
    EXPECT_EQ(e.eigenvectors, Matrix::identity(3));
}

TEST(Eigh, Diagonal) {
    const auto e = la::eigh(Matrix{{4, 0}, {0, 1}});
    EXPECT_DOUBLE_EQ(e.eigenvalues[0], 4.0);
    EXPECT_DOUBLE_EQ(e.eigenvalues[1], 1.0);
    EXPECT_EQ(e.eigenvectors, Matrix::identity(2));
}

TEST(Eigh, Analytic2x2) {
    const auto e = la::eigh(Matrix{{2, 1}, {1, 2}});
    EXPECT_NEAR(e.eigenvalues[0], 3.0, 1e-14);
    EXPECT_NEAR(e.eigenvalues[1], 1.0, 1e-14);
    EXPECT_NEAR(e.eigenvectors(0, 0), 1.0 / std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(e.eigenvectors(1, 0), 1.0 / std::sqrt(2.0), 1e-14);
}

TEST(Eigh, AscendingDiagonalIsSorted) {
    const auto e = la::eigh(Matrix{{1, 0, 0}, {0, 3, 0}, {0, 0, 2}});
    EXPECT_EQ(e.eigenvalues, (std::vector<double>{3, 2, 1}));
    EXPECT_EQ(e.eigenvectors(1, 0), 1.0);
    EXPECT_EQ(e.eigenvectors(2, 1), 1.0);
}

TEST(Eigh, EqualEigenvaluesKeepColumnOrder) {
    const auto e = la::eigh(Matrix{{2, 0, 0}, {0, 5, 0}, {0, 0, 2}});
    EXPECT_EQ(e.eigenvectors(1, 0), 1.0);
    EXPECT_EQ(e.eigenvectors(0, 1), 1.0);
    EXPECT_EQ(e.eigenvectors(2, 2), 1.0);
}

TEST(Eigh, SignConventionLargestEntryPositive) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto e = la::eigh(random_symmetric(6, seed));
        for (std::size_t c = 0; c < 6; ++c) {
            std::size_t arg = 0;
            for (std::size_t r = 1; r < 6; ++r)
                if (std::abs(e.eigenvectors(r, c)) > std::abs(e.eigenvectors(arg, c))) arg = r;
            EXPECT_GT(e.eigenvectors(arg, c), 0.0);
        }
    }
}

TEST(Eigh, RandomIdentities) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 2 + seed % 9;
        const auto c = random_symmetric(n, 100 + seed);
        const auto e = la::eigh(c);
        double trace = 0.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            trace += c(i, i);
            sum += e.eigenvalues[i];
            if (i > 0) EXPECT_GE(e.eigenvalues[i - 1], e.eigenvalues[i]);
        }
        EXPECT_NEAR(trace, sum, 1e-8);
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = e.eigenvectors.column(i);
            EXPECT_NEAR(la::dot(v, v), 1.0, 1e-10);
            const auto cv = la::multiply(c, v);
            for (std::size_t r = 0; r < n; ++r) EXPECT_NEAR(cv[r], e.eigenvalues[i] * v[r], 1e-8);
            for (std::size_t j = i + 1; j < n; ++j) {
                EXPECT_NEAR(la::dot(v, e.eigenvectors.column(j)), 0.0, 1e-8);
            }
        }
    }
}

TEST(Eigh, DeterminantIdentityWellConditioned) {
    // diagonally dominant: eigenvalues bounded away from zero
    auto c = random_symmetric(5, 7);
    for (std::size_t i = 0; i < 5; ++i) c(i, i) += 10.0;
    const auto e = la::eigh(c);
    double prod = 1.0;
    for (double l : e.eigenvalues) prod *= l;
    const double det = determinant(c);
    EXPECT_NEAR(prod / det, 1.0, 1e-6);
}

TEST(Eigh, Errors) {
    EXPECT_THROW((void)la::eigh(Matrix{{1, 2}, {0, 1}}), co2::DimensionError);
    EXPECT_THROW((void)la::eigh(Matrix(2, 3)), co2::DimensionError);
    try {
        (void)la::eigh(random_symmetric(8, 3), {1, 1e-300});
        FAIL() << "expected ConvergenceError";
    } catch (const co2::ConvergenceError& e) {
        EXPECT_GT(e.residual(), 0.0);
    }
}

TEST(Lstsq, ExactFit) {
    const auto r = la::lstsq(Matrix{{1}, {2}, {3}}, std::vector<double>{2, 4, 6});
    EXPECT_NEAR(r.coefficients[0], 2.0, 1e-14);
    for (double e : r.residuals) EXPECT_NEAR(e, 0.0, 1e-14);
}

TEST(Lstsq, OnesColumnGivesMean) {
    const auto r = la::lstsq(Matrix{{1}, {1}, {1}}, std::vector<double>{1, 2, 3});
    EXPECT_NEAR(r.coefficients[0], 2.0, 1e-14);
}

TEST(Lstsq, MatchesNormalEquationOracle) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto a = random_matrix(30, 3, 40 + seed);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> z;
        std::vector<double> y(30);
        for (auto& v : y) v = z(rng);
        const auto r = la::lstsq(a, y);
        const auto at = a.transpose();
        const auto ata_inv = inverse(la::multiply(at, a));
        const auto beta = la::multiply(ata_inv, la::multiply(at, y));
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(r.coefficients[j], beta[j], 1e-8);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                EXPECT_NEAR(r.unscaled_covariance(i, j), ata_inv(i, j), 1e-8);
        // residuals orthogonal to the column space
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(la::dot(a.column(j), r.residuals), 0.0, 1e-8);
    }
}

TEST(Lstsq, ColumnScaleDoesNotAffectRankDecision) {
    Matrix a(20, 2);
    std::vector<double> y(20);
    for (std::size_t i = 0; i < 20; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = 6e11 + 1e9 * std::sin(static_cast<double>(i));
        y[i] = 3.0 + 2e-11 * a(i, 1);
    }
    const auto r = la::lstsq(a, y);
    EXPECT_NEAR(r.coefficients[0], 3.0, 1e-6);
    EXPECT_NEAR(r.coefficients[1], 2e-11, 1e-17);
}

TEST(Lstsq, Errors) {
    EXPECT_THROW((void)la::lstsq(Matrix{{1, 2}, {2, 4}, {3, 6}}, std::vector<double>{1, 2, 3}),
                 co2::SingularityError);
    EXPECT_THROW((void)la::lstsq(Matrix{{1, 0}, {1, 0}}, std::vector<double>{1, 2}),
                 co2::SingularityError);
    EXPECT_THROW((void)la::lstsq(Matrix{{1, 2}}, std::vector<double>{1}), co2::SingularityError);
    EXPECT_THROW((void)la::lstsq(Matrix{{1}, {2}}, std::vector<double>{1}), co2::DimensionError);
}
