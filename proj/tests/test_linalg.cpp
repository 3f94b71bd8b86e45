#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qbheat/error.hpp"
#include "qbheat/linalg.hpp"
#include "qbheat/rng.hpp"

using qbheat::Complex;
using qbheat::Matrix;

namespace {

Matrix scaled_to_norm(Matrix m, double norm) { return m * (norm / m.frobenius_norm()); }

// p(M), q(M) for one random M: commute by construction.
std::pair<Matrix, Matrix> commuting(qbheat::SplitMix64& rng, std::size_t n) {
    const Matrix m = oracle::random_matrix(rng, n, 1.0 / std::sqrt(static_cast<double>(n)));
    const Matrix eye = Matrix::identity(n);
    return {eye * 0.3 + m * 0.5 - m * m * 0.2, eye * -0.1 + m * 0.7 + m * m * 0.1};
}

}  // namespace

TEST_CASE("matrix basics") {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix b{{0, 1}, {1, 0}};
    CHECK(a * b == Matrix{{2, 1}, {4, 3}});
    CHECK(a.transpose() == Matrix{{1, 3}, {2, 4}});
    CHECK(a.trace() == 5.0);
    CHECK(a.max_abs() == 4.0);
    CHECK(a.frobenius_norm() == doctest::Approx(std::sqrt(30.0)));
    CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), qbheat::ShapeError);
    CHECK_THROWS_AS(Matrix(2, 3) * Matrix(2, 3), qbheat::ShapeError);
    const double huge = 1e200;
    CHECK(Matrix{{huge, huge}, {huge, huge}}.frobenius_norm() == doctest::Approx(2e200));
}

TEST_CASE("mat_exp: closed forms") {
    const Matrix zero(3, 3);
    CHECK(qbheat::mat_exp(zero, 1.0) == Matrix::identity(3));

    const Matrix d{{std::log(2.0), 0}, {0, std::log(3.0)}};
    const Matrix e = qbheat::mat_exp(d, 1.0);
    CHECK(e(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(e(1, 1) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(e(0, 1) == 0.0);

    const Matrix nil{{0, 1}, {0, 0}};
    CHECK(oracle::rel_diff(qbheat::mat_exp(nil, 1.0), Matrix{{1, 1}, {0, 1}}) < 1e-15);

    // Rotation generator: e^{θJ} = [[cos, -sin], [sin, cos]].
    const Matrix j{{0, -1}, {1, 0}};
    const double theta = 2.5;
    const Matrix r = qbheat::mat_exp(j, theta);
    CHECK(oracle::rel_diff(r, Matrix{{std::cos(theta), -std::sin(theta)}, {std::sin(theta), std::cos(theta)}}) < 1e-14);
}

TEST_CASE("mat_exp: Taylor oracle on random matrices") {
    qbheat::SplitMix64 rng(11);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix m = scaled_to_norm(oracle::random_matrix(rng, 6), 2.0 * rng.uniform());
        worst = std::max(worst, oracle::rel_diff(qbheat::mat_exp(m, 1.0), oracle::taylor_exp(m, 1.0)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("mat_exp: semigroup and commuting sums") {
    qbheat::SplitMix64 rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix m = scaled_to_norm(oracle::random_matrix(rng, 5), 2.0 * rng.uniform());
        const double s = rng.uniform(-2.0, 2.0), t = rng.uniform(-2.0, 2.0);
        CHECK(oracle::rel_diff(qbheat::mat_exp(m, s) * qbheat::mat_exp(m, t), qbheat::mat_exp(m, s + t)) < 1e-9);
        const auto [p, q] = commuting(rng, 5);
        CHECK(oracle::rel_diff(qbheat::mat_exp(p, 1.0) * qbheat::mat_exp(q, 1.0), qbheat::mat_exp(p + q, 1.0)) < 1e-8);
    }
}

TEST_CASE("mat_exp: rejects bad input") {
    CHECK_THROWS_AS(qbheat::mat_exp(Matrix(2, 3), 1.0), qbheat::ShapeError);
    Matrix bad(2, 2);
    bad(0, 1) = std::nan("");
    CHECK_THROWS_AS(qbheat::mat_exp(bad, 1.0), qbheat::NonFiniteError);
    CHECK_THROWS_AS(qbheat::mat_exp(Matrix::identity(2) * 800.0, 1.0), qbheat::OverflowError);
}

TEST_CASE("eigen_spectrum: closed forms") {
    auto eig = qbheat::eigen_spectrum(Matrix::identity(3));
    REQUIRE(eig.eigenvalues.size() == 3);
    for (const Complex& l : eig.eigenvalues) CHECK(std::abs(l - Complex(1.0, 0.0)) < 1e-14);

    eig = qbheat::eigen_spectrum(Matrix{{0, -1}, {1, 0}});
    REQUIRE(eig.eigenvalues.size() == 2);
    CHECK(std::abs(eig.eigenvalues[0] - Complex(0, 1)) < 1e-14);
    CHECK(std::abs(eig.eigenvalues[1] - Complex(0, -1)) < 1e-14);

    eig = qbheat::eigen_spectrum(Matrix{{3, 0, 0}, {0, -2, 0}, {0, 0, 0.5}});
    CHECK(eig.eigenvalues[0] == Complex(3, 0));
    CHECK(eig.eigenvalues[1] == Complex(-2, 0));
    CHECK(eig.eigenvalues[2] == Complex(0.5, 0));
    CHECK(eig.source_dim == 3);

    // Companion matrix of (x-1)(x-2)(x-3).
    eig = qbheat::eigen_spectrum(Matrix{{6, -11, 6}, {1, 0, 0}, {0, 1, 0}});
    CHECK(std::abs(eig.eigenvalues[0] - Complex(3, 0)) < 1e-12);
    CHECK(std::abs(eig.eigenvalues[1] - Complex(2, 0)) < 1e-12);
    CHECK(std::abs(eig.eigenvalues[2] - Complex(1, 0)) < 1e-12);

    CHECK(qbheat::eigen_spectrum(Matrix{{0.0}}).eigenvalues[0] == Complex(0, 0));
}

TEST_CASE("eigen_spectrum: trace, determinant, ordering and conjugate pairs") {
    qbheat::SplitMix64 rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix m = oracle::random_matrix(rng, 8);
        const auto eig = qbheat::eigen_spectrum(m);
        REQUIRE(eig.eigenvalues.size() == 8);
        Complex sum{}, prod{1.0, 0.0};
        for (const Complex& l : eig.eigenvalues) {
            sum += l;
            prod *= l;
        }
        CHECK(std::abs(sum - Complex(m.trace(), 0.0)) <= 1e-8);
        const double det = static_cast<double>(oracle::determinant_ld(m));
        CHECK(std::abs(prod - Complex(det, 0.0)) <= 1e-6 * std::abs(det));
        for (std::size_t k = 1; k < 8; ++k) CHECK(std::abs(eig.eigenvalues[k - 1]) >= std::abs(eig.eigenvalues[k]));
        for (const Complex& l : eig.eigenvalues) {
            if (l.imag() == 0.0) continue;
            const bool paired = std::any_of(eig.eigenvalues.begin(), eig.eigenvalues.end(),
                                            [&](const Complex& o) { return std::abs(o - std::conj(l)) < 1e-10; });
            CHECK(paired);
        }
    }
}

TEST_CASE("eigen_spectrum: eigenvector residuals") {
    qbheat::SplitMix64 rng(22);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + trial % 7;
        const Matrix m = oracle::random_matrix(rng, n);
        const auto eig = qbheat::eigen_spectrum(m, true);
        REQUIRE(eig.eigenvectors.has_value());
        for (std::size_t k = 0; k < n; ++k) {
            const auto& v = (*eig.eigenvectors)[k];
            double res = 0.0, vn = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                Complex mv{};
                for (std::size_t j = 0; j < n; ++j) mv += m(i, j) * v[j];
                res += std::norm(mv - eig.eigenvalues[k] * v[i]);
                vn += std::norm(v[i]);
            }
            CHECK(std::sqrt(res) <= 1e-8 * m.frobenius_norm() * std::sqrt(vn));
        }
    }
}

TEST_CASE("eigen_spectrum: larger and structured inputs") {
    qbheat::SplitMix64 rng(23);
    const Matrix m = oracle::random_matrix(rng, 64);
    const auto eig = qbheat::eigen_spectrum(m);
    Complex sum{};
    for (const Complex& l : eig.eigenvalues) sum += l;
    CHECK(std::abs(sum.real() - m.trace()) < 1e-8 * 64);
    CHECK(std::abs(sum.imag()) < 1e-8);

    // Jordan block: defective, all eigenvalues 2.
    const Matrix jordan{{2, 1, 0}, {0, 2, 1}, {0, 0, 2}};
    for (const Complex& l : qbheat::eigen_spectrum(jordan).eigenvalues) CHECK(std::abs(l - Complex(2, 0)) < 1e-4);

    CHECK_THROWS_AS(qbheat::eigen_spectrum(Matrix(2, 3)), qbheat::ShapeError);
    CHECK(qbheat::spectral_radius(Matrix{{0, -2}, {2, 0}}) == doctest::Approx(2.0));
}

TEST_CASE("solve: closed forms and residuals") {
    const Matrix b{{1.5}, {-2.0}, {7.0}};
    CHECK(qbheat::solve(Matrix::identity(3), b) == b);
    const Matrix x = qbheat::solve(Matrix{{2, 0}, {0, 4}}, Matrix{{2}, {8}});
    CHECK(x(0, 0) == 1.0);
    CHECK(x(1, 0) == 2.0);

    qbheat::SplitMix64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix m = oracle::random_matrix(rng, 10) + Matrix::identity(10) * 5.0;
        const Matrix rhs = oracle::random_matrix(rng, 10);
        const Matrix sol = qbheat::solve(m, rhs);
        CHECK((m * sol - rhs).frobenius_norm() <= 1e-10 * rhs.frobenius_norm());
    }
}

TEST_CASE("solve: ill-conditioned but regular") {
    // Hilbert 8x8 has condition ~1.5e10; a 6x6 one (~1.5e7) is within range.
    Matrix h(6, 6);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) h(i, j) = 1.0 / static_cast<double>(i + j + 1);
    Matrix rhs(6, 1);
    for (std::size_t i = 0; i < 6; ++i) rhs(i, 0) = 1.0;
    const Matrix sol = qbheat::solve(h, rhs);
    CHECK((h * sol - rhs).frobenius_norm() <= 1e-10 * rhs.frobenius_norm());
}

TEST_CASE("solve: singular input raises") {
    CHECK_THROWS_AS(qbheat::solve(Matrix{{1, 2}, {2, 4}}, Matrix{{1}, {1}}), qbheat::SingularMatrixError);
    CHECK_THROWS_AS(qbheat::solve(Matrix(3, 3), Matrix(3, 1)), qbheat::SingularMatrixError);
    CHECK_THROWS_AS(qbheat::solve(Matrix::identity(2), Matrix(3, 1)), qbheat::ShapeError);
    CHECK_THROWS_AS(qbheat::inverse(Matrix{{1, 1}, {1, 1 + 1e-16}}), qbheat::SingularMatrixError);
}

TEST_CASE("inverse and determinant") {
    qbheat::SplitMix64 rng(32);
    const Matrix m = oracle::random_matrix(rng, 7) + Matrix::identity(7) * 3.0;
    CHECK(oracle::rel_diff(m * qbheat::inverse(m), Matrix::identity(7)) < 1e-13);
    CHECK(qbheat::determinant(m) == doctest::Approx(static_cast<double>(oracle::determinant_ld(m))).epsilon(1e-12));
    CHECK(qbheat::determinant(Matrix{{1, 2}, {2, 4}}) == 0.0);
}

TEST_CASE("least_squares: closed forms") {
    qbheat::SplitMix64 rng(41);
    Matrix x(4, 30);
    for (auto& v : x.entries()) v = rng.normal();
    CHECK(oracle::rel_diff(qbheat::least_squares(x, x, 0.0), Matrix::identity(4)) < 1e-12);

    const Matrix y = oracle::random_matrix(rng, 4);
    CHECK(oracle::rel_diff(qbheat::least_squares(Matrix::identity(4), y, 0.0), y) < 1e-14);
}

TEST_CASE("least_squares: recovers a planted map") {
    qbheat::SplitMix64 rng(42);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix truth = oracle::random_matrix(rng, 8);
        Matrix x(8, 50);
        for (auto& v : x.entries()) v = rng.normal();
        CHECK(oracle::rel_diff(qbheat::least_squares(x, truth * x, 0.0), truth) < 1e-10);
    }
}

TEST_CASE("least_squares: ridge matches the normal equations") {
    qbheat::SplitMix64 rng(43);
    Matrix x(5, 12), y(5, 12);
    for (auto& v : x.entries()) v = rng.normal();
    for (auto& v : y.entries()) v = rng.normal();
    const double ridge = 0.7;
    const Matrix gram = x * x.transpose() + Matrix::identity(5) * ridge;
    // M = Y Xᵀ G⁻¹  <=>  G Mᵀ = X Yᵀ
    const Matrix want = qbheat::solve(gram, x * y.transpose()).transpose();
    CHECK(oracle::rel_diff(qbheat::least_squares(x, y, ridge), want) < 1e-12);
}

TEST_CASE("least_squares: rank-deficient data") {
    Matrix x(3, 10);
    for (std::size_t j = 0; j < 10; ++j) {
        x(0, j) = static_cast<double>(j);
        x(1, j) = 2.0 * static_cast<double>(j);
        x(2, j) = 1.0;
    }
    CHECK_THROWS_AS(qbheat::least_squares(x, x, 0.0), qbheat::SingularMatrixError);
    CHECK_NOTHROW(qbheat::least_squares(x, x, 1e-6));
    CHECK_THROWS_AS(qbheat::least_squares(x, x, -1.0), qbheat::DataError);
    CHECK_THROWS_AS(qbheat::least_squares(x, Matrix(3, 9), 0.0), qbheat::ShapeError);
}

TEST_CASE("matrix_root and matrix_log") {
    qbheat::SplitMix64 rng(51);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + trial % 7;
        // The principal root is the original step only while p·|arg λ| < π.
        const Matrix a = scaled_to_norm(oracle::random_matrix(rng, n), 0.4);
        const Matrix step = Matrix::identity(n) + a;
        for (int p : {1, 2, 3, 5, 7}) {
            CHECK(oracle::rel_diff(qbheat::matrix_root(oracle::power(step, p), p), step) < 1e-11);
        }
        const Matrix fine = Matrix::identity(n) + a * 0.35;
        CHECK(oracle::rel_diff(qbheat::matrix_root(oracle::power(fine, 16), 16), fine) < 1e-11);
        CHECK(oracle::rel_diff(qbheat::matrix_log(qbheat::mat_exp(a, 1.0)), a) < 1e-11);
    }
    const Matrix rot{{0, -1}, {1, 0}};
    CHECK(oracle::rel_diff(qbheat::matrix_log(qbheat::mat_exp(rot, 3.0)), rot * 3.0) < 1e-11);
    CHECK_THROWS_AS(qbheat::matrix_log(Matrix{{-1, 0}, {0, 2}}), qbheat::DataError);
    CHECK_THROWS_AS(qbheat::matrix_root(Matrix::identity(2), 0), qbheat::DataError);
}
