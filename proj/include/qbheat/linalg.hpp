#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace qbheat {

/// Tolerances and iteration budgets shared by the dense kernels. Every
/// routine takes one of these by const reference; the defaults are the
/// documented constants.
struct NumericSettings {
    double expm_scaled_norm = 0.5;      ///< scale M·t by 2^-k until ‖·‖_F ≤ this
    double expm_term_tol = 1e-16;       ///< stop the Taylor sum once a term's norm drops below
    int eigen_iterations_per_value = 100;
    std::size_t eigen_max_dim = 4096;
    double singular_pivot_ratio = 1e-14;  ///< pivot < ratio · max|entry| is singular
};

inline const NumericSettings& default_settings() {
    static const NumericSettings settings{};
    return settings;
}

/// Dense real matrix, row-major.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> diag);
    static Matrix column(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return entries_.empty(); }
    bool is_square() const noexcept { return rows_ == cols_ && rows_ > 0; }

    double& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

    std::span<const double> entries() const noexcept { return entries_; }
    std::span<double> entries() noexcept { return entries_; }
    std::span<const double> row(std::size_t r) const { return {entries_.data() + r * cols_, cols_}; }

    Matrix transpose() const;
    double frobenius_norm() const;
    double max_abs() const;
    double trace() const;
    bool all_finite() const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator-(Matrix a) { return a *= -1.0; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }
    friend Matrix operator*(const Matrix& a, const Matrix& b);
    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

std::vector<double> multiply(const Matrix& m, std::span<const double> v);

using Complex = std::complex<double>;

struct EigenDecomposition {
    std::vector<Complex> eigenvalues;                         ///< descending |λ|
    std::optional<std::vector<std::vector<Complex>>> eigenvectors;
    std::size_t source_dim = 0;
};

/// e^{M t} by scaling and squaring around a truncated Taylor series.
Matrix mat_exp(const Matrix& m, double t, const NumericSettings& settings = default_settings());

/// Principal square root by the Denman-Beavers iteration.
Matrix matrix_sqrt(const Matrix& m, const NumericSettings& settings = default_settings());

/// Principal logarithm: inverse scaling and squaring around the atanh
/// series. Throws DataError when an eigenvalue lies on the closed negative
/// real axis.
Matrix matrix_log(const Matrix& m, const NumericSettings& settings = default_settings());

/// Principal p-th root, exp(log(M) / p).
Matrix matrix_root(const Matrix& m, int p, const NumericSettings& settings = default_settings());

/// All eigenvalues of a real square matrix (balancing, Householder
/// Hessenberg reduction, Francis double-shift QR). Eigenvectors, when asked
/// for, come from inverse iteration on the original matrix.
EigenDecomposition eigen_spectrum(const Matrix& m, bool want_vectors = false,
                                  const NumericSettings& settings = default_settings());

/// Spectral radius max |λ|.
double spectral_radius(const Matrix& m, const NumericSettings& settings = default_settings());

/// LU with partial pivoting plus one refinement step. Throws
/// SingularMatrixError when a pivot falls under the configured ratio.
Matrix solve(const Matrix& m, const Matrix& rhs, const NumericSettings& settings = default_settings());

Matrix inverse(const Matrix& m, const NumericSettings& settings = default_settings());

double determinant(const Matrix& m);

/// Ridge regression M = Y Xᵀ (X Xᵀ + ridge I)⁻¹ for C×N data, computed by
/// Householder QR on the stacked system [Xᵀ; √ridge·I] so the conditioning
/// is that of X rather than X Xᵀ.
Matrix least_squares(const Matrix& x, const Matrix& y, double ridge,
                     const NumericSettings& settings = default_settings());

/// Solve a complex square system with partial pivoting. Used for
/// eigenvector work; zero pivots are nudged to `floor` instead of failing.
std::vector<Complex> solve_complex(std::vector<Complex> a, std::vector<Complex> b, std::size_t n,
                                   double floor = 0.0);

}  // namespace qbheat
