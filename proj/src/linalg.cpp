#include "qbheat/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "qbheat/error.hpp"
#include "qbheat/rng.hpp"

namespace qbheat {

namespace {

std::string shape_of(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

void require_square(const Matrix& m, const char* op) {
    if (!m.is_square()) {
        throw ShapeError(std::string(op) + ": expected a square matrix, got " + shape_of(m));
    }
}

void require_finite(const Matrix& m, const char* op) {
    if (!m.all_finite()) {
        throw NonFiniteError(std::string(op) + ": matrix has non-finite entries");
    }
}

double sign_of(double magnitude, double sign_source) {
    return sign_source >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude);
}

// In-place LU with partial pivoting. Returns false when a pivot is below
// `threshold`; `perm` receives the row permutation.
bool lu_factor(Matrix& a, std::vector<std::size_t>& perm, double threshold, int* sign = nullptr) {
    const std::size_t n = a.rows();
    perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    int s = 1;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(a(i, k)) > best) {
                best = std::abs(a(i, k));
                p = i;
            }
        }
        if (best <= threshold) {
            if (sign) *sign = 0;
            return false;
        }
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            std::swap(perm[k], perm[p]);
            s = -s;
        }
        const double pivot = a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / pivot;
            a(i, k) = f;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    if (sign) *sign = s;
    return true;
}

void lu_solve_in_place(const Matrix& lu, const std::vector<std::size_t>& perm, Matrix& b) {
    const std::size_t n = lu.rows();
    const std::size_t m = b.cols();
    Matrix x(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) x(i, j) = b(perm[i], j);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < i; ++k) {
            const double f = lu(i, k);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) x(i, j) -= f * x(k, j);
        }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) {
            const double f = lu(ii, k);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) x(ii, j) -= f * x(k, j);
        }
        for (std::size_t j = 0; j < m; ++j) x(ii, j) /= lu(ii, ii);
    }
    b = std::move(x);
}

// Parlett-Reinsch balancing with radix 2 (exact in binary floating point).
void balance(Matrix& a) {
    const std::size_t n = a.rows();
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                g = 1.0 / f;
                for (std::size_t j = 0; j < n; ++j) a(i, j) *= g;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

void hessenberg_reduce(Matrix& a) {
    const std::size_t n = a.rows();
    if (n < 3) return;
    std::vector<double> v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) norm = std::hypot(norm, a(i, k));
        if (norm == 0.0) continue;
        const double alpha = -sign_of(norm, a(k + 1, k));
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = a(i, k);
            if (i == k + 1) v[i] -= alpha;
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        // Left application: rows k+1.., columns k..
        for (std::size_t j = k; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) dot += v[i] * a(i, j);
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= f * v[i];
        }
        // Right application: all rows, columns k+1..
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) dot += a(i, j) * v[j];
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * v[j];
        }
        a(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
// Follows the EISPACK hqr structure with exceptional shifts every tenth
// iteration on a stuck eigenvalue.
std::vector<Complex> hessenberg_qr(Matrix& a, int max_iterations) {
    const int n = static_cast<int>(a.rows());
    std::vector<Complex> w(static_cast<std::size_t>(n));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    auto at = [&a](int i, int j) -> double& {
        return a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    };

    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(at(i, j));

    int nn = n - 1;
    double t = 0.0;
    int its = 0;
    while (nn >= 0) {
        int l = nn;
        for (; l > 0; --l) {
            double s = std::abs(at(l - 1, l - 1)) + std::abs(at(l, l));
            if (s == 0.0) s = anorm;
            if (std::abs(at(l, l - 1)) <= eps * s) {
                at(l, l - 1) = 0.0;
                break;
            }
        }
        double x = at(nn, nn);
        if (l == nn) {
            w[static_cast<std::size_t>(nn)] = Complex(x + t, 0.0);
            --nn;
            its = 0;
            continue;
        }
        double y = at(nn - 1, nn - 1);
        double ww = at(nn, nn - 1) * at(nn - 1, nn);
        if (l == nn - 1) {
            const double p = 0.5 * (y - x);
            const double q = p * p + ww;
            double z = std::sqrt(std::abs(q));
            x += t;
            if (q >= 0.0) {
                z = p + sign_of(z, p);
                const double hi = x + z;
                const double lo = z != 0.0 ? x - ww / z : hi;
                w[static_cast<std::size_t>(nn - 1)] = Complex(hi, 0.0);
                w[static_cast<std::size_t>(nn)] = Complex(lo, 0.0);
            } else {
                w[static_cast<std::size_t>(nn - 1)] = Complex(x + p, z);
                w[static_cast<std::size_t>(nn)] = Complex(x + p, -z);
            }
            nn -= 2;
            its = 0;
            continue;
        }

        if (its >= max_iterations) {
            throw ConvergenceError("eigen_spectrum: QR iteration did not converge within " +
                                   std::to_string(max_iterations) + " iterations for eigenvalue " +
                                   std::to_string(nn + 1) + " of " + std::to_string(n));
        }
        if (its > 0 && its % 10 == 0) {
            t += x;
            for (int i = 0; i <= nn; ++i) at(i, i) -= x;
            const double s = std::abs(at(nn, nn - 1)) + std::abs(at(nn - 1, nn - 2));
            x = y = 0.75 * s;
            ww = -0.4375 * s * s;
        }
        ++its;

        int m = nn - 2;
        double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
        for (; m >= l; --m) {
            z = at(m, m);
            r = x - z;
            double s = y - z;
            p = (r * s - ww) / at(m + 1, m) + at(m, m + 1);
            q = at(m + 1, m + 1) - z - r - s;
            r = at(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(at(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(at(m - 1, m - 1)) + std::abs(z) + std::abs(at(m + 1, m + 1)));
            if (u <= eps * v) break;
        }
        for (int i = m; i < nn - 1; ++i) {
            at(i + 2, i) = 0.0;
            if (i != m) at(i + 2, i - 1) = 0.0;
        }
        for (int k = m; k < nn; ++k) {
            if (k != m) {
                p = at(k, k - 1);
                q = at(k + 1, k - 1);
                r = 0.0;
                if (k + 1 != nn) r = at(k + 2, k - 1);
                x = std::abs(p) + std::abs(q) + std::abs(r);
                if (x != 0.0) {
                    p /= x;
                    q /= x;
                    r /= x;
                }
            }
            const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
                if (l != m) at(k, k - 1) = -at(k, k - 1);
            } else {
                at(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
                p = at(k, j) + q * at(k + 1, j);
                if (k + 1 != nn) {
                    p += r * at(k + 2, j);
                    at(k + 2, j) -= p * z;
                }
                at(k + 1, j) -= p * y;
                at(k, j) -= p * x;
            }
            const int mmin = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= mmin; ++i) {
                p = x * at(i, k) + y * at(i, k + 1);
                if (k + 1 != nn) {
                    p += z * at(i, k + 2);
                    at(i, k + 2) -= p * r;
                }
                at(i, k + 1) -= p * q;
                at(i, k) -= p;
            }
        }
    }
    return w;
}

std::vector<Complex> inverse_iteration(const Matrix& m, Complex lambda, std::size_t index) {
    const std::size_t n = m.rows();
    const double norm = std::max(m.frobenius_norm(), std::numeric_limits<double>::min());
    const double floor = std::numeric_limits<double>::epsilon() * norm;
    std::vector<Complex> shifted(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) shifted[i * n + j] = Complex(m(i, j), 0.0) - (i == j ? lambda : 0.0);

    SplitMix64 rng(0x5eedULL + index);
    std::vector<Complex> v(n);
    for (auto& e : v) e = Complex(rng.uniform(0.5, 1.5), 0.0);

    auto normalize = [](std::vector<Complex>& x) {
        double s = 0.0;
        for (const auto& e : x) s = std::hypot(s, std::abs(e));
        if (s == 0.0 || !std::isfinite(s)) return false;
        for (auto& e : x) e /= s;
        return true;
    };
    auto residual = [&](const std::vector<Complex>& x) {
        double r = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            Complex acc = -lambda * x[i];
            for (std::size_t j = 0; j < n; ++j) acc += m(i, j) * x[j];
            r = std::hypot(r, std::abs(acc));
        }
        return r;
    };

    normalize(v);
    const double tol = 1e-8 * norm;
    for (int it = 0; it < 12; ++it) {
        std::vector<Complex> next = solve_complex(shifted, v, n, floor);
        if (!normalize(next)) break;
        v = std::move(next);
        if (it >= 2 && residual(v) <= 1e-2 * tol) break;
    }
    if (residual(v) > tol) {
        throw ConvergenceError("eigen_spectrum: eigenvector for eigenvalue (" + std::to_string(lambda.real()) +
                               ", " + std::to_string(lambda.imag()) + ") failed the residual check");
    }
    return v;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_) {
        throw ShapeError("Matrix: " + std::to_string(entries_.size()) + " entries do not fill " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    entries_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer");
        entries_.insert(entries_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
}

Matrix Matrix::column(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Matrix::frobenius_norm() const {
    // Scaled accumulation keeps large and tiny entries from over/underflowing.
    double scale = 0.0, ssq = 1.0;
    for (double e : entries_) {
        if (e == 0.0) continue;
        const double a = std::abs(e);
        if (scale < a) {
            ssq = 1.0 + ssq * (scale / a) * (scale / a);
            scale = a;
        } else {
            ssq += (a / scale) * (a / scale);
        }
    }
    return scale * std::sqrt(ssq);
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double e : entries_) m = std::max(m, std::abs(e));
    return m;
}

double Matrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
}

bool Matrix::all_finite() const {
    return std::all_of(entries_.begin(), entries_.end(), [](double e) { return std::isfinite(e); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) {
        throw ShapeError("Matrix +: shape mismatch " + shape_of(*this) + " vs " + shape_of(other));
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += other.entries_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) {
        throw ShapeError("Matrix -: shape mismatch " + shape_of(*this) + " vs " + shape_of(other));
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= other.entries_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& e : entries_) e *= s;
    return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("Matrix *: inner dimensions differ, " + shape_of(a) + " * " + shape_of(b));
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double f = a(i, k);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += f * b(k, j);
        }
    return c;
}

std::vector<double> multiply(const Matrix& m, std::span<const double> v) {
    if (m.cols() != v.size()) {
        throw ShapeError("multiply: matrix " + shape_of(m) + " with vector of length " + std::to_string(v.size()));
    }
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc += m(i, j) * v[j];
        out[i] = acc;
    }
    return out;
}

Matrix mat_exp(const Matrix& m, double t, const NumericSettings& settings) {
    require_square(m, "mat_exp");
    require_finite(m, "mat_exp");
    if (!std::isfinite(t)) throw NonFiniteError("mat_exp: non-finite scalar t");

    const std::size_t n = m.rows();
    Matrix scaled = m * t;
    const double norm = scaled.frobenius_norm();
    int squarings = 0;
    if (norm > settings.expm_scaled_norm) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / settings.expm_scaled_norm)));
        scaled *= std::ldexp(1.0, -squarings);
    }

    Matrix result = Matrix::identity(n);
    Matrix term = Matrix::identity(n);
    for (int k = 1; k <= 200; ++k) {
        term = term * scaled;
        term *= 1.0 / k;
        result += term;
        if (term.frobenius_norm() < settings.expm_term_tol) break;
    }
    for (int i = 0; i < squarings; ++i) result = result * result;
    if (!result.all_finite()) throw OverflowError("mat_exp: result overflowed");
    return result;
}

Matrix matrix_sqrt(const Matrix& m, const NumericSettings& settings) {
    require_square(m, "matrix_sqrt");
    require_finite(m, "matrix_sqrt");
    Matrix y = m;
    Matrix z = Matrix::identity(m.rows());
    for (int it = 0; it < 100; ++it) {
        const Matrix y_inv = inverse(y, settings);
        const Matrix z_inv = inverse(z, settings);
        Matrix next = (y + z_inv) * 0.5;
        z = (z + y_inv) * 0.5;
        const double change = (next - y).frobenius_norm();
        y = std::move(next);
        if (change <= 1e-15 * y.frobenius_norm()) return y;
    }
    throw ConvergenceError("matrix_sqrt: Denman-Beavers iteration did not converge in 100 steps");
}

Matrix matrix_log(const Matrix& m, const NumericSettings& settings) {
    require_square(m, "matrix_log");
    require_finite(m, "matrix_log");
    const double scale = std::max(m.max_abs(), std::numeric_limits<double>::min());
    for (const Complex& l : eigen_spectrum(m, false, settings).eigenvalues) {
        if (std::abs(l) <= 1e-14 * scale || (l.real() <= 0.0 && std::abs(l.imag()) <= 1e-14 * scale)) {
            throw DataError("matrix_log: eigenvalue (" + std::to_string(l.real()) + ", " + std::to_string(l.imag()) +
                            ") has no principal logarithm");
        }
    }
    const std::size_t n = m.rows();
    const Matrix eye = Matrix::identity(n);
    Matrix r = m;
    int roots = 0;
    while ((r - eye).frobenius_norm() > 0.25) {
        if (++roots > 64) throw ConvergenceError("matrix_log: square roots did not approach the identity");
        r = matrix_sqrt(r, settings);
    }
    // log R = 2 atanh(Z), Z = (R + I)^-1 (R - I)
    const Matrix zmat = solve(r + eye, r - eye, settings);
    const Matrix z2 = zmat * zmat;
    Matrix power = zmat;
    Matrix sum = zmat;
    for (int k = 1; k < 200; ++k) {
        power = power * z2;
        const Matrix term = power * (1.0 / (2 * k + 1));
        sum += term;
        if (term.frobenius_norm() < settings.expm_term_tol * std::max(1.0, sum.frobenius_norm())) break;
    }
    return sum * std::ldexp(2.0, roots);
}

Matrix matrix_root(const Matrix& m, int p, const NumericSettings& settings) {
    if (p < 1) throw DataError("matrix_root: order must be at least 1, got " + std::to_string(p));
    require_square(m, "matrix_root");
    if (p == 1) return m;
    return mat_exp(matrix_log(m, settings), 1.0 / p, settings);
}

EigenDecomposition eigen_spectrum(const Matrix& m, bool want_vectors, const NumericSettings& settings) {
    require_square(m, "eigen_spectrum");
    require_finite(m, "eigen_spectrum");
    if (m.rows() > settings.eigen_max_dim) {
        throw ShapeError("eigen_spectrum: dimension " + std::to_string(m.rows()) + " exceeds the limit of " +
                         std::to_string(settings.eigen_max_dim));
    }

    Matrix work = m;
    balance(work);
    hessenberg_reduce(work);
    std::vector<Complex> values = hessenberg_qr(work, settings.eigen_iterations_per_value);

    std::stable_sort(values.begin(), values.end(), [](const Complex& a, const Complex& b) {
        const double ma = std::abs(a), mb = std::abs(b);
        if (ma != mb) return ma > mb;
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });

    EigenDecomposition out;
    out.source_dim = m.rows();
    if (want_vectors) {
        std::vector<std::vector<Complex>> vectors(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i].imag() < 0.0 && i > 0 && values[i - 1] == std::conj(values[i])) {
                vectors[i] = vectors[i - 1];
                for (auto& e : vectors[i]) e = std::conj(e);
                continue;
            }
            vectors[i] = inverse_iteration(m, values[i], i);
        }
        out.eigenvectors = std::move(vectors);
    }
    out.eigenvalues = std::move(values);
    return out;
}

double spectral_radius(const Matrix& m, const NumericSettings& settings) {
    const auto eig = eigen_spectrum(m, false, settings);
    return eig.eigenvalues.empty() ? 0.0 : std::abs(eig.eigenvalues.front());
}

Matrix solve(const Matrix& m, const Matrix& rhs, const NumericSettings& settings) {
    require_square(m, "solve");
    if (rhs.rows() != m.rows()) {
        throw ShapeError("solve: right-hand side " + shape_of(rhs) + " does not match matrix " + shape_of(m));
    }
    require_finite(m, "solve");
    require_finite(rhs, "solve");

    const double threshold = settings.singular_pivot_ratio * m.max_abs();
    Matrix lu = m;
    std::vector<std::size_t> perm;
    if (m.max_abs() == 0.0 || !lu_factor(lu, perm, threshold)) {
        throw SingularMatrixError("solve: matrix is singular or nearly singular (pivot below " +
                                  std::to_string(settings.singular_pivot_ratio) + " x max|entry|)");
    }
    Matrix x = rhs;
    lu_solve_in_place(lu, perm, x);

    // One step of refinement with an extended-precision residual.
    Matrix r(rhs.rows(), rhs.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < rhs.cols(); ++j) {
            long double acc = rhs(i, j);
            for (std::size_t k = 0; k < m.cols(); ++k)
                acc -= static_cast<long double>(m(i, k)) * static_cast<long double>(x(k, j));
            r(i, j) = static_cast<double>(acc);
        }
    lu_solve_in_place(lu, perm, r);
    x += r;
    return x;
}

Matrix inverse(const Matrix& m, const NumericSettings& settings) {
    require_square(m, "inverse");
    return solve(m, Matrix::identity(m.rows()), settings);
}

double determinant(const Matrix& m) {
    require_square(m, "determinant");
    Matrix lu = m;
    std::vector<std::size_t> perm;
    int sign = 1;
    if (!lu_factor(lu, perm, 0.0, &sign)) return 0.0;
    double det = sign;
    for (std::size_t i = 0; i < m.rows(); ++i) det *= lu(i, i);
    return det;
}

Matrix least_squares(const Matrix& x, const Matrix& y, double ridge, const NumericSettings& settings) {
    if (x.rows() != y.rows() || x.cols() != y.cols() || x.empty()) {
        throw ShapeError("least_squares: X " + shape_of(x) + " and Y " + shape_of(y) + " must share a non-empty shape");
    }
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw DataError("least_squares: ridge must be finite and non-negative");
    require_finite(x, "least_squares");
    require_finite(y, "least_squares");
    const std::size_t c = x.rows();
    const std::size_t n = x.cols();
    if (n < c && ridge == 0.0) {
        throw SingularMatrixError("least_squares: " + std::to_string(n) + " samples for " + std::to_string(c) +
                                  " unknowns per row with ridge = 0");
    }

    // Stacked system K Mᵀ = R with K = [Xᵀ; √ridge·I], R = [Yᵀ; 0].
    const std::size_t rows = ridge > 0.0 ? n + c : n;
    Matrix k(rows, c);
    Matrix rhs(rows, c);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t j = 0; j < c; ++j) {
            k(s, j) = x(j, s);
            rhs(s, j) = y(j, s);
        }
    if (ridge > 0.0) {
        const double root = std::sqrt(ridge);
        for (std::size_t j = 0; j < c; ++j) k(n + j, j) = root;
    }

    std::vector<double> v(rows);
    double max_diag = 0.0;
    for (std::size_t col = 0; col < c; ++col) {
        double norm = 0.0;
        for (std::size_t i = col; i < rows; ++i) norm = std::hypot(norm, k(i, col));
        if (norm == 0.0) continue;
        const double alpha = -sign_of(norm, k(col, col));
        double vnorm2 = 0.0;
        for (std::size_t i = col; i < rows; ++i) {
            v[i] = k(i, col) - (i == col ? alpha : 0.0);
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        for (std::size_t j = col; j < c; ++j) {
            double dot = 0.0;
            for (std::size_t i = col; i < rows; ++i) dot += v[i] * k(i, j);
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = col; i < rows; ++i) k(i, j) -= f * v[i];
        }
        for (std::size_t j = 0; j < c; ++j) {
            double dot = 0.0;
            for (std::size_t i = col; i < rows; ++i) dot += v[i] * rhs(i, j);
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = col; i < rows; ++i) rhs(i, j) -= f * v[i];
        }
    }
    for (std::size_t i = 0; i < c; ++i) max_diag = std::max(max_diag, std::abs(k(i, i)));
    for (std::size_t i = 0; i < c; ++i) {
        if (max_diag == 0.0 || std::abs(k(i, i)) <= settings.singular_pivot_ratio * max_diag) {
            throw SingularMatrixError("least_squares: normal equations X Xᵀ + ridge·I are singular");
        }
    }

    Matrix mt(c, c);
    for (std::size_t j = 0; j < c; ++j) {
        for (std::size_t ii = c; ii-- > 0;) {
            double acc = rhs(ii, j);
            for (std::size_t q = ii + 1; q < c; ++q) acc -= k(ii, q) * mt(q, j);
            mt(ii, j) = acc / k(ii, ii);
        }
    }
    return mt.transpose();
}

std::vector<Complex> solve_complex(std::vector<Complex> a, std::vector<Complex> b, std::size_t n, double floor) {
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(a[k * n + k]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double mag = std::abs(a[i * n + k]);
            if (mag > best) {
                best = mag;
                p = i;
            }
        }
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
            std::swap(b[k], b[p]);
        }
        if (best <= floor) {
            if (floor <= 0.0) throw SingularMatrixError("solve_complex: singular matrix");
            a[k * n + k] = Complex(floor, 0.0);
        }
        const Complex pivot = a[k * n + k];
        for (std::size_t i = k + 1; i < n; ++i) {
            const Complex f = a[i * n + k] / pivot;
            if (f == Complex(0.0, 0.0)) continue;
            for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
            b[i] -= f * b[k];
        }
    }
    std::vector<Complex> out(n);
    for (std::size_t ii = n; ii-- > 0;) {
        Complex acc = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) acc -= a[ii * n + j] * out[j];
        out[ii] = acc / a[ii * n + ii];
    }
    return out;
}

}  // namespace qbheat
