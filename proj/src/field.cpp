#include "qbheat/field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qbheat/error.hpp"
#include "qbheat/rng.hpp"

namespace qbheat {

namespace {

constexpr double kOverflowLimit = 1e12;

void require_values_bounded(std::span<const double> values, const char* op) {
    for (double v : values) {
        if (!std::isfinite(v) || std::abs(v) > kOverflowLimit) {
            throw OverflowError(std::string(op) + ": field magnitude exceeded 1e12; reduce spacing or the spectral "
                                                  "radius of the generators");
        }
    }
}

void require_grid(std::size_t height, std::size_t width, double spacing, const char* op) {
    if (height < 2 || width < 2) {
        throw ShapeError(std::string(op) + ": grid must be at least 2x2, got " + std::to_string(height) + "x" +
                         std::to_string(width));
    }
    if (!(spacing > 0.0) || !std::isfinite(spacing)) {
        throw DataError(std::string(op) + ": spacing must be positive and finite");
    }
}

// Solves X·M = R for X, i.e. X = R M⁻¹.
Matrix right_divide(const Matrix& r, const Matrix& m, const NumericSettings& settings) {
    return solve(m.transpose(), r.transpose(), settings).transpose();
}

}  // namespace

FeatureField::FeatureField(std::size_t height, std::size_t width, std::size_t channels, double spacing,
                           std::vector<double> values)
    : height_(height), width_(width), channels_(channels), spacing_(spacing), values_(std::move(values)) {
    if (height_ < 2 || width_ < 2 || channels_ < 1) {
        throw ShapeError("FeatureField: need H, W >= 2 and C >= 1, got " + std::to_string(height_) + "x" +
                         std::to_string(width_) + "x" + std::to_string(channels_));
    }
    if (values_.size() != height_ * width_ * channels_) {
        throw ShapeError("FeatureField: " + std::to_string(values_.size()) + " values for shape " +
                         std::to_string(height_) + "x" + std::to_string(width_) + "x" + std::to_string(channels_));
    }
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_)) {
        throw DataError("FeatureField: spacing must be positive and finite");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw NonFiniteError("FeatureField: non-finite value");
    }
}

FeatureField FeatureField::filled(std::size_t height, std::size_t width, std::span<const double> value, double spacing) {
    std::vector<double> values;
    values.reserve(height * width * value.size());
    for (std::size_t i = 0; i < height * width; ++i) values.insert(values.end(), value.begin(), value.end());
    return FeatureField(height, width, value.size(), spacing, std::move(values));
}

Matrix matrix_power(const Matrix& m, int power) {
    if (!m.is_square()) throw ShapeError("matrix_power: expected a square matrix");
    if (power < 0) throw DataError("matrix_power: negative power");
    Matrix result = Matrix::identity(m.rows());
    for (int i = 0; i < power; ++i) result = result * m;
    return result;
}

void validate(const FieldGenSpec& spec) {
    const std::size_t c = spec.z0.size();
    if (c == 0) throw ShapeError("FieldGenSpec: z0 is empty");
    if (!spec.a.is_square() || spec.a.rows() != c || !spec.b.is_square() || spec.b.rows() != c) {
        throw ShapeError("FieldGenSpec: A and B must both be " + std::to_string(c) + "x" + std::to_string(c));
    }
    if (!spec.a.all_finite() || !spec.b.all_finite()) throw NonFiniteError("FieldGenSpec: A or B has non-finite entries");
    for (double v : spec.z0) {
        if (!std::isfinite(v)) throw NonFiniteError("FieldGenSpec: z0 has non-finite entries");
    }
    const double commutator = (spec.a * spec.b - spec.b * spec.a).frobenius_norm();
    if (commutator > 1e-8 * spec.a.frobenius_norm() * spec.b.frobenius_norm()) {
        std::ostringstream os;
        os << "FieldGenSpec: A and B do not commute (|AB - BA|_F = " << commutator << ")";
        throw DataError(os.str());
    }
    if (spec.coefficients && spec.coefficients->size() != c) {
        throw ShapeError("FieldGenSpec: expected " + std::to_string(c) + " expansion coefficients");
    }
}

FeatureField generate_exact_field(const FieldGenSpec& spec, std::size_t height, std::size_t width, double spacing) {
    validate(spec);
    require_grid(height, width, spacing, "generate_exact_field");
    const std::size_t c = spec.z0.size();
    std::vector<double> values(height * width * c);
    auto cell = [&](std::size_t i, std::size_t j) { return values.data() + (i * width + j) * c; };

    if (spec.mode == GenerationMode::continuous) {
        std::vector<std::vector<double>> column_start(height);
        for (std::size_t i = 0; i < height; ++i) {
            column_start[i] = multiply(mat_exp(spec.b, static_cast<double>(i) * spacing), spec.z0);
        }
        for (std::size_t j = 0; j < width; ++j) {
            const Matrix ex = mat_exp(spec.a, static_cast<double>(j) * spacing);
            for (std::size_t i = 0; i < height; ++i) {
                const auto z = multiply(ex, column_start[i]);
                std::copy(z.begin(), z.end(), cell(i, j));
            }
        }
    } else {
        const Matrix step_x = Matrix::identity(c) + spec.a * spacing;
        const Matrix step_y = Matrix::identity(c) + spec.b * spacing;
        std::vector<double> z = spec.z0;
        for (std::size_t j = 0; j < width; ++j) {
            if (j > 0) z = multiply(step_x, z);
            std::vector<double> down = z;
            for (std::size_t i = 0; i < height; ++i) {
                if (i > 0) down = multiply(step_y, down);
                std::copy(down.begin(), down.end(), cell(i, j));
            }
        }
    }
    require_values_bounded(values, "generate_exact_field");
    return FeatureField(height, width, c, spacing, std::move(values));
}

FeatureField generate_eigen_field(const FieldGenSpec& spec, std::size_t height, std::size_t width, double spacing) {
    validate(spec);
    require_grid(height, width, spacing, "generate_eigen_field");
    const std::size_t c = spec.z0.size();

    const auto eig = eigen_spectrum(spec.a, true);
    const auto& lambda = eig.eigenvalues;
    const auto& vecs = *eig.eigenvectors;
    const double scale = std::max(1.0, std::abs(lambda.front()));
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t k = i + 1; k < c; ++k) {
            if (std::abs(lambda[i] - lambda[k]) <= 1e-8 * scale) {
                throw DataError("generate_eigen_field: A has repeated eigenvalues; the shared-eigenvector "
                                "expansion is undefined");
            }
        }

    std::vector<Complex> coeffs;
    if (spec.coefficients) {
        coeffs = *spec.coefficients;
    } else {
        std::vector<Complex> v(c * c);
        for (std::size_t r = 0; r < c; ++r)
            for (std::size_t k = 0; k < c; ++k) v[r * c + k] = vecs[k][r];
        std::vector<Complex> rhs(spec.z0.begin(), spec.z0.end());
        coeffs = solve_complex(std::move(v), std::move(rhs), c);
    }

    // π_k from the Rayleigh quotient of B on the shared eigenvector.
    std::vector<Complex> pi(c);
    for (std::size_t k = 0; k < c; ++k) {
        Complex num = 0.0, den = 0.0;
        for (std::size_t r = 0; r < c; ++r) {
            Complex bv = 0.0;
            for (std::size_t q = 0; q < c; ++q) bv += spec.b(r, q) * vecs[k][q];
            num += std::conj(vecs[k][r]) * bv;
            den += std::conj(vecs[k][r]) * vecs[k][r];
        }
        pi[k] = num / den;
    }

    std::vector<double> values(height * width * c);
    for (std::size_t i = 0; i < height; ++i) {
        const double y = static_cast<double>(i) * spacing;
        for (std::size_t j = 0; j < width; ++j) {
            const double x = static_cast<double>(j) * spacing;
            double* out = values.data() + (i * width + j) * c;
            for (std::size_t k = 0; k < c; ++k) {
                const Complex w = coeffs[k] * std::exp(lambda[k] * x + pi[k] * y);
                for (std::size_t r = 0; r < c; ++r) out[r] += (w * vecs[k][r]).real();
            }
        }
    }
    require_values_bounded(values, "generate_eigen_field");
    return FeatureField(height, width, c, spacing, std::move(values));
}

std::vector<std::string> generation_warnings(const FieldGenSpec& spec, double spacing) {
    std::vector<std::string> out;
    const double rho_a = spectral_radius(spec.a);
    const double rho_b = spectral_radius(spec.b);
    auto check = [&](const char* name, double rho) {
        if (spacing * rho > 0.5) {
            std::ostringstream os;
            os << "spacing * rho(" << name << ") = " << spacing * rho << " exceeds 0.5; the field may grow quickly";
            out.push_back(os.str());
        }
    };
    check("A", rho_a);
    check("B", rho_b);
    return out;
}

Matrix effective_step_matrix(const Matrix& m, GenerationMode mode, double spacing, std::size_t offset_cells) {
    if (!m.is_square()) throw ShapeError("effective_step_matrix: expected a square matrix");
    if (offset_cells == 0) throw DataError("effective_step_matrix: offset must be at least one cell");
    const std::size_t n = m.rows();
    const double length = static_cast<double>(offset_cells) * spacing;
    Matrix jump = mode == GenerationMode::continuous
                      ? mat_exp(m, length)
                      : matrix_power(Matrix::identity(n) + m * spacing, static_cast<int>(offset_cells));
    return (jump - Matrix::identity(n)) * (1.0 / length);
}

CommutingPair random_commuting_pair(std::size_t channels, double rho_max, std::uint64_t seed) {
    if (channels == 0) throw ShapeError("random_commuting_pair: channels must be positive");
    if (!(rho_max > 0.0)) throw DataError("random_commuting_pair: rho_max must be positive");
    SplitMix64 rng(seed);
    Matrix base(channels, channels);
    const double norm = 1.0 / std::sqrt(static_cast<double>(channels));
    for (double& e : base.entries()) e = rng.normal() * norm;
    const double rho_base = spectral_radius(base);
    if (rho_base > 0.0) base *= 1.0 / rho_base;
    const Matrix base2 = base * base;
    const Matrix eye = Matrix::identity(channels);

    auto polynomial = [&]() {
        const double c0 = rng.normal() * 0.5, c1 = rng.normal(), c2 = rng.normal() * 0.5;
        Matrix p = eye * c0 + base * c1 + base2 * c2;
        const double rho = spectral_radius(p);
        if (rho > 0.0) p *= rho_max / rho;
        return p;
    };
    Matrix a = polynomial();
    Matrix b = polynomial();
    return {std::move(a), std::move(b)};
}

FeatureField forward_difference(const FeatureField& field, Axis axis, std::size_t offset) {
    const std::size_t extent = axis == Axis::x ? field.width() : field.height();
    if (offset < 1 || offset + 2 > extent) {
        throw DataError("forward_difference: offset " + std::to_string(offset) + " out of range for extent " +
                        std::to_string(extent) + " (need 1 <= offset <= extent - 2)");
    }
    const std::size_t h = axis == Axis::y ? field.height() - offset : field.height();
    const std::size_t w = axis == Axis::x ? field.width() - offset : field.width();
    const std::size_t c = field.channels();
    std::vector<double> values(h * w * c);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            const auto base = field.cell(i, j);
            const auto ahead = axis == Axis::x ? field.cell(i, j + offset) : field.cell(i + offset, j);
            double* out = values.data() + (i * w + j) * c;
            for (std::size_t k = 0; k < c; ++k) out[k] = ahead[k] - base[k];
        }
    return FeatureField(h, w, c, field.spacing(), std::move(values));
}

Matrix compute_S(const Matrix& a, const Matrix& b, const NumericSettings& settings) {
    if (!a.is_square() || !b.is_square() || a.rows() != b.rows()) {
        throw ShapeError("compute_S: A and B must be square with equal dimensions");
    }
    return -right_divide(a * a, b * b, settings);
}

namespace {

// Central difference of order 0..2 along an axis at an interior cell.
void central_difference(const FeatureField& f, Axis axis, int order, std::size_t i, std::size_t j,
                        std::vector<double>& out) {
    const std::size_t c = f.channels();
    out.assign(c, 0.0);
    const auto mid = f.cell(i, j);
    if (order == 0) {
        std::copy(mid.begin(), mid.end(), out.begin());
        return;
    }
    const auto prev = axis == Axis::x ? f.cell(i, j - 1) : f.cell(i - 1, j);
    const auto next = axis == Axis::x ? f.cell(i, j + 1) : f.cell(i + 1, j);
    const double h = f.spacing();
    if (order == 1) {
        for (std::size_t k = 0; k < c; ++k) out[k] = (next[k] - prev[k]) / (2.0 * h);
    } else {
        for (std::size_t k = 0; k < c; ++k) out[k] = (next[k] - 2.0 * mid[k] + prev[k]) / (h * h);
    }
}

double interior_rms(const FeatureField& f, const Matrix& coupling, int order_x, int order_y, double sign) {
    const std::size_t c = f.channels();
    std::vector<double> dx, dy;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 1; i + 1 < f.height(); ++i)
        for (std::size_t j = 1; j + 1 < f.width(); ++j) {
            central_difference(f, Axis::x, order_x, i, j, dx);
            central_difference(f, Axis::y, order_y, i, j, dy);
            const auto coupled = multiply(coupling, dy);
            for (std::size_t k = 0; k < c; ++k) {
                const double r = dx[k] + sign * coupled[k];
                sum += r * r;
            }
            ++count;
        }
    return std::sqrt(sum / static_cast<double>(count));
}

}  // namespace

double laplacian_residual(const FeatureField& field, const Matrix& s) {
    if (field.height() < 3 || field.width() < 3) throw ShapeError("laplacian_residual: grid must be at least 3x3");
    if (!s.is_square() || s.rows() != field.channels()) {
        throw ShapeError("laplacian_residual: S must be " + std::to_string(field.channels()) + "x" +
                         std::to_string(field.channels()));
    }
    return interior_rms(field, s, 2, 2, 1.0);
}

double cross_derivative_residual(const FeatureField& field, const Matrix& a, const Matrix& b, int n, int m,
                                 const NumericSettings& settings) {
    if (n < 1 || n > 2 || m < 1 || m > 2) {
        throw DataError("cross_derivative_residual: derivative orders must be 1 or 2");
    }
    if (field.height() < 3 || field.width() < 3) throw ShapeError("cross_derivative_residual: grid must be at least 3x3");
    const std::size_t c = field.channels();
    if (!a.is_square() || a.rows() != c || !b.is_square() || b.rows() != c) {
        throw ShapeError("cross_derivative_residual: A and B must be " + std::to_string(c) + "x" + std::to_string(c));
    }
    const Matrix coupling = right_divide(matrix_power(a, n), matrix_power(b, m), settings);
    return interior_rms(field, coupling, n, m, -1.0);
}

}  // namespace qbheat
