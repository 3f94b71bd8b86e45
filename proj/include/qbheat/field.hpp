#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qbheat/linalg.hpp"

namespace qbheat {

enum class Axis { x, y };

/// z(x, y) ∈ R^C on an H×W grid. Values are stored (row, column, channel)
/// with channel fastest; x runs along columns and y along rows, both with
/// the same grid step `spacing`.
class FeatureField {
public:
    FeatureField(std::size_t height, std::size_t width, std::size_t channels, double spacing,
                 std::vector<double> values);

    /// Constant field holding `value` at every cell.
    static FeatureField filled(std::size_t height, std::size_t width, std::span<const double> value, double spacing);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    double spacing() const noexcept { return spacing_; }

    double at(std::size_t row, std::size_t col, std::size_t channel) const {
        return values_[(row * width_ + col) * channels_ + channel];
    }
    std::span<const double> cell(std::size_t row, std::size_t col) const {
        return {values_.data() + (row * width_ + col) * channels_, channels_};
    }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const FeatureField&, const FeatureField&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::size_t channels_;
    double spacing_;
    std::vector<double> values_;
};

enum class GenerationMode { continuous, discrete };

struct FieldGenSpec {
    Matrix a;                ///< horizontal generator, ∂z/∂x = A z
    Matrix b;                ///< vertical generator, ∂z/∂y = B z
    std::vector<double> z0;  ///< z at the top-left cell
    GenerationMode mode = GenerationMode::continuous;
    /// Eigen-expansion weights c_i; when absent they are solved from z0.
    std::optional<std::vector<Complex>> coefficients;
};

/// Checks the commutation and shape invariants of a generation spec.
void validate(const FieldGenSpec& spec);

/// Continuous: z = e^{A x} e^{B y} z0. Discrete: one-cell recurrences
/// z(x+h, y) = (I + hA) z(x, y) and z(x, y+h) = (I + hB) z(x, y), h = spacing.
FeatureField generate_exact_field(const FieldGenSpec& spec, std::size_t height, std::size_t width, double spacing);

/// Continuous field through the shared-eigenvector expansion
/// z = Σ c_i e^{λ_i x + π_i y} v_i. Requires distinct eigenvalues of A.
FeatureField generate_eigen_field(const FieldGenSpec& spec, std::size_t height, std::size_t width, double spacing);

/// Human-readable warnings for a spec whose step is large relative to the
/// spectral radius (spacing·ρ > 0.5).
std::vector<std::string> generation_warnings(const FieldGenSpec& spec, double spacing);

/// The one-step-form matrix G with z(cell + offset) = (I + offset·spacing·G) z(cell)
/// holding exactly for a field generated with `mode` from generator `m`.
Matrix effective_step_matrix(const Matrix& m, GenerationMode mode, double spacing, std::size_t offset_cells);

/// A, B = p(M), q(M) for a seeded random M, each rescaled to spectral radius rho_max.
struct CommutingPair {
    Matrix a;
    Matrix b;
};
CommutingPair random_commuting_pair(std::size_t channels, double rho_max, std::uint64_t seed);

/// z(· + offset along axis) − z(·) over the sub-grid where both exist.
FeatureField forward_difference(const FeatureField& field, Axis axis, std::size_t offset);

/// S = −A² (B²)⁻¹, the anisotropic Laplacian coupling.
Matrix compute_S(const Matrix& a, const Matrix& b, const NumericSettings& settings = default_settings());

/// RMS over interior cells of ‖D²ₓz + S D²ᵧz‖ with central differences.
double laplacian_residual(const FeatureField& field, const Matrix& s);

/// RMS over interior cells of ‖Dⁿₓz − Aⁿ(Bᵐ)⁻¹ Dᵐᵧz‖, n, m ∈ {0, 1, 2}.
double cross_derivative_residual(const FeatureField& field, const Matrix& a, const Matrix& b, int n, int m,
                                 const NumericSettings& settings = default_settings());

Matrix matrix_power(const Matrix& m, int power);

}  // namespace qbheat
