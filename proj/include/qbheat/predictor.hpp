#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "qbheat/field.hpp"
#include "qbheat/linalg.hpp"
#include "qbheat/masking.hpp"

namespace qbheat {

/// How a diagonal projector combines its horizontal and vertical models.
/// `averaged` symmetrizes the two composition orders; `product` uses the
/// horizontal-after-vertical order (I + dx·A)(I + dy·B).
enum class DiagonalForm { averaged, product };

/// Linear cross-block models. Every direction d is served by a C×C matrix
/// G_d applied as I + |offset_d|·G_d:
///   right → A, down → B (always explicit),
///   left → A₂, up → B₂ (explicit for variant ≥ 4, derived otherwise),
///   diagonals → C_d (explicit for variant 8, derived otherwise).
struct LinearModelSet {
    Matrix a;
    Matrix b;
    int variant = 2;
    std::map<Direction, Matrix> extra_explicit;
    std::string scale_tag;
    double dx = 1.0;  ///< horizontal offset as a length (cells × spacing)
    double dy = 1.0;
    bool exact_inverse = false;  ///< derive left/up from (I + dx·A)⁻¹ instead of −A
    DiagonalForm diagonal_form = DiagonalForm::averaged;

    std::size_t channels() const { return a.rows(); }
    bool is_explicit(Direction d) const;
};

void validate(const LinearModelSet& models);

/// Variant-2 model set for explicit A, B at the given offsets.
LinearModelSet make_models(Matrix a, Matrix b, double dx, double dy, std::string scale_tag = {});

/// Copy of a model set at a higher variant whose additional explicit
/// matrices equal what the source set derives.
LinearModelSet promote(const LinearModelSet& models, int variant);

/// Offset length |offset_d| for direction d: dx, dy or √(dx² + dy²).
double offset_length(const LinearModelSet& models, Direction d);

/// The matrix G_d, explicit or derived.
Matrix model_matrix(const LinearModelSet& models, Direction d);

/// G_d for a direction the variant does not hold explicitly. Throws
/// DataError if d is explicit.
Matrix derive_implicit(const LinearModelSet& models, Direction d);

/// I + |offset_d|·G_d.
Matrix projector(const LinearModelSet& models, Direction d);

/// Applies the direction's projector to every column of a C×n source block.
Matrix project(const LinearModelSet& models, const Matrix& source_block, Direction d);
std::vector<double> project(const LinearModelSet& models, std::span<const double> source, Direction d);

struct DirectionMse {
    Direction direction;
    double mse;
    std::size_t count;  ///< target cells
};

struct MseReport {
    std::vector<DirectionMse> directions;
    double total = 0.0;  ///< mean squared error over all masked cells and channels
    std::size_t masked_cells = 0;
};

struct Prediction {
    FeatureField field;
    MseReport report;
};

/// "quarter" for the center layout, "half" for corners.
std::string scale_tag_for(const QuarterLayout& layout);

/// Fills the masked cells from the unmasked quarter and scores them against
/// the field's own values; unmasked cells are copied through.
Prediction predict_masked(const FeatureField& field, const QuarterLayout& layout, const LinearModelSet& models);

}  // namespace qbheat
