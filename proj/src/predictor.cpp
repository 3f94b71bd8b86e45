#include "qbheat/predictor.hpp"

#include <cmath>
#include <sstream>

#include "qbheat/error.hpp"

namespace qbheat {

namespace {

void require_channels(const LinearModelSet& models, std::size_t c, const char* op) {
    if (models.channels() != c) {
        throw ShapeError(std::string(op) + ": models have " + std::to_string(models.channels()) +
                         " channels, input has " + std::to_string(c));
    }
}

// Model for the horizontal component of a direction with sign sx.
Matrix horizontal_model(const LinearModelSet& m, int sx) {
    return sx > 0 ? m.a : model_matrix(m, Direction::left);
}

Matrix vertical_model(const LinearModelSet& m, int sy) {
    return sy > 0 ? m.b : model_matrix(m, Direction::up);
}

Matrix reverse_model(const Matrix& forward, double length, bool exact) {
    if (!exact) return -forward;
    const Matrix eye = Matrix::identity(forward.rows());
    return (inverse(eye + forward * length) - eye) * (1.0 / length);
}

}  // namespace

bool LinearModelSet::is_explicit(Direction d) const {
    if (d == Direction::right || d == Direction::down) return true;
    if (d == Direction::left || d == Direction::up) return variant >= 4;
    return variant >= 8;
}

void validate(const LinearModelSet& models) {
    if (models.variant != 2 && models.variant != 4 && models.variant != 8) {
        throw DataError("LinearModelSet: variant must be 2, 4 or 8, got " + std::to_string(models.variant));
    }
    const std::size_t c = models.a.rows();
    auto check = [c](const Matrix& m, const std::string& name) {
        if (!m.is_square() || m.rows() != c) throw ShapeError("LinearModelSet: " + name + " must be " +
                                                              std::to_string(c) + "x" + std::to_string(c));
        if (!m.all_finite()) throw NonFiniteError("LinearModelSet: " + name + " has non-finite entries");
    };
    if (c == 0) throw ShapeError("LinearModelSet: empty A");
    check(models.a, "A");
    check(models.b, "B");
    if (!(models.dx > 0.0) || !(models.dy > 0.0) || !std::isfinite(models.dx) || !std::isfinite(models.dy)) {
        throw DataError("LinearModelSet: offsets dx, dy must be positive and finite");
    }
    for (Direction d : kAllDirections) {
        if (d == Direction::right || d == Direction::down) continue;
        const auto it = models.extra_explicit.find(d);
        if (models.is_explicit(d)) {
            if (it == models.extra_explicit.end()) {
                throw DataError("LinearModelSet: variant " + std::to_string(models.variant) + " needs an explicit " +
                                std::string(to_string(d)) + " model");
            }
            check(it->second, std::string(to_string(d)));
        }
    }
}

LinearModelSet make_models(Matrix a, Matrix b, double dx, double dy, std::string scale_tag) {
    LinearModelSet m;
    m.a = std::move(a);
    m.b = std::move(b);
    m.dx = dx;
    m.dy = dy;
    m.scale_tag = std::move(scale_tag);
    validate(m);
    return m;
}

LinearModelSet promote(const LinearModelSet& models, int variant) {
    if (variant < models.variant) throw DataError("promote: cannot lower the variant");
    LinearModelSet out = models;
    out.variant = variant;
    for (Direction d : kAllDirections) {
        if (out.is_explicit(d) && !models.is_explicit(d)) out.extra_explicit[d] = model_matrix(models, d);
    }
    validate(out);
    return out;
}

double offset_length(const LinearModelSet& models, Direction d) {
    if (is_horizontal(d)) return models.dx;
    if (is_vertical(d)) return models.dy;
    return std::hypot(models.dx, models.dy);
}

Matrix model_matrix(const LinearModelSet& models, Direction d) {
    if (d == Direction::right) return models.a;
    if (d == Direction::down) return models.b;
    if (models.is_explicit(d)) return models.extra_explicit.at(d);
    return derive_implicit(models, d);
}

Matrix derive_implicit(const LinearModelSet& models, Direction d) {
    if (models.is_explicit(d)) {
        throw DataError("derive_implicit: " + std::string(to_string(d)) + " is explicit in variant " +
                        std::to_string(models.variant));
    }
    if (d == Direction::left) return reverse_model(models.a, models.dx, models.exact_inverse);
    if (d == Direction::up) return reverse_model(models.b, models.dy, models.exact_inverse);

    const Offset s = direction_sign(d);
    const Matrix h = horizontal_model(models, s.dx);
    const Matrix v = vertical_model(models, s.dy);
    const double dx = models.dx, dy = models.dy;
    const double len = std::hypot(dx, dy);
    if (models.diagonal_form == DiagonalForm::product) {
        const Matrix eye = Matrix::identity(models.channels());
        return ((eye + h * dx) * (eye + v * dy) - eye) * (1.0 / len);
    }
    return (h * dx + v * dy + (h * v + v * h) * (0.5 * dx * dy)) * (1.0 / len);
}

Matrix projector(const LinearModelSet& models, Direction d) {
    return Matrix::identity(models.channels()) + model_matrix(models, d) * offset_length(models, d);
}

Matrix project(const LinearModelSet& models, const Matrix& source_block, Direction d) {
    require_channels(models, source_block.rows(), "project");
    return projector(models, d) * source_block;
}

std::vector<double> project(const LinearModelSet& models, std::span<const double> source, Direction d) {
    require_channels(models, source.size(), "project");
    return multiply(projector(models, d), source);
}

std::string scale_tag_for(const QuarterLayout& layout) { return layout.is_center() ? "quarter" : "half"; }

Prediction predict_masked(const FeatureField& field, const QuarterLayout& layout, const LinearModelSet& models) {
    validate(models);
    require_channels(models, field.channels(), "predict_masked");
    if (layout.height != field.height() || layout.width != field.width()) {
        throw ShapeError("predict_masked: layout is " + std::to_string(layout.height) + "x" +
                         std::to_string(layout.width) + " but the field is " + std::to_string(field.height()) + "x" +
                         std::to_string(field.width()));
    }
    const double dx = static_cast<double>(layout.dx_cells) * field.spacing();
    const double dy = static_cast<double>(layout.dy_cells) * field.spacing();
    if (std::abs(models.dx - dx) > 1e-9 * dx || std::abs(models.dy - dy) > 1e-9 * dy) {
        std::ostringstream os;
        os << "predict_masked: model offsets (" << models.dx << ", " << models.dy << ") do not match the layout's ("
           << dx << ", " << dy << ")";
        throw ShapeError(os.str());
    }

    const std::size_t c = field.channels();
    std::vector<double> values(field.values().begin(), field.values().end());
    MseReport report;
    double total_sq = 0.0;
    for (Direction d : applicable_directions(layout)) {
        const Matrix p = projector(models, d);
        const auto pairs = pair_indices(layout, d);
        double sq = 0.0;
        for (const CellPair& pair : pairs) {
            const auto predicted = multiply(p, field.cell(pair.source.row, pair.source.col));
            const auto actual = field.cell(pair.target.row, pair.target.col);
            double* out = values.data() + (pair.target.row * field.width() + pair.target.col) * c;
            for (std::size_t k = 0; k < c; ++k) {
                const double e = predicted[k] - actual[k];
                sq += e * e;
                out[k] = predicted[k];
            }
        }
        total_sq += sq;
        report.masked_cells += pairs.size();
        report.directions.push_back({d, sq / static_cast<double>(pairs.size() * c), pairs.size()});
    }
    report.total = total_sq / static_cast<double>(report.masked_cells * c);
    return {FeatureField(field.height(), field.width(), c, field.spacing(), std::move(values)), report};
}

}  // namespace qbheat
