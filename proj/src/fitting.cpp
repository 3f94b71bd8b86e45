#include "qbheat/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "qbheat/error.hpp"
#include "qbheat/spectrum.hpp"

namespace qbheat {

namespace {

using Batch = std::vector<FeatureField>;
using Layouts = std::vector<QuarterLayout>;

struct Offsets {
    double dx;
    double dy;
};

Offsets check_batch(const Batch& fields, const Layouts& layouts, const char* op) {
    if (fields.empty()) throw DataError(std::string(op) + ": no input fields");
    if (fields.size() != layouts.size()) {
        throw ShapeError(std::string(op) + ": " + std::to_string(fields.size()) + " fields but " +
                         std::to_string(layouts.size()) + " layouts");
    }
    const std::size_t c = fields.front().channels();
    Offsets first{};
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto& f = fields[i];
        const auto& l = layouts[i];
        if (f.channels() != c) {
            throw ShapeError(std::string(op) + ": field " + std::to_string(i) + " has " + std::to_string(f.channels()) +
                             " channels, expected " + std::to_string(c));
        }
        if (l.height != f.height() || l.width != f.width()) {
            throw ShapeError(std::string(op) + ": layout " + std::to_string(i) + " does not match its field's grid");
        }
        const Offsets o{static_cast<double>(l.dx_cells) * f.spacing(), static_cast<double>(l.dy_cells) * f.spacing()};
        if (i == 0) {
            first = o;
        } else if (std::abs(o.dx - first.dx) > 1e-12 * first.dx || std::abs(o.dy - first.dy) > 1e-12 * first.dy) {
            throw DataError(std::string(op) + ": batch mixes prediction scales; fit each scale group separately");
        }
    }
    return first;
}

Batch standardized(const Batch& fields) {
    long double sum = 0.0L, sum2 = 0.0L;
    std::size_t n = 0;
    for (const auto& f : fields)
        for (double v : f.values()) {
            sum += v;
            sum2 += static_cast<long double>(v) * v;
            ++n;
        }
    const long double mean = sum / static_cast<long double>(n);
    const double var = static_cast<double>(sum2 / static_cast<long double>(n) - mean * mean);
    if (!(var > 0.0)) return fields;
    const double inv = 1.0 / std::sqrt(var);
    Batch out;
    out.reserve(fields.size());
    for (const auto& f : fields) {
        std::vector<double> v(f.values().begin(), f.values().end());
        for (double& e : v) e *= inv;
        out.emplace_back(f.height(), f.width(), f.channels(), f.spacing(), std::move(v));
    }
    return out;
}

Layouts distinct_layouts(const Layouts& layouts) {
    Layouts out;
    for (const auto& l : layouts) {
        const bool seen = std::any_of(out.begin(), out.end(), [&](const QuarterLayout& o) {
            return o.position == l.position && o.height == l.height && o.width == l.width;
        });
        if (!seen) out.push_back(l);
    }
    return out;
}

// Stacked source/target columns for one direction across the batch.
struct DirectionData {
    Direction direction;
    Matrix source;
    Matrix target;
};

std::vector<DirectionData> gather_directions(const Batch& fields, const Layouts& layouts) {
    const std::size_t c = fields.front().channels();
    std::map<Direction, std::pair<std::vector<double>, std::vector<double>>> columns;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        for (Direction d : applicable_directions(layouts[i])) {
            auto& [src, tgt] = columns[d];
            for (const CellPair& p : pair_indices(layouts[i], d)) {
                const auto s = fields[i].cell(p.source.row, p.source.col);
                const auto t = fields[i].cell(p.target.row, p.target.col);
                src.insert(src.end(), s.begin(), s.end());
                tgt.insert(tgt.end(), t.begin(), t.end());
            }
        }
    }
    std::vector<DirectionData> out;
    for (auto& [d, cols] : columns) {
        const std::size_t n = cols.first.size() / c;
        // Cell-major buffers are the transposes of the C×n matrices.
        out.push_back({d, Matrix(n, c, std::move(cols.first)).transpose(), Matrix(n, c, std::move(cols.second)).transpose()});
    }
    return out;
}

std::size_t total_cells(const std::vector<DirectionData>& data) {
    std::size_t n = 0;
    for (const auto& d : data) n += d.source.cols();
    return n;
}

BatchLoss loss_from(const std::vector<DirectionData>& data, const LinearModelSet& models) {
    BatchLoss out;
    const std::size_t c = models.channels();
    double total = 0.0;
    for (const auto& d : data) {
        const Matrix residual = projector(models, d.direction) * d.source - d.target;
        const double norm = residual.frobenius_norm();
        const double sq = norm * norm;
        total += sq;
        out.per_direction.push_back({d.direction, sq / static_cast<double>(d.source.cols() * c), d.source.cols()});
    }
    out.total = total / static_cast<double>(total_cells(data) * c);
    return out;
}

// Gradients keyed by the direction whose explicit matrix they belong to.
using Gradient = std::map<Direction, Matrix>;

void accumulate(Gradient& g, Direction d, const Matrix& m) {
    auto it = g.find(d);
    if (it == g.end()) {
        g.emplace(d, m);
    } else {
        it->second += m;
    }
}

// Routes the gradient of a horizontal (or vertical) component model back to
// the explicit parameters that produce it.
void chain_axis_model(const LinearModelSet& models, Gradient& g, bool horizontal, int sign, const Matrix& grad) {
    const Direction forward = horizontal ? Direction::right : Direction::down;
    const Direction backward = horizontal ? Direction::left : Direction::up;
    if (sign > 0) {
        accumulate(g, forward, grad);
        return;
    }
    if (models.is_explicit(backward)) {
        accumulate(g, backward, grad);
        return;
    }
    if (!models.exact_inverse) {
        accumulate(g, forward, -grad);
        return;
    }
    // G₂ = ((I + L·G)⁻¹ − I)/L ⇒ dG₂ = −Q dG Q with Q = (I + L·G)⁻¹.
    const Matrix& m = horizontal ? models.a : models.b;
    const double len = horizontal ? models.dx : models.dy;
    const Matrix q = inverse(Matrix::identity(m.rows()) + m * len);
    const Matrix qt = q.transpose();
    accumulate(g, forward, -(qt * grad * qt));
}

Gradient gradient_from(const std::vector<DirectionData>& data, const LinearModelSet& models) {
    const std::size_t c = models.channels();
    const double norm = 2.0 / static_cast<double>(total_cells(data) * c);
    Gradient g;
    for (const auto& d : data) {
        const Matrix residual = projector(models, d.direction) * d.source - d.target;
        const Matrix dp = (residual * d.source.transpose()) * norm;  // ∂L/∂P
        const Direction dir = d.direction;
        if (!is_diagonal(dir)) {
            const bool horizontal = is_horizontal(dir);
            const int sign = horizontal ? direction_sign(dir).dx : direction_sign(dir).dy;
            chain_axis_model(models, g, horizontal, sign, dp * offset_length(models, dir));
            continue;
        }
        if (models.is_explicit(dir)) {
            accumulate(g, dir, dp * offset_length(models, dir));
            continue;
        }
        const Offset s = direction_sign(dir);
        const Matrix h = model_matrix(models, s.dx > 0 ? Direction::right : Direction::left);
        const Matrix v = model_matrix(models, s.dy > 0 ? Direction::down : Direction::up);
        const double dx = models.dx, dy = models.dy;
        Matrix gh, gv;
        if (models.diagonal_form == DiagonalForm::averaged) {
            const Matrix ht = h.transpose(), vt = v.transpose();
            gh = dp * dx + (dp * vt + vt * dp) * (0.5 * dx * dy);
            gv = dp * dy + (ht * dp + dp * ht) * (0.5 * dx * dy);
        } else {
            const Matrix eye = Matrix::identity(c);
            gh = dp * (eye + v * dy).transpose() * dx;
            gv = (eye + h * dx).transpose() * dp * dy;
        }
        chain_axis_model(models, g, true, s.dx, gh);
        chain_axis_model(models, g, false, s.dy, gv);
    }
    return g;
}

void apply_step(LinearModelSet& models, const Gradient& g, double step) {
    for (const auto& [d, grad] : g) {
        if (d == Direction::right) {
            models.a -= grad * step;
        } else if (d == Direction::down) {
            models.b -= grad * step;
        } else {
            models.extra_explicit.at(d) -= grad * step;
        }
    }
}

double safe_energy_ratio(const LinearModelSet& models) {
    try {
        const double eb = energy(models.b);
        return eb > 0.0 ? energy(models.a) / eb : std::numeric_limits<double>::quiet_NaN();
    } catch (const NumericalError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

void validate(const FitConfig& config) {
    if (!(config.ridge >= 0.0) || !std::isfinite(config.ridge)) throw DataError("FitConfig: ridge must be >= 0");
    if (config.max_steps < 0) throw DataError("FitConfig: max_steps must be >= 0");
    if (!(config.step_size >= 0.0) || !std::isfinite(config.step_size)) {
        throw DataError("FitConfig: step_size must be >= 0");
    }
    if (!(config.stop_tol >= 0.0)) throw DataError("FitConfig: stop_tol must be >= 0");
    if (!(config.collapse_variance_tol > 0.0) || !(config.collapse_norm_tol > 0.0)) {
        throw DataError("FitConfig: collapse tolerances must be positive");
    }
    if (config.trace_every < 0) throw DataError("FitConfig: trace_every must be >= 0");
}

PairData collect_pairs(const Batch& fields, const Layouts& layouts, Axis axis) {
    check_batch(fields, layouts, "collect_pairs");
    const std::size_t c = fields.front().channels();
    const Direction forward = axis == Axis::x ? Direction::right : Direction::down;
    const Direction backward = axis == Axis::x ? Direction::left : Direction::up;
    std::vector<double> src, tgt;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        for (Direction d : applicable_directions(layouts[i])) {
            if (d != forward && d != backward) continue;
            for (const CellPair& p : pair_indices(layouts[i], d)) {
                const Cell from = d == forward ? p.source : p.target;
                const Cell to = d == forward ? p.target : p.source;
                const auto s = fields[i].cell(from.row, from.col);
                const auto t = fields[i].cell(to.row, to.col);
                src.insert(src.end(), s.begin(), s.end());
                tgt.insert(tgt.end(), t.begin(), t.end());
            }
        }
    }
    const std::size_t n = src.size() / c;
    if (n == 0) throw DataError("collect_pairs: batch has no pairs along this axis");
    return {Matrix(n, c, std::move(src)).transpose(), Matrix(n, c, std::move(tgt)).transpose()};
}

BatchLoss masked_loss(const Batch& fields, const Layouts& layouts, const LinearModelSet& models) {
    check_batch(fields, layouts, "masked_loss");
    validate(models);
    if (models.channels() != fields.front().channels()) throw ShapeError("masked_loss: model/field channel mismatch");
    return loss_from(gather_directions(fields, layouts), models);
}

CollapseFlags detect_collapse(const Batch& fields, const LinearModelSet* models, const FitConfig& config) {
    if (fields.empty()) throw DataError("detect_collapse: no input fields");
    double variance_sum = 0.0;
    for (const auto& f : fields) {
        const std::size_t c = f.channels();
        const std::size_t n = f.height() * f.width();
        double per_field = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            double mean = 0.0;
            for (std::size_t p = 0; p < n; ++p) mean += f.values()[p * c + k];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t p = 0; p < n; ++p) {
                const double e = f.values()[p * c + k] - mean;
                var += e * e;
            }
            per_field += var / static_cast<double>(n);
        }
        variance_sum += per_field / static_cast<double>(c);
    }
    CollapseFlags flags;
    flags.field_collapsed = variance_sum / static_cast<double>(fields.size()) < config.collapse_variance_tol;
    if (models) {
        flags.model_collapsed =
            std::max(models->a.frobenius_norm(), models->b.frobenius_norm()) < config.collapse_norm_tol;
    }
    return flags;
}

FitReport fit_closed_form(const Batch& input, const Layouts& layouts, const FitConfig& config) {
    validate(config);
    const Offsets offsets = check_batch(input, layouts, "fit_closed_form");
    const Batch scaled = config.standardize ? standardized(input) : Batch{};
    const Batch& fields = config.standardize ? scaled : input;

    const CollapseFlags field_flags = detect_collapse(fields, nullptr, config);
    if (field_flags.field_collapsed) {
        throw CollapseError("fit_closed_form: input fields are collapsed (constant feature maps); A = B = 0 would "
                            "fit them trivially");
    }

    const std::size_t c = fields.front().channels();
    const Matrix eye = Matrix::identity(c);
    const PairData horizontal = collect_pairs(fields, layouts, Axis::x);
    const PairData vertical = collect_pairs(fields, layouts, Axis::y);
    const Matrix step_x = least_squares(horizontal.source, horizontal.target, config.ridge);
    const Matrix step_y = least_squares(vertical.source, vertical.target, config.ridge);

    FitReport report;
    report.scale_tag = scale_tag_for(layouts.front());
    report.models = make_models((step_x - eye) * (1.0 / offsets.dx), (step_y - eye) * (1.0 / offsets.dy), offsets.dx,
                                offsets.dy, report.scale_tag);
    report.method = "closed-form";
    report.config = config;
    report.layouts = distinct_layouts(layouts);
    report.sample_count = horizontal.source.cols() + vertical.source.cols();

    const BatchLoss loss = loss_from(gather_directions(fields, layouts), report.models);
    report.initial_loss = loss.total;
    report.final_loss = loss.total;
    report.per_direction = loss.per_direction;
    report.collapse = detect_collapse(fields, &report.models, config);
    return report;
}

FitReport fit_iterative(const Batch& input, const Layouts& layouts, const LinearModelSet& init,
                        const FitConfig& config) {
    validate(config);
    validate(init);
    const Offsets offsets = check_batch(input, layouts, "fit_iterative");
    if (init.channels() != input.front().channels()) {
        throw ShapeError("fit_iterative: initial models have " + std::to_string(init.channels()) +
                         " channels, fields have " + std::to_string(input.front().channels()));
    }
    if (std::abs(init.dx - offsets.dx) > 1e-9 * offsets.dx || std::abs(init.dy - offsets.dy) > 1e-9 * offsets.dy) {
        throw ShapeError("fit_iterative: initial model offsets do not match the batch layouts");
    }
    const Batch scaled = config.standardize ? standardized(input) : Batch{};
    const Batch& fields = config.standardize ? scaled : input;
    if (detect_collapse(fields, nullptr, config).field_collapsed) {
        throw CollapseError("fit_iterative: input fields are collapsed (constant feature maps)");
    }

    const auto data = gather_directions(fields, layouts);
    LinearModelSet current = init;
    if (current.scale_tag.empty()) current.scale_tag = scale_tag_for(layouts.front());

    FitReport report;
    report.method = "iterative (deterministic full-batch gradient descent)";
    report.config = config;
    report.scale_tag = current.scale_tag;
    report.layouts = distinct_layouts(layouts);
    for (const auto& d : data) {
        if (is_horizontal(d.direction) || is_vertical(d.direction)) report.sample_count += d.source.cols();
    }

    const double initial = loss_from(data, current).total;
    report.initial_loss = initial;
    LinearModelSet best = current;
    double best_loss = initial;
    double previous = initial;
    if (config.trace_every > 0) report.trace.push_back({0, initial, safe_energy_ratio(current)});

    int step = 0;
    if (initial > 0.0) {
        while (step < config.max_steps) {
            ++step;
            apply_step(current, gradient_from(data, current), config.step_size);
            const double loss = loss_from(data, current).total;
            if (!std::isfinite(loss) || loss > 1e6 * initial) {
                std::ostringstream os;
                os << "fit_iterative: diverged at step " << step << " (loss " << loss << ", initial " << initial
                   << ", step_size " << config.step_size << ")";
                throw DivergenceError(os.str());
            }
            if (loss < best_loss) {
                best_loss = loss;
                best = current;
            }
            if (config.trace_every > 0 && step % config.trace_every == 0) {
                report.trace.push_back({step, loss, safe_energy_ratio(current)});
            }
            const double change = previous - loss;
            previous = loss;
            if (std::abs(change) < config.stop_tol || loss == 0.0) break;
        }
    }

    report.steps = step;
    report.models = best;
    const BatchLoss final_loss = loss_from(data, best);
    report.final_loss = final_loss.total;
    report.per_direction = final_loss.per_direction;
    report.collapse = detect_collapse(fields, &best, config);
    return report;
}

CellModels cell_models(const LinearModelSet& models, std::size_t dx_cells, std::size_t dy_cells) {
    validate(models);
    if (dx_cells == 0 || dy_cells == 0) throw DataError("cell_models: offsets must cover at least one cell");
    const double sx = models.dx / static_cast<double>(dx_cells);
    const double sy = models.dy / static_cast<double>(dy_cells);
    if (std::abs(sx - sy) > 1e-12 * sx) {
        throw DataError("cell_models: offsets imply different grid spacings along x and y");
    }
    const Matrix eye = Matrix::identity(models.channels());
    const Matrix root_x = matrix_root(eye + models.a * models.dx, static_cast<int>(dx_cells));
    const Matrix root_y = matrix_root(eye + models.b * models.dy, static_cast<int>(dy_cells));
    return {(root_x - eye) * (1.0 / sx), (root_y - eye) * (1.0 / sy), sx};
}

std::vector<FitReport> fit_multiscale(const Batch& fields, const Layouts& layouts, const FitConfig& config,
                                      FitMethod method, int variant) {
    if (fields.empty()) throw DataError("fit_multiscale: no input fields");
    if (fields.size() != layouts.size()) throw ShapeError("fit_multiscale: field/layout count mismatch");
    std::vector<FitReport> reports;
    for (const char* tag : {"quarter", "half"}) {
        Batch group_fields;
        Layouts group_layouts;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (scale_tag_for(layouts[i]) != tag) continue;
            group_fields.push_back(fields[i]);
            group_layouts.push_back(layouts[i]);
        }
        if (group_fields.empty()) continue;
        if (method == FitMethod::closed_form) {
            auto r = fit_closed_form(group_fields, group_layouts, config);
            if (variant != 2) {
                r.models = promote(r.models, variant);
            }
            reports.push_back(std::move(r));
            continue;
        }
        LinearModelSet init;
        if (method == FitMethod::closed_form_then_iterative) {
            init = promote(fit_closed_form(group_fields, group_layouts, config).models, variant);
        } else {
            const std::size_t c = group_fields.front().channels();
            const auto& l = group_layouts.front();
            const double h = group_fields.front().spacing();
            init = promote(make_models(Matrix(c, c), Matrix(c, c), static_cast<double>(l.dx_cells) * h,
                                       static_cast<double>(l.dy_cells) * h, tag),
                           variant);
        }
        auto r = fit_iterative(group_fields, group_layouts, init, config);
        if (method == FitMethod::closed_form_then_iterative) r.method = "closed-form then " + r.method;
        reports.push_back(std::move(r));
    }
    return reports;
}

}  // namespace qbheat
