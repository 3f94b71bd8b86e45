#include "qbheat/serialization.hpp"

#include <cmath>
#include <limits>

#include "qbheat/error.hpp"

namespace qbheat {

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_from(const Json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

template <typename T>
T required(const Json& j, const char* key) {
    if (!j.contains(key)) throw DataError(std::string("JSON: missing key \"") + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("JSON: bad value for \"") + key + "\": " + e.what());
    }
}

Json to_json(const DirectionMse& d) {
    return Json{{"direction", std::string(to_string(d.direction))}, {"mse", number_or_null(d.mse)}, {"count", d.count}};
}

DirectionMse direction_mse_from_json(const Json& j) {
    const auto tag = required<std::string>(j, "direction");
    const auto d = parse_direction(tag);
    if (!d) throw DataError("JSON: unknown direction \"" + tag + "\"");
    return {*d, number_from(j.at("mse")), required<std::size_t>(j, "count")};
}

}  // namespace

Json to_json(const Matrix& m) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (double v : m.row(i)) row.push_back(v);
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw DataError(std::string("JSON: ") + what + " must be a non-empty array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
    if (cols == 0) throw DataError(std::string("JSON: ") + what + " rows must be non-empty arrays");
    std::vector<double> entries;
    entries.reserve(rows * cols);
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != cols) throw DataError(std::string("JSON: ") + what + " is ragged");
        for (const auto& v : row) {
            if (!v.is_number()) throw DataError(std::string("JSON: ") + what + " has a non-numeric entry");
            entries.push_back(v.get<double>());
        }
    }
    return Matrix(rows, cols, std::move(entries));
}

Json to_json(const QuarterLayout& layout) {
    return Json{{"position", std::string(to_string(layout.position))},
                {"H", layout.height},
                {"W", layout.width},
                {"dx_cells", layout.dx_cells},
                {"dy_cells", layout.dy_cells}};
}

Json to_json(const LinearModelSet& models) {
    Json extra = Json::object();
    for (const auto& [d, m] : models.extra_explicit) extra[std::string(to_string(d))] = to_json(m);
    return Json{{"A", to_json(models.a)},
                {"B", to_json(models.b)},
                {"variant", models.variant},
                {"extra_explicit", std::move(extra)},
                {"scale_tag", models.scale_tag},
                {"dx", models.dx},
                {"dy", models.dy},
                {"exact_inverse", models.exact_inverse},
                {"diagonal_form", models.diagonal_form == DiagonalForm::averaged ? "averaged" : "product"}};
}

LinearModelSet models_from_json(const Json& j) {
    if (!j.is_object()) throw DataError("JSON: model set must be an object");
    for (const char* key : {"A", "B"}) {
        if (!j.contains(key)) throw DataError(std::string("JSON: missing key \"") + key + "\"");
    }
    LinearModelSet m;
    m.a = matrix_from_json(j.at("A"), "A");
    m.b = matrix_from_json(j.at("B"), "B");
    m.variant = j.value("variant", 2);
    m.scale_tag = j.value("scale_tag", std::string{});
    m.dx = required<double>(j, "dx");
    m.dy = required<double>(j, "dy");
    m.exact_inverse = j.value("exact_inverse", false);
    const auto form = j.value("diagonal_form", std::string("averaged"));
    if (form != "averaged" && form != "product") throw DataError("JSON: unknown diagonal_form \"" + form + "\"");
    m.diagonal_form = form == "averaged" ? DiagonalForm::averaged : DiagonalForm::product;
    if (j.contains("extra_explicit")) {
        for (const auto& [key, value] : j.at("extra_explicit").items()) {
            const auto d = parse_direction(key);
            if (!d) throw DataError("JSON: unknown direction \"" + key + "\" in extra_explicit");
            m.extra_explicit[*d] = matrix_from_json(value, key.c_str());
        }
    }
    validate(m);
    return m;
}

Json to_json(const MseReport& report) {
    Json dirs = Json::array();
    for (const auto& d : report.directions) dirs.push_back(to_json(d));
    return Json{{"directions", std::move(dirs)}, {"total", number_or_null(report.total)}, {"masked_cells", report.masked_cells}};
}

Json to_json(const FitConfig& c) {
    return Json{{"ridge", c.ridge},
                {"max_steps", c.max_steps},
                {"step_size", c.step_size},
                {"stop_tol", c.stop_tol},
                {"collapse_variance_tol", c.collapse_variance_tol},
                {"collapse_norm_tol", c.collapse_norm_tol},
                {"standardize", c.standardize},
                {"trace_every", c.trace_every}};
}

FitConfig fit_config_from_json(const Json& j) {
    FitConfig c;
    c.ridge = j.value("ridge", c.ridge);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.step_size = j.value("step_size", c.step_size);
    c.stop_tol = j.value("stop_tol", c.stop_tol);
    c.collapse_variance_tol = j.value("collapse_variance_tol", c.collapse_variance_tol);
    c.collapse_norm_tol = j.value("collapse_norm_tol", c.collapse_norm_tol);
    c.standardize = j.value("standardize", c.standardize);
    c.trace_every = j.value("trace_every", c.trace_every);
    return c;
}

Json to_json(const FitReport& r) {
    Json per = Json::array();
    for (const auto& d : r.per_direction) per.push_back(to_json(d));
    Json trace = Json::array();
    for (const auto& t : r.trace) {
        trace.push_back(Json{{"step", t.step}, {"loss", number_or_null(t.loss)}, {"energy_ratio", number_or_null(t.energy_ratio)}});
    }
    Json layouts = Json::array();
    for (const auto& l : r.layouts) layouts.push_back(to_json(l));
    return Json{{"scale_tag", r.scale_tag},
                {"method", r.method},
                {"models", to_json(r.models)},
                {"initial_loss", number_or_null(r.initial_loss)},
                {"final_loss", number_or_null(r.final_loss)},
                {"per_direction", std::move(per)},
                {"sample_count", r.sample_count},
                {"collapse_flags", Json{{"field_collapsed", r.collapse.field_collapsed},
                                        {"model_collapsed", r.collapse.model_collapsed}}},
                {"steps", r.steps},
                {"trace", std::move(trace)},
                {"layouts", std::move(layouts)},
                {"config", to_json(r.config)}};
}

FitReport fit_report_from_json(const Json& j) {
    FitReport r;
    if (!j.contains("models")) throw DataError("JSON: fit report has no \"models\"");
    r.models = models_from_json(j.at("models"));
    r.scale_tag = j.value("scale_tag", r.models.scale_tag);
    r.method = j.value("method", std::string{});
    if (j.contains("initial_loss")) r.initial_loss = number_from(j.at("initial_loss"));
    if (j.contains("final_loss")) r.final_loss = number_from(j.at("final_loss"));
    if (j.contains("per_direction")) {
        for (const auto& d : j.at("per_direction")) r.per_direction.push_back(direction_mse_from_json(d));
    }
    r.sample_count = j.value("sample_count", std::size_t{0});
    if (j.contains("collapse_flags")) {
        r.collapse.field_collapsed = j.at("collapse_flags").value("field_collapsed", false);
        r.collapse.model_collapsed = j.at("collapse_flags").value("model_collapsed", false);
    }
    r.steps = j.value("steps", 0);
    if (j.contains("trace")) {
        for (const auto& t : j.at("trace")) {
            r.trace.push_back({t.value("step", 0), number_from(t.at("loss")), number_from(t.at("energy_ratio"))});
        }
    }
    if (j.contains("config")) r.config = fit_config_from_json(j.at("config"));
    return r;
}

Json to_json(const CorrelationReport& report) {
    return Json{{"score", number_or_null(report.score)},
                {"excluded_positions", report.excluded_positions},
                {"n_positions", report.n_positions}};
}

}  // namespace qbheat
