#pragma once

#include <json.hpp>

#include "qbheat/fitting.hpp"
#include "qbheat/linalg.hpp"
#include "qbheat/masking.hpp"
#include "qbheat/predictor.hpp"
#include "qbheat/spectrum.hpp"

namespace qbheat {

using Json = nlohmann::json;

/// Matrices travel as arrays of rows.
Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const char* what);

/// {position, H, W, dx_cells, dy_cells}
Json to_json(const QuarterLayout& layout);

Json to_json(const LinearModelSet& models);
LinearModelSet models_from_json(const Json& j);

/// {directions: [{direction, mse, count}], total, masked_cells}
Json to_json(const MseReport& report);

Json to_json(const FitConfig& config);
FitConfig fit_config_from_json(const Json& j);

Json to_json(const FitReport& report);
FitReport fit_report_from_json(const Json& j);

/// {score, excluded_positions, n_positions}
Json to_json(const CorrelationReport& report);

}  // namespace qbheat
