#include "qbheat/heat.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qbheat/error.hpp"

namespace qbheat {

ScalarHeatField::ScalarHeatField(std::size_t height, std::size_t width, double dx, std::vector<double> values)
    : height_(height), width_(width), dx_(dx), values_(std::move(values)) {
    if (height_ < 3 || width_ < 3) {
        throw ShapeError("ScalarHeatField: grid must be at least 3x3, got " + std::to_string(height_) + "x" +
                         std::to_string(width_));
    }
    if (values_.size() != height_ * width_) throw ShapeError("ScalarHeatField: value count does not match the grid");
    if (!(dx_ > 0.0) || !std::isfinite(dx_)) throw DataError("ScalarHeatField: dx must be positive and finite");
    for (double v : values_) {
        if (!std::isfinite(v)) throw NonFiniteError("ScalarHeatField: non-finite temperature");
    }
}

double ScalarHeatField::total() const {
    long double sum = 0.0L;
    for (double v : values_) sum += v;
    return static_cast<double>(sum);
}

double ScalarHeatField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

FeatureField ScalarHeatField::to_feature_field() const { return FeatureField(height_, width_, 1, dx_, values_); }

double max_stable_dt(double dx) { return dx * dx / 4.0; }

ScalarHeatField heat_step(const ScalarHeatField& u, double dt) {
    const double limit = max_stable_dt(u.dx());
    if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "heat_step: dt = " << dt << " violates the explicit stability bound dx^2/4 = " << limit;
        throw DataError(os.str());
    }
    const std::size_t h = u.height(), w = u.width();
    const double r = dt / (u.dx() * u.dx());
    std::vector<double> next(h * w);
    for (std::size_t i = 0; i < h; ++i) {
        const std::size_t up = i == 0 ? i : i - 1;
        const std::size_t down = i + 1 == h ? i : i + 1;
        for (std::size_t j = 0; j < w; ++j) {
            const std::size_t left = j == 0 ? j : j - 1;
            const std::size_t right = j + 1 == w ? j : j + 1;
            const double c = u.at(i, j);
            // Flux form: each neighbour difference enters both cells with opposite sign.
            const double lap = (u.at(i, left) - c) + (u.at(i, right) - c) + (u.at(up, j) - c) + (u.at(down, j) - c);
            next[i * w + j] = c + r * lap;
        }
    }
    return ScalarHeatField(h, w, u.dx(), std::move(next));
}

}  // namespace qbheat
