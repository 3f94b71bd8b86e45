#pragma once

#include <cstddef>
#include <vector>

#include "qbheat/field.hpp"

namespace qbheat {

/// Scalar temperature u on a grid with reflective (zero-flux) walls.
class ScalarHeatField {
public:
    ScalarHeatField(std::size_t height, std::size_t width, double dx, std::vector<double> values);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    double dx() const noexcept { return dx_; }
    double at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
    const std::vector<double>& values() const noexcept { return values_; }

    double total() const;
    double max_abs() const;

    /// Single-channel FeatureField view with spacing dx.
    FeatureField to_feature_field() const;

private:
    std::size_t height_;
    std::size_t width_;
    double dx_;
    std::vector<double> values_;
};

/// Largest stable explicit-Euler step, dx²/4.
double max_stable_dt(double dx);

/// One explicit Euler step of ∂u/∂t = ∂²u/∂x² + ∂²u/∂y². Mirror ghost
/// cells make the boundary flux zero, so the total is conserved.
ScalarHeatField heat_step(const ScalarHeatField& u, double dt);

}  // namespace qbheat
